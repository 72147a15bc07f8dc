//! Two-valued combinational simulation with fault overlays.
//!
//! Netlists are compiled once into an index-based form and then evaluated 64
//! input vectors at a time, one bit lane per vector. Input enumeration order:
//! the first listed primary input is the most significant bit of the row
//! index.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netlist::{order_gates, validate, GateKind, Netlist};

/// Largest input count accepted by exhaustive enumeration.
pub const EXHAUSTIVE_INPUT_LIMIT: usize = 20;

/// Net values keyed by net name.
pub type Assignment = BTreeMap<String, bool>;

/// Forced or perturbed value applied to a net after its driver computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NetFault {
    Stuck0,
    Stuck1,
    Invert,
}

impl NetFault {
    #[inline]
    fn code(self) -> u8 {
        match self {
            NetFault::Stuck0 => 1,
            NetFault::Stuck1 => 2,
            NetFault::Invert => 3,
        }
    }
}

pub type FaultOverlay = BTreeMap<String, NetFault>;

#[inline]
fn apply_fault(code: u8, word: u64) -> u64 {
    match code {
        0 => word,
        1 => 0,
        2 => !0,
        _ => !word,
    }
}

#[derive(Debug, Clone)]
struct Op {
    kind: GateKind,
    start: usize,
    len: usize,
    out: usize,
}

/// Index-based form of a validated netlist, gates in topological order.
#[derive(Debug, Clone)]
pub struct CompiledNetlist {
    names: Vec<String>,
    index: HashMap<String, usize>,
    inputs: Vec<usize>,
    outputs: Vec<usize>,
    ops: Vec<Op>,
    fan_in: Vec<usize>,
}

/// Per-net fault codes resolved against a [`CompiledNetlist`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OverlayMask {
    codes: Vec<u8>,
}

impl OverlayMask {
    pub fn set(&mut self, net: usize, fault: Option<NetFault>) {
        self.codes[net] = fault.map_or(0, NetFault::code);
    }

    pub fn is_empty(&self) -> bool {
        self.codes.iter().all(|&c| c == 0)
    }
}

impl CompiledNetlist {
    pub fn new(netlist: &Netlist) -> Result<Self> {
        validate(netlist).into_result()?;
        let order = order_gates(netlist).map_err(|c| Error::Cycle { gate: c[0].clone() })?;

        let mut names = Vec::with_capacity(netlist.inputs.len() + netlist.gates.len());
        let mut index = HashMap::with_capacity(names.capacity());
        for net in netlist.nets() {
            index.insert(net.to_string(), names.len());
            names.push(net.to_string());
        }
        let mut ops = Vec::with_capacity(order.len());
        let mut fan_in = Vec::new();
        for gi in order {
            let g = &netlist.gates[gi];
            let start = fan_in.len();
            fan_in.extend(g.ins.iter().map(|n| index[n.as_str()]));
            ops.push(Op {
                kind: g.kind,
                start,
                len: g.ins.len(),
                out: index[g.out.as_str()],
            });
        }
        Ok(CompiledNetlist {
            inputs: netlist.inputs.iter().map(|n| index[n.as_str()]).collect(),
            outputs: netlist.outputs.iter().map(|n| index[n.as_str()]).collect(),
            names,
            index,
            ops,
            fan_in,
        })
    }

    pub fn input_count(&self) -> usize {
        self.inputs.len()
    }

    pub fn output_count(&self) -> usize {
        self.outputs.len()
    }

    pub fn net_index(&self, net: &str) -> Option<usize> {
        self.index.get(net).copied()
    }

    pub fn net_name(&self, idx: usize) -> &str {
        &self.names[idx]
    }

    pub fn empty_mask(&self) -> OverlayMask {
        OverlayMask {
            codes: vec![0; self.names.len()],
        }
    }

    pub fn mask(&self, overlay: &FaultOverlay) -> Result<OverlayMask> {
        let mut mask = self.empty_mask();
        for (net, fault) in overlay {
            let idx = self
                .net_index(net)
                .ok_or_else(|| Error::UnknownNet(net.clone()))?;
            mask.set(idx, Some(*fault));
        }
        Ok(mask)
    }

    /// Evaluates one block of up to 64 vectors. `input_words[i]` carries
    /// input `i` across lanes; `values` is scratch space sized by this call.
    pub fn eval_block(&self, input_words: &[u64], mask: &OverlayMask, values: &mut Vec<u64>) {
        debug_assert_eq!(input_words.len(), self.inputs.len());
        values.clear();
        values.resize(self.names.len(), 0);
        for (&net, &w) in self.inputs.iter().zip(input_words) {
            values[net] = apply_fault(mask.codes[net], w);
        }
        for op in &self.ops {
            let ins = &self.fan_in[op.start..op.start + op.len];
            let w = op.kind.eval_words(ins.iter().map(|&i| values[i]));
            values[op.out] = apply_fault(mask.codes[op.out], w);
        }
    }

    /// Output words (one per primary output) for every block of `stimulus`.
    pub fn simulate(&self, stimulus: &Stimulus, mask: &OverlayMask) -> Response {
        assert_eq!(stimulus.width, self.inputs.len(), "stimulus width mismatch");
        let mut values = Vec::new();
        let mut words = Vec::with_capacity(stimulus.blocks.len() * self.outputs.len());
        for block in &stimulus.blocks {
            self.eval_block(block, mask, &mut values);
            words.extend(self.outputs.iter().map(|&o| values[o]));
        }
        Response {
            outputs: self.outputs.len(),
            words,
        }
    }

    /// Values of the listed nets for every block of `stimulus`.
    pub fn probe(&self, stimulus: &Stimulus, mask: &OverlayMask, nets: &[usize]) -> Vec<Vec<u64>> {
        let mut values = Vec::new();
        stimulus
            .blocks
            .iter()
            .map(|block| {
                self.eval_block(block, mask, &mut values);
                nets.iter().map(|&n| values[n]).collect()
            })
            .collect()
    }
}

/// A batch of input vectors laid out as 64-lane words.
#[derive(Debug, Clone)]
pub struct Stimulus {
    width: usize,
    rows: Vec<u64>,
    blocks: Vec<Vec<u64>>,
}

const LANE_PATTERNS: [u64; 6] = [
    0xAAAA_AAAA_AAAA_AAAA,
    0xCCCC_CCCC_CCCC_CCCC,
    0xF0F0_F0F0_F0F0_F0F0,
    0xFF00_FF00_FF00_FF00,
    0xFFFF_0000_FFFF_0000,
    0xFFFF_FFFF_0000_0000,
];

impl Stimulus {
    /// Every input combination of `width` inputs, in row order.
    pub fn exhaustive(width: usize) -> Result<Self> {
        if width > EXHAUSTIVE_INPUT_LIMIT {
            return Err(Error::TooManyInputs {
                count: width,
                limit: EXHAUSTIVE_INPUT_LIMIT,
            });
        }
        let total = 1u64 << width;
        let block_count = total.div_ceil(64) as usize;
        let blocks = (0..block_count)
            .map(|b| {
                let base = (b as u64) * 64;
                (0..width)
                    .map(|i| {
                        let pos = width - 1 - i;
                        if pos < 6 {
                            LANE_PATTERNS[pos]
                        } else if (base >> pos) & 1 == 1 {
                            !0
                        } else {
                            0
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(Stimulus {
            width,
            rows: (0..total).collect(),
            blocks,
        })
    }

    /// An explicit list of row indices (bit `width-1-i` is input `i`).
    pub fn from_rows(width: usize, rows: Vec<u64>) -> Result<Self> {
        if width > 64 {
            return Err(Error::Param(format!(
                "{width} inputs cannot be packed into 64-bit rows"
            )));
        }
        let blocks = rows
            .chunks(64)
            .map(|chunk| {
                (0..width)
                    .map(|i| {
                        let pos = width - 1 - i;
                        chunk
                            .iter()
                            .enumerate()
                            .fold(0u64, |w, (lane, &row)| w | (((row >> pos) & 1) << lane))
                    })
                    .collect()
            })
            .collect();
        Ok(Stimulus {
            width,
            rows,
            blocks,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn row(&self, k: usize) -> u64 {
        self.rows[k]
    }

    /// Mask of lanes in block `b` that carry real rows.
    pub fn lane_mask(&self, b: usize) -> u64 {
        let used = (self.rows.len() - b * 64).min(64);
        if used == 64 {
            !0
        } else {
            (1u64 << used) - 1
        }
    }
}

/// Output words produced by [`CompiledNetlist::simulate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Response {
    outputs: usize,
    words: Vec<u64>,
}

impl Response {
    /// Word for output `o` in block `b`.
    #[inline]
    pub fn word(&self, b: usize, o: usize) -> u64 {
        self.words[b * self.outputs + o]
    }

    /// Output vector for stimulus row position `k`, first output as MSB.
    pub fn row_value(&self, k: usize) -> u64 {
        let (b, lane) = (k / 64, k % 64);
        (0..self.outputs).fold(0u64, |acc, o| (acc << 1) | ((self.word(b, o) >> lane) & 1))
    }
}

/// Evaluates primary outputs for one stimulus.
pub fn evaluate(
    netlist: &Netlist,
    stimulus: &Assignment,
    overlay: &FaultOverlay,
) -> Result<Assignment> {
    let all = evaluate_nets(netlist, stimulus, overlay)?;
    Ok(netlist
        .outputs
        .iter()
        .map(|o| (o.clone(), all[o]))
        .collect())
}

/// Evaluates every net of the netlist for one stimulus.
pub fn evaluate_nets(
    netlist: &Netlist,
    stimulus: &Assignment,
    overlay: &FaultOverlay,
) -> Result<Assignment> {
    let compiled = CompiledNetlist::new(netlist)?;
    let mask = compiled.mask(overlay)?;
    let words: Vec<u64> = netlist
        .inputs
        .iter()
        .map(|i| match stimulus.get(i) {
            Some(true) => Ok(!0),
            Some(false) => Ok(0),
            None => Err(Error::MissingInput(i.clone())),
        })
        .collect::<Result<_>>()?;
    let mut values = Vec::new();
    compiled.eval_block(&words, &mask, &mut values);
    Ok(compiled
        .names
        .iter()
        .zip(&values)
        .map(|(n, w)| (n.clone(), w & 1 == 1))
        .collect())
}

/// Exhaustive input/output table of a netlist.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthTable {
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    /// Output vector per row, first output as most significant bit.
    pub rows: Vec<u64>,
}

impl TruthTable {
    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    /// `(input bits, output bits)` for each row in lexicographic input order.
    pub fn rows(&self) -> impl Iterator<Item = (Vec<bool>, Vec<bool>)> + '_ {
        let p = self.inputs.len();
        let q = self.outputs.len();
        self.rows.iter().enumerate().map(move |(r, &out)| {
            (
                (0..p).map(|i| (r >> (p - 1 - i)) & 1 == 1).collect(),
                (0..q).map(|o| (out >> (q - 1 - o)) & 1 == 1).collect(),
            )
        })
    }
}

/// Enumerates all `2^p` input rows (guarded by [`EXHAUSTIVE_INPUT_LIMIT`]).
pub fn truth_table(netlist: &Netlist, overlay: &FaultOverlay) -> Result<TruthTable> {
    if netlist.outputs.len() > 64 {
        return Err(Error::Param(
            "truth tables support at most 64 outputs".into(),
        ));
    }
    let stimulus = Stimulus::exhaustive(netlist.inputs.len())?;
    let compiled = CompiledNetlist::new(netlist)?;
    let mask = compiled.mask(overlay)?;
    let response = compiled.simulate(&stimulus, &mask);
    Ok(TruthTable {
        inputs: netlist.inputs.clone(),
        outputs: netlist.outputs.clone(),
        rows: (0..stimulus.len()).map(|k| response.row_value(k)).collect(),
    })
}
