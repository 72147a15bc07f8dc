//! Concrete circuits: adders, the Braun array multiplier and the voters.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netlist::{GateKind, Netlist, NetlistBuilder};

/// Largest voter accepted by [`majority_voter`].
pub const MAX_VOTER_INPUTS: usize = 15;

/// Gate structure used for an n-input majority voter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VoterConstruction {
    /// One AND per `(n+1)/2`-subset of inputs feeding one wide OR.
    SumOfProducts,
    /// Full/half adder popcount followed by a constant comparator.
    CountCompare,
}

impl VoterConstruction {
    /// Sum-of-products up to five inputs, count-and-compare above.
    pub fn default_for(n: usize) -> Self {
        if n <= 5 {
            VoterConstruction::SumOfProducts
        } else {
            VoterConstruction::CountCompare
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            VoterConstruction::SumOfProducts => "sum-of-products",
            VoterConstruction::CountCompare => "count-compare",
        }
    }
}

impl fmt::Display for VoterConstruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

fn full_adder_cell(b: &mut NetlistBuilder, x: &str, y: &str, z: &str) -> (String, String) {
    let (x, y, z) = (x.to_string(), y.to_string(), z.to_string());
    let p = b.gate(GateKind::Xor, &[x.clone(), y.clone()]);
    let sum = b.gate(GateKind::Xor, &[p.clone(), z.clone()]);
    let g = b.gate(GateKind::And, &[x, y]);
    let t = b.gate(GateKind::And, &[p, z]);
    let carry = b.gate(GateKind::Or, &[g, t]);
    (sum, carry)
}

fn half_adder_cell(b: &mut NetlistBuilder, x: &str, y: &str) -> (String, String) {
    let ins = [x.to_string(), y.to_string()];
    let sum = b.gate(GateKind::Xor, &ins);
    let carry = b.gate(GateKind::And, &ins);
    (sum, carry)
}

/// Adds one to three bits of equal weight.
fn add_bits(b: &mut NetlistBuilder, bits: &[String]) -> (String, Option<String>) {
    match bits {
        [x] => (x.clone(), None),
        [x, y] => {
            let (s, c) = half_adder_cell(b, x, y);
            (s, Some(c))
        }
        [x, y, z] => {
            let (s, c) = full_adder_cell(b, x, y, z);
            (s, Some(c))
        }
        _ => unreachable!("adder cells take one to three bits"),
    }
}

/// Inputs `a, b, cin`; outputs `sum, carry`.
pub fn full_adder() -> Netlist {
    let mut b = NetlistBuilder::new("fulladder");
    let a = b.input("a");
    let bb = b.input("b");
    let cin = b.input("cin");
    let p = b.gate(GateKind::Xor, &[a.clone(), bb.clone()]);
    b.named_gate(GateKind::Xor, &[p.clone(), cin.clone()], "sum");
    let g = b.gate(GateKind::And, &[a, bb]);
    let t = b.gate(GateKind::And, &[p, cin]);
    b.named_gate(GateKind::Or, &[g, t], "carry");
    b.output("sum");
    b.output("carry");
    b.finish()
}

/// Inputs `a, b`; outputs `sum, carry`.
pub fn half_adder() -> Netlist {
    let mut b = NetlistBuilder::new("halfadder");
    let ins = [b.input("a"), b.input("b")];
    b.named_gate(GateKind::Xor, &ins, "sum");
    b.named_gate(GateKind::And, &ins, "carry");
    b.output("sum");
    b.output("carry");
    b.finish()
}

/// Unsigned `width`×`width` Braun array multiplier.
///
/// Inputs are `a{w-1}..a0, b{w-1}..b0` and outputs `p{2w-1}..p0`, so a truth
/// table row index `(A << w) | B` maps to output value `A * B`. Partial
/// products are reduced row by row in a carry-save array; the last row's
/// sums and carries go through a ripple-carry adder.
pub fn braun_multiplier(width: usize) -> Result<Netlist> {
    if width < 2 {
        return Err(Error::Param(format!(
            "multiplier width must be at least 2, got {width}"
        )));
    }
    if width > 16 {
        return Err(Error::Param(format!(
            "multiplier width {width} exceeds the supported maximum of 16"
        )));
    }
    let w = width;
    let mut b = NetlistBuilder::new(format!("braun{w}"));
    // Index by bit weight; declare most significant bit first.
    let mut a = vec![String::new(); w];
    let mut bv = vec![String::new(); w];
    for i in (0..w).rev() {
        a[i] = b.input(format!("a{i}"));
    }
    for i in (0..w).rev() {
        bv[i] = b.input(format!("b{i}"));
    }

    let pp = |b: &mut NetlistBuilder, i: usize, j: usize| -> String {
        b.named_gate(
            GateKind::And,
            &[a[j].clone(), bv[i].clone()],
            format!("pp{i}_{j}"),
        )
    };

    let mut product: Vec<String> = Vec::with_capacity(2 * w);
    // sums[j] has weight row + j; carries[j] has weight row + j + 1.
    let mut sums: Vec<String> = (0..w).map(|j| pp(&mut b, 0, j)).collect();
    let mut carries: Vec<Option<String>> = vec![None; w];
    product.push(sums[0].clone());

    for i in 1..w {
        let mut next_sums = Vec::with_capacity(w);
        let mut next_carries = Vec::with_capacity(w);
        for j in 0..w {
            let mut bits = vec![pp(&mut b, i, j)];
            if j + 1 < w {
                bits.push(sums[j + 1].clone());
            }
            if let Some(c) = &carries[j] {
                bits.push(c.clone());
            }
            let (s, c) = add_bits(&mut b, &bits);
            next_sums.push(s);
            next_carries.push(c);
        }
        sums = next_sums;
        carries = next_carries;
        product.push(sums[0].clone());
    }

    // Final ripple: weight w + k collects sums[k+1] and carries[k].
    let mut ripple: Option<String> = None;
    for k in 0..w {
        let mut bits = Vec::with_capacity(3);
        if k + 1 < w {
            bits.push(sums[k + 1].clone());
        }
        if let Some(c) = &carries[k] {
            bits.push(c.clone());
        }
        if let Some(r) = &ripple {
            bits.push(r.clone());
        }
        if k == w - 1 {
            // The top carry-out of a w×w product is always zero.
            let s = match bits.as_slice() {
                [x] => x.clone(),
                _ => b.gate(GateKind::Xor, &bits),
            };
            product.push(s);
        } else {
            let (s, c) = add_bits(&mut b, &bits);
            product.push(s);
            ripple = c;
        }
    }

    let mut net = b.finish();
    // Give product bits stable names p0..p{2w-1}.
    for (k, bit) in product.iter().enumerate() {
        rename_net(&mut net, bit, &format!("p{k}"));
    }
    net.outputs = (0..2 * w).rev().map(|k| format!("p{k}")).collect();
    Ok(net)
}

/// Renames a gate-driven net everywhere it appears.
fn rename_net(net: &mut Netlist, from: &str, to: &str) {
    for g in &mut net.gates {
        if g.out == from {
            g.out = to.to_string();
        }
        for i in &mut g.ins {
            if i == from {
                *i = to.to_string();
            }
        }
    }
    for o in &mut net.outputs {
        if o == from {
            *o = to.to_string();
        }
    }
}

fn check_voter_size(n: usize) -> Result<()> {
    if n.is_multiple_of(2) {
        return Err(Error::Param(format!("voter size n must be odd, got {n}")));
    }
    if !(3..=MAX_VOTER_INPUTS).contains(&n) {
        return Err(Error::Param(format!(
            "voter size n must lie in 3..={MAX_VOTER_INPUTS}, got {n}"
        )));
    }
    Ok(())
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub(crate) fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= n {
        rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

/// `n`-input majority voter with inputs `f1..fn` and output `maj`.
pub fn majority_voter(n: usize, construction: VoterConstruction) -> Result<Netlist> {
    check_voter_size(n)?;
    let threshold = n.div_ceil(2);
    let suffix = match construction {
        VoterConstruction::SumOfProducts => "sop",
        VoterConstruction::CountCompare => "cc",
    };
    let mut b = NetlistBuilder::new(format!("maj{n}_{suffix}"));
    let f: Vec<String> = (1..=n).map(|i| b.input(format!("f{i}"))).collect();

    match construction {
        VoterConstruction::SumOfProducts => {
            let terms: Vec<String> = subsets(n, threshold)
                .into_iter()
                .map(|s| {
                    let ins: Vec<String> = s.into_iter().map(|i| f[i].clone()).collect();
                    b.gate(GateKind::And, &ins)
                })
                .collect();
            b.named_gate(GateKind::Or, &terms, "maj");
        }
        VoterConstruction::CountCompare => {
            let count = popcount(&mut b, &f);
            let ge = at_least(&mut b, &count, threshold);
            match ge {
                Bit::Net(net) => {
                    b.named_gate(GateKind::Buf, &[net], "maj");
                }
                Bit::Const(_) => unreachable!("threshold lies strictly inside the count range"),
            }
        }
    }
    b.output("maj");
    let mut net = b.finish();
    if construction == VoterConstruction::CountCompare {
        fold_output_buffer(&mut net, "maj");
    }
    Ok(net)
}

/// Removes a trailing `BUF` that only renames its input onto `out`.
fn fold_output_buffer(net: &mut Netlist, out: &str) {
    let Some(pos) = net
        .gates
        .iter()
        .position(|g| g.out == out && g.kind == GateKind::Buf)
    else {
        return;
    };
    let src = net.gates[pos].ins[0].clone();
    if net.inputs.contains(&src) || net.outputs.contains(&src) {
        return;
    }
    net.gates.remove(pos);
    rename_net(net, &src, out);
}

#[derive(Debug, Clone)]
enum Bit {
    Net(String),
    Const(bool),
}

/// Binary count of the set bits, least significant bit first.
fn popcount(b: &mut NetlistBuilder, bits: &[String]) -> Vec<Option<String>> {
    let mut columns: Vec<Vec<String>> = vec![bits.to_vec()];
    let mut w = 0;
    while w < columns.len() {
        while columns[w].len() > 1 {
            let take = columns[w].len().min(3);
            let group: Vec<String> = columns[w].drain(..take).collect();
            let (s, c) = add_bits(b, &group);
            columns[w].push(s);
            if let Some(c) = c {
                if columns.len() == w + 1 {
                    columns.push(Vec::new());
                }
                columns[w + 1].push(c);
            }
        }
        w += 1;
    }
    columns.into_iter().map(|mut c| c.pop()).collect()
}

/// `count >= threshold` for a constant threshold, LSB-first recursion.
fn at_least(b: &mut NetlistBuilder, count: &[Option<String>], threshold: usize) -> Bit {
    if threshold >> count.len() != 0 {
        return Bit::Const(false);
    }
    let mut ge = Bit::Const(true);
    for (i, c) in count.iter().enumerate() {
        let t = (threshold >> i) & 1 == 1;
        ge = match (c, t, ge) {
            (None, true, _) => Bit::Const(false),
            (None, false, g) => g,
            (Some(c), true, Bit::Const(true)) => Bit::Net(c.clone()),
            (Some(_), true, Bit::Const(false)) => Bit::Const(false),
            (Some(c), true, Bit::Net(g)) => Bit::Net(b.gate(GateKind::And, &[c.clone(), g])),
            (Some(_), false, Bit::Const(true)) => Bit::Const(true),
            (Some(c), false, Bit::Const(false)) => Bit::Net(c.clone()),
            (Some(c), false, Bit::Net(g)) => Bit::Net(b.gate(GateKind::Or, &[c.clone(), g])),
        };
    }
    ge
}

/// Smallest replica count of a 3-of-M distributed voter.
pub const MIN_DMMR_INPUTS: usize = 5;
/// Largest replica count of a 3-of-M distributed voter.
pub const MAX_DMMR_INPUTS: usize = 64;

/// Distributed minority/majority voter over `f1..fm`.
///
/// `MAJ` is the 2-of-3 vote of `f1..f3` as three AND2 terms and one OR3,
/// `MIN` is a single OR over `f4..fm`, and the output `DMMRO` is
/// `MAJ AND MIN`.
pub fn dmmr_voter(m: usize) -> Result<Netlist> {
    if !(MIN_DMMR_INPUTS..=MAX_DMMR_INPUTS).contains(&m) {
        return Err(Error::Param(format!(
            "distributed voter needs {MIN_DMMR_INPUTS}..={MAX_DMMR_INPUTS} inputs, got {m}"
        )));
    }
    let mut b = NetlistBuilder::new(format!("dmmr{m}"));
    let f: Vec<String> = (1..=m).map(|i| b.input(format!("f{i}"))).collect();
    let t12 = b.gate(GateKind::And, &[f[0].clone(), f[1].clone()]);
    let t23 = b.gate(GateKind::And, &[f[1].clone(), f[2].clone()]);
    let t13 = b.gate(GateKind::And, &[f[0].clone(), f[2].clone()]);
    let maj = b.named_gate(GateKind::Or, &[t12, t23, t13], "MAJ");
    let min = b.named_gate(GateKind::Or, &f[3..], "MIN");
    b.named_gate(GateKind::And, &[maj, min], "DMMRO");
    b.output("DMMRO");
    Ok(b.finish())
}

/// Which built-in circuit a [`ModuleSpec`] describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModuleKind {
    FullAdder,
    HalfAdder,
    Braun {
        width: usize,
    },
    Majority {
        n: usize,
        construction: VoterConstruction,
    },
    Dmmr {
        m: usize,
    },
}

/// Parameterised description of a library circuit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModuleSpec {
    pub name: String,
    pub input_widths: Vec<usize>,
    pub output_width: usize,
    pub kind: ModuleKind,
}

impl ModuleSpec {
    pub fn new(kind: ModuleKind) -> Result<Self> {
        let spec = match kind {
            ModuleKind::FullAdder => ModuleSpec {
                name: "fulladder".into(),
                input_widths: vec![1, 1, 1],
                output_width: 2,
                kind,
            },
            ModuleKind::HalfAdder => ModuleSpec {
                name: "halfadder".into(),
                input_widths: vec![1, 1],
                output_width: 2,
                kind,
            },
            ModuleKind::Braun { width } => {
                if width < 2 {
                    return Err(Error::Param(format!(
                        "multiplier width must be at least 2, got {width}"
                    )));
                }
                ModuleSpec {
                    name: format!("braun{width}"),
                    input_widths: vec![width, width],
                    output_width: 2 * width,
                    kind,
                }
            }
            ModuleKind::Majority { n, construction } => {
                check_voter_size(n)?;
                ModuleSpec {
                    name: format!("maj{n}"),
                    input_widths: vec![1; n],
                    output_width: 1,
                    kind: ModuleKind::Majority { n, construction },
                }
            }
            ModuleKind::Dmmr { m } => {
                if m < MIN_DMMR_INPUTS {
                    return Err(Error::Param(format!(
                        "distributed voter needs at least {MIN_DMMR_INPUTS} inputs, got {m}"
                    )));
                }
                ModuleSpec {
                    name: format!("dmmr{m}"),
                    input_widths: vec![1; m],
                    output_width: 1,
                    kind,
                }
            }
        };
        Ok(spec)
    }

    pub fn build(&self) -> Result<Netlist> {
        match self.kind {
            ModuleKind::FullAdder => Ok(full_adder()),
            ModuleKind::HalfAdder => Ok(half_adder()),
            ModuleKind::Braun { width } => braun_multiplier(width),
            ModuleKind::Majority { n, construction } => majority_voter(n, construction),
            ModuleKind::Dmmr { m } => dmmr_voter(m),
        }
    }
}

impl FromStr for ModuleSpec {
    type Err = Error;

    /// `braun4`, `braun:<w>`, `fulladder`, `halfadder`.
    fn from_str(s: &str) -> Result<Self> {
        let kind = match s {
            "fulladder" => ModuleKind::FullAdder,
            "halfadder" => ModuleKind::HalfAdder,
            _ => {
                let width = s
                    .strip_prefix("braun:")
                    .or_else(|| s.strip_prefix("braun"))
                    .ok_or_else(|| Error::Param(format!("unknown module `{s}`")))?;
                let width = width
                    .parse()
                    .map_err(|_| Error::Param(format!("bad multiplier width in `{s}`")))?;
                ModuleKind::Braun { width }
            }
        };
        ModuleSpec::new(kind)
    }
}
