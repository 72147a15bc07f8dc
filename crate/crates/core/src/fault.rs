//! Module-level fault injection and exhaustive masking verification.
//!
//! Faults are persistent and act on replica output nets. The adversarial
//! behaviour lets every faulty replica drive any value on each output bit;
//! it is resolved by enumerating all choices for one output bit at a time,
//! which is sound once [`RedundantSystem::check_bitwise_independence`] holds.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::library::subsets;
use crate::par::{self, Exec};
use crate::redundancy::{tolerance, RedundancyScheme, RedundantSystem};
use crate::sim::{
    evaluate, Assignment, CompiledNetlist, FaultOverlay, NetFault, OverlayMask, Response, Stimulus,
};

/// Largest module input count verified exhaustively.
pub const VERIFY_INPUT_LIMIT: usize = 16;

/// How a faulty replica corrupts its outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FaultBehavior {
    Stuck0,
    Stuck1,
    Inverted,
    /// Any value on any output bit; enumerated, never simulated directly.
    Adversarial,
}

impl FaultBehavior {
    pub fn net_fault(self) -> Option<NetFault> {
        match self {
            FaultBehavior::Stuck0 => Some(NetFault::Stuck0),
            FaultBehavior::Stuck1 => Some(NetFault::Stuck1),
            FaultBehavior::Inverted => Some(NetFault::Invert),
            FaultBehavior::Adversarial => None,
        }
    }
}

impl fmt::Display for FaultBehavior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FaultBehavior::Stuck0 => "stuck0",
            FaultBehavior::Stuck1 => "stuck1",
            FaultBehavior::Inverted => "inverted",
            FaultBehavior::Adversarial => "adversarial",
        })
    }
}

impl std::str::FromStr for FaultBehavior {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stuck0" => Ok(FaultBehavior::Stuck0),
            "stuck1" => Ok(FaultBehavior::Stuck1),
            "inverted" => Ok(FaultBehavior::Inverted),
            "adversarial" => Ok(FaultBehavior::Adversarial),
            _ => Err(Error::Param(format!("unknown fault behaviour `{s}`"))),
        }
    }
}

/// Faulty replicas (1-based, ascending) sharing one behaviour.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaultPattern {
    pub replicas: Vec<usize>,
    pub behavior: FaultBehavior,
}

impl FaultPattern {
    pub fn new(mut replicas: Vec<usize>, behavior: FaultBehavior) -> Result<Self> {
        replicas.sort_unstable();
        if replicas.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Param(format!(
                "fault pattern lists a replica twice: {replicas:?}"
            )));
        }
        if replicas.first() == Some(&0) {
            return Err(Error::Param("replica indices start at 1".into()));
        }
        Ok(FaultPattern { replicas, behavior })
    }
}

/// A replayable masking failure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counterexample {
    pub pattern: Vec<usize>,
    pub behavior: FaultBehavior,
    /// Input row in hex, first primary input as most significant bit.
    pub input: String,
    /// Index of the failing output in the module's output list.
    pub bit: usize,
    pub got: u8,
    pub expected: u8,
    /// Adversarial value driven by each faulty replica on output `bit`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub choice: Vec<u8>,
    /// Name of the failing output net.
    #[serde(default)]
    pub output: String,
}

impl Counterexample {
    pub fn input_row(&self) -> Result<u64> {
        let hex = self
            .input
            .strip_prefix("0x")
            .ok_or_else(|| Error::Param(format!("input `{}` is not hex", self.input)))?;
        u64::from_str_radix(hex, 16)
            .map_err(|_| Error::Param(format!("input `{}` is not hex", self.input)))
    }

    /// Net overlay reproducing this failure on the system netlist.
    pub fn overlay(&self, system: &RedundantSystem) -> Result<FaultOverlay> {
        let mut overlay = FaultOverlay::new();
        for (i, &r) in self.pattern.iter().enumerate() {
            let nets = system
                .module_output_nets
                .get(r.wrapping_sub(1))
                .ok_or_else(|| Error::Param(format!("replica {r} does not exist")))?;
            match self.behavior.net_fault() {
                Some(f) => {
                    for n in nets {
                        overlay.insert(n.clone(), f);
                    }
                }
                None => {
                    let v = *self.choice.get(i).ok_or_else(|| {
                        Error::Param("adversarial counterexample lacks a choice".into())
                    })?;
                    let f = if v == 1 {
                        NetFault::Stuck1
                    } else {
                        NetFault::Stuck0
                    };
                    overlay.insert(nets[self.bit].clone(), f);
                }
            }
        }
        Ok(overlay)
    }
}

fn hex_row(row: u64, width: usize) -> String {
    let digits = width.div_ceil(4).max(1);
    format!("0x{row:0digits$X}")
}

/// Outcome of replaying a counterexample through the plain simulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Replay {
    pub got: bool,
    pub expected: bool,
}

impl Replay {
    pub fn is_mismatch(&self) -> bool {
        self.got != self.expected
    }
}

/// Re-evaluates a counterexample with [`evaluate`], independent of the
/// word-parallel sweep that found it.
pub fn replay(system: &RedundantSystem, cx: &Counterexample) -> Result<Replay> {
    let row = cx.input_row()?;
    let inputs = &system.golden_module.inputs;
    let p = inputs.len();
    let stim: Assignment = inputs
        .iter()
        .enumerate()
        .map(|(i, n)| (n.clone(), (row >> (p - 1 - i)) & 1 == 1))
        .collect();
    let out = system
        .golden_module
        .outputs
        .get(cx.bit)
        .ok_or_else(|| Error::Param(format!("output bit {} does not exist", cx.bit)))?;
    let got = evaluate(&system.netlist, &stim, &cx.overlay(system)?)?[out];
    let expected = evaluate(&system.golden_module, &stim, &FaultOverlay::new())?[out];
    Ok(Replay { got, expected })
}

/// Result of a masking check over one or many patterns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MaskingVerdict {
    pub verified: bool,
    pub patterns_checked: usize,
    pub inputs_per_pattern: usize,
    pub counterexample: Option<Counterexample>,
}

/// Fault index sets (1-based) of the given size within the scheme's budgets,
/// in lexicographic order.
pub fn conforming_patterns(scheme: RedundancyScheme, cardinality: usize) -> Vec<Vec<usize>> {
    patterns_where(scheme, cardinality, true)
}

/// Fault index sets of the given size that exceed the scheme's budgets.
pub fn nonconforming_patterns(scheme: RedundancyScheme, cardinality: usize) -> Vec<Vec<usize>> {
    patterns_where(scheme, cardinality, false)
}

fn patterns_where(
    scheme: RedundancyScheme,
    cardinality: usize,
    conforming: bool,
) -> Vec<Vec<usize>> {
    subsets(scheme.replicas(), cardinality)
        .into_iter()
        .map(|s| s.into_iter().map(|i| i + 1).collect::<Vec<_>>())
        .filter(|s| scheme.is_conforming(s) == conforming)
        .collect()
}

/// Smallest fault count that can defeat the scheme when placed badly.
pub fn tightness_cardinality(scheme: RedundancyScheme) -> usize {
    match scheme {
        RedundancyScheme::Nmr { n } => n.div_ceil(2),
        RedundancyScheme::Dmmr { .. } => 2,
    }
}

/// Reusable exhaustive checker for one system.
pub struct Verifier<'a> {
    system: &'a RedundantSystem,
    compiled: CompiledNetlist,
    stimulus: Stimulus,
    golden: Response,
    replica_nets: Vec<Vec<usize>>,
    independence: std::result::Result<(), String>,
    exec: Exec,
}

impl<'a> Verifier<'a> {
    pub fn new(system: &'a RedundantSystem) -> Result<Self> {
        let width = system.golden_module.inputs.len();
        if width > VERIFY_INPUT_LIMIT {
            return Err(Error::TooManyInputs {
                count: width,
                limit: VERIFY_INPUT_LIMIT,
            });
        }
        let stimulus = Stimulus::exhaustive(width)?;
        let compiled = CompiledNetlist::new(&system.netlist)?;
        let golden_compiled = CompiledNetlist::new(&system.golden_module)?;
        let golden = golden_compiled.simulate(&stimulus, &golden_compiled.empty_mask());
        let replica_nets = system
            .module_output_nets
            .iter()
            .map(|nets| {
                nets.iter()
                    .map(|n| {
                        compiled
                            .net_index(n)
                            .ok_or_else(|| Error::UnknownNet(n.clone()))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let independence = system
            .check_bitwise_independence()
            .map_err(|e| e.to_string());
        Ok(Verifier {
            system,
            compiled,
            stimulus,
            golden,
            replica_nets,
            independence,
            exec: Exec::default(),
        })
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn inputs_per_pattern(&self) -> usize {
        self.stimulus.len()
    }

    fn check_indices(&self, replicas: &[usize]) -> Result<()> {
        let count = self.replica_nets.len();
        if let Some(bad) = replicas.iter().find(|&&r| r == 0 || r > count) {
            return Err(Error::Param(format!(
                "replica {bad} does not exist (system has {count})"
            )));
        }
        Ok(())
    }

    /// First failing (row, output) of `response` against the golden table.
    fn first_mismatch(&self, response: &Response, only: Option<usize>) -> Option<(usize, usize)> {
        let q = self.system.output_count();
        for b in 0..self.stimulus.block_count() {
            let lanes = self.stimulus.lane_mask(b);
            let mut best: Option<(u32, usize)> = None;
            for o in only.map_or(0..q, |j| j..j + 1) {
                let diff = (response.word(b, o) ^ self.golden.word(b, o)) & lanes;
                if diff != 0 {
                    let lane = diff.trailing_zeros();
                    if best.is_none_or(|(l, _)| lane < l) {
                        best = Some((lane, o));
                    }
                }
            }
            if let Some((lane, o)) = best {
                return Some((b * 64 + lane as usize, o));
            }
        }
        None
    }

    fn witness(
        &self,
        pattern: &FaultPattern,
        response: &Response,
        k: usize,
        o: usize,
        choice: Vec<u8>,
    ) -> Counterexample {
        let row = self.stimulus.row(k);
        let got = response.row_value(k) >> (self.system.output_count() - 1 - o) & 1;
        let expected = self.golden.row_value(k) >> (self.system.output_count() - 1 - o) & 1;
        Counterexample {
            pattern: pattern.replicas.clone(),
            behavior: pattern.behavior,
            input: hex_row(row, self.stimulus.width()),
            bit: o,
            got: got as u8,
            expected: expected as u8,
            choice,
            output: self.system.golden_module.outputs[o].clone(),
        }
    }

    /// Checks one pattern; `Ok(None)` means every input is masked.
    pub fn check(&self, pattern: &FaultPattern) -> Result<Option<Counterexample>> {
        self.check_indices(&pattern.replicas)?;
        let mut mask: OverlayMask = self.compiled.empty_mask();
        match pattern.behavior.net_fault() {
            Some(fault) => {
                for &r in &pattern.replicas {
                    for &net in &self.replica_nets[r - 1] {
                        mask.set(net, Some(fault));
                    }
                }
                let response = self.compiled.simulate(&self.stimulus, &mask);
                Ok(self
                    .first_mismatch(&response, None)
                    .map(|(k, o)| self.witness(pattern, &response, k, o, Vec::new())))
            }
            None => {
                if let Err(diag) = &self.independence {
                    return Err(Error::Structure(format!(
                        "per-bit adversarial enumeration is not sound here: {diag}"
                    )));
                }
                let faulty = &pattern.replicas;
                for o in 0..self.system.output_count() {
                    for c in 0u64..1 << faulty.len() {
                        for (i, &r) in faulty.iter().enumerate() {
                            let v = (c >> i) & 1 == 1;
                            let f = if v {
                                NetFault::Stuck1
                            } else {
                                NetFault::Stuck0
                            };
                            mask.set(self.replica_nets[r - 1][o], Some(f));
                        }
                        let response = self.compiled.simulate(&self.stimulus, &mask);
                        if let Some((k, _)) = self.first_mismatch(&response, Some(o)) {
                            let choice = (0..faulty.len()).map(|i| ((c >> i) & 1) as u8).collect();
                            return Ok(Some(self.witness(pattern, &response, k, o, choice)));
                        }
                    }
                    for &r in faulty {
                        mask.set(self.replica_nets[r - 1][o], None);
                    }
                }
                Ok(None)
            }
        }
    }

    pub fn verify_masking(
        &self,
        replicas: &[usize],
        behavior: FaultBehavior,
    ) -> Result<MaskingVerdict> {
        let pattern = FaultPattern::new(replicas.to_vec(), behavior)?;
        let counterexample = self.check(&pattern)?;
        Ok(MaskingVerdict {
            verified: counterexample.is_none(),
            patterns_checked: 1,
            inputs_per_pattern: self.inputs_per_pattern(),
            counterexample,
        })
    }

    /// Checks patterns in order; the first counterexample in that order wins.
    pub fn verify_patterns(
        &self,
        patterns: &[Vec<usize>],
        behavior: FaultBehavior,
    ) -> Result<MaskingVerdict> {
        let results = par::map(self.exec, patterns, |p| {
            FaultPattern::new(p.clone(), behavior).and_then(|fp| self.check(&fp))
        });
        let mut counterexample = None;
        for r in results {
            if let Some(cx) = r? {
                counterexample = Some(cx);
                break;
            }
        }
        Ok(MaskingVerdict {
            verified: counterexample.is_none(),
            patterns_checked: patterns.len(),
            inputs_per_pattern: self.inputs_per_pattern(),
            counterexample,
        })
    }

    /// Adversarial check of every conforming pattern up to the conditional
    /// tolerance.
    pub fn verify_guarantee(&self) -> Result<MaskingVerdict> {
        let scheme = self.system.scheme;
        let patterns: Vec<Vec<usize>> = (1..=tolerance(scheme).conditional_total)
            .flat_map(|k| conforming_patterns(scheme, k))
            .collect();
        self.verify_patterns(&patterns, FaultBehavior::Adversarial)
    }

    /// First adversarial witness among non-conforming patterns of the given
    /// size.
    pub fn find_counterexample(&self, cardinality: usize) -> Result<Option<Counterexample>> {
        let patterns = nonconforming_patterns(self.system.scheme, cardinality);
        Ok(self
            .verify_patterns(&patterns, FaultBehavior::Adversarial)?
            .counterexample)
    }
}

pub fn verify_masking(
    system: &RedundantSystem,
    replicas: &[usize],
    behavior: FaultBehavior,
) -> Result<MaskingVerdict> {
    Verifier::new(system)?.verify_masking(replicas, behavior)
}

pub fn verify_guarantee(system: &RedundantSystem) -> Result<MaskingVerdict> {
    Verifier::new(system)?.verify_guarantee()
}

pub fn find_counterexample(
    system: &RedundantSystem,
    cardinality: usize,
) -> Result<Option<Counterexample>> {
    Verifier::new(system)?.find_counterexample(cardinality)
}
