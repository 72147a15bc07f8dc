//! NMR and 3-of-M DMMR system construction and tolerance bookkeeping.
//!
//! Every replica receives the module's primary inputs unchanged. One voter is
//! instantiated per output bit, fed by the same bit of every replica, and it
//! drives the system output of the same name as the module output.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::library::{dmmr_voter, majority_voter, VoterConstruction};
use crate::netlist::{instantiate, validate, Netlist, PortBinding};

/// Size of the majority logic group in a 3-of-M DMMR system.
pub const MAJORITY_GROUP: usize = 3;
pub const NMR_RANGE: (usize, usize) = (3, 9);
pub const DMMR_RANGE: (usize, usize) = (5, 9);

/// `NMR{n}` or `DMMR{m}` with a fixed three-member majority group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum RedundancyScheme {
    Nmr { n: usize },
    Dmmr { m: usize },
}

impl RedundancyScheme {
    pub fn nmr(n: usize) -> Result<Self> {
        if n.is_multiple_of(2) {
            return Err(Error::Param(format!("n must be odd, got {n}")));
        }
        if n < 3 {
            return Err(Error::Param(format!("n must be at least 3, got {n}")));
        }
        Ok(RedundancyScheme::Nmr { n })
    }

    pub fn dmmr(m: usize) -> Result<Self> {
        if m < 5 {
            return Err(Error::Param(format!(
                "m must be at least 5 for a 3-of-M system, got {m}"
            )));
        }
        Ok(RedundancyScheme::Dmmr { m })
    }

    /// Number of function module copies.
    pub fn replicas(self) -> usize {
        match self {
            RedundancyScheme::Nmr { n } => n,
            RedundancyScheme::Dmmr { m } => m,
        }
    }

    /// Whether the fault set (1-based replica indices) respects the
    /// scheme's budgets.
    pub fn is_conforming(self, faulty: &[usize]) -> bool {
        let t = tolerance(self);
        match self {
            RedundancyScheme::Nmr { .. } => faulty.len() <= t.conditional_total,
            RedundancyScheme::Dmmr { .. } => {
                let majority = faulty.iter().filter(|&&r| r <= MAJORITY_GROUP).count();
                let minority = faulty.len() - majority;
                majority <= t.majority_budget.unwrap_or(0)
                    && minority <= t.minority_budget.unwrap_or(0)
            }
        }
    }

    /// Bitmask form of [`Self::is_conforming`]; bit `k-1` marks replica `k`.
    pub fn is_conforming_mask(self, faulty: u64) -> bool {
        let total = faulty.count_ones() as usize;
        match self {
            RedundancyScheme::Nmr { n } => total <= (n - 1) / 2,
            RedundancyScheme::Dmmr { m } => {
                let majority = (faulty & 0b111).count_ones() as usize;
                majority <= 1 && total - majority <= m - 4
            }
        }
    }
}

impl fmt::Display for RedundancyScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RedundancyScheme::Nmr { n } => write!(f, "nmr:{n}"),
            RedundancyScheme::Dmmr { m } => write!(f, "dmmr:3of{m}"),
        }
    }
}

impl FromStr for RedundancyScheme {
    type Err = Error;

    /// `nmr:<odd n>` or `dmmr:3of<m>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::Param(format!(
                "bad scheme `{s}`; expected nmr:<odd n> or dmmr:3of<m>"
            ))
        };
        if let Some(n) = s.strip_prefix("nmr:") {
            let n = n.parse().map_err(|_| bad())?;
            RedundancyScheme::nmr(n)
        } else if let Some(m) = s.strip_prefix("dmmr:3of") {
            let m = m.parse().map_err(|_| bad())?;
            RedundancyScheme::dmmr(m)
        } else {
            Err(bad())
        }
    }
}

impl TryFrom<String> for RedundancyScheme {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<RedundancyScheme> for String {
    fn from(s: RedundancyScheme) -> String {
        s.to_string()
    }
}

/// Fault counts a scheme is guaranteed to mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ToleranceDescriptor {
    /// Faults masked no matter how they are distributed over replicas.
    pub total_guaranteed: usize,
    /// Faults masked when they respect the per-group budgets.
    pub conditional_total: usize,
    /// Faulty majority-group members tolerated (DMMR only).
    pub majority_budget: Option<usize>,
    /// Faulty minority-group members tolerated (DMMR only).
    pub minority_budget: Option<usize>,
}

pub fn tolerance(scheme: RedundancyScheme) -> ToleranceDescriptor {
    match scheme {
        RedundancyScheme::Nmr { n } => ToleranceDescriptor {
            total_guaranteed: (n - 1) / 2,
            conditional_total: (n - 1) / 2,
            majority_budget: None,
            minority_budget: None,
        },
        RedundancyScheme::Dmmr { m } => ToleranceDescriptor {
            // Two faults can both land in the majority group.
            total_guaranteed: 1,
            conditional_total: m - 3,
            majority_budget: Some(1),
            minority_budget: Some(m - 4),
        },
    }
}

/// A flattened redundant system plus the bookkeeping needed to inject
/// module-level faults into it.
#[derive(Debug, Clone)]
pub struct RedundantSystem {
    pub netlist: Netlist,
    pub scheme: RedundancyScheme,
    /// `module_output_nets[k][j]`: output `j` of replica `k+1`.
    pub module_output_nets: Vec<Vec<String>>,
    pub golden_module: Netlist,
    /// Voter structure for NMR systems; `None` for DMMR.
    pub voter_construction: Option<VoterConstruction>,
}

/// Net/gate prefix for replica `k` (1-based).
pub fn replica_prefix(module: &Netlist, k: usize) -> String {
    format!("{}_r{}_", module.name, k)
}

fn voter_prefix(module_output: &str) -> String {
    format!("vote_{module_output}_")
}

pub fn build_nmr(module: &Netlist, n: usize) -> Result<RedundantSystem> {
    build_nmr_with(module, n, VoterConstruction::default_for(n))
}

pub fn build_nmr_with(
    module: &Netlist,
    n: usize,
    construction: VoterConstruction,
) -> Result<RedundantSystem> {
    let scheme = RedundancyScheme::nmr(n)?;
    if n > NMR_RANGE.1 {
        return Err(Error::Param(format!(
            "NMR systems are built for n in {}..={}, got {n}",
            NMR_RANGE.0, NMR_RANGE.1
        )));
    }
    let voter = majority_voter(n, construction)?;
    assemble(module, scheme, &voter, Some(construction))
}

pub fn build_dmmr(module: &Netlist, m: usize) -> Result<RedundantSystem> {
    let scheme = RedundancyScheme::dmmr(m)?;
    if m > DMMR_RANGE.1 {
        return Err(Error::Param(format!(
            "DMMR systems are built for m in {}..={}, got {m}",
            DMMR_RANGE.0, DMMR_RANGE.1
        )));
    }
    let voter = dmmr_voter(m)?;
    assemble(module, scheme, &voter, None)
}

/// Builds either scheme with default voters.
pub fn build(module: &Netlist, scheme: RedundancyScheme) -> Result<RedundantSystem> {
    match scheme {
        RedundancyScheme::Nmr { n } => build_nmr(module, n),
        RedundancyScheme::Dmmr { m } => build_dmmr(module, m),
    }
}

fn assemble(
    module: &Netlist,
    scheme: RedundancyScheme,
    voter: &Netlist,
    construction: Option<VoterConstruction>,
) -> Result<RedundantSystem> {
    validate(module).into_result()?;
    if module.outputs.is_empty() {
        return Err(Error::Param(format!(
            "module `{}` has no outputs",
            module.name
        )));
    }
    let distinct: BTreeSet<&String> = module.outputs.iter().collect();
    if distinct.len() != module.outputs.len() {
        return Err(Error::Param(format!(
            "module `{}` lists an output net twice",
            module.name
        )));
    }
    if let Some(o) = module.outputs.iter().find(|o| module.inputs.contains(o)) {
        return Err(Error::Param(format!(
            "module output `{o}` is a primary input; replicas need driven outputs"
        )));
    }

    let mut sys = Netlist::new(format!("{}_{}", module.name, scheme_tag(scheme)));
    sys.inputs = module.inputs.clone();

    let mut module_output_nets = Vec::with_capacity(scheme.replicas());
    for k in 1..=scheme.replicas() {
        let prefix = replica_prefix(module, k);
        let mut binding = PortBinding::new();
        for i in &module.inputs {
            binding.insert(i.clone(), i.clone());
        }
        let outs: Vec<String> = module
            .outputs
            .iter()
            .map(|o| format!("{prefix}{o}"))
            .collect();
        for (o, net) in module.outputs.iter().zip(&outs) {
            binding.insert(o.clone(), net.clone());
        }
        sys = instantiate(&sys, module, &binding, &prefix)?;
        module_output_nets.push(outs);
    }

    let voter_out = &voter.outputs[0];
    for (j, out) in module.outputs.iter().enumerate() {
        let mut binding = PortBinding::new();
        for (k, port) in voter.inputs.iter().enumerate() {
            binding.insert(port.clone(), module_output_nets[k][j].clone());
        }
        binding.insert(voter_out.clone(), out.clone());
        sys = instantiate(&sys, voter, &binding, &voter_prefix(out))?;
    }
    sys.outputs = module.outputs.clone();
    validate(&sys).into_result()?;

    Ok(RedundantSystem {
        netlist: sys,
        scheme,
        module_output_nets,
        golden_module: module.clone(),
        voter_construction: construction,
    })
}

fn scheme_tag(scheme: RedundancyScheme) -> String {
    match scheme {
        RedundancyScheme::Nmr { n } => format!("nmr{n}"),
        RedundancyScheme::Dmmr { m } => format!("dmmr3of{m}"),
    }
}

impl RedundantSystem {
    /// Wraps an externally supplied system netlist (for example an edited
    /// copy of a generated one). Replica output nets are located by the
    /// `<module>_r<k>_<output>` naming convention.
    pub fn from_netlist(
        netlist: Netlist,
        scheme: RedundancyScheme,
        golden_module: Netlist,
    ) -> Result<Self> {
        validate(&netlist).into_result()?;
        if netlist.inputs != golden_module.inputs || netlist.outputs != golden_module.outputs {
            return Err(Error::Structure(format!(
                "system `{}` ports do not match module `{}`",
                netlist.name, golden_module.name
            )));
        }
        let mut module_output_nets = Vec::with_capacity(scheme.replicas());
        for k in 1..=scheme.replicas() {
            let prefix = replica_prefix(&golden_module, k);
            let outs: Vec<String> = golden_module
                .outputs
                .iter()
                .map(|o| format!("{prefix}{o}"))
                .collect();
            if let Some(missing) = outs.iter().find(|o| !netlist.has_net(o)) {
                return Err(Error::Structure(format!(
                    "replica output net `{missing}` not found in `{}`",
                    netlist.name
                )));
            }
            module_output_nets.push(outs);
        }
        Ok(RedundantSystem {
            netlist,
            scheme,
            module_output_nets,
            golden_module,
            voter_construction: None,
        })
    }

    pub fn replica_count(&self) -> usize {
        self.module_output_nets.len()
    }

    pub fn output_count(&self) -> usize {
        self.golden_module.outputs.len()
    }

    /// Gates belonging to replica `k` (1-based).
    pub fn replica_gate_count(&self, k: usize) -> usize {
        let prefix = replica_prefix(&self.golden_module, k);
        self.netlist
            .gates
            .iter()
            .filter(|g| g.id.starts_with(&prefix))
            .count()
    }

    /// Gates outside every replica.
    pub fn voter_gate_count(&self) -> usize {
        let replicas: usize = (1..=self.replica_count())
            .map(|k| self.replica_gate_count(k))
            .sum();
        self.netlist.gate_count() - replicas
    }

    /// Replica `k` with its prefix stripped, for comparison with the golden
    /// module.
    pub fn replica_subgraph(&self, k: usize) -> Netlist {
        let prefix = replica_prefix(&self.golden_module, k);
        let strip = |n: &str| n.strip_prefix(prefix.as_str()).unwrap_or(n).to_string();
        Netlist {
            name: self.golden_module.name.clone(),
            inputs: self.golden_module.inputs.clone(),
            outputs: self.module_output_nets[k - 1]
                .iter()
                .map(|n| strip(n))
                .collect(),
            gates: self
                .netlist
                .gates
                .iter()
                .filter(|g| g.id.starts_with(&prefix))
                .map(|g| crate::netlist::Gate {
                    id: strip(&g.id),
                    kind: g.kind,
                    ins: g.ins.iter().map(|n| strip(n)).collect(),
                    out: strip(&g.out),
                })
                .collect(),
        }
    }

    /// Checks that system output `j` depends on replica outputs only through
    /// the `j`-th output net of each replica.
    pub fn check_bitwise_independence(&self) -> Result<()> {
        let all: BTreeSet<&str> = self
            .module_output_nets
            .iter()
            .flatten()
            .map(String::as_str)
            .collect();
        for (j, out) in self.netlist.outputs.iter().enumerate() {
            let cone = self.netlist.fan_in_cone(out);
            let seen: BTreeSet<&str> = cone
                .iter()
                .map(String::as_str)
                .filter(|n| all.contains(n))
                .collect();
            let expected: BTreeSet<&str> = self
                .module_output_nets
                .iter()
                .map(|r| r[j].as_str())
                .collect();
            if seen != expected {
                let stray: Vec<&str> = seen.difference(&expected).copied().collect();
                let absent: Vec<&str> = expected.difference(&seen).copied().collect();
                return Err(Error::Structure(format!(
                    "output `{out}` is not voted bitwise: extra replica nets {stray:?}, \
                     missing replica nets {absent:?}"
                )));
            }
        }
        Ok(())
    }
}
