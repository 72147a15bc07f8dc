//! Area, critical-path delay and area-delay product.
//!
//! Units are abstract: area is a weighted gate count and delay is the
//! longest weighted input-to-output path. Interconnect delay is not modelled.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netlist::{normalize_two_input, order_gates, Driver, GateKind, Netlist};
use crate::redundancy::RedundantSystem;

pub const REPORT_NOTE: &str =
    "abstract units; interconnect delay is not modelled; FPGA BEL/ns values are not reproduced";

/// Per-kind area weights; kinds not listed weigh 1.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AreaWeights(pub BTreeMap<GateKind, f64>);

impl AreaWeights {
    pub fn weight(&self, kind: GateKind) -> f64 {
        self.0.get(&kind).copied().unwrap_or(1.0)
    }

    fn check(&self) -> Result<()> {
        match self.0.iter().find(|(_, w)| !(w.is_finite() && **w >= 0.0)) {
            Some((k, w)) => Err(Error::Param(format!("area weight for {k} is {w}"))),
            None => Ok(()),
        }
    }
}

/// Gate delays in abstract time units.
///
/// A gate with fan-in `f` takes `delays[kind] + fan_in_extra * max(f - 2, 0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DelayModel {
    pub name: String,
    #[serde(default)]
    pub delays: BTreeMap<GateKind, f64>,
    #[serde(default)]
    pub fan_in_extra: f64,
}

impl Default for DelayModel {
    fn default() -> Self {
        DelayModel::unit()
    }
}

impl DelayModel {
    pub fn unit() -> Self {
        DelayModel {
            name: "unit".into(),
            delays: GateKind::ALL.iter().map(|&k| (k, 1.0)).collect(),
            fan_in_extra: 0.0,
        }
    }

    /// Every delay multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        DelayModel {
            name: format!("{}x{c}", self.name),
            delays: self.delays.iter().map(|(&k, &d)| (k, d * c)).collect(),
            fan_in_extra: self.fan_in_extra * c,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let model: DelayModel =
            serde_path_to_error::deserialize(de).map_err(|e| Error::Schema {
                path: e.path().to_string(),
                message: e.into_inner().to_string(),
            })?;
        model.check()?;
        Ok(model)
    }

    fn check(&self) -> Result<()> {
        for (k, d) in &self.delays {
            if !(d.is_finite() && *d >= 0.0) {
                return Err(Error::Param(format!("delay for {k} is {d}")));
            }
        }
        if !(self.fan_in_extra.is_finite() && self.fan_in_extra >= 0.0) {
            return Err(Error::Param(format!(
                "fan-in scaling is {}",
                self.fan_in_extra
            )));
        }
        Ok(())
    }

    pub fn gate_delay(&self, kind: GateKind, fan_in: usize) -> f64 {
        // Unlisted kinds default to one unit.
        let base = self.delays.get(&kind).copied().unwrap_or(1.0);
        base + self.fan_in_extra * fan_in.saturating_sub(2) as f64
    }
}

/// Which gate form the metrics were taken on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    WideGates,
    TwoInput,
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Normalization::WideGates => "wide-gates",
            Normalization::TwoInput => "two-input",
        })
    }
}

/// `(gate_count, weighted_area)`.
pub fn area(netlist: &Netlist, weights: Option<&AreaWeights>) -> Result<(usize, f64)> {
    let default = AreaWeights::default();
    let weights = weights.unwrap_or(&default);
    weights.check()?;
    let total = netlist.gates.iter().map(|g| weights.weight(g.kind)).sum();
    Ok((netlist.gate_count(), total))
}

/// Longest weighted path to any primary output and the gates along it,
/// from input side to output side.
pub fn critical_path_delay(netlist: &Netlist, model: &DelayModel) -> Result<(f64, Vec<String>)> {
    model.check()?;
    let order = order_gates(netlist).map_err(|c| Error::Cycle { gate: c[0].clone() })?;
    let drivers = netlist.drivers();
    let mut arrival = vec![0.0f64; netlist.gates.len()];
    let mut pred: Vec<Option<usize>> = vec![None; netlist.gates.len()];
    for gi in order {
        let g = &netlist.gates[gi];
        let mut best = 0.0;
        let mut from = None;
        for net in &g.ins {
            if let Some(Driver::Gate(d)) = drivers.get(net.as_str()) {
                if from.is_none() || arrival[*d] > best {
                    best = arrival[*d];
                    from = Some(*d);
                }
            }
        }
        arrival[gi] = best + model.gate_delay(g.kind, g.ins.len());
        pred[gi] = from;
    }

    let mut end: Option<usize> = None;
    let mut delay = 0.0;
    for out in &netlist.outputs {
        if let Some(Driver::Gate(g)) = drivers.get(out.as_str()) {
            if end.is_none() || arrival[*g] > delay {
                delay = arrival[*g];
                end = Some(*g);
            }
        }
    }
    let mut path = Vec::new();
    let mut cur = end;
    while let Some(g) = cur {
        path.push(netlist.gates[g].id.clone());
        cur = pred[g];
    }
    path.reverse();
    Ok((delay, path))
}

/// Options shared by every report in a comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsOptions {
    pub delay_model: DelayModel,
    pub weights: AreaWeights,
    pub normalization: Normalization,
}

impl Default for MetricsOptions {
    fn default() -> Self {
        MetricsOptions {
            delay_model: DelayModel::unit(),
            weights: AreaWeights::default(),
            normalization: Normalization::TwoInput,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub circuit: String,
    pub module: String,
    pub scheme: Option<String>,
    pub replicas: Option<usize>,
    pub gate_count: usize,
    pub weighted_area: f64,
    pub critical_path_delay: f64,
    pub adp: f64,
    pub voter_construction: String,
    pub normalization: Normalization,
    pub delay_model: String,
    pub critical_path: Vec<String>,
}

/// Metrics of a bare netlist.
pub fn measure(netlist: &Netlist, opts: &MetricsOptions) -> Result<MetricsReport> {
    let normalized;
    let target = match opts.normalization {
        Normalization::WideGates => netlist,
        Normalization::TwoInput => {
            normalized = normalize_two_input(netlist);
            &normalized
        }
    };
    let (gate_count, weighted_area) = area(target, Some(&opts.weights))?;
    let (critical_path_delay, critical_path) = critical_path_delay(target, &opts.delay_model)?;
    Ok(MetricsReport {
        circuit: netlist.name.clone(),
        module: netlist.name.clone(),
        scheme: None,
        replicas: None,
        gate_count,
        weighted_area,
        critical_path_delay,
        adp: weighted_area * critical_path_delay,
        voter_construction: "none".into(),
        normalization: opts.normalization,
        delay_model: opts.delay_model.name.clone(),
        critical_path,
    })
}

/// Metrics of a redundant system, tagged with its scheme and voter.
pub fn measure_system(system: &RedundantSystem, opts: &MetricsOptions) -> Result<MetricsReport> {
    let mut report = measure(&system.netlist, opts)?;
    report.module = system.golden_module.name.clone();
    report.scheme = Some(system.scheme.to_string());
    report.replicas = Some(system.replica_count());
    report.voter_construction = match system.voter_construction {
        Some(c) => c.label().to_string(),
        None => "distributed-minority-majority".to_string(),
    };
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub baseline: String,
    pub candidate: String,
    pub adp_reduction_percent: f64,
    pub area_reduction_percent: f64,
    pub delay_reduction_percent: f64,
    /// Baseline replicas minus candidate replicas.
    pub module_count_delta: i64,
}

pub fn reduction_percent(baseline: f64, candidate: f64) -> f64 {
    if baseline == 0.0 {
        0.0
    } else {
        (baseline - candidate) / baseline * 100.0
    }
}

/// Like-for-like comparison of two reports.
pub fn compare(baseline: &MetricsReport, candidate: &MetricsReport) -> Result<ComparisonRow> {
    if baseline.module != candidate.module {
        return Err(Error::Param(format!(
            "cannot compare different modules `{}` and `{}`",
            baseline.module, candidate.module
        )));
    }
    if baseline.delay_model != candidate.delay_model {
        return Err(Error::Param(format!(
            "delay models differ: `{}` vs `{}`",
            baseline.delay_model, candidate.delay_model
        )));
    }
    if baseline.normalization != candidate.normalization {
        return Err(Error::Param(format!(
            "normalizations differ: {} vs {}",
            baseline.normalization, candidate.normalization
        )));
    }
    let label = |r: &MetricsReport| r.scheme.clone().unwrap_or_else(|| r.circuit.clone());
    Ok(ComparisonRow {
        baseline: label(baseline),
        candidate: label(candidate),
        adp_reduction_percent: reduction_percent(baseline.adp, candidate.adp),
        area_reduction_percent: reduction_percent(baseline.weighted_area, candidate.weighted_area),
        delay_reduction_percent: reduction_percent(
            baseline.critical_path_delay,
            candidate.critical_path_delay,
        ),
        module_count_delta: baseline.replicas.unwrap_or(1) as i64
            - candidate.replicas.unwrap_or(1) as i64,
    })
}

/// Aligned plain-text rendering of metrics reports.
pub fn render_reports(reports: &[MetricsReport]) -> String {
    let mut s = format!("# {REPORT_NOTE}\n");
    s.push_str(&format!(
        "{:<24} {:>8} {:>6} {:>12} {:>10} {:>12}  {:<28} {}\n",
        "circuit", "replicas", "gates", "area", "delay", "adp", "voter", "normalization"
    ));
    for r in reports {
        s.push_str(&format!(
            "{:<24} {:>8} {:>6} {:>12.3} {:>10.3} {:>12.3}  {:<28} {}\n",
            r.scheme.as_deref().unwrap_or(&r.circuit),
            r.replicas.map_or("-".to_string(), |n| n.to_string()),
            r.gate_count,
            r.weighted_area,
            r.critical_path_delay,
            r.adp,
            r.voter_construction,
            r.normalization
        ));
    }
    s
}

pub fn render_comparisons(rows: &[ComparisonRow]) -> String {
    let mut s = format!("# {REPORT_NOTE}\n");
    s.push_str(&format!(
        "{:<12} {:<12} {:>10} {:>10} {:>10} {:>8}\n",
        "baseline", "candidate", "adp_red%", "area_red%", "delay_red%", "modules"
    ));
    for r in rows {
        s.push_str(&format!(
            "{:<12} {:<12} {:>10.2} {:>10.2} {:>10.2} {:>8}\n",
            r.baseline,
            r.candidate,
            r.adp_reduction_percent,
            r.area_reduction_percent,
            r.delay_reduction_percent,
            r.module_count_delta
        ));
    }
    s
}
