//! Flat combinational gate-level netlists.
//!
//! A [`Netlist`] is a list of named gates over string-named nets. Hierarchy
//! only exists while composing circuits with [`instantiate`]; everything
//! downstream (simulation, fault overlays, path analysis) works on the flat
//! graph.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Primitive gate functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GateKind {
    And,
    Or,
    Nand,
    Nor,
    Xor,
    Xnor,
    Not,
    Buf,
}

impl GateKind {
    pub const ALL: [GateKind; 8] = [
        GateKind::And,
        GateKind::Or,
        GateKind::Nand,
        GateKind::Nor,
        GateKind::Xor,
        GateKind::Xnor,
        GateKind::Not,
        GateKind::Buf,
    ];

    /// Inclusive fan-in bounds; `None` as upper bound means unbounded.
    pub fn fan_in_range(self) -> (usize, Option<usize>) {
        match self {
            GateKind::Not | GateKind::Buf => (1, Some(1)),
            _ => (2, None),
        }
    }

    pub fn accepts_fan_in(self, n: usize) -> bool {
        let (lo, hi) = self.fan_in_range();
        n >= lo && hi.is_none_or(|hi| n <= hi)
    }

    /// Lower-case primitive name as used by structural Verilog.
    pub fn verilog_name(self) -> &'static str {
        match self {
            GateKind::And => "and",
            GateKind::Or => "or",
            GateKind::Nand => "nand",
            GateKind::Nor => "nor",
            GateKind::Xor => "xor",
            GateKind::Xnor => "xnor",
            GateKind::Not => "not",
            GateKind::Buf => "buf",
        }
    }

    /// Evaluates the gate on 64 patterns at once.
    #[inline]
    pub fn eval_words<I: IntoIterator<Item = u64>>(self, ins: I) -> u64 {
        let mut it = ins.into_iter();
        let first = it.next().unwrap_or(0);
        match self {
            GateKind::And => it.fold(first, |acc, w| acc & w),
            GateKind::Or => it.fold(first, |acc, w| acc | w),
            GateKind::Nand => !it.fold(first, |acc, w| acc & w),
            GateKind::Nor => !it.fold(first, |acc, w| acc | w),
            GateKind::Xor => it.fold(first, |acc, w| acc ^ w),
            GateKind::Xnor => !it.fold(first, |acc, w| acc ^ w),
            GateKind::Not => !first,
            GateKind::Buf => first,
        }
    }

    pub fn eval(self, ins: &[bool]) -> bool {
        self.eval_words(ins.iter().map(|&b| if b { !0 } else { 0 })) & 1 == 1
    }

    /// The non-inverting associative kind this gate reduces with, and
    /// whether the final result is complemented.
    pub(crate) fn associative_base(self) -> Option<(GateKind, bool)> {
        match self {
            GateKind::And => Some((GateKind::And, false)),
            GateKind::Or => Some((GateKind::Or, false)),
            GateKind::Xor => Some((GateKind::Xor, false)),
            GateKind::Nand => Some((GateKind::And, true)),
            GateKind::Nor => Some((GateKind::Or, true)),
            GateKind::Xnor => Some((GateKind::Xor, true)),
            GateKind::Not | GateKind::Buf => None,
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.verilog_name().to_ascii_uppercase())
    }
}

/// One gate instance driving exactly one net.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gate {
    pub id: String,
    pub kind: GateKind,
    pub ins: Vec<String>,
    pub out: String,
}

impl Gate {
    pub fn new(
        id: impl Into<String>,
        kind: GateKind,
        ins: impl IntoIterator<Item = impl Into<String>>,
        out: impl Into<String>,
    ) -> Self {
        Gate {
            id: id.into(),
            kind,
            ins: ins.into_iter().map(Into::into).collect(),
            out: out.into(),
        }
    }
}

/// A flattened combinational netlist.
///
/// Field order is the JSON key order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Netlist {
    pub name: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub gates: Vec<Gate>,
}

/// One structural problem found by [`validate`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "issue", rename_all = "snake_case")]
pub enum Issue {
    MultipleDrivers {
        net: String,
        drivers: Vec<String>,
    },
    UndefinedNet {
        net: String,
        gate: String,
    },
    UndrivenOutput {
        net: String,
    },
    Cycle {
        gates: Vec<String>,
    },
    BadFanIn {
        gate: String,
        kind: GateKind,
        fan_in: usize,
    },
    DuplicateGateId {
        gate: String,
    },
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Issue::MultipleDrivers { net, drivers } => {
                write!(f, "multiple drivers on net `{net}`: {}", drivers.join(", "))
            }
            Issue::UndefinedNet { net, gate } => {
                write!(f, "gate `{gate}` reads undefined net `{net}`")
            }
            Issue::UndrivenOutput { net } => write!(f, "primary output `{net}` is not driven"),
            Issue::Cycle { gates } => write!(f, "cycle through gates {}", gates.join(" -> ")),
            Issue::BadFanIn { gate, kind, fan_in } => {
                write!(
                    f,
                    "gate `{gate}` of kind {kind} has illegal fan-in {fan_in}"
                )
            }
            Issue::DuplicateGateId { gate } => write!(f, "duplicate gate id `{gate}`"),
        }
    }
}

/// Result of [`validate`]: empty iff the netlist is well formed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_clean() {
            Ok(())
        } else {
            Err(Error::Invalid(self.issues))
        }
    }
}

/// Name of the driver of a net: either a primary input or a gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Driver {
    Input(usize),
    Gate(usize),
}

impl Netlist {
    pub fn new(name: impl Into<String>) -> Self {
        Netlist {
            name: name.into(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            gates: Vec::new(),
        }
    }

    pub fn gate_count(&self) -> usize {
        self.gates.len()
    }

    /// All nets, in order of definition: primary inputs first, then gate outputs.
    pub fn nets(&self) -> impl Iterator<Item = &str> {
        self.inputs
            .iter()
            .map(String::as_str)
            .chain(self.gates.iter().map(|g| g.out.as_str()))
    }

    pub fn has_net(&self, net: &str) -> bool {
        self.nets().any(|n| n == net)
    }

    /// First driver of every net. Multiple drivers are a validation issue and
    /// only the first one is kept here.
    pub fn drivers(&self) -> HashMap<&str, Driver> {
        let mut map = HashMap::with_capacity(self.inputs.len() + self.gates.len());
        for (i, net) in self.inputs.iter().enumerate() {
            map.entry(net.as_str()).or_insert(Driver::Input(i));
        }
        for (i, g) in self.gates.iter().enumerate() {
            map.entry(g.out.as_str()).or_insert(Driver::Gate(i));
        }
        map
    }

    pub fn gate(&self, id: &str) -> Option<&Gate> {
        self.gates.iter().find(|g| g.id == id)
    }

    /// Structural fan-in cone of `net`: every net that can influence it,
    /// including itself.
    pub fn fan_in_cone(&self, net: &str) -> BTreeSet<String> {
        let drivers = self.drivers();
        let mut seen = BTreeSet::new();
        let mut stack = vec![net.to_string()];
        while let Some(n) = stack.pop() {
            if !seen.insert(n.clone()) {
                continue;
            }
            if let Some(Driver::Gate(g)) = drivers.get(n.as_str()) {
                stack.extend(self.gates[*g].ins.iter().cloned());
            }
        }
        seen
    }

    /// Transitive fan-out of `net`, including itself.
    pub fn fan_out_cone(&self, net: &str) -> BTreeSet<String> {
        let mut readers: HashMap<&str, Vec<usize>> = HashMap::new();
        for (i, g) in self.gates.iter().enumerate() {
            for n in &g.ins {
                readers.entry(n.as_str()).or_default().push(i);
            }
        }
        let mut seen = BTreeSet::new();
        let mut stack = vec![net.to_string()];
        while let Some(n) = stack.pop() {
            if !seen.insert(n.clone()) {
                continue;
            }
            if let Some(gs) = readers.get(n.as_str()) {
                stack.extend(gs.iter().map(|&g| self.gates[g].out.clone()));
            }
        }
        seen
    }
}

/// Checks every structural invariant and lists all violations.
pub fn validate(netlist: &Netlist) -> ValidationReport {
    let mut issues = Vec::new();

    let mut ids = HashSet::new();
    for g in &netlist.gates {
        if !ids.insert(g.id.as_str()) {
            issues.push(Issue::DuplicateGateId { gate: g.id.clone() });
        }
        if !g.kind.accepts_fan_in(g.ins.len()) {
            issues.push(Issue::BadFanIn {
                gate: g.id.clone(),
                kind: g.kind,
                fan_in: g.ins.len(),
            });
        }
    }

    let mut driven: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    for net in &netlist.inputs {
        driven.entry(net).or_default().push(format!("input:{net}"));
    }
    for g in &netlist.gates {
        driven.entry(&g.out).or_default().push(g.id.clone());
    }
    for (net, drivers) in &driven {
        if drivers.len() > 1 {
            issues.push(Issue::MultipleDrivers {
                net: net.to_string(),
                drivers: drivers.clone(),
            });
        }
    }

    for g in &netlist.gates {
        for net in &g.ins {
            if !driven.contains_key(net.as_str()) {
                issues.push(Issue::UndefinedNet {
                    net: net.clone(),
                    gate: g.id.clone(),
                });
            }
        }
    }
    for net in &netlist.outputs {
        if !driven.contains_key(net.as_str()) {
            issues.push(Issue::UndrivenOutput { net: net.clone() });
        }
    }

    if let Err(cycle) = order_gates(netlist) {
        issues.push(Issue::Cycle { gates: cycle });
    }

    ValidationReport { issues }
}

/// Kahn ordering over gate indices. On failure returns the gate ids of one
/// cycle.
pub(crate) fn order_gates(netlist: &Netlist) -> std::result::Result<Vec<usize>, Vec<String>> {
    let drivers = netlist.drivers();
    let n = netlist.gates.len();
    let mut indegree = vec![0usize; n];
    let mut readers: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, g) in netlist.gates.iter().enumerate() {
        for net in &g.ins {
            if let Some(Driver::Gate(d)) = drivers.get(net.as_str()) {
                indegree[i] += 1;
                readers[*d].push(i);
            }
        }
    }
    let mut ready: Vec<usize> = (0..n).filter(|&i| indegree[i] == 0).rev().collect();
    let mut order = Vec::with_capacity(n);
    while let Some(i) = ready.pop() {
        order.push(i);
        for &r in readers[i].iter().rev() {
            indegree[r] -= 1;
            if indegree[r] == 0 {
                ready.push(r);
            }
        }
    }
    if order.len() == n {
        return Ok(order);
    }

    // Walk backwards through unresolved gates until one repeats.
    let stuck: HashSet<usize> = (0..n).filter(|&i| indegree[i] > 0).collect();
    let start = *stuck.iter().min().expect("unresolved gates exist");
    let mut path = vec![start];
    let mut pos: HashMap<usize, usize> = HashMap::from([(start, 0)]);
    let mut cur = start;
    loop {
        let next = netlist.gates[cur]
            .ins
            .iter()
            .filter_map(|net| match drivers.get(net.as_str()) {
                Some(Driver::Gate(d)) if stuck.contains(d) => Some(*d),
                _ => None,
            })
            .next()
            .expect("every unresolved gate has an unresolved driver");
        if let Some(&p) = pos.get(&next) {
            let mut cycle: Vec<String> = path[p..]
                .iter()
                .rev()
                .map(|&g| netlist.gates[g].id.clone())
                .collect();
            cycle.push(cycle[0].clone());
            return Err(cycle);
        }
        pos.insert(next, path.len());
        path.push(next);
        cur = next;
    }
}

/// Gate ids in an order where every gate follows the gates driving it.
pub fn topological_order(netlist: &Netlist) -> Result<Vec<String>> {
    order_gates(netlist)
        .map(|order| {
            order
                .into_iter()
                .map(|i| netlist.gates[i].id.clone())
                .collect()
        })
        .map_err(|cycle| Error::Cycle {
            gate: cycle[0].clone(),
        })
}

/// Maps each port of a child netlist to a net of the parent.
pub type PortBinding = BTreeMap<String, String>;

/// Builds a binding where every child port is connected to `prefix` + port.
pub fn binding_with_prefix(child: &Netlist, prefix: &str) -> PortBinding {
    child
        .inputs
        .iter()
        .chain(&child.outputs)
        .map(|p| (p.clone(), format!("{prefix}{p}")))
        .collect()
}

/// Copies `child` into `parent` and returns the flattened result.
///
/// Child gate ids and internal nets get `prefix` prepended; child ports are
/// replaced by the parent nets named in `binding`. An input port bound to a
/// net that nothing in the parent drives becomes a new primary input of the
/// result.
pub fn instantiate(
    parent: &Netlist,
    child: &Netlist,
    binding: &PortBinding,
    prefix: &str,
) -> Result<Netlist> {
    let child_ports: BTreeSet<&str> = child
        .inputs
        .iter()
        .chain(&child.outputs)
        .map(String::as_str)
        .collect();
    for port in &child_ports {
        if !binding.contains_key(*port) {
            return Err(Error::Instantiate(format!(
                "port `{port}` of `{}` is not bound",
                child.name
            )));
        }
    }
    if let Some(extra) = binding.keys().find(|k| !child_ports.contains(k.as_str())) {
        return Err(Error::Instantiate(format!(
            "`{extra}` is not a port of `{}`",
            child.name
        )));
    }
    let mut seen_targets = HashSet::new();
    for port in &child.outputs {
        if child.inputs.contains(port) {
            continue;
        }
        if !seen_targets.insert(binding[port].as_str()) {
            return Err(Error::Instantiate(format!(
                "output ports of `{}` share parent net `{}`",
                child.name, binding[port]
            )));
        }
    }

    let rename = |net: &str| -> String {
        match binding.get(net) {
            Some(target) => target.clone(),
            None => format!("{prefix}{net}"),
        }
    };

    let parent_ids: HashSet<&str> = parent.gates.iter().map(|g| g.id.as_str()).collect();
    let parent_drivers = parent.drivers();
    let parent_nets: HashSet<&str> = parent
        .nets()
        .chain(
            parent
                .gates
                .iter()
                .flat_map(|g| g.ins.iter().map(String::as_str)),
        )
        .chain(parent.outputs.iter().map(String::as_str))
        .collect();

    let mut out = parent.clone();
    for port in &child.inputs {
        let target = &binding[port];
        if !parent_drivers.contains_key(target.as_str()) && !out.inputs.contains(target) {
            out.inputs.push(target.clone());
        }
    }

    for g in &child.gates {
        let id = format!("{prefix}{}", g.id);
        if parent_ids.contains(id.as_str()) {
            return Err(Error::Instantiate(format!(
                "gate id `{id}` already exists in parent"
            )));
        }
        let out_net = rename(&g.out);
        if binding.get(&g.out).is_none() && parent_nets.contains(out_net.as_str()) {
            return Err(Error::Instantiate(format!(
                "internal net `{out_net}` collides with a parent net"
            )));
        }
        if parent_drivers.contains_key(out_net.as_str()) {
            return Err(Error::Instantiate(format!(
                "net `{out_net}` would have two drivers"
            )));
        }
        out.gates.push(Gate {
            id,
            kind: g.kind,
            ins: g.ins.iter().map(|n| rename(n)).collect(),
            out: out_net,
        });
    }

    validate(&out).into_result()?;
    Ok(out)
}

/// Rewrites wide gates as balanced trees of two-input gates.
///
/// The root of each tree keeps the original gate id and output net, so
/// primary outputs and named internal nets (such as `MAJ`) survive.
pub fn normalize_two_input(netlist: &Netlist) -> Netlist {
    let mut taken: HashSet<String> = netlist
        .nets()
        .map(str::to_string)
        .chain(netlist.gates.iter().map(|g| g.id.clone()))
        .collect();
    let mut fresh = |base: &str| -> String {
        let mut k = 0usize;
        loop {
            let cand = format!("{base}_t{k}");
            if taken.insert(cand.clone()) {
                return cand;
            }
            k += 1;
        }
    };

    let mut out = Netlist {
        name: netlist.name.clone(),
        inputs: netlist.inputs.clone(),
        outputs: netlist.outputs.clone(),
        gates: Vec::with_capacity(netlist.gates.len()),
    };
    for g in &netlist.gates {
        let Some((base, invert)) = g.kind.associative_base() else {
            out.gates.push(g.clone());
            continue;
        };
        if g.ins.len() <= 2 {
            out.gates.push(g.clone());
            continue;
        }
        let mut level: Vec<String> = g.ins.clone();
        while level.len() > 2 {
            let mut next = Vec::with_capacity(level.len().div_ceil(2));
            for pair in level.chunks(2) {
                if let [a, b] = pair {
                    let id = fresh(&g.id);
                    let net = fresh(&g.out);
                    out.gates
                        .push(Gate::new(id, base, [a.clone(), b.clone()], net.clone()));
                    next.push(net);
                } else {
                    next.push(pair[0].clone());
                }
            }
            level = next;
        }
        let root_kind = if invert { g.kind } else { base };
        out.gates
            .push(Gate::new(g.id.clone(), root_kind, level, g.out.clone()));
    }
    out
}

/// Serializes with stable key order.
pub fn to_json(netlist: &Netlist) -> String {
    serde_json::to_string_pretty(netlist).expect("netlist serialization cannot fail")
}

/// Parses a netlist and checks it structurally.
pub fn from_json(text: &str) -> Result<Netlist> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let netlist: Netlist = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let msg = inner.to_string();
        // Missing fields are reported against the enclosing object; name them.
        let path = match (path.as_str(), missing_field(&msg)) {
            (".", Some(field)) => field.to_string(),
            (p, Some(field)) => format!("{p}.{field}"),
            (p, None) => p.to_string(),
        };
        Error::Schema { path, message: msg }
    })?;
    validate(&netlist).into_result()?;
    Ok(netlist)
}

fn missing_field(msg: &str) -> Option<&str> {
    let rest = msg.strip_prefix("missing field `")?;
    rest.split('`').next()
}

/// Incremental construction helper used by the module library.
#[derive(Debug)]
pub struct NetlistBuilder {
    netlist: Netlist,
    counter: usize,
}

impl NetlistBuilder {
    pub fn new(name: impl Into<String>) -> Self {
        NetlistBuilder {
            netlist: Netlist::new(name),
            counter: 0,
        }
    }

    pub fn input(&mut self, net: impl Into<String>) -> String {
        let net = net.into();
        self.netlist.inputs.push(net.clone());
        net
    }

    pub fn output(&mut self, net: impl Into<String>) {
        self.netlist.outputs.push(net.into());
    }

    /// Adds a gate with an auto-generated id and output net.
    pub fn gate(&mut self, kind: GateKind, ins: &[String]) -> String {
        let k = self.counter;
        self.counter += 1;
        let net = format!("n{k}");
        self.netlist.gates.push(Gate::new(
            format!("g{k}"),
            kind,
            ins.iter().cloned(),
            net.clone(),
        ));
        net
    }

    /// Adds a gate driving an explicitly named net.
    pub fn named_gate(&mut self, kind: GateKind, ins: &[String], out: impl Into<String>) -> String {
        let k = self.counter;
        self.counter += 1;
        let out = out.into();
        self.netlist.gates.push(Gate::new(
            format!("g{k}"),
            kind,
            ins.iter().cloned(),
            out.clone(),
        ));
        out
    }

    pub fn finish(self) -> Netlist {
        debug_assert!(
            validate(&self.netlist).is_clean(),
            "{:?}",
            validate(&self.netlist)
        );
        self.netlist
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn maj3() -> Netlist {
        Netlist {
            name: "maj3".into(),
            inputs: vec!["a".into(), "b".into(), "c".into()],
            outputs: vec!["y".into()],
            gates: vec![
                Gate::new("g0", GateKind::And, ["a", "b"], "ab"),
                Gate::new("g1", GateKind::And, ["b", "c"], "bc"),
                Gate::new("g2", GateKind::And, ["a", "c"], "ac"),
                Gate::new("g3", GateKind::Or, ["ab", "bc", "ac"], "y"),
            ],
        }
    }

    #[test]
    fn clean_voter_validates() {
        assert!(validate(&maj3()).is_clean());
    }

    #[test]
    fn double_driver_reported_once() {
        let mut n = maj3();
        n.gates
            .push(Gate::new("g4", GateKind::Or, ["a", "b"], "ab"));
        let report = validate(&n);
        assert_eq!(report.issues.len(), 1);
        assert!(matches!(&report.issues[0], Issue::MultipleDrivers { net, .. } if net == "ab"));
    }

    #[test]
    fn cycle_reported_with_members() {
        let n = Netlist {
            name: "loop".into(),
            inputs: vec!["a".into()],
            outputs: vec!["y".into()],
            gates: vec![
                Gate::new("g0", GateKind::And, ["a", "z"], "y"),
                Gate::new("g1", GateKind::Not, ["y"], "z"),
            ],
        };
        let report = validate(&n);
        assert_eq!(report.issues.len(), 1);
        match &report.issues[0] {
            Issue::Cycle { gates } => {
                assert!(gates.contains(&"g0".to_string()));
                assert!(gates.contains(&"g1".to_string()));
                assert_eq!(gates.first(), gates.last());
            }
            other => panic!("unexpected issue {other:?}"),
        }
        assert!(matches!(topological_order(&n), Err(Error::Cycle { .. })));
    }

    #[test]
    fn fan_in_and_undefined_nets() {
        let n = Netlist {
            name: "bad".into(),
            inputs: vec!["a".into()],
            outputs: vec!["y".into(), "nowhere".into()],
            gates: vec![
                Gate::new("g0", GateKind::Not, ["a", "a"], "x"),
                Gate::new("g1", GateKind::And, ["x"], "y"),
                Gate::new("g1", GateKind::Or, ["x", "ghost"], "w"),
            ],
        };
        let issues = validate(&n).issues;
        assert!(issues.contains(&Issue::BadFanIn {
            gate: "g0".into(),
            kind: GateKind::Not,
            fan_in: 2
        }));
        assert!(issues.contains(&Issue::BadFanIn {
            gate: "g1".into(),
            kind: GateKind::And,
            fan_in: 1
        }));
        assert!(issues.contains(&Issue::DuplicateGateId { gate: "g1".into() }));
        assert!(issues.contains(&Issue::UndefinedNet {
            net: "ghost".into(),
            gate: "g1".into()
        }));
        assert!(issues.contains(&Issue::UndrivenOutput {
            net: "nowhere".into()
        }));
    }

    #[test]
    fn topo_order_examples() {
        let single = Netlist {
            name: "and".into(),
            inputs: vec!["a".into(), "b".into()],
            outputs: vec!["y".into()],
            gates: vec![Gate::new("g", GateKind::And, ["a", "b"], "y")],
        };
        assert_eq!(topological_order(&single).unwrap(), vec!["g".to_string()]);

        let wires = Netlist {
            name: "wire".into(),
            inputs: vec!["a".into()],
            outputs: vec!["a".into()],
            gates: vec![],
        };
        assert!(topological_order(&wires).unwrap().is_empty());

        let order = topological_order(&maj3()).unwrap();
        assert_eq!(order.len(), 4);
        assert_eq!(order.last().unwrap(), "g3");
    }

    #[test]
    fn instantiate_not_into_empty_parent() {
        let not = Netlist {
            name: "inv".into(),
            inputs: vec!["a".into()],
            outputs: vec!["y".into()],
            gates: vec![Gate::new("g", GateKind::Not, ["a"], "y")],
        };
        let binding = PortBinding::from([("a".into(), "x".into()), ("y".into(), "xn".into())]);
        let out = instantiate(&Netlist::new("top"), &not, &binding, "u0_").unwrap();
        assert_eq!(out.gate_count(), 1);
        assert_eq!(out.inputs, vec!["x".to_string()]);
        assert_eq!(out.gates[0].id, "u0_g");
        assert!(validate(&out).is_clean());
    }

    #[test]
    fn instantiate_errors() {
        let not = Netlist {
            name: "inv".into(),
            inputs: vec!["a".into()],
            outputs: vec!["y".into()],
            gates: vec![Gate::new("g", GateKind::Not, ["a"], "y")],
        };
        let mut parent = Netlist::new("top");
        parent.inputs = vec!["x".into(), "z".into()];
        parent
            .gates
            .push(Gate::new("p", GateKind::And, ["x", "z"], "busy"));

        let unbound = PortBinding::from([("a".into(), "x".into())]);
        assert!(matches!(
            instantiate(&parent, &not, &unbound, "u_"),
            Err(Error::Instantiate(m)) if m.contains("not bound")
        ));

        let clash = PortBinding::from([("a".into(), "x".into()), ("y".into(), "busy".into())]);
        assert!(matches!(
            instantiate(&parent, &not, &clash, "u_"),
            Err(Error::Instantiate(m)) if m.contains("two drivers")
        ));

        let ok = PortBinding::from([("a".into(), "x".into()), ("y".into(), "w".into())]);
        let once = instantiate(&parent, &not, &ok, "u_").unwrap();
        let again = PortBinding::from([("a".into(), "x".into()), ("y".into(), "w2".into())]);
        assert!(matches!(
            instantiate(&once, &not, &again, "u_"),
            Err(Error::Instantiate(m)) if m.contains("already exists")
        ));
    }

    #[test]
    fn normalization_keeps_root_names() {
        let mut n = maj3();
        n.gates[3].kind = GateKind::Nor;
        n.gates.push(Gate::new(
            "g4",
            GateKind::Xnor,
            ["a", "b", "c", "ab", "bc"],
            "w",
        ));
        n.outputs.push("w".into());
        let flat = normalize_two_input(&n);
        assert!(validate(&flat).is_clean());
        assert!(flat.gates.iter().all(|g| g.ins.len() <= 2));
        let root = flat.gate("g3").unwrap();
        assert_eq!(root.kind, GateKind::Nor);
        assert_eq!(root.out, "y");
        assert_eq!(flat.gates.len(), 4 + 1 + 4);
    }

    #[test]
    fn json_missing_outputs_names_field() {
        let text = r#"{"name":"x","inputs":["a"],"gates":[]}"#;
        match from_json(text) {
            Err(Error::Schema { path, .. }) => assert_eq!(path, "outputs"),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn json_nested_error_has_path() {
        let text = r#"{"name":"x","inputs":["a","b"],"outputs":["y"],
            "gates":[{"id":"g","kind":"MAJ","ins":["a","b"],"out":"y"}]}"#;
        match from_json(text) {
            Err(Error::Schema { path, .. }) => assert_eq!(path, "gates[0].kind"),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn json_key_order_is_stable() {
        let text = to_json(&maj3());
        let pos = |k: &str| text.find(&format!("\"{k}\"")).unwrap();
        assert!(pos("name") < pos("inputs"));
        assert!(pos("inputs") < pos("outputs"));
        assert!(pos("outputs") < pos("gates"));
        assert!(text.contains("\"kind\": \"AND\""));
        assert_eq!(from_json(&text).unwrap(), maj3());
    }
}
