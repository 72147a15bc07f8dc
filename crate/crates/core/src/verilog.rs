//! Structural Verilog emission: one module, wire declarations and one gate
//! primitive per gate.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write;

use crate::error::Result;
use crate::netlist::{validate, Netlist};

const KEYWORDS: &[&str] = &[
    "always",
    "and",
    "assign",
    "begin",
    "buf",
    "case",
    "default",
    "else",
    "end",
    "endcase",
    "endmodule",
    "for",
    "function",
    "if",
    "initial",
    "inout",
    "input",
    "integer",
    "module",
    "nand",
    "nor",
    "not",
    "or",
    "output",
    "parameter",
    "reg",
    "supply0",
    "supply1",
    "wire",
    "xnor",
    "xor",
];

/// Emitted text plus every identifier that had to be rewritten.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerilogExport {
    pub text: String,
    /// `(original, emitted)` pairs in first-use order.
    pub renamed: Vec<(String, String)>,
}

fn legal(id: &str) -> bool {
    let mut chars = id.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '$')
        && !KEYWORDS.contains(&id)
}

struct Namer {
    map: BTreeMap<String, String>,
    used: HashSet<String>,
    renamed: Vec<(String, String)>,
}

impl Namer {
    fn new() -> Self {
        Namer {
            map: BTreeMap::new(),
            used: HashSet::new(),
            renamed: Vec::new(),
        }
    }

    fn name(&mut self, id: &str) -> String {
        if let Some(n) = self.map.get(id) {
            return n.clone();
        }
        let mut base = if legal(id) {
            id.to_string()
        } else {
            let mut s: String = id
                .chars()
                .map(|c| {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        c
                    } else {
                        '_'
                    }
                })
                .collect();
            if !s.starts_with(|c: char| c.is_ascii_alphabetic() || c == '_') {
                s.insert(0, '_');
            }
            if KEYWORDS.contains(&s.as_str()) {
                s.push('_');
            }
            s
        };
        if self.used.contains(&base) {
            let mut k = 1;
            while self.used.contains(&format!("{base}_{k}")) {
                k += 1;
            }
            base = format!("{base}_{k}");
        }
        if base != id {
            self.renamed.push((id.to_string(), base.clone()));
        }
        self.used.insert(base.clone());
        self.map.insert(id.to_string(), base.clone());
        base
    }
}

/// Deterministic structural Verilog for a valid netlist.
///
/// Outputs that are also primary inputs, or that are listed twice, get a
/// separate port driven through a `buf`.
pub fn export_structural_verilog(netlist: &Netlist) -> Result<VerilogExport> {
    validate(netlist).into_result()?;
    let mut nets = Namer::new();
    let module = nets.name(&netlist.name);

    let inputs: Vec<String> = netlist.inputs.iter().map(|n| nets.name(n)).collect();
    let mut ports_out = Vec::new();
    let mut aliases = Vec::new();
    let mut seen_out = HashSet::new();
    for o in &netlist.outputs {
        if netlist.inputs.contains(o) || !seen_out.insert(o.as_str()) {
            let alias = nets.name(&format!("{o}_o{}", ports_out.len()));
            aliases.push((alias.clone(), nets.name(o)));
            ports_out.push(alias);
        } else {
            ports_out.push(nets.name(o));
        }
    }
    let port_set: HashSet<&str> = netlist
        .inputs
        .iter()
        .chain(&netlist.outputs)
        .map(String::as_str)
        .collect();
    let wires: Vec<String> = netlist
        .gates
        .iter()
        .filter(|g| !port_set.contains(g.out.as_str()))
        .map(|g| nets.name(&g.out))
        .collect();

    // Instance names live in their own namespace in Verilog but sharing the
    // namer keeps them distinct from nets, which some tools require.
    let instances: Vec<String> = netlist.gates.iter().map(|g| nets.name(&g.id)).collect();

    let mut t = String::new();
    let all_ports: Vec<&str> = inputs
        .iter()
        .chain(&ports_out)
        .map(String::as_str)
        .collect();
    writeln!(t, "module {module} ({});", all_ports.join(", ")).unwrap();
    for i in &inputs {
        writeln!(t, "  input {i};").unwrap();
    }
    for o in &ports_out {
        writeln!(t, "  output {o};").unwrap();
    }
    for w in &wires {
        writeln!(t, "  wire {w};").unwrap();
    }
    for (g, inst) in netlist.gates.iter().zip(&instances) {
        let mut pins = vec![nets.name(&g.out)];
        pins.extend(g.ins.iter().map(|n| nets.name(n)));
        writeln!(
            t,
            "  {} {inst} ({});",
            g.kind.verilog_name(),
            pins.join(", ")
        )
        .unwrap();
    }
    for (k, (alias, src)) in aliases.iter().enumerate() {
        writeln!(t, "  buf alias_{k} ({alias}, {src});").unwrap();
    }
    writeln!(t, "endmodule").unwrap();

    Ok(VerilogExport {
        text: t,
        renamed: nets.renamed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::library::{majority_voter, VoterConstruction};
    use crate::netlist::{Gate, GateKind};

    fn count(text: &str, prim: &str) -> usize {
        text.lines()
            .filter(|l| l.trim_start().starts_with(&format!("{prim} ")))
            .count()
    }

    #[test]
    fn single_and() {
        let n = Netlist {
            name: "and2".into(),
            inputs: vec!["a".into(), "b".into()],
            outputs: vec!["y".into()],
            gates: vec![Gate::new("g", GateKind::And, ["a", "b"], "y")],
        };
        let v = export_structural_verilog(&n).unwrap();
        assert_eq!(count(&v.text, "and"), 1);
        assert!(v.text.contains("and g (y, a, b);"));
        assert!(v.renamed.is_empty());
    }

    #[test]
    fn maj3_counts_and_determinism() {
        let n = majority_voter(3, VoterConstruction::SumOfProducts).unwrap();
        let a = export_structural_verilog(&n).unwrap();
        let b = export_structural_verilog(&n).unwrap();
        assert_eq!(a.text, b.text);
        assert_eq!(count(&a.text, "and"), 3);
        assert_eq!(count(&a.text, "or"), 1);
        assert_eq!(count(&a.text, "wire"), 3);
    }

    #[test]
    fn sanitization_reported() {
        let n = Netlist {
            name: "3-way".into(),
            inputs: vec!["a[0]".into(), "wire".into()],
            outputs: vec!["a[0]".into(), "y.q".into()],
            gates: vec![Gate::new("g-1", GateKind::Xor, ["a[0]", "wire"], "y.q")],
        };
        let v = export_structural_verilog(&n).unwrap();
        let originals: Vec<&str> = v.renamed.iter().map(|(o, _)| o.as_str()).collect();
        for id in ["3-way", "a[0]", "wire", "y.q", "g-1"] {
            assert!(
                originals.contains(&id),
                "{id} not reported: {:?}",
                v.renamed
            );
        }
        assert!(v.text.starts_with("module _3_way ("));
        assert!(v.text.contains("buf alias_0"));
        for (_, new) in &v.renamed {
            assert!(legal(new), "{new}");
        }
    }
}
