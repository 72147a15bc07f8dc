use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use redundis::fault::{replay, Counterexample};
use redundis::library::braun_multiplier;
use redundis::netlist::from_json;
use redundis::{RedundancyScheme, RedundantSystem};
use serde_json::Value;

fn redundis(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_redundis"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

fn prefixes(path: &Path, pat: &str) -> BTreeSet<String> {
    let n = from_json(&fs::read_to_string(path).unwrap()).unwrap();
    n.gates
        .iter()
        .filter(|g| g.id.starts_with(pat))
        .map(|g| g.id[..g.id.rfind('_').unwrap()].to_string())
        .collect()
}

#[test]
fn gen_writes_system() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sys.json");
    let o = redundis(&[
        "gen",
        "--scheme",
        "nmr:5",
        "--module",
        "braun4",
        "-o",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("5 replicas"));
    assert_eq!(prefixes(&path, "braun4_r").len(), 5);
    assert_eq!(prefixes(&path, "vote_").len(), 8);

    let o = redundis(&["gen", "--scheme", "dmmr:3of7", "--module", "braun4"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("7 replicas"));
    assert_eq!(json(&o)["name"], "braun4_dmmr3of7");
}

#[test]
fn bad_scheme_is_usage_error() {
    let o = redundis(&["gen", "--scheme", "nmr:4", "--module", "braun4"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("n must be odd"));
    let o = redundis(&["gen", "--scheme", "dmmr:3of4"]);
    assert_eq!(o.status.code(), Some(2));
    let o = redundis(&["gen", "--scheme", "nmr:3", "--module", "braun:1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_passes_for_standard_schemes() {
    let o = redundis(&[
        "verify",
        "--scheme",
        "dmmr:3of6",
        "--module",
        "braun4",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let v = json(&o);
    assert_eq!(v["tolerance"]["conditional_total"], 3);
    assert_eq!(v["guarantee"]["verified"], true);
    assert_eq!(v["tightness"]["replayed"], true);

    let o = redundis(&["verify", "--scheme", "nmr:9", "--module", "braun4"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("conditional_total=4"), "{text}");
    assert!(text.contains("VERIFIED"));
}

#[test]
fn sabotaged_voter_exits_one_with_replayable_witness() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sys.json");
    let o = redundis(&["gen", "--scheme", "nmr:3", "-o", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let mut sys: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    let gates = sys["gates"].as_array_mut().unwrap();
    let or = gates
        .iter_mut()
        .find(|g| g["id"].as_str().unwrap().starts_with("vote_p0_") && g["kind"] == "OR")
        .unwrap();
    or["kind"] = "AND".into();
    fs::write(&path, serde_json::to_string(&sys).unwrap()).unwrap();

    let o = redundis(&[
        "verify",
        "--scheme",
        "nmr:3",
        "--netlist",
        path.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let v = json(&o);
    assert_eq!(v["guarantee"]["verified"], false);
    let cx: Counterexample =
        serde_json::from_value(v["guarantee"]["counterexample"].clone()).unwrap();
    assert_eq!(cx.output, "p0");

    let netlist = from_json(&fs::read_to_string(&path).unwrap()).unwrap();
    let system = RedundantSystem::from_netlist(
        netlist,
        RedundancyScheme::nmr(3).unwrap(),
        braun_multiplier(4).unwrap(),
    )
    .unwrap();
    assert!(replay(&system, &cx).unwrap().is_mismatch());
}

#[test]
fn missing_netlist_field_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, r#"{"name":"x","inputs":[],"gates":[]}"#).unwrap();
    let o = redundis(&[
        "verify",
        "--scheme",
        "nmr:3",
        "--netlist",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("outputs"), "{}", stderr(&o));
}

#[test]
fn metrics_and_compare() {
    let o = redundis(&[
        "metrics", "--scheme", "nmr:5", "--module", "braun4", "--format", "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let m = json(&o);
    let (a, d, adp) = (
        m["weighted_area"].as_f64().unwrap(),
        m["critical_path_delay"].as_f64().unwrap(),
        m["adp"].as_f64().unwrap(),
    );
    assert_eq!(adp, a * d);

    let o = redundis(&[
        "compare",
        "--baseline",
        "nmr:7",
        "--candidate",
        "dmmr:3of6",
        "--module",
        "braun4",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let c = json(&o);
    assert!(c["comparison"]["adp_reduction_percent"].as_f64().unwrap() > 0.0);
    assert_eq!(c["comparison"]["module_count_delta"], 1);

    let o = redundis(&[
        "compare",
        "--baseline",
        "dmmr:3of5",
        "--candidate",
        "dmmr:3of5",
        "--format",
        "csv",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[2].parse::<f64>().unwrap(), 0.0);
    assert_eq!(row[5], "0");
}

#[test]
fn custom_delay_model() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    fs::write(&path, r#"{"name":"slow-xor","delays":{"XOR":2.0}}"#).unwrap();
    let o = redundis(&[
        "metrics",
        "--scheme",
        "nmr:3",
        "--delay-model",
        path.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(json(&o)["delay_model"], "slow-xor");
    fs::write(&path, r#"{"name":"neg","delays":{"AND":-1.0}}"#).unwrap();
    let o = redundis(&[
        "metrics",
        "--scheme",
        "nmr:3",
        "--delay-model",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn paper_table_reports_and_flags() {
    let o = redundis(&["paper-table", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let t = json(&o);
    let pairs = t["pairs"].as_array().unwrap();
    let get = |i: usize, k: &str| pairs[i][k].as_f64().unwrap();
    assert!((get(1, "commercial_mean") - 34.1).abs() <= 0.5);
    assert!((get(2, "hardened_mean") - 58.3).abs() <= 0.5);
    assert!(!pairs[1]["discrepancy"].is_null());
    assert!(!pairs[2]["discrepancy"].is_null());
    assert!(stderr(&o).contains("differs from the arithmetic mean"));
    for c in t["adp_checks"].as_array().unwrap() {
        assert!(c["abs_diff"].as_f64().unwrap() <= 0.01);
    }

    let o = redundis(&["paper-table", "--format", "csv"]);
    assert!(stdout(&o).starts_with("baseline,candidate,family,reduction_percent\n"));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    fs::write(&path, "family,scheme\nx,5MR\n").unwrap();
    let o = redundis(&["paper-table", "--fixture", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn reliability_curves() {
    let o = redundis(&[
        "reliability",
        "--scheme",
        "nmr:5",
        "--mode",
        "analytic",
        "--r",
        "0:1:101",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let vals: Vec<f64> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("r,"))
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(vals.len(), 101);
    assert_eq!(vals[0], 0.0);
    assert!((vals[100] - 1.0).abs() < 1e-12);
    assert!(vals.windows(2).all(|w| w[1] >= w[0]));

    let o = redundis(&[
        "reliability",
        "--scheme",
        "dmmr:3of5",
        "--r",
        "0.9",
        "--format",
        "json",
    ]);
    let r = json(&o)["samples"][0]["R"].as_f64().unwrap();
    assert!((r - 0.96228).abs() < 1e-12);

    let o = redundis(&["reliability", "--scheme", "nmr:5", "--r", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn seeded_monte_carlo_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, mode: &str| {
        let p = dir.path().join(name);
        let o = redundis(&[
            "reliability",
            "--scheme",
            "dmmr:3of6",
            "--mode",
            mode,
            "--r",
            "0.6:0.9:4",
            "--trials",
            "20000",
            "--seed",
            "99",
            "-o",
            p.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        fs::read(p).unwrap()
    };
    for mode in ["mc-guarantee", "mc-circuit"] {
        let a = run("a.csv", mode);
        let b = run("b.csv", mode);
        assert_eq!(a, b);
        assert!(String::from_utf8(a).unwrap().contains("seed=99"));
    }
}

#[test]
fn thread_cap_is_respected_and_validated() {
    let o = Command::new(env!("CARGO_BIN_EXE_redundis"))
        .args([
            "reliability",
            "--scheme",
            "nmr:3",
            "--mode",
            "mc-guarantee",
            "--r",
            "0.9",
            "--trials",
            "1000",
        ])
        .env("REDUNDIS_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let o = Command::new(env!("CARGO_BIN_EXE_redundis"))
        .args(["paper-table"])
        .env("REDUNDIS_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verilog_export_is_stable() {
    let a = redundis(&["export-verilog", "--scheme", "dmmr:3of5"]);
    let b = redundis(&["export-verilog", "--scheme", "dmmr:3of5"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.starts_with("module braun4_dmmr3of5 ("));
    assert!(text.trim_end().ends_with("endmodule"));
}
