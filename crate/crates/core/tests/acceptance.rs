//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use redundis::fault::{find_counterexample, replay, tightness_cardinality, verify_guarantee};
use redundis::library::{braun_multiplier, dmmr_voter, majority_voter, VoterConstruction};
use redundis::metrics::{compare, measure_system, MetricsOptions, Normalization};
use redundis::netlist::{from_json, to_json};
use redundis::redundancy::{build, tolerance};
use redundis::reliability::{
    analytic_reliability, circuit_outcomes, monte_carlo_curve, monte_carlo_with, McMode,
    MonteCarloConfig,
};
use redundis::sim::{evaluate_nets, truth_table, Assignment, FaultOverlay};
use redundis::table1::{adp_consistency, bundled_table1, render, table1_reductions};
use redundis::verilog::export_structural_verilog;
use redundis::{fault::FaultBehavior, par::Exec, Netlist, RedundancyScheme};

const ADP_TOL: f64 = 0.01;
const AVERAGE_TOL: f64 = 0.5;
const ANALYTIC_TOL: f64 = 1e-12;
const MC_TRIALS: u64 = 1_000_000;
const R_VALUES: [f64; 6] = [0.1, 0.25, 0.5, 0.75, 0.9, 0.99];

type Outcome = Result<String, String>;
type Check = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)*) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)*));
        }
    };
}

fn schemes() -> [RedundancyScheme; 6] {
    [
        RedundancyScheme::Nmr { n: 5 },
        RedundancyScheme::Nmr { n: 7 },
        RedundancyScheme::Nmr { n: 9 },
        RedundancyScheme::Dmmr { m: 5 },
        RedundancyScheme::Dmmr { m: 6 },
        RedundancyScheme::Dmmr { m: 7 },
    ]
}

fn braun4() -> Netlist {
    braun_multiplier(4).expect("braun4")
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    if elapsed < limit {
        Ok(())
    } else {
        Err(format!("took {elapsed:.2?}, limit {limit:?}"))
    }
}

fn module_correctness() -> Outcome {
    let t0 = Instant::now();
    let t = truth_table(&braun4(), &FaultOverlay::new()).map_err(|e| e.to_string())?;
    ensure!(t.row_count() == 256, "{} rows", t.row_count());
    for (row, &out) in t.rows.iter().enumerate() {
        let (a, b) = (row as u64 >> 4, row as u64 & 15);
        ensure!(out == a * b, "{a} x {b} gave {out}");
    }
    let el = t0.elapsed();
    within(el, Duration::from_secs(1))?;
    Ok(format!("256/256 products exact in {el:.2?}"))
}

fn bits(row: u32, n: usize) -> Vec<bool> {
    (0..n).map(|i| row >> (n - 1 - i) & 1 == 1).collect()
}

fn voter_nets(m: usize, f: &[u8]) -> Result<(bool, bool, bool), String> {
    let v = dmmr_voter(m).map_err(|e| e.to_string())?;
    let stim: Assignment = f
        .iter()
        .enumerate()
        .map(|(i, &x)| (format!("f{}", i + 1), x == 1))
        .collect();
    let n = evaluate_nets(&v, &stim, &FaultOverlay::new()).map_err(|e| e.to_string())?;
    Ok((n["MAJ"], n["MIN"], n["DMMRO"]))
}

fn voter_correctness() -> Outcome {
    let mut rows = 0usize;
    for n in [3usize, 5, 7, 9] {
        for c in [
            VoterConstruction::SumOfProducts,
            VoterConstruction::CountCompare,
        ] {
            let v = majority_voter(n, c).map_err(|e| e.to_string())?;
            let t = truth_table(&v, &FaultOverlay::new()).map_err(|e| e.to_string())?;
            for (row, &out) in t.rows.iter().enumerate() {
                let want = (row.count_ones() as usize) >= n.div_ceil(2);
                ensure!((out == 1) == want, "n={n} {c:?} row {row:b}");
                rows += 1;
            }
        }
    }
    // Scenario one: one majority and three minority replicas stuck low while
    // the correct value is 1. Scenario two: the mirror image.
    ensure!(
        voter_nets(7, &[1, 1, 0, 1, 0, 0, 0])? == (true, true, true),
        "first worked scenario"
    );
    ensure!(
        voter_nets(7, &[0, 0, 1, 0, 1, 1, 1])? == (false, true, false),
        "second worked scenario"
    );
    ensure!(voter_nets(5, &[1; 5])?.2, "m=5 all ones");
    for m in [5usize, 6, 7] {
        let v = dmmr_voter(m).map_err(|e| e.to_string())?;
        for row in 0..1u32 << m {
            let f = bits(row, m);
            let stim: Assignment = f
                .iter()
                .enumerate()
                .map(|(i, &x)| (format!("f{}", i + 1), x))
                .collect();
            let nets = evaluate_nets(&v, &stim, &FaultOverlay::new()).map_err(|e| e.to_string())?;
            let maj = (f[0] && f[1]) || (f[1] && f[2]) || (f[0] && f[2]);
            let min = f[3..].iter().any(|&x| x);
            ensure!(
                nets["MAJ"] == maj && nets["MIN"] == min && nets["DMMRO"] == (maj && min),
                "m={m} row {row:b}"
            );
            rows += 1;
        }
    }
    Ok(format!(
        "{rows} voter rows exact, both worked scenarios reproduced"
    ))
}

fn guarantee_verification() -> Outcome {
    let t0 = Instant::now();
    let module = braun4();
    let mut parts = Vec::new();
    for s in schemes() {
        let sys = build(&module, s).map_err(|e| e.to_string())?;
        let v = verify_guarantee(&sys).map_err(|e| e.to_string())?;
        let tol = tolerance(s).conditional_total;
        ensure!(
            v.verified,
            "{s} violated: {}",
            serde_json::to_string(&v.counterexample).unwrap_or_default()
        );
        ensure!(
            v.inputs_per_pattern == 256,
            "{s}: {} inputs",
            v.inputs_per_pattern
        );
        parts.push(format!("{s} tol {tol} ({} patterns)", v.patterns_checked));
    }
    let want = [2, 3, 4, 2, 3, 4];
    for (s, w) in schemes().iter().zip(want) {
        ensure!(tolerance(*s).conditional_total == w, "{s} tolerance");
    }
    let el = t0.elapsed();
    within(el, Duration::from_secs(300))?;
    Ok(format!("{} in {el:.2?}", parts.join(", ")))
}

fn tightness() -> Outcome {
    let module = braun4();
    let mut found = Vec::new();
    let all = [3usize, 5, 7, 9]
        .map(|n| RedundancyScheme::Nmr { n })
        .into_iter()
        .chain([5usize, 6, 7].map(|m| RedundancyScheme::Dmmr { m }));
    for s in all {
        let sys = build(&module, s).map_err(|e| e.to_string())?;
        let k = tightness_cardinality(s);
        let want = match s {
            RedundancyScheme::Nmr { n } => n.div_ceil(2),
            RedundancyScheme::Dmmr { .. } => 2,
        };
        ensure!(k == want, "{s}: cardinality {k}, expected {want}");
        let cx = find_counterexample(&sys, k)
            .map_err(|e| e.to_string())?
            .ok_or_else(|| format!("{s}: no witness at {k} faults"))?;
        if let RedundancyScheme::Dmmr { .. } = s {
            ensure!(
                cx.pattern.iter().all(|&r| r <= 3),
                "{s}: witness {:?}",
                cx.pattern
            );
        }
        let rp = replay(&sys, &cx).map_err(|e| e.to_string())?;
        ensure!(rp.is_mismatch(), "{s}: witness does not replay");
        found.push(format!("{s}:{:?}", cx.pattern));
    }
    Ok(format!("witnesses replay for {}", found.join(" ")))
}

fn table1() -> Outcome {
    let rows = bundled_table1();
    let worst = adp_consistency(&rows)
        .iter()
        .map(|c| c.abs_diff)
        .fold(0.0, f64::max);
    ensure!(worst <= ADP_TOL, "ADP off by {worst}");
    let t = table1_reductions(&rows).map_err(|e| e.to_string())?;
    let mut checked = Vec::new();
    for p in t.pairs.iter().filter(|p| p.stated.is_some()) {
        let s = p.stated.unwrap();
        for (got, want) in [
            (p.commercial_mean, s.commercial),
            (p.hardened_mean, s.hardened),
        ] {
            ensure!(
                (got - want).abs() <= AVERAGE_TOL,
                "{} vs {}: {got:.2} vs stated {want}",
                p.baseline,
                p.candidate
            );
            checked.push(format!("{got:.2}~{want}"));
        }
        ensure!(
            (p.four_family_mean - s.four_family).abs() > AVERAGE_TOL,
            "four-family arithmetic mean unexpectedly matches"
        );
        ensure!(
            p.discrepancy.is_some(),
            "{} discrepancy not flagged",
            p.candidate
        );
        ensure!(
            !p.four_family_matches.is_empty(),
            "no computed alternative near {}",
            s.four_family
        );
    }
    ensure!(
        checked.len() == 4,
        "{} stated averages checked",
        checked.len()
    );
    ensure!(render(&t).contains("DISCREPANCY"), "render omits the flag");
    Ok(format!(
        "ADP max diff {worst:.4}; averages {}; four-family discrepancy flagged",
        checked.join(" ")
    ))
}

fn structural_trends() -> Outcome {
    let module = braun4();
    let opts = MetricsOptions::default();
    ensure!(
        opts.normalization == Normalization::TwoInput,
        "default normalization"
    );
    let m = |s| {
        build(&module, s)
            .and_then(|sys| measure_system(&sys, &opts))
            .map_err(|e| e.to_string())
    };
    let mut parts = Vec::new();
    for (base, cand, delta) in [(7, 6, 1), (9, 7, 2)] {
        let b = m(RedundancyScheme::Nmr { n: base })?;
        let c = m(RedundancyScheme::Dmmr { m: cand })?;
        ensure!(
            c.weighted_area < b.weighted_area,
            "area {} >= {}",
            c.weighted_area,
            b.weighted_area
        );
        ensure!(c.adp < b.adp, "adp {} >= {}", c.adp, b.adp);
        let row = compare(&b, &c).map_err(|e| e.to_string())?;
        ensure!(
            row.module_count_delta == delta,
            "delta {}",
            row.module_count_delta
        );
        parts.push(format!(
            "{}MR->3of{}: adp {:.0}->{:.0} ({:.1}%), delta {}",
            base, cand, b.adp, c.adp, row.adp_reduction_percent, delta
        ));
    }
    Ok(parts.join("; "))
}

fn sigma(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

fn enumerated(s: RedundancyScheme, r: f64) -> f64 {
    let n = s.replicas();
    (0..1u64 << n)
        .map(|mask| {
            let down: Vec<usize> = (0..n)
                .filter(|k| mask >> k & 1 == 1)
                .map(|k| k + 1)
                .collect();
            let ok = match s {
                RedundancyScheme::Nmr { n } => down.len() <= (n - 1) / 2,
                RedundancyScheme::Dmmr { m } => {
                    let maj = down.iter().filter(|&&k| k <= 3).count();
                    maj <= 1 && down.len() - maj <= m - 4
                }
            };
            if ok {
                r.powi((n - down.len()) as i32) * (1.0 - r).powi(down.len() as i32)
            } else {
                0.0
            }
        })
        .sum()
}

fn reliability() -> Outcome {
    let t0 = Instant::now();
    let module = braun4();
    let mut worst = 0.0f64;
    let mut worst_z = 0.0f64;
    for s in schemes() {
        for r in R_VALUES {
            let a = analytic_reliability(s, r).map_err(|e| e.to_string())?;
            let d = (a - enumerated(s, r)).abs();
            ensure!(d <= ANALYTIC_TOL, "{s} r={r}: analytic off by {d:e}");
            worst = worst.max(d);
        }
        let sys = build(&module, s).map_err(|e| e.to_string())?;
        let outcomes = circuit_outcomes(&sys, FaultBehavior::Inverted, None, 0, Exec::default())
            .map_err(|e| e.to_string())?;
        for r in [0.5, 0.9] {
            let a = analytic_reliability(s, r).map_err(|e| e.to_string())?;
            let g = monte_carlo_with(
                s,
                None,
                r,
                &MonteCarloConfig::new(McMode::Guarantee, MC_TRIALS, 1),
            )
            .map_err(|e| e.to_string())?;
            let z = (g.reliability - a).abs() / sigma(a, MC_TRIALS);
            ensure!(
                z <= 3.0,
                "{s} r={r}: guarantee MC {} vs {a} ({z:.2} sigma)",
                g.reliability
            );
            worst_z = worst_z.max(z);
            let c = monte_carlo_with(
                s,
                Some(&outcomes),
                r,
                &MonteCarloConfig::new(McMode::Circuit, MC_TRIALS, 2),
            )
            .map_err(|e| e.to_string())?;
            let combined = (sigma(g.reliability, MC_TRIALS).powi(2)
                + sigma(c.reliability, MC_TRIALS).powi(2))
            .sqrt();
            ensure!(
                c.reliability >= g.reliability - 3.0 * combined,
                "{s} r={r}: circuit {} below guarantee {}",
                c.reliability,
                g.reliability
            );
        }
    }
    let el = t0.elapsed();
    within(el, Duration::from_secs(120))?;
    Ok(format!(
        "analytic vs enumeration max diff {worst:.1e}; MC worst {worst_z:.2} sigma; circuit >= guarantee; {el:.2?}"
    ))
}

fn round_trip_and_determinism() -> Outcome {
    let module = braun4();
    let mut nets = vec![
        module.clone(),
        majority_voter(9, VoterConstruction::CountCompare).map_err(|e| e.to_string())?,
        dmmr_voter(7).map_err(|e| e.to_string())?,
    ];
    let mut systems = Vec::new();
    for s in schemes() {
        let sys = build(&module, s).map_err(|e| e.to_string())?;
        nets.push(sys.netlist.clone());
        systems.push(sys);
    }
    for n in &nets {
        let text = to_json(n);
        let back = from_json(&text).map_err(|e| e.to_string())?;
        ensure!(
            &back == n,
            "{}: JSON round-trip changed the netlist",
            n.name
        );
        ensure!(to_json(&back) == text, "{}: re-emission differs", n.name);
        let a = export_structural_verilog(n).map_err(|e| e.to_string())?;
        let b = export_structural_verilog(&back).map_err(|e| e.to_string())?;
        ensure!(
            a.text.as_bytes() == b.text.as_bytes(),
            "{}: Verilog differs",
            n.name
        );
    }
    let back = from_json(&to_json(&module)).map_err(|e| e.to_string())?;
    let t1 = truth_table(&module, &FaultOverlay::new()).map_err(|e| e.to_string())?;
    let t2 = truth_table(&back, &FaultOverlay::new()).map_err(|e| e.to_string())?;
    ensure!(
        t1.rows == t2.rows,
        "braun4 truth table changed after round-trip"
    );
    for sys in &systems {
        for mode in [McMode::Guarantee, McMode::Circuit] {
            let cfg = MonteCarloConfig::new(mode, 50_000, 42);
            let a = monte_carlo_curve(sys, 0.5, 0.95, 4, &cfg).map_err(|e| e.to_string())?;
            let b = monte_carlo_curve(sys, 0.5, 0.95, 4, &cfg).map_err(|e| e.to_string())?;
            ensure!(
                a.to_csv() == b.to_csv(),
                "{}: seeded CSV differs",
                sys.scheme
            );
            ensure!(
                a.to_json() == b.to_json(),
                "{}: seeded JSON differs",
                sys.scheme
            );
        }
    }
    Ok(format!(
        "{} netlists round-trip, Verilog byte-stable, seeded MC byte-stable for {} systems",
        nets.len(),
        systems.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [Check; 8] = [
        ("1 function-module correctness", module_correctness),
        ("2 voter correctness", voter_correctness),
        ("3 guarantee verification", guarantee_verification),
        ("4 tightness witnesses", tightness),
        ("5 published table reproduction", table1),
        ("6 structural comparison trends", structural_trends),
        ("7 reliability consistency", reliability),
        ("8 round-trip and determinism", round_trip_and_determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome =
            panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS  criterion {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  criterion {name}: {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
