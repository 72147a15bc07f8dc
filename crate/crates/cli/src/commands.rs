use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use redundis::fault::{
    replay, tightness_cardinality, Counterexample, FaultBehavior, MaskingVerdict, Verifier,
};
use redundis::library::{ModuleSpec, VoterConstruction};
use redundis::metrics::{
    compare, measure_system, render_comparisons, render_reports, ComparisonRow, DelayModel,
    MetricsOptions, MetricsReport, Normalization,
};
use redundis::netlist::{from_json, to_json};
use redundis::redundancy::{build, build_nmr_with, tolerance, ToleranceDescriptor};
use redundis::reliability::{
    analytic_curve_at, grid, monte_carlo_curve_at, McMode, MonteCarloConfig,
};
use redundis::table1::{self, parse_table1, table1_reductions};
use redundis::verilog::export_structural_verilog;
use redundis::{Netlist, RedundancyScheme, RedundantSystem};
use serde::Serialize;

use crate::{
    Behavior, Command, CompareArgs, ExportArgs, Format, GenArgs, MetricOpts, MetricsArgs, Mode,
    ModuleArg, Norm, PaperTableArgs, ReliabilityArgs, VerifyArgs, Voter,
};

pub fn run(command: Command) -> Result<u8> {
    match command {
        Command::Gen(a) => gen(a),
        Command::Verify(a) => verify(a),
        Command::Metrics(a) => metrics(a),
        Command::Compare(a) => compare_cmd(a),
        Command::Reliability(a) => reliability(a),
        Command::PaperTable(a) => paper_table(a),
        Command::ExportVerilog(a) => export(a),
    }
}

fn load_module(sel: &str) -> Result<Netlist> {
    let path = Path::new(sel);
    if sel.ends_with(".json") || path.is_file() {
        let text = fs::read_to_string(path).with_context(|| format!("reading {sel}"))?;
        return from_json(&text).with_context(|| format!("parsing {sel}"));
    }
    let spec: ModuleSpec = sel.parse()?;
    Ok(spec.build()?)
}

fn build_system(scheme: RedundancyScheme, module: &ModuleArg) -> Result<RedundantSystem> {
    let netlist = load_module(&module.module)?;
    let system = match (scheme, module.voter) {
        (RedundancyScheme::Nmr { n }, Some(v)) => {
            let c = match v {
                Voter::Sop => VoterConstruction::SumOfProducts,
                Voter::Cc => VoterConstruction::CountCompare,
            };
            build_nmr_with(&netlist, n, c)?
        }
        (RedundancyScheme::Dmmr { .. }, Some(_)) => {
            bail!("--voter only applies to NMR schemes")
        }
        (_, None) => build(&netlist, scheme)?,
    };
    Ok(system)
}

fn emit(output: &Option<PathBuf>, text: &str) -> Result<()> {
    match output {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn gen(a: GenArgs) -> Result<u8> {
    let system = build_system(a.scheme, &a.module)?;
    let text = to_json(&system.netlist) + "\n";
    let summary = format!(
        "{}: {} replicas, {} gates ({} in voters)",
        system.netlist.name,
        system.replica_count(),
        system.netlist.gate_count(),
        system.voter_gate_count()
    );
    match &a.output {
        Some(_) => {
            emit(&a.output, &text)?;
            println!("{summary}");
        }
        None => {
            print!("{text}");
            eprintln!("{summary}");
        }
    }
    Ok(0)
}

#[derive(Serialize)]
struct Tightness {
    cardinality: usize,
    witness: Option<Counterexample>,
    replayed: bool,
}

#[derive(Serialize)]
struct VerifyReport {
    system: String,
    scheme: RedundancyScheme,
    module: String,
    tolerance: ToleranceDescriptor,
    guarantee: MaskingVerdict,
    tightness: Tightness,
    passed: bool,
}

fn verify(a: VerifyArgs) -> Result<u8> {
    let system = match &a.netlist {
        Some(path) => {
            let golden = load_module(&a.module.module)?;
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let netlist =
                from_json(&text).with_context(|| format!("parsing {}", path.display()))?;
            RedundantSystem::from_netlist(netlist, a.scheme, golden)?
        }
        None => build_system(a.scheme, &a.module)?,
    };
    let verifier = Verifier::new(&system)?;
    let guarantee = verifier.verify_guarantee()?;
    let cardinality = tightness_cardinality(system.scheme);
    let witness = verifier.find_counterexample(cardinality)?;
    let replayed = match &witness {
        Some(cx) => replay(&system, cx)?.is_mismatch(),
        None => false,
    };
    if let Some(cx) = &guarantee.counterexample {
        if !replay(&system, cx)?.is_mismatch() {
            bail!("internal error: counterexample does not replay");
        }
    }
    let passed = guarantee.verified && replayed;
    let report = VerifyReport {
        system: system.netlist.name.clone(),
        scheme: system.scheme,
        module: system.golden_module.name.clone(),
        tolerance: tolerance(system.scheme),
        guarantee,
        tightness: Tightness {
            cardinality,
            witness,
            replayed,
        },
        passed,
    };
    let text = match a.format {
        Format::Json => json(&report),
        Format::Csv => format!(
            "scheme,module,conditional_total,total_guaranteed,verified,patterns_checked,inputs_per_pattern,tightness_cardinality,witness_found\n{},{},{},{},{},{},{},{},{}\n",
            report.scheme,
            report.module,
            report.tolerance.conditional_total,
            report.tolerance.total_guaranteed,
            report.guarantee.verified,
            report.guarantee.patterns_checked,
            report.guarantee.inputs_per_pattern,
            cardinality,
            report.tightness.replayed
        ),
        Format::Table => render_verify(&report),
    };
    emit(&a.output, &text)?;
    Ok(if report.passed { 0 } else { 1 })
}

fn render_verify(r: &VerifyReport) -> String {
    let t = &r.tolerance;
    let mut s = format!("system        {}\nscheme        {}\n", r.system, r.scheme);
    s.push_str(&format!(
        "tolerance     conditional_total={} total_guaranteed={}",
        t.conditional_total, t.total_guaranteed
    ));
    if let (Some(maj), Some(min)) = (t.majority_budget, t.minority_budget) {
        s.push_str(&format!(" (majority budget {maj}, minority budget {min})"));
    }
    s.push('\n');
    s.push_str(&format!(
        "guarantee     {} ({} patterns x {} inputs, adversarial per bit)\n",
        if r.guarantee.verified {
            "VERIFIED"
        } else {
            "VIOLATED"
        },
        r.guarantee.patterns_checked,
        r.guarantee.inputs_per_pattern
    ));
    if let Some(cx) = &r.guarantee.counterexample {
        s.push_str(&format!("counterexample {}", json(cx)));
    }
    match &r.tightness.witness {
        Some(cx) => s.push_str(&format!(
            "tightness     {} faults {:?} defeat the voter at input {} on {} (replayed: {})\n",
            r.tightness.cardinality, cx.pattern, cx.input, cx.output, r.tightness.replayed
        )),
        None => s.push_str(&format!(
            "tightness     no witness at {} faults\n",
            r.tightness.cardinality
        )),
    }
    s
}

fn metric_options(o: &MetricOpts) -> Result<MetricsOptions> {
    let delay_model = match &o.delay_model {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            DelayModel::from_json(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => DelayModel::unit(),
    };
    Ok(MetricsOptions {
        delay_model,
        normalization: match o.normalization {
            Norm::TwoInput => Normalization::TwoInput,
            Norm::WideGates => Normalization::WideGates,
        },
        ..MetricsOptions::default()
    })
}

const METRICS_CSV_HEADER: &str = "circuit,module,scheme,replicas,gate_count,weighted_area,critical_path_delay,adp,voter_construction,normalization,delay_model";

fn metrics_csv_row(r: &MetricsReport) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{}",
        r.circuit,
        r.module,
        r.scheme.as_deref().unwrap_or(""),
        r.replicas.map_or(String::new(), |n| n.to_string()),
        r.gate_count,
        r.weighted_area,
        r.critical_path_delay,
        r.adp,
        r.voter_construction,
        r.normalization,
        r.delay_model
    )
}

fn metrics(a: MetricsArgs) -> Result<u8> {
    let opts = metric_options(&a.opts)?;
    let system = build_system(a.scheme, &a.module)?;
    let report = measure_system(&system, &opts)?;
    let text = match a.opts.format {
        Format::Json => json(&report),
        Format::Csv => format!("{METRICS_CSV_HEADER}\n{}\n", metrics_csv_row(&report)),
        Format::Table => render_reports(std::slice::from_ref(&report)),
    };
    emit(&a.opts.output, &text)?;
    Ok(0)
}

#[derive(Serialize)]
struct CompareReport {
    baseline: MetricsReport,
    candidate: MetricsReport,
    comparison: ComparisonRow,
}

fn compare_cmd(a: CompareArgs) -> Result<u8> {
    let opts = metric_options(&a.opts)?;
    let base = measure_system(&build_system(a.baseline, &a.module)?, &opts)?;
    let voterless = ModuleArg {
        module: a.module.module.clone(),
        voter: a
            .module
            .voter
            .filter(|_| matches!(a.candidate, RedundancyScheme::Nmr { .. })),
    };
    let cand = measure_system(&build_system(a.candidate, &voterless)?, &opts)?;
    let row = compare(&base, &cand)?;
    let text = match a.opts.format {
        Format::Json => json(&CompareReport {
            baseline: base,
            candidate: cand,
            comparison: row,
        }),
        Format::Csv => format!(
            "baseline,candidate,adp_reduction_percent,area_reduction_percent,delay_reduction_percent,module_count_delta\n{},{},{},{},{},{}\n",
            row.baseline,
            row.candidate,
            row.adp_reduction_percent,
            row.area_reduction_percent,
            row.delay_reduction_percent,
            row.module_count_delta
        ),
        Format::Table => {
            render_reports(&[base, cand]) + &render_comparisons(std::slice::from_ref(&row))
        }
    };
    emit(&a.opts.output, &text)?;
    Ok(0)
}

fn parse_points(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        [single] => {
            let r: f64 = single
                .parse()
                .with_context(|| format!("bad r value `{single}`"))?;
            if !(0.0..=1.0).contains(&r) {
                bail!("r must lie in [0, 1], got {r}");
            }
            Ok(vec![r])
        }
        [lo, hi, steps] => {
            let lo: f64 = lo.parse().with_context(|| format!("bad r_min `{lo}`"))?;
            let hi: f64 = hi.parse().with_context(|| format!("bad r_max `{hi}`"))?;
            let steps: usize = steps
                .parse()
                .with_context(|| format!("bad steps `{steps}`"))?;
            Ok(grid(lo, hi, steps)?)
        }
        _ => bail!("--r expects `r` or `min:max:steps`, got `{spec}`"),
    }
}

fn reliability(a: ReliabilityArgs) -> Result<u8> {
    let points = parse_points(&a.r)?;
    let curve = match a.mode {
        Mode::Analytic => analytic_curve_at(a.scheme, &points)?,
        Mode::McGuarantee | Mode::McCircuit => {
            let system = build_system(a.scheme, &a.module)?;
            let mut cfg = MonteCarloConfig::new(
                if a.mode == Mode::McGuarantee {
                    McMode::Guarantee
                } else {
                    McMode::Circuit
                },
                a.trials,
                a.seed,
            );
            cfg.behavior = match a.behavior {
                Behavior::Inverted => FaultBehavior::Inverted,
                Behavior::Stuck0 => FaultBehavior::Stuck0,
                Behavior::Stuck1 => FaultBehavior::Stuck1,
            };
            cfg.sampled_inputs = a.samples;
            monte_carlo_curve_at(&system, &points, &cfg)?
        }
    };
    let text = match a.format {
        Format::Json => curve.to_json() + "\n",
        Format::Csv => curve.to_csv(),
        Format::Table => {
            let mut s = format!(
                "# {}\n{:>8} {:>14} {:>12}\n",
                curve.assumptions, "r", "R", "halfwidth"
            );
            for p in &curve.samples {
                s.push_str(&format!(
                    "{:>8.4} {:>14.10} {:>12.2e}\n",
                    p.r, p.reliability, p.half_width
                ));
            }
            s
        }
    };
    emit(&a.output, &text)?;
    Ok(0)
}

fn paper_table(a: PaperTableArgs) -> Result<u8> {
    let rows = match &a.fixture {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            parse_table1(&text)?
        }
        None => table1::bundled_table1(),
    };
    let summary = table1_reductions(&rows)?;
    let text = match a.format {
        Format::Json => json(&summary),
        Format::Table => table1::render(&summary),
        Format::Csv => {
            let mut s = String::from("baseline,candidate,family,reduction_percent\n");
            for p in &summary.pairs {
                for f in &p.per_family {
                    s.push_str(&format!(
                        "{},{},{},{}\n",
                        p.baseline, p.candidate, f.family, f.reduction_percent
                    ));
                }
                for (label, v) in [
                    ("commercial mean", p.commercial_mean),
                    ("rad/military mean", p.hardened_mean),
                    ("four-family mean", p.four_family_mean),
                    ("mean of group means", p.mean_of_group_means),
                    ("pooled", p.pooled_reduction),
                ] {
                    s.push_str(&format!("{},{},{label},{v}\n", p.baseline, p.candidate));
                }
            }
            s
        }
    };
    emit(&a.output, &text)?;
    for p in &summary.pairs {
        if let Some(d) = &p.discrepancy {
            eprintln!("note: {} vs {}: {d}", p.baseline, p.candidate);
        }
    }
    Ok(0)
}

fn export(a: ExportArgs) -> Result<u8> {
    let netlist = match a.scheme {
        Some(s) => build_system(s, &a.module)?.netlist,
        None => load_module(&a.module.module)?,
    };
    let out = export_structural_verilog(&netlist)?;
    emit(&a.output, &out.text)?;
    for (from, to) in &out.renamed {
        eprintln!("renamed `{from}` -> `{to}`");
    }
    Ok(0)
}
