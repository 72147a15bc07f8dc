//! System reliability as a function of module reliability `r`.
//!
//! Modules fail independently with probability `1 - r`; voters never fail.
//! The analytic model and the guarantee-mode Monte Carlo count a failure
//! pattern as survivable iff it respects the scheme's budgets. Circuit mode
//! instead injects the faults into the real netlist and checks the outputs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fault::{FaultBehavior, VERIFY_INPUT_LIMIT};
use crate::par::{self, Exec};
use crate::redundancy::{RedundancyScheme, RedundantSystem};
use crate::sim::{CompiledNetlist, Stimulus};

pub const ASSUMPTIONS: &str =
    "modules fail independently with identical reliability r; voters are fault-free";

/// Trials handled by one work item; fixed so results do not depend on the
/// worker count.
const TRIAL_CHUNK: u64 = 1 << 14;

fn check_r(r: f64) -> Result<()> {
    if (0.0..=1.0).contains(&r) {
        Ok(())
    } else {
        Err(Error::Param(format!(
            "module reliability must lie in [0, 1], got {r}"
        )))
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Closed-form system reliability.
///
/// NMR{n}: at least `(n+1)/2` good modules. DMMR{m}: at least two of the
/// three majority modules good and at least one of the `m-3` minority
/// modules good, `(3r² - 2r³)(1 - (1-r)^(m-3))`.
pub fn analytic_reliability(scheme: RedundancyScheme, r: f64) -> Result<f64> {
    check_r(r)?;
    let q = 1.0 - r;
    Ok(match scheme {
        RedundancyScheme::Nmr { n } => (n.div_ceil(2)..=n)
            .map(|i| binomial(n, i) * r.powi(i as i32) * q.powi((n - i) as i32))
            .sum(),
        RedundancyScheme::Dmmr { m } => {
            (3.0 * r * r - 2.0 * r * r * r) * (1.0 - q.powi((m - 3) as i32))
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReliabilityMode {
    Analytic,
    MonteCarloGuarantee,
    MonteCarloCircuit,
}

/// Success criterion for a Monte Carlo trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McMode {
    /// The failed set respects the scheme's budgets.
    Guarantee,
    /// The faulty circuit matches the golden module on every checked input.
    Circuit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloConfig {
    pub trials: u64,
    pub seed: u64,
    pub mode: McMode,
    /// Circuit mode only; adversarial behaviour cannot be simulated.
    pub behavior: FaultBehavior,
    /// Circuit mode: number of random input rows when the module is too wide
    /// for exhaustive checking.
    pub sampled_inputs: Option<usize>,
    pub exec: Exec,
}

impl MonteCarloConfig {
    pub fn new(mode: McMode, trials: u64, seed: u64) -> Self {
        MonteCarloConfig {
            trials,
            seed,
            mode,
            behavior: FaultBehavior::Inverted,
            sampled_inputs: None,
            exec: Exec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    pub reliability: f64,
    /// 95% normal-approximation half-width.
    pub half_width: f64,
    pub trials: u64,
    pub successes: u64,
    /// Circuit mode: mean fraction of inputs answered correctly, a separate
    /// statistic from all-inputs success.
    pub per_input_mean: Option<f64>,
}

/// Per failed-set outcome of the real circuit, indexed by bitmask
/// (bit `k-1` set when replica `k` failed).
#[derive(Debug, Clone)]
pub struct CircuitOutcomes {
    pub all_inputs_ok: Vec<bool>,
    pub input_fraction: Vec<f64>,
}

/// Simulates every failed-replica subset once.
pub fn circuit_outcomes(
    system: &RedundantSystem,
    behavior: FaultBehavior,
    sampled_inputs: Option<usize>,
    seed: u64,
    exec: Exec,
) -> Result<CircuitOutcomes> {
    let fault = behavior.net_fault().ok_or_else(|| {
        Error::Param("circuit-mode reliability needs a concrete fault behaviour".into())
    })?;
    let replicas = system.replica_count();
    if replicas > 20 {
        return Err(Error::Param(format!(
            "{replicas} replicas are too many to tabulate failure subsets"
        )));
    }
    let width = system.golden_module.inputs.len();
    let stimulus = match sampled_inputs {
        Some(count) => {
            if count == 0 {
                return Err(Error::Param("sampled input count must be positive".into()));
            }
            if width > 64 {
                return Err(Error::Param(format!("{width} inputs cannot be sampled")));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(u64::MAX);
            let mask = if width == 64 { !0 } else { (1u64 << width) - 1 };
            Stimulus::from_rows(width, (0..count).map(|_| rng.gen::<u64>() & mask).collect())?
        }
        None if width <= VERIFY_INPUT_LIMIT => Stimulus::exhaustive(width)?,
        None => {
            return Err(Error::TooManyInputs {
                count: width,
                limit: VERIFY_INPUT_LIMIT,
            })
        }
    };

    let compiled = CompiledNetlist::new(&system.netlist)?;
    let golden_c = CompiledNetlist::new(&system.golden_module)?;
    let golden = golden_c.simulate(&stimulus, &golden_c.empty_mask());
    let nets: Vec<Vec<usize>> = system
        .module_output_nets
        .iter()
        .map(|ns| {
            ns.iter()
                .map(|n| {
                    compiled
                        .net_index(n)
                        .ok_or_else(|| Error::UnknownNet(n.clone()))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let q = system.output_count();

    let results = par::map_range(exec, 1u64 << replicas, |subset| {
        let mut mask = compiled.empty_mask();
        for (k, replica) in nets.iter().enumerate() {
            if (subset >> k) & 1 == 1 {
                for &n in replica {
                    mask.set(n, Some(fault));
                }
            }
        }
        let response = compiled.simulate(&stimulus, &mask);
        let mut wrong = 0u32;
        for b in 0..stimulus.block_count() {
            let bad = (0..q).fold(0u64, |acc, o| {
                acc | (response.word(b, o) ^ golden.word(b, o))
            });
            wrong += (bad & stimulus.lane_mask(b)).count_ones();
        }
        (wrong == 0, 1.0 - f64::from(wrong) / stimulus.len() as f64)
    });
    let (all_inputs_ok, input_fraction) = results.into_iter().unzip();
    Ok(CircuitOutcomes {
        all_inputs_ok,
        input_fraction,
    })
}

fn half_width(p: f64, n: u64) -> f64 {
    1.96 * (p * (1.0 - p) / n as f64).sqrt()
}

/// Bitmask of failed replicas for one trial. Each trial gets its own ChaCha
/// stream, so results are independent of how trials are scheduled.
fn draw_failures(base: &ChaCha8Rng, trial: u64, replicas: usize, fail_p: f64) -> u64 {
    let mut rng = base.clone();
    rng.set_stream(trial);
    rng.set_word_pos(0);
    (0..replicas).fold(0u64, |acc, k| {
        if rng.gen::<f64>() < fail_p {
            acc | (1 << k)
        } else {
            acc
        }
    })
}

pub fn monte_carlo_reliability(
    system: &RedundantSystem,
    r: f64,
    config: &MonteCarloConfig,
) -> Result<MonteCarloEstimate> {
    let outcomes = match config.mode {
        McMode::Guarantee => None,
        McMode::Circuit => Some(circuit_outcomes(
            system,
            config.behavior,
            config.sampled_inputs,
            config.seed,
            config.exec,
        )?),
    };
    monte_carlo_with(system.scheme, outcomes.as_ref(), r, config)
}

/// Monte Carlo over a precomputed outcome table (or budget conformity when
/// `outcomes` is `None`).
pub fn monte_carlo_with(
    scheme: RedundancyScheme,
    outcomes: Option<&CircuitOutcomes>,
    r: f64,
    config: &MonteCarloConfig,
) -> Result<MonteCarloEstimate> {
    check_r(r)?;
    if config.trials == 0 {
        return Err(Error::Param("trial count must be at least 1".into()));
    }
    let replicas = scheme.replicas();
    let fail_p = 1.0 - r;
    let base = ChaCha8Rng::seed_from_u64(config.seed);
    let chunks = config.trials.div_ceil(TRIAL_CHUNK);

    let partial = par::map_range(config.exec, chunks, |c| {
        let start = c * TRIAL_CHUNK;
        let end = (start + TRIAL_CHUNK).min(config.trials);
        let mut ok = 0u64;
        let mut frac = 0.0f64;
        for t in start..end {
            let failed = draw_failures(&base, t, replicas, fail_p);
            match outcomes {
                None => ok += u64::from(scheme.is_conforming_mask(failed)),
                Some(o) => {
                    ok += u64::from(o.all_inputs_ok[failed as usize]);
                    frac += o.input_fraction[failed as usize];
                }
            }
        }
        (ok, frac)
    });
    let successes: u64 = partial.iter().map(|p| p.0).sum();
    let frac_sum: f64 = partial.iter().map(|p| p.1).sum();
    let mean = successes as f64 / config.trials as f64;
    Ok(MonteCarloEstimate {
        reliability: mean,
        half_width: half_width(mean, config.trials),
        trials: config.trials,
        successes,
        per_input_mean: outcomes.map(|_| frac_sum / config.trials as f64),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub r: f64,
    #[serde(rename = "R")]
    pub reliability: f64,
    #[serde(rename = "halfwidth")]
    pub half_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReliabilityCurve {
    pub scheme: RedundancyScheme,
    pub mode: ReliabilityMode,
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub behavior: Option<FaultBehavior>,
    pub assumptions: String,
    pub samples: Vec<CurvePoint>,
}

/// `steps` evenly spaced points from `r_min` to `r_max` inclusive.
pub fn grid(r_min: f64, r_max: f64, steps: usize) -> Result<Vec<f64>> {
    if !(0.0 <= r_min && r_min < r_max && r_max <= 1.0) {
        return Err(Error::Param(format!(
            "need 0 <= r_min < r_max <= 1, got {r_min}..{r_max}"
        )));
    }
    if steps < 2 {
        return Err(Error::Param(format!("need at least 2 steps, got {steps}")));
    }
    let last = (steps - 1) as f64;
    Ok((0..steps)
        .map(|i| {
            if i == steps - 1 {
                r_max
            } else {
                r_min + (r_max - r_min) * i as f64 / last
            }
        })
        .collect())
}

fn check_points(points: &[f64]) -> Result<()> {
    if points.is_empty() {
        return Err(Error::Param("no sample points".into()));
    }
    for &r in points {
        check_r(r)?;
    }
    if points.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Param(
            "sample points must be strictly increasing".into(),
        ));
    }
    Ok(())
}

pub fn analytic_curve_at(scheme: RedundancyScheme, points: &[f64]) -> Result<ReliabilityCurve> {
    check_points(points)?;
    let samples = points
        .iter()
        .map(|&r| {
            Ok(CurvePoint {
                r,
                reliability: analytic_reliability(scheme, r)?,
                half_width: 0.0,
            })
        })
        .collect::<Result<_>>()?;
    Ok(ReliabilityCurve {
        scheme,
        mode: ReliabilityMode::Analytic,
        seed: None,
        trials: None,
        behavior: None,
        assumptions: ASSUMPTIONS.into(),
        samples,
    })
}

pub fn analytic_curve(
    scheme: RedundancyScheme,
    r_min: f64,
    r_max: f64,
    steps: usize,
) -> Result<ReliabilityCurve> {
    analytic_curve_at(scheme, &grid(r_min, r_max, steps)?)
}

/// Monte Carlo curve; every point reuses the configured seed.
pub fn monte_carlo_curve_at(
    system: &RedundantSystem,
    points: &[f64],
    config: &MonteCarloConfig,
) -> Result<ReliabilityCurve> {
    check_points(points)?;
    let outcomes = match config.mode {
        McMode::Guarantee => None,
        McMode::Circuit => Some(circuit_outcomes(
            system,
            config.behavior,
            config.sampled_inputs,
            config.seed,
            config.exec,
        )?),
    };
    let samples = points
        .iter()
        .map(|&r| {
            let est = monte_carlo_with(system.scheme, outcomes.as_ref(), r, config)?;
            Ok(CurvePoint {
                r,
                reliability: est.reliability,
                half_width: est.half_width,
            })
        })
        .collect::<Result<_>>()?;
    Ok(ReliabilityCurve {
        scheme: system.scheme,
        mode: match config.mode {
            McMode::Guarantee => ReliabilityMode::MonteCarloGuarantee,
            McMode::Circuit => ReliabilityMode::MonteCarloCircuit,
        },
        seed: Some(config.seed),
        trials: Some(config.trials),
        behavior: (config.mode == McMode::Circuit).then_some(config.behavior),
        assumptions: ASSUMPTIONS.into(),
        samples,
    })
}

pub fn monte_carlo_curve(
    system: &RedundantSystem,
    r_min: f64,
    r_max: f64,
    steps: usize,
    config: &MonteCarloConfig,
) -> Result<ReliabilityCurve> {
    monte_carlo_curve_at(system, &grid(r_min, r_max, steps)?, config)
}

impl ReliabilityCurve {
    /// `r,R,halfwidth` rows preceded by `#` metadata lines.
    pub fn to_csv(&self) -> String {
        let mut s = format!("# scheme={} mode={}", self.scheme, mode_label(self.mode));
        if let Some(seed) = self.seed {
            s.push_str(&format!(" seed={seed}"));
        }
        if let Some(t) = self.trials {
            s.push_str(&format!(" trials={t}"));
        }
        if let Some(b) = self.behavior {
            s.push_str(&format!(" behavior={b}"));
        }
        s.push_str(&format!("\n# {}\nr,R,halfwidth\n", self.assumptions));
        for p in &self.samples {
            s.push_str(&format!("{},{},{}\n", p.r, p.reliability, p.half_width));
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("curve serialization cannot fail")
    }
}

fn mode_label(mode: ReliabilityMode) -> &'static str {
    match mode {
        ReliabilityMode::Analytic => "analytic",
        ReliabilityMode::MonteCarloGuarantee => "monte-carlo-guarantee",
        ReliabilityMode::MonteCarloCircuit => "monte-carlo-circuit",
    }
}
