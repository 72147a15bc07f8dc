//! Published FPGA synthesis results for the 4×4 multiplier systems and the
//! reduction percentages derived from them.
//!
//! The numbers are fixture data only. They come from vendor synthesis tools
//! and cannot be reproduced by the technology-neutral models in
//! [`crate::metrics`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::reduction_percent;

/// The bundled CSV, header `family,process,type,scheme,delay_ns,area_bels,adp`.
pub const BUNDLED_CSV: &str = include_str!("../data/table1.csv");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub family: String,
    pub process: String,
    #[serde(rename = "type")]
    pub kind: String,
    pub scheme: String,
    pub delay_ns: f64,
    pub area_bels: u32,
    pub adp: f64,
}

impl Table1Row {
    pub fn is_commercial(&self) -> bool {
        self.kind.eq_ignore_ascii_case("commercial")
    }
}

pub fn parse_table1(text: &str) -> Result<Vec<Table1Row>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let expected = [
        "family",
        "process",
        "type",
        "scheme",
        "delay_ns",
        "area_bels",
        "adp",
    ];
    let header = reader
        .headers()
        .map_err(|e| Error::Fixture(e.to_string()))?
        .clone();
    if header.iter().ne(expected.iter().copied()) {
        return Err(Error::Fixture(format!(
            "header must be `{}`, found `{}`",
            expected.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    reader
        .deserialize()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| Error::Fixture(format!("row {}: {e}", i + 1))))
        .collect()
}

pub fn bundled_table1() -> Vec<Table1Row> {
    parse_table1(BUNDLED_CSV).expect("bundled fixture parses")
}

/// Printed ADP against printed delay × area.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdpCheck {
    pub family: String,
    pub scheme: String,
    pub printed: f64,
    pub recomputed: f64,
    pub abs_diff: f64,
}

pub fn adp_consistency(rows: &[Table1Row]) -> Vec<AdpCheck> {
    rows.iter()
        .map(|r| {
            let recomputed = r.delay_ns * f64::from(r.area_bels);
            AdpCheck {
                family: r.family.clone(),
                scheme: r.scheme.clone(),
                printed: r.adp,
                recomputed,
                abs_diff: (recomputed - r.adp).abs(),
            }
        })
        .collect()
}

/// Averages quoted alongside the table for one baseline/candidate pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StatedAverages {
    pub commercial: f64,
    pub hardened: f64,
    pub four_family: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyReduction {
    pub family: String,
    pub commercial: bool,
    pub baseline_adp: f64,
    pub candidate_adp: f64,
    pub reduction_percent: f64,
}

/// All aggregation variants for one baseline/candidate pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairSummary {
    pub baseline: String,
    pub candidate: String,
    pub per_family: Vec<FamilyReduction>,
    /// Mean over the commercial families.
    pub commercial_mean: f64,
    /// Mean over the radiation-tolerant and military-grade families.
    pub hardened_mean: f64,
    /// Arithmetic mean of the per-family reductions.
    pub four_family_mean: f64,
    /// Mean of the two group means.
    pub mean_of_group_means: f64,
    /// Reduction of the summed ADPs across all families.
    pub pooled_reduction: f64,
    pub stated: Option<StatedAverages>,
    /// Aggregations within 0.5 points of the stated four-family figure.
    pub four_family_matches: Vec<String>,
    /// Set when the stated four-family figure is not the arithmetic mean.
    pub discrepancy: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table1Summary {
    pub pairs: Vec<PairSummary>,
    pub adp_checks: Vec<AdpCheck>,
}

/// Baseline/candidate pairs and the averages quoted for them.
pub const COMPARED_PAIRS: [(&str, &str, Option<StatedAverages>); 3] = [
    ("5MR", "3-of-5 DMMR", None),
    (
        "7MR",
        "3-of-6 DMMR",
        Some(StatedAverages {
            commercial: 34.1,
            hardened: 46.0,
            four_family: 44.5,
        }),
    ),
    (
        "9MR",
        "3-of-7 DMMR",
        Some(StatedAverages {
            commercial: 46.7,
            hardened: 58.3,
            four_family: 56.5,
        }),
    ),
];

/// Agreement window used when matching stated averages.
pub const MATCH_TOLERANCE: f64 = 0.5;

fn families(rows: &[Table1Row]) -> Vec<(String, bool)> {
    let mut out: Vec<(String, bool)> = Vec::new();
    for r in rows {
        if !out.iter().any(|(f, _)| *f == r.family) {
            out.push((r.family.clone(), r.is_commercial()));
        }
    }
    out
}

fn lookup<'a>(rows: &'a [Table1Row], family: &str, scheme: &str) -> Result<&'a Table1Row> {
    rows.iter()
        .find(|r| r.family == family && r.scheme == scheme)
        .ok_or_else(|| Error::Fixture(format!("missing row ({family}, {scheme})")))
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

pub fn pair_summary(
    rows: &[Table1Row],
    baseline: &str,
    candidate: &str,
    stated: Option<StatedAverages>,
) -> Result<PairSummary> {
    let per_family = families(rows)
        .into_iter()
        .map(|(family, commercial)| {
            let b = lookup(rows, &family, baseline)?;
            let c = lookup(rows, &family, candidate)?;
            Ok(FamilyReduction {
                reduction_percent: reduction_percent(b.adp, c.adp),
                baseline_adp: b.adp,
                candidate_adp: c.adp,
                family,
                commercial,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let commercial_mean = mean(
        per_family
            .iter()
            .filter(|f| f.commercial)
            .map(|f| f.reduction_percent),
    );
    let hardened_mean = mean(
        per_family
            .iter()
            .filter(|f| !f.commercial)
            .map(|f| f.reduction_percent),
    );
    let four_family_mean = mean(per_family.iter().map(|f| f.reduction_percent));
    let mean_of_group_means = (commercial_mean + hardened_mean) / 2.0;
    let pooled_reduction = reduction_percent(
        per_family.iter().map(|f| f.baseline_adp).sum(),
        per_family.iter().map(|f| f.candidate_adp).sum(),
    );

    let mut four_family_matches = Vec::new();
    let mut discrepancy = None;
    if let Some(s) = stated {
        for (name, value) in [
            ("arithmetic mean of families", four_family_mean),
            ("mean of group means", mean_of_group_means),
            ("pooled ADP reduction", pooled_reduction),
        ] {
            if (value - s.four_family).abs() <= MATCH_TOLERANCE {
                four_family_matches.push(name.to_string());
            }
        }
        if (four_family_mean - s.four_family).abs() > MATCH_TOLERANCE {
            discrepancy = Some(format!(
                "stated four-family average {:.1}% differs from the arithmetic mean {:.2}% \
                 (mean of group means {:.2}%, pooled ADP reduction {:.2}%)",
                s.four_family, four_family_mean, mean_of_group_means, pooled_reduction
            ));
        }
    }

    Ok(PairSummary {
        baseline: baseline.to_string(),
        candidate: candidate.to_string(),
        per_family,
        commercial_mean,
        hardened_mean,
        four_family_mean,
        mean_of_group_means,
        pooled_reduction,
        stated,
        four_family_matches,
        discrepancy,
    })
}

pub fn table1_reductions(rows: &[Table1Row]) -> Result<Table1Summary> {
    let pairs = COMPARED_PAIRS
        .iter()
        .map(|(b, c, s)| pair_summary(rows, b, c, *s))
        .collect::<Result<Vec<_>>>()?;
    Ok(Table1Summary {
        pairs,
        adp_checks: adp_consistency(rows),
    })
}

/// Plain-text rendering for terminals.
pub fn render(summary: &Table1Summary) -> String {
    let mut s = String::new();
    s.push_str("# published FPGA results; absolute BEL and ns values are fixture data only\n");
    let worst = summary
        .adp_checks
        .iter()
        .map(|c| c.abs_diff)
        .fold(0.0, f64::max);
    s.push_str(&format!(
        "ADP = delay x area check: {} rows, max |diff| = {worst:.4}\n",
        summary.adp_checks.len()
    ));
    for p in &summary.pairs {
        s.push_str(&format!("\n{} vs {}\n", p.baseline, p.candidate));
        for f in &p.per_family {
            s.push_str(&format!(
                "  {:<16} {:>10.3} -> {:>10.3}  {:>7.2}%\n",
                f.family, f.baseline_adp, f.candidate_adp, f.reduction_percent
            ));
        }
        let stated = |v: Option<f64>| v.map_or(String::new(), |v| format!("  (stated {v:.1}%)"));
        s.push_str(&format!(
            "  commercial mean      {:>7.2}%{}\n",
            p.commercial_mean,
            stated(p.stated.map(|x| x.commercial))
        ));
        s.push_str(&format!(
            "  rad/military mean    {:>7.2}%{}\n",
            p.hardened_mean,
            stated(p.stated.map(|x| x.hardened))
        ));
        s.push_str(&format!(
            "  four-family mean     {:>7.2}%{}\n",
            p.four_family_mean,
            stated(p.stated.map(|x| x.four_family))
        ));
        s.push_str(&format!(
            "  mean of group means  {:>7.2}%\n",
            p.mean_of_group_means
        ));
        s.push_str(&format!(
            "  pooled ADP reduction {:>7.2}%\n",
            p.pooled_reduction
        ));
        if let Some(d) = &p.discrepancy {
            s.push_str(&format!("  DISCREPANCY: {d}\n"));
            if !p.four_family_matches.is_empty() {
                s.push_str(&format!(
                    "  stated figure matches: {}\n",
                    p.four_family_matches.join(", ")
                ));
            }
        }
    }
    s
}
