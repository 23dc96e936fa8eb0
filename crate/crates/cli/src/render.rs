//! Text, CSV and JSON renderings of analyses and simulation tables.

use ortrend::dist::Sides;
use ortrend::estimators::{OneWayLayout, VarianceMode};
use ortrend::isotonic::pava_fitted;
use ortrend::procedures::{TestFamily, TestReport};
use ortrend::sim::SimulationTable;
use ortrend::Direction;
use serde::Serialize;

use crate::CliError;

/// Per-group descriptive summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSummary {
    pub level: String,
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub pava_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Analysis {
    pub input: String,
    pub group_column: String,
    pub response_column: String,
    pub direction: Direction,
    pub groups: Vec<GroupSummary>,
    pub pooled_variance: f64,
    pub df: u32,
    pub reports: Vec<TestReport>,
}

/// Shortest decimal that round-trips the value rounded to 12 significant
/// digits.
pub fn sig12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

fn describe(r: &TestReport) -> String {
    let m = &r.method;
    let sides = match m.sides {
        Sides::OneSided => "one-sided",
        Sides::TwoSided => "two-sided",
    };
    let var = match m.variance_mode {
        VarianceMode::Pooled => "pooled variance",
        VarianceMode::Sandwich => "sandwich variance",
    };
    let dir = match m.direction {
        Direction::Increasing => "increasing",
        Direction::Decreasing => "decreasing",
    };
    match m.family {
        TestFamily::AnovaF => "ANOVA F test".into(),
        TestFamily::BartholomewPermutation => {
            format!("permutation E-bar-squared, {dir}, {} permutations", m.permutations)
        }
        TestFamily::GrandMeanMCT => format!("grand-mean MCT, {sides}, {var}, {dir}"),
        TestFamily::GrandMeanMCTPava => format!("grand-mean MCT on PAVA means, {sides}, {var}, {dir}"),
        TestFamily::WilliamsMCT => format!("Williams-type MCT, {sides}, {var}, {dir}"),
        TestFamily::CustomMCT => format!("custom-contrast MCT, {sides}, {var}, {dir}"),
    }
}

fn fmt_p(p: f64) -> String {
    if p < 1e-4 {
        format!("{p:.2e}")
    } else {
        format!("{p:.4}")
    }
}

pub fn analysis_text(a: &Analysis) -> String {
    let mut out = String::new();
    let n: usize = a.groups.iter().map(|g| g.n).sum();
    out.push_str(&format!(
        "Data: {} ({} by {}), k = {}, N = {}\n\n",
        a.input,
        a.response_column,
        a.group_column,
        a.groups.len(),
        n
    ));
    let w = a.groups.iter().map(|g| g.level.len()).max().unwrap_or(0).max(5);
    out.push_str(&format!(
        "{:<w$}  {:>5}  {:>11}  {:>11}  {:>11}\n",
        "group", "n", "mean", "sd", "PAVA mean"
    ));
    for g in &a.groups {
        out.push_str(&format!(
            "{:<w$}  {:>5}  {:>11.5}  {:>11.5}  {:>11.5}\n",
            g.level, g.n, g.mean, g.sd, g.pava_mean
        ));
    }
    out.push_str(&format!(
        "pooled variance {:.5} on {} df\n",
        a.pooled_variance, a.df
    ));

    for r in &a.reports {
        out.push_str(&format!("\n{}: {}\n", r.name, describe(r)));
        match r.method.family {
            TestFamily::AnovaF => {
                out.push_str(&format!(
                    "  F = {:.4} on {} and {} df, p = {}\n",
                    r.statistics[0],
                    r.df_numerator.unwrap_or(0),
                    r.df,
                    fmt_p(r.global_p)
                ));
            }
            TestFamily::BartholomewPermutation => {
                out.push_str(&format!(
                    "  E2 = {:.4}, p = {}\n",
                    r.statistics[0],
                    fmt_p(r.global_p)
                ));
            }
            _ => {
                let lw = r.contrast_labels.iter().map(|l| l.len()).max().unwrap_or(0).max(8);
                out.push_str(&format!(
                    "  {:<lw$}  {:>10}  {:>9}",
                    "contrast", "statistic", "adj. p"
                ));
                if r.confidence_intervals.is_some() {
                    out.push_str(&format!("  {:>10}  {:>10}  {:>10}", "estimate", "lower", "upper"));
                }
                out.push('\n');
                for (h, label) in r.contrast_labels.iter().enumerate() {
                    out.push_str(&format!(
                        "  {:<lw$}  {:>10.4}  {:>9}",
                        label,
                        r.statistics[h],
                        fmt_p(r.adjusted_p[h])
                    ));
                    if let Some(ci) = &r.confidence_intervals {
                        let b = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.4}"));
                        out.push_str(&format!(
                            "  {:>10.4}  {:>10}  {:>10}",
                            ci[h].estimate,
                            b(ci[h].lower),
                            b(ci[h].upper)
                        ));
                    }
                    out.push('\n');
                }
                out.push_str(&format!("  global p = {}, df = {}", fmt_p(r.global_p), r.df));
                if let Some(q) = r.critical_value {
                    out.push_str(&format!(
                        ", critical value {:.4} ({:.0}% simultaneous)",
                        q,
                        100.0 * (1.0 - r.method.alpha)
                    ));
                }
                out.push('\n');
                if r.mvt_accuracy_warning {
                    out.push_str(&format!(
                        "  warning: multivariate t error bound {:.1e} exceeds the tolerance\n",
                        r.mvt_error_bound
                    ));
                }
            }
        }
        out.push_str(&format!(
            "  {} at alpha = {}\n",
            if r.reject { "reject H0" } else { "do not reject H0" },
            r.method.alpha
        ));
    }
    out
}

const ANALYSIS_HEADER: [&str; 11] = [
    "test", "contrast", "statistic", "adjusted_p", "global_p", "estimate", "lower", "upper", "df",
    "critical_value", "reject",
];

pub fn analysis_csv(a: &Analysis) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(ANALYSIS_HEADER).map_err(csv_err)?;
    let opt = |x: Option<f64>| x.map_or(String::new(), sig12);
    for r in &a.reports {
        let crit = opt(r.critical_value);
        let labels: Vec<String> = if r.contrast_labels.is_empty() {
            vec![String::new()]
        } else {
            r.contrast_labels.clone()
        };
        for (h, label) in labels.iter().enumerate() {
            let ci = r.confidence_intervals.as_ref().map(|c| c[h]);
            w.write_record([
                r.name.clone(),
                label.clone(),
                sig12(r.statistics[h]),
                sig12(r.adjusted_p[h]),
                sig12(r.global_p),
                opt(ci.map(|c| c.estimate)),
                opt(ci.and_then(|c| c.lower)),
                opt(ci.and_then(|c| c.upper)),
                r.df.to_string(),
                crit.clone(),
                r.reject.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    finish(w)
}

pub fn analysis_json(a: &Analysis) -> Result<String, CliError> {
    serde_json::to_string_pretty(a)
        .map(|s| s + "\n")
        .map_err(|e| CliError::Config(format!("cannot serialize report: {e}")))
}

const SIM_HEADER: [&str; 9] = [
    "label", "test", "sides", "variance_mode", "estimand", "runs", "rejections", "rate", "se",
];

pub fn simulation_csv(t: &SimulationTable) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SIM_HEADER).map_err(csv_err)?;
    for r in &t.rows {
        w.write_record([
            r.label.clone(),
            r.test.clone(),
            r.sides_label().to_string(),
            r.variance_label().to_string(),
            r.estimand_label().to_string(),
            r.runs.to_string(),
            r.rejections.to_string(),
            sig12(r.rate),
            sig12(r.se),
        ])
        .map_err(csv_err)?;
    }
    finish(w)
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Config(format!("cannot write CSV: {e}"))
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String, CliError> {
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Config(format!("cannot write CSV: {e}")))?;
    String::from_utf8(bytes).map_err(|e| CliError::Config(format!("CSV is not UTF-8: {e}")))
}

pub(crate) fn group_summaries(
    layout: &OneWayLayout,
    direction: Direction,
) -> Result<Vec<GroupSummary>, CliError> {
    let sizes = layout.group_sizes();
    let means: Vec<f64> = layout
        .responses()
        .iter()
        .map(|ys| ys.iter().sum::<f64>() / ys.len() as f64)
        .collect();
    let weights: Vec<f64> = sizes.iter().map(|&n| n as f64).collect();
    let pava = pava_fitted(&means, &weights, direction)?;
    Ok(layout
        .levels()
        .iter()
        .zip(layout.responses())
        .enumerate()
        .map(|(i, (level, ys))| {
            let var = ys.iter().map(|y| (y - means[i]).powi(2)).sum::<f64>()
                / (ys.len() - 1) as f64;
            GroupSummary {
                level: level.clone(),
                n: ys.len(),
                mean: means[i],
                sd: var.sqrt(),
                pava_mean: pava[i],
            }
        })
        .collect())
}
