//! Study files: shared defaults plus a list of scenarios whose mean profile
//! is either given directly (`mu`) or as `shape * span`, where `span` can be
//! calibrated so that the ANOVA F power hits a target.

use serde::{Deserialize, Serialize};

use super::{run_scenario, with_pool, Scenario};
use crate::procedures::{standard_grid, TestFamily, TestSpec};
use crate::{Error, Result};

fn default_runs() -> usize {
    1000
}

fn default_alpha() -> f64 {
    0.05
}

fn default_permutations() -> usize {
    999
}

fn default_tolerance() -> f64 {
    1e-3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyDefaults {
    pub group_sizes: Vec<usize>,
    /// Defaults to 1 in every group.
    #[serde(default)]
    pub sigma: Option<Vec<f64>>,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub seed: u64,
    /// Short test names; empty selects the full fourteen-test grid.
    #[serde(default)]
    pub tests: Vec<String>,
    /// Permutations of the E2 test.
    #[serde(default = "default_permutations")]
    pub permutations: usize,
    #[serde(default = "default_tolerance")]
    pub mvt_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioEntry {
    pub label: String,
    #[serde(default)]
    pub mu: Option<Vec<f64>>,
    #[serde(default)]
    pub shape: Option<Vec<f64>>,
    #[serde(default)]
    pub span: Option<f64>,
    /// Target ANOVA F power; `span` is then found by bisection.
    #[serde(default)]
    pub calibrate_aov: Option<f64>,
    #[serde(default)]
    pub sigma: Option<Vec<f64>>,
    #[serde(default)]
    pub group_sizes: Option<Vec<usize>>,
    #[serde(default)]
    pub runs: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub tests: Option<Vec<String>>,
}

/// Designates the tests of an empirical Pitman efficacy
/// `rate(numerator) / rate(denominator)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PitmanPair {
    pub numerator: String,
    pub denominator: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Study {
    #[serde(default)]
    pub name: Option<String>,
    pub defaults: StudyDefaults,
    pub scenarios: Vec<ScenarioEntry>,
    #[serde(default)]
    pub pitman: Option<PitmanPair>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub label: String,
    pub target: f64,
    pub span: f64,
    /// ANOVA F rejection rate at `span` with the scenario's seed and runs.
    pub achieved: f64,
}

fn resolve_tests(names: &[String], permutations: usize) -> Result<Vec<TestSpec>> {
    let specs = if names.is_empty() {
        standard_grid()
    } else {
        names
            .iter()
            .map(|n| {
                TestSpec::from_short_name(n)
                    .ok_or_else(|| Error::InvalidInput(format!("unknown test name '{n}'")))
            })
            .collect::<Result<_>>()?
    };
    Ok(specs
        .into_iter()
        .map(|s| match s.family {
            TestFamily::BartholomewPermutation => s.permutations(permutations),
            _ => s,
        })
        .collect())
}

impl Study {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("study file: {e}")))
    }

    /// Replaces the default seed; scenarios with their own seed keep it.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.defaults.seed = seed;
        self
    }

    /// Builds the scenarios, calibrating spans where requested. Scenarios
    /// without their own seed share the default one, so their datasets differ
    /// only through `mu` and `sigma`.
    pub fn resolve(&self, parallelism: usize) -> Result<(Vec<Scenario>, Vec<Calibration>)> {
        if self.scenarios.is_empty() {
            return Err(Error::InvalidInput("study has no scenarios".into()));
        }
        let d = &self.defaults;
        let mut scenarios = Vec::with_capacity(self.scenarios.len());
        let mut calibrations = Vec::new();
        for e in &self.scenarios {
            let group_sizes = e.group_sizes.clone().unwrap_or_else(|| d.group_sizes.clone());
            let k = group_sizes.len();
            let sigma = e
                .sigma
                .clone()
                .or_else(|| d.sigma.clone())
                .unwrap_or_else(|| vec![1.0; k]);
            let tests = resolve_tests(e.tests.as_deref().unwrap_or(&d.tests), d.permutations)?;
            let mut s = Scenario {
                label: e.label.clone(),
                group_sizes,
                mu: vec![0.0; k],
                sigma,
                runs: e.runs.unwrap_or(d.runs),
                alpha: d.alpha,
                seed: e.seed.unwrap_or(d.seed),
                tests,
                mvt_tolerance: d.mvt_tolerance,
            };
            s.mu = match (&e.mu, &e.shape) {
                (Some(_), Some(_)) => {
                    return Err(Error::InvalidInput(format!(
                        "scenario '{}': give either mu or shape, not both",
                        e.label
                    )))
                }
                (Some(mu), None) => {
                    if e.span.is_some() || e.calibrate_aov.is_some() {
                        return Err(Error::InvalidInput(format!(
                            "scenario '{}': span and calibrate_aov need a shape",
                            e.label
                        )));
                    }
                    mu.clone()
                }
                (None, Some(shape)) => {
                    let span = match (e.span, e.calibrate_aov) {
                        (Some(span), _) => span,
                        (None, Some(target)) => {
                            let c = calibrate_span(&s, shape, target, parallelism)?;
                            let span = c.span;
                            calibrations.push(c);
                            span
                        }
                        (None, None) => {
                            return Err(Error::InvalidInput(format!(
                                "scenario '{}': a shape needs span or calibrate_aov",
                                e.label
                            )))
                        }
                    };
                    shape.iter().map(|x| x * span).collect()
                }
                (None, None) => vec![0.0; k],
            };
            s.validate()?;
            scenarios.push(s);
        }
        Ok((scenarios, calibrations))
    }
}

/// Finds the span `c` for which the ANOVA F rejection rate of
/// `mu = c * shape` reaches `target`, by bisection with common random numbers
/// (the template's seed and run count). Only the template's sizes, sigma,
/// runs, alpha and seed are used.
pub fn calibrate_span(
    template: &Scenario,
    shape: &[f64],
    target: f64,
    parallelism: usize,
) -> Result<Calibration> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::InvalidInput(format!(
            "calibration target must lie in (0, 1), got {target}"
        )));
    }
    if shape.len() != template.group_sizes.len() || shape.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput(
            "shape must be finite with one entry per group".into(),
        ));
    }
    if shape.windows(2).all(|w| w[0] == w[1]) {
        return Err(Error::InvalidInput("a constant shape has no power to calibrate".into()));
    }
    let mut probe = Scenario {
        label: template.label.clone(),
        tests: vec![TestSpec::new(TestFamily::AnovaF)],
        ..template.clone()
    };
    probe.validate()?;
    with_pool(parallelism, move || {
        let mut power = |span: f64| -> Result<f64> {
            probe.mu = shape.iter().map(|x| x * span).collect();
            Ok(run_scenario(&probe)?[0].rate)
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        let mut hi_rate = power(hi)?;
        let mut doublings = 0;
        while hi_rate < target {
            lo = hi;
            hi *= 2.0;
            hi_rate = power(hi)?;
            doublings += 1;
            if doublings > 30 {
                return Err(Error::Numeric(format!(
                    "power {target} not reached for span up to {hi}"
                )));
            }
        }
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            let rate = power(mid)?;
            if rate < target {
                lo = mid;
            } else {
                hi = mid;
                hi_rate = rate;
            }
            if hi - lo < 1e-6 * hi {
                break;
            }
        }
        Ok(Calibration {
            label: template.label.clone(),
            target,
            span: hi,
            achieved: hi_rate,
        })
    })
}
