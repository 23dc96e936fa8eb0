//! Monte Carlo size and power studies.
//!
//! Every run of a scenario draws one dataset and evaluates all of the
//! scenario's tests on it, so differences between tests are paired.
//!
//! Random numbers come from ChaCha8 keyed by the scenario seed. Run `r`
//! (0-based) uses stream `r`, and group `i` starts at word position
//! `i * 2^32` of that stream, so any single dataset can be regenerated with
//! [`simulate_layout`] without replaying the others. Permutation tests in run
//! `r` are seeded with [`run_seed`]`(seed, r)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{MvtOptions, Sides};
use crate::estimators::{Estimand, OneWayLayout, VarianceMode};
use crate::procedures::{global_p_value, EvalOptions, TestFamily, TestSpec};
use crate::{Error, Result};

mod study;

pub use study::{calibrate_span, Calibration, PitmanPair, ScenarioEntry, Study, StudyDefaults};

fn default_alpha() -> f64 {
    0.05
}

fn default_sim_tolerance() -> f64 {
    1e-3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub label: String,
    pub group_sizes: Vec<usize>,
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    pub runs: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub seed: u64,
    pub tests: Vec<TestSpec>,
    /// Absolute error target of the multivariate-t integrator.
    #[serde(default = "default_sim_tolerance")]
    pub mvt_tolerance: f64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let k = self.group_sizes.len();
        let bad = |msg: String| Err(Error::InvalidInput(format!("scenario '{}': {msg}", self.label)));
        if k < 2 {
            return bad("at least two groups are needed".into());
        }
        if self.mu.len() != k || self.sigma.len() != k {
            return bad(format!(
                "group_sizes, mu and sigma must have equal lengths ({k}, {}, {})",
                self.mu.len(),
                self.sigma.len()
            ));
        }
        if self.group_sizes.iter().any(|&n| n < 2) {
            return bad("every group needs at least two observations".into());
        }
        if self.mu.iter().any(|m| !m.is_finite()) {
            return bad("mu must be finite".into());
        }
        if self.sigma.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return bad("sigma must be positive and finite".into());
        }
        if self.runs == 0 {
            return bad("runs must be >= 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if self.tests.is_empty() {
            return bad("no tests selected".into());
        }
        if !(self.mvt_tolerance > 0.0) {
            return bad("mvt_tolerance must be positive".into());
        }
        Ok(())
    }

    /// True when all group means are equal (heterogeneous σ still counts).
    pub fn is_null(&self) -> bool {
        self.mu.windows(2).all(|w| w[0] == w[1])
    }

    fn eval_options(&self, run: usize) -> EvalOptions {
        EvalOptions {
            mvt: MvtOptions::default().with_tolerance(self.mvt_tolerance),
            perm_seed: run_seed(self.seed, run),
        }
    }
}

/// Seed for run-level randomness other than the data (permutations).
pub fn run_seed(seed: u64, run: usize) -> u64 {
    // splitmix64 finalizer over the pair.
    let mut z = seed ^ (run as u64).wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Regenerates the dataset of run `run` (0-based).
pub fn simulate_layout(s: &Scenario, run: usize) -> Result<OneWayLayout> {
    s.validate()?;
    Ok(draw(s, run))
}

fn draw(s: &Scenario, run: usize) -> OneWayLayout {
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    rng.set_stream(run as u64);
    let responses = s
        .group_sizes
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            rng.set_word_pos((i as u128) << 32);
            (0..n)
                .map(|_| {
                    let z: f64 = rng.sample(StandardNormal);
                    s.mu[i] + s.sigma[i] * z
                })
                .collect()
        })
        .collect();
    let levels = (1..=s.group_sizes.len()).map(|i| i.to_string()).collect();
    OneWayLayout::new(levels, responses).expect("validated scenario")
}

/// Per-test rejection decisions of one run.
pub fn rejections_for_run(s: &Scenario, run: usize) -> Result<Vec<bool>> {
    let layout = draw(s, run);
    let opts = s.eval_options(run);
    s.tests
        .iter()
        .map(|t| {
            global_p_value(&layout, t, &opts)
                .map(|p| p <= s.alpha)
                .map_err(|e| annotate(e, s, run))
        })
        .collect()
}

fn annotate(e: Error, s: &Scenario, run: usize) -> Error {
    let ctx = format!("scenario '{}', run {run} (seed {})", s.label, s.seed);
    match e {
        Error::InvalidInput(m) => Error::InvalidInput(format!("{ctx}: {m}")),
        Error::InvalidDesign(m) => Error::InvalidDesign(format!("{ctx}: {m}")),
        Error::UnsupportedDesign(m) => Error::UnsupportedDesign(format!("{ctx}: {m}")),
        Error::DegenerateVariance(m) => Error::DegenerateVariance(format!("{ctx}: {m}")),
        Error::Numeric(m) => Error::Numeric(format!("{ctx}: {m}")),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationRow {
    pub label: String,
    pub test: String,
    pub spec: TestSpec,
    pub null: bool,
    pub runs: usize,
    pub rejections: usize,
    pub rate: f64,
    /// Binomial standard error `sqrt(rate (1 - rate) / runs)`.
    pub se: f64,
}

impl SimulationRow {
    pub fn sides_label(&self) -> &'static str {
        match self.spec.sides {
            Sides::OneSided => "1",
            Sides::TwoSided => "2",
        }
    }

    pub fn variance_label(&self) -> &'static str {
        match self.spec.variance_mode {
            VarianceMode::Pooled => "pooled",
            VarianceMode::Sandwich => "sandwich",
        }
    }

    pub fn estimand_label(&self) -> &'static str {
        match self.spec.family {
            TestFamily::AnovaF => "none",
            TestFamily::BartholomewPermutation => "pava",
            f => match f.estimand() {
                Some(Estimand::PavaMeans) => "pava",
                _ => "means",
            },
        }
    }

    /// `Some(true)` conservative (< 0.04), `Some(false)` liberal (> 0.065);
    /// only null scenarios are flagged.
    pub fn size_flag(&self) -> Option<bool> {
        if !self.null {
            None
        } else if self.rate < 0.04 {
            Some(true)
        } else if self.rate > 0.065 {
            Some(false)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PitmanValue {
    pub label: String,
    pub numerator: String,
    pub denominator: String,
    /// `None` when the denominator rate is zero.
    pub value: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SimulationTable {
    pub rows: Vec<SimulationRow>,
    pub pitman: Vec<PitmanValue>,
}

impl SimulationTable {
    pub fn rate(&self, label: &str, test: &str) -> Option<f64> {
        self.row(label, test).map(|r| r.rate)
    }

    pub fn row(&self, label: &str, test: &str) -> Option<&SimulationRow> {
        self.rows.iter().find(|r| r.label == label && r.test == test)
    }

    /// Adds empirical Pitman efficacies `rate(numerator) / rate(denominator)`
    /// for every scenario carrying both tests.
    pub fn add_pitman(&mut self, pair: &PitmanPair) {
        let mut labels: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !labels.contains(&r.label.as_str()) {
                labels.push(&r.label);
            }
        }
        let values: Vec<PitmanValue> = labels
            .into_iter()
            .filter_map(|label| {
                let num = self.rate(label, &pair.numerator)?;
                let den = self.rate(label, &pair.denominator)?;
                Some(PitmanValue {
                    label: label.to_string(),
                    numerator: pair.numerator.clone(),
                    denominator: pair.denominator.clone(),
                    value: (den > 0.0).then(|| num / den),
                })
            })
            .collect();
        self.pitman.extend(values);
    }

    /// Aligned table with one line per scenario and one column per test.
    /// Null-scenario rates below 0.04 are suffixed `<`, above 0.065 `>`.
    pub fn render_text(&self) -> String {
        let mut labels: Vec<&str> = Vec::new();
        let mut tests: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !labels.contains(&r.label.as_str()) {
                labels.push(&r.label);
            }
            if !tests.contains(&r.test.as_str()) {
                tests.push(&r.test);
            }
        }
        let has_pitman = !self.pitman.is_empty();
        let label_width = labels.iter().map(|l| l.len()).max().unwrap_or(0).max(8);
        let col = |name: &str| name.len().max(6);

        let mut out = format!("{:<label_width$}", "scenario");
        for t in &tests {
            out.push_str(&format!("  {:>w$}", t, w = col(t)));
        }
        if has_pitman {
            out.push_str(&format!("  {:>6}", "Pit"));
        }
        out.push('\n');
        for label in &labels {
            out.push_str(&format!("{label:<label_width$}"));
            for t in &tests {
                let cell = match self.row(label, t) {
                    Some(r) => {
                        let mark = match r.size_flag() {
                            Some(true) => "<",
                            Some(false) => ">",
                            None => " ",
                        };
                        format!("{:.3}{mark}", r.rate)
                    }
                    None => "-".into(),
                };
                out.push_str(&format!("  {:>w$}", cell, w = col(t)));
            }
            if has_pitman {
                let cell = self
                    .pitman
                    .iter()
                    .find(|p| p.label == *label)
                    .and_then(|p| p.value)
                    .map_or("-".to_string(), |v| format!("{v:.2}"));
                out.push_str(&format!("  {cell:>6}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Runs one scenario on the current rayon pool.
pub fn run_scenario(s: &Scenario) -> Result<Vec<SimulationRow>> {
    s.validate()?;
    let counts = (0..s.runs)
        .into_par_iter()
        .map(|run| {
            rejections_for_run(s, run)
                .map(|rej| rej.into_iter().map(usize::from).collect::<Vec<_>>())
        })
        .try_reduce(
            || vec![0usize; s.tests.len()],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                Ok(a)
            },
        )?;
    Ok(s.tests
        .iter()
        .zip(counts)
        .map(|(spec, rejections)| {
            let rate = rejections as f64 / s.runs as f64;
            SimulationRow {
                label: s.label.clone(),
                test: spec.short_name(),
                spec: *spec,
                null: s.is_null(),
                runs: s.runs,
                rejections,
                rate,
                se: (rate * (1.0 - rate) / s.runs as f64).sqrt(),
            }
        })
        .collect())
}

/// Runs all scenarios on a pool of `parallelism` threads. The result does not
/// depend on `parallelism`.
pub fn run_study(scenarios: &[Scenario], parallelism: usize) -> Result<SimulationTable> {
    if scenarios.is_empty() {
        return Err(Error::InvalidInput("no scenarios to run".into()));
    }
    with_pool(parallelism, || {
        let mut table = SimulationTable::default();
        for s in scenarios {
            table.rows.extend(run_scenario(s)?);
        }
        Ok(table)
    })
}

pub(crate) fn with_pool<R: Send>(parallelism: usize, f: impl FnOnce() -> Result<R> + Send) -> Result<R> {
    if parallelism == 0 {
        return Err(Error::InvalidInput("parallelism must be >= 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| Error::Numeric(format!("cannot start worker pool: {e}")))?;
    pool.install(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(runs: usize) -> Scenario {
        Scenario {
            label: "H0".into(),
            group_sizes: vec![5, 5, 5],
            mu: vec![0.0; 3],
            sigma: vec![1.0; 3],
            runs,
            alpha: 0.05,
            seed: 11,
            tests: vec![TestSpec::new(TestFamily::AnovaF)],
            mvt_tolerance: 1e-3,
        }
    }

    #[test]
    fn single_run_has_zero_se() {
        let rows = run_scenario(&scenario(1)).unwrap();
        assert!(rows[0].rate == 0.0 || rows[0].rate == 1.0);
        assert_eq!(rows[0].se, 0.0);
    }

    #[test]
    fn datasets_are_reconstructible() {
        let s = scenario(3);
        let a = simulate_layout(&s, 2).unwrap();
        let b = simulate_layout(&s, 2).unwrap();
        assert_eq!(a, b);
        assert_ne!(simulate_layout(&s, 1).unwrap(), a);
        // Group streams do not depend on the other groups' sizes.
        let mut wider = s.clone();
        wider.group_sizes = vec![9, 5, 5];
        let c = simulate_layout(&wider, 2).unwrap();
        assert_eq!(c.responses()[1], a.responses()[1]);
        assert_eq!(c.responses()[0][..5], a.responses()[0][..]);
    }

    #[test]
    fn invalid_scenarios() {
        let mut s = scenario(10);
        s.sigma = vec![1.0, 0.0, 1.0];
        assert!(s.validate().is_err());
        let mut s = scenario(0);
        s.runs = 0;
        assert!(s.validate().is_err());
        let mut s = scenario(10);
        s.mu.pop();
        assert!(s.validate().is_err());
        assert!(run_study(&[], 1).is_err());
    }

    #[test]
    fn text_rendering_flags_null_rates() {
        let mut table = run_study(&[scenario(40)], 1).unwrap();
        table.rows[0].rate = 0.02;
        let text = table.render_text();
        assert!(text.contains("0.020<"), "{text}");
        table.rows[0].rate = 0.08;
        assert!(table.render_text().contains("0.080>"));
    }
}
