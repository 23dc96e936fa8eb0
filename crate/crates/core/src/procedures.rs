//! The hypothesis tests: ANOVA F, grand-mean and Williams-type maximum
//! contrast tests (optionally on PAVA means, optionally sandwich-studentized),
//! and the permutation version of Bartholomew's E̅²ₖ.
//!
//! Contrast tests reference the maximum statistic against the multivariate t
//! with the contrast correlation and `N - k` degrees of freedom. Each contrast
//! gets the adjusted p-value `1 - P(max T <= t_h)` (two-sided: with `|T|` and
//! `|t_h|`) and the global p-value is the minimum of these.
//!
//! The one-sided PAVA test uses `1 - P(max T <= |t_h|)`. The direction is
//! already imposed by the isotonic fit, and a low group falling below the
//! grand mean is as much evidence of the trend as a high group rising above
//! it, so both ends of the fit enter through `|t_h|`.
//!
//! A decreasing alternative is handled by negating the responses and testing
//! for an increase; statistics and intervals are negated back in the report.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::contrasts::{
    contrast_correlation, contrast_correlation_weighted, grand_mean_contrasts, williams_contrasts,
    ContrastMatrix, CorrelationMatrix,
};
use crate::dist::{f_sf, mvt_equicoordinate_quantile, mvt_rectangle, MvtOptions, MvtProblem, Sides};
use crate::estimators::{
    pava_means_increasing, studentize, summarize_with, Estimand, GroupEstimates, HcKind,
    OneWayLayout, Studentization, VarianceMode,
};
use crate::isotonic::pava_increasing_into;
use crate::{Direction, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TestFamily {
    AnovaF,
    GrandMeanMCT,
    GrandMeanMCTPava,
    WilliamsMCT,
    /// Arithmetic-mean contrast test with user-supplied coefficients.
    CustomMCT,
    BartholomewPermutation,
}

impl TestFamily {
    pub fn is_contrast_test(self) -> bool {
        matches!(
            self,
            TestFamily::GrandMeanMCT
                | TestFamily::GrandMeanMCTPava
                | TestFamily::WilliamsMCT
                | TestFamily::CustomMCT
        )
    }

    pub fn estimand(self) -> Option<Estimand> {
        match self {
            TestFamily::GrandMeanMCTPava => Some(Estimand::PavaMeans),
            f if f.is_contrast_test() => Some(Estimand::ArithmeticMeans),
            _ => None,
        }
    }
}

fn default_alpha() -> f64 {
    0.05
}

fn default_permutations() -> usize {
    10_000
}

/// Configuration of one test. `AnovaF` ignores `sides` and `direction`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestSpec {
    pub family: TestFamily,
    #[serde(default)]
    pub sides: Sides,
    #[serde(default)]
    pub variance_mode: VarianceMode,
    #[serde(default)]
    pub direction: Direction,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_permutations")]
    pub permutations: usize,
    #[serde(default)]
    pub hc: HcKind,
    #[serde(default)]
    pub studentization: Studentization,
}

impl TestSpec {
    pub fn new(family: TestFamily) -> Self {
        Self {
            family,
            sides: Sides::OneSided,
            variance_mode: VarianceMode::Pooled,
            direction: Direction::Increasing,
            alpha: default_alpha(),
            permutations: default_permutations(),
            hc: HcKind::default(),
            studentization: Studentization::Full,
        }
    }

    pub fn sides(mut self, sides: Sides) -> Self {
        self.sides = sides;
        self
    }

    pub fn variance(mut self, mode: VarianceMode) -> Self {
        self.variance_mode = mode;
        self
    }

    pub fn direction(mut self, direction: Direction) -> Self {
        self.direction = direction;
        self
    }

    pub fn alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn permutations(mut self, permutations: usize) -> Self {
        self.permutations = permutations;
        self
    }

    pub fn hc(mut self, hc: HcKind) -> Self {
        self.hc = hc;
        self
    }

    pub fn studentization(mut self, studentization: Studentization) -> Self {
        self.studentization = studentization;
        self
    }

    /// Column label used in simulation tables, e.g. `MCT1`, `heMCT2`,
    /// `WIho1`, `MCTEhe1`.
    pub fn short_name(&self) -> String {
        let side = match self.sides {
            Sides::OneSided => "1",
            Sides::TwoSided => "2",
        };
        let var = match self.variance_mode {
            VarianceMode::Pooled => "ho",
            VarianceMode::Sandwich => "he",
        };
        match self.family {
            TestFamily::AnovaF => "AOV".into(),
            TestFamily::BartholomewPermutation => "E2".into(),
            TestFamily::GrandMeanMCT => match self.variance_mode {
                VarianceMode::Pooled => format!("MCT{side}"),
                VarianceMode::Sandwich => format!("heMCT{side}"),
            },
            TestFamily::WilliamsMCT => format!("WI{var}{side}"),
            TestFamily::GrandMeanMCTPava => format!("MCTE{var}{side}"),
            TestFamily::CustomMCT => format!("CUST{var}{side}"),
        }
    }

    /// Inverse of [`TestSpec::short_name`] with default settings otherwise.
    pub fn from_short_name(name: &str) -> Option<Self> {
        standard_grid().into_iter().find(|s| s.short_name() == name)
    }

    /// Value compared against the one- or two-sided maximum.
    fn reference(&self, t: f64) -> f64 {
        match (self.sides, self.family) {
            (Sides::TwoSided, _) | (Sides::OneSided, TestFamily::GrandMeanMCTPava) => t.abs(),
            _ => t,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidInput(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.family == TestFamily::BartholomewPermutation && self.permutations == 0 {
            return Err(Error::InvalidInput("at least one permutation is needed".into()));
        }
        Ok(())
    }
}

/// The fourteen-test comparison grid in table column order.
pub fn standard_grid() -> Vec<TestSpec> {
    use Sides::*;
    use TestFamily::*;
    use VarianceMode::*;
    let mut grid = vec![TestSpec::new(AnovaF)];
    for (sides, mode) in [
        (TwoSided, Pooled),
        (TwoSided, Sandwich),
        (OneSided, Pooled),
        (OneSided, Sandwich),
    ] {
        grid.push(TestSpec::new(GrandMeanMCT).sides(sides).variance(mode));
    }
    grid.push(TestSpec::new(BartholomewPermutation));
    for (sides, mode) in [
        (TwoSided, Pooled),
        (TwoSided, Sandwich),
        (OneSided, Pooled),
        (OneSided, Sandwich),
    ] {
        grid.push(TestSpec::new(WilliamsMCT).sides(sides).variance(mode));
    }
    for (sides, mode) in [
        (TwoSided, Sandwich),
        (TwoSided, Pooled),
        (OneSided, Sandwich),
        (OneSided, Pooled),
    ] {
        grid.push(TestSpec::new(GrandMeanMCTPava).sides(sides).variance(mode));
    }
    grid
}

/// Integrator and resampling settings shared by all tests of one analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub mvt: MvtOptions,
    pub perm_seed: u64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            mvt: MvtOptions::default(),
            perm_seed: 0x7065_726d_7574_6531,
        }
    }
}

/// A simultaneous confidence bound for one contrast; `None` is unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub estimate: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

impl Interval {
    pub fn excludes_zero(&self) -> bool {
        self.lower.is_some_and(|l| l > 0.0) || self.upper.is_some_and(|u| u < 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub method: TestSpec,
    pub name: String,
    /// Row labels of the contrasts; empty for the global tests.
    pub contrast_labels: Vec<String>,
    pub coefficients: Vec<Vec<f64>>,
    /// One per contrast, or a single F or E̅² value.
    pub statistics: Vec<f64>,
    pub adjusted_p: Vec<f64>,
    pub global_p: f64,
    pub confidence_intervals: Option<Vec<Interval>>,
    pub critical_value: Option<f64>,
    /// Denominator degrees of freedom `N - k`.
    pub df: u32,
    /// Numerator degrees of freedom of the F test.
    pub df_numerator: Option<u32>,
    pub mvt_error_bound: f64,
    pub mvt_accuracy_warning: bool,
    pub reject: bool,
}

fn global_report(
    spec: &TestSpec,
    statistic: f64,
    p: f64,
    df: u32,
    df_numerator: Option<u32>,
) -> TestReport {
    TestReport {
        method: *spec,
        name: spec.short_name(),
        contrast_labels: Vec::new(),
        coefficients: Vec::new(),
        statistics: vec![statistic],
        adjusted_p: vec![p],
        global_p: p,
        confidence_intervals: None,
        critical_value: None,
        df,
        df_numerator,
        mvt_error_bound: 0.0,
        mvt_accuracy_warning: false,
        reject: p <= spec.alpha,
    }
}

/// Runs any test of the grid (custom contrasts go through
/// [`mct_with_contrasts`]).
pub fn run_test(layout: &OneWayLayout, spec: &TestSpec, opts: &EvalOptions) -> Result<TestReport> {
    match spec.family {
        TestFamily::AnovaF => {
            let mut r = anova_f(layout)?;
            r.method = *spec;
            r.reject = r.global_p <= spec.alpha;
            Ok(r)
        }
        TestFamily::BartholomewPermutation => {
            spec.validate()?;
            let mut r =
                bartholomew_permutation(layout, spec.direction, spec.permutations, opts.perm_seed)?;
            r.method = *spec;
            r.reject = r.global_p <= spec.alpha;
            Ok(r)
        }
        TestFamily::CustomMCT => Err(Error::InvalidInput(
            "custom contrast tests need a contrast matrix".into(),
        )),
        _ => mct(layout, spec, opts),
    }
}

/// `F = [Σ nᵢ (x̄ᵢ - x̄)² / (k-1)] / S²` against `F(k-1, N-k)`.
pub fn anova_f(layout: &OneWayLayout) -> Result<TestReport> {
    let est = summarize_with(layout, VarianceMode::Pooled, HcKind::default())?;
    let k = est.means.len();
    let between: f64 = est
        .means
        .iter()
        .zip(&est.group_sizes)
        .map(|(m, &n)| n as f64 * (m - est.grand_mean).powi(2))
        .sum();
    let f = between / (k - 1) as f64 / est.pooled_s2;
    let p = f_sf(f, (k - 1) as u32, est.df)?;
    let spec = TestSpec::new(TestFamily::AnovaF);
    Ok(global_report(&spec, f, p, est.df, Some((k - 1) as u32)))
}

fn family_contrasts(family: TestFamily, sizes: &[usize]) -> Result<ContrastMatrix> {
    match family {
        TestFamily::GrandMeanMCT | TestFamily::GrandMeanMCTPava => grand_mean_contrasts(sizes),
        TestFamily::WilliamsMCT => williams_contrasts(sizes),
        other => Err(Error::InvalidInput(format!(
            "{other:?} is not a built-in contrast family"
        ))),
    }
}

/// Maximum contrast test for the grand-mean, PAVA grand-mean and Williams
/// families.
pub fn mct(layout: &OneWayLayout, spec: &TestSpec, opts: &EvalOptions) -> Result<TestReport> {
    let cm = family_contrasts(spec.family, &layout.group_sizes())?;
    mct_inner(layout, spec, &cm, opts)
}

/// Maximum contrast test on arithmetic means with caller-supplied contrasts.
pub fn mct_with_contrasts(
    layout: &OneWayLayout,
    spec: &TestSpec,
    cm: &ContrastMatrix,
    opts: &EvalOptions,
) -> Result<TestReport> {
    if cm.group_sizes() != layout.group_sizes().as_slice() {
        return Err(Error::InvalidInput(format!(
            "contrast matrix built for group sizes {:?}, layout has {:?}",
            cm.group_sizes(),
            layout.group_sizes()
        )));
    }
    let spec = TestSpec {
        family: TestFamily::CustomMCT,
        ..*spec
    };
    mct_inner(layout, &spec, cm, opts)
}

struct Prepared {
    est: GroupEstimates,
    /// Statistics on the increasing scale (data negated for a decreasing
    /// alternative).
    statistics: Vec<f64>,
    estimates: Vec<f64>,
    correlation: CorrelationMatrix,
}

fn prepare(layout: &OneWayLayout, spec: &TestSpec, cm: &ContrastMatrix) -> Result<Prepared> {
    spec.validate()?;
    let oriented;
    let layout = match spec.direction {
        Direction::Increasing => layout,
        Direction::Decreasing => {
            oriented = layout.negated();
            &oriented
        }
    };
    let est = summarize_with(layout, spec.variance_mode, spec.hc)?;
    if cm.n_groups() != est.means.len() {
        return Err(Error::InvalidInput(format!(
            "contrast matrix has {} columns but the layout has {} groups",
            cm.n_groups(),
            est.means.len()
        )));
    }
    let means = match spec.family.estimand() {
        Some(Estimand::PavaMeans) => {
            let mut out = Vec::with_capacity(est.means.len());
            pava_means_increasing(&est, &mut out);
            out
        }
        _ => est.means.clone(),
    };
    let statistics = studentize(&est, cm, &means, spec.studentization);
    let estimates = cm
        .rows()
        .iter()
        .map(|row| row.iter().zip(&means).map(|(c, m)| c * m).sum())
        .collect();
    let correlation = match spec.variance_mode {
        VarianceMode::Pooled => contrast_correlation(cm),
        VarianceMode::Sandwich => contrast_correlation_weighted(cm, &est.mean_variances)?,
    };
    Ok(Prepared {
        est,
        statistics,
        estimates,
        correlation,
    })
}

/// `P(max T <= t)` (one-sided) or `P(max |T| <= |t|)` (two-sided).
fn max_cdf(
    t: f64,
    sides: Sides,
    correlation: &CorrelationMatrix,
    df: u32,
    mvt: &MvtOptions,
) -> Result<(f64, f64, bool)> {
    let dim = correlation.dim();
    let (lower, upper) = match sides {
        Sides::OneSided => (vec![f64::NEG_INFINITY; dim], vec![t; dim]),
        Sides::TwoSided => {
            let a = t.abs();
            if a == 0.0 {
                return Ok((0.0, 0.0, false));
            }
            (vec![-a; dim], vec![a; dim])
        }
    };
    let est = mvt_rectangle(
        &MvtProblem::new(lower, upper, correlation.clone(), df).with_options(*mvt),
    )?;
    Ok((est.value, est.error_bound, est.accuracy_warning))
}

fn mct_inner(
    layout: &OneWayLayout,
    spec: &TestSpec,
    cm: &ContrastMatrix,
    opts: &EvalOptions,
) -> Result<TestReport> {
    let prep = prepare(layout, spec, cm)?;
    let df = prep.est.df;
    let mut adjusted_p = Vec::with_capacity(prep.statistics.len());
    let mut error_bound: f64 = 0.0;
    let mut warning = false;
    let mut seen: Vec<(f64, f64)> = Vec::new();
    for &t in &prep.statistics {
        let key = spec.reference(t);
        let p = if let Some(&(_, p)) = seen.iter().find(|(k, _)| *k == key) {
            p
        } else {
            let (cdf, err, warn) = max_cdf(key, spec.sides, &prep.correlation, df, &opts.mvt)?;
            error_bound = error_bound.max(err);
            warning |= warn;
            let p = (1.0 - cdf).clamp(0.0, 1.0);
            seen.push((key, p));
            p
        };
        adjusted_p.push(p);
    }
    let global_p = adjusted_p.iter().copied().fold(f64::INFINITY, f64::min);

    let mut critical_value = None;
    let mut confidence_intervals = None;
    if spec.family.estimand() == Some(Estimand::ArithmeticMeans)
        && spec.studentization == Studentization::Full
    {
        let q = mvt_equicoordinate_quantile(
            1.0 - spec.alpha,
            &prep.correlation,
            df,
            spec.sides,
            &opts.mvt,
        )?;
        critical_value = Some(q);
        let intervals: Vec<Interval> = cm
            .rows()
            .iter()
            .zip(&prep.estimates)
            .map(|(row, &estimate)| {
                let half = q * prep.est.contrast_variance(row).sqrt();
                let upper = match spec.sides {
                    Sides::OneSided => None,
                    Sides::TwoSided => Some(estimate + half),
                };
                Interval {
                    estimate,
                    lower: Some(estimate - half),
                    upper,
                }
            })
            .collect();
        confidence_intervals = Some(intervals);
    }

    let sign = spec.direction.sign();
    let statistics = prep.statistics.iter().map(|t| sign * t).collect();
    if spec.direction == Direction::Decreasing {
        if let Some(cis) = confidence_intervals.as_mut() {
            for ci in cis.iter_mut() {
                *ci = Interval {
                    estimate: -ci.estimate,
                    lower: ci.upper.map(|u| -u),
                    upper: ci.lower.map(|l| -l),
                };
            }
        }
    }

    Ok(TestReport {
        method: *spec,
        name: spec.short_name(),
        contrast_labels: cm.row_labels(layout.levels()),
        coefficients: cm.rows().to_vec(),
        statistics,
        adjusted_p,
        global_p,
        confidence_intervals,
        critical_value,
        df,
        df_numerator: None,
        mvt_error_bound: error_bound,
        mvt_accuracy_warning: warning,
        reject: global_p <= spec.alpha,
    })
}

/// Global p-value alone. For contrast tests only the adjusted p-value of the
/// largest statistic is integrated, which is the minimum in exact arithmetic;
/// the simulation harness uses this to avoid ξ integrations per test.
pub fn global_p_value(layout: &OneWayLayout, spec: &TestSpec, opts: &EvalOptions) -> Result<f64> {
    match spec.family {
        TestFamily::AnovaF | TestFamily::BartholomewPermutation | TestFamily::CustomMCT => {
            Ok(run_test(layout, spec, opts)?.global_p)
        }
        _ => {
            let cm = family_contrasts(spec.family, &layout.group_sizes())?;
            let prep = prepare(layout, spec, &cm)?;
            let t_max = prep
                .statistics
                .iter()
                .map(|&t| spec.reference(t))
                .fold(f64::NEG_INFINITY, f64::max);
            let (cdf, _, _) = max_cdf(t_max, spec.sides, &prep.correlation, prep.est.df, &opts.mvt)?;
            Ok((1.0 - cdf).clamp(0.0, 1.0))
        }
    }
}

/// The original balanced-design Williams statistic
/// `(ỹ_k - ȳ_0) / sqrt(2 S² / n)`, with `ỹ_k` the top value of the isotonic
/// fit to the dose-group means (control excluded). Positive values point in
/// the requested direction's usual orientation for an increase; for a
/// decreasing alternative the antitonic top value is used and the sign
/// follows the data.
pub fn williams_statistic_classic(layout: &OneWayLayout, direction: Direction) -> Result<f64> {
    if !layout.is_balanced() {
        return Err(Error::UnsupportedDesign(
            "the classic Williams statistic is defined for balanced designs only".into(),
        ));
    }
    let sign = direction.sign();
    let oriented = layout.affine(0.0, sign);
    let est = summarize_with(&oriented, VarianceMode::Pooled, HcKind::default())?;
    let n = est.group_sizes[0] as f64;
    let doses = &est.means[1..];
    let weights = vec![n; doses.len()];
    let mut fit = Vec::with_capacity(doses.len());
    pava_increasing_into(doses, &weights, &mut fit);
    let top = *fit.last().expect("at least one dose group");
    let t = (top - est.means[0]) / (2.0 * est.pooled_s2 / n).sqrt();
    Ok(sign * t)
}

/// `E̅² = Σ nᵢ (μ̂ᵢ - x̄)² / Σᵢⱼ (xᵢⱼ - x̄)²` with isotonic `μ̂`.
pub fn bartholomew_statistic(layout: &OneWayLayout, direction: Direction) -> Result<f64> {
    let work = BartholomewWork::new(layout, direction)?;
    Ok(work.between(&work.pooled) / work.total_ss)
}

struct BartholomewWork {
    pooled: Vec<f64>,
    sizes: Vec<usize>,
    weights: Vec<f64>,
    grand_mean: f64,
    total_ss: f64,
}

impl BartholomewWork {
    fn new(layout: &OneWayLayout, direction: Direction) -> Result<Self> {
        let sign = direction.sign();
        let pooled: Vec<f64> = layout
            .responses()
            .iter()
            .flatten()
            .map(|x| sign * x)
            .collect();
        let sizes = layout.group_sizes();
        let weights = sizes.iter().map(|&n| n as f64).collect();
        let grand_mean = pooled.iter().sum::<f64>() / pooled.len() as f64;
        let total_ss: f64 = pooled.iter().map(|x| (x - grand_mean).powi(2)).sum();
        if !(total_ss > 0.0) {
            return Err(Error::DegenerateVariance(
                "all responses are identical; E-bar-squared is undefined".into(),
            ));
        }
        Ok(Self {
            pooled,
            sizes,
            weights,
            grand_mean,
            total_ss,
        })
    }

    fn between(&self, data: &[f64]) -> f64 {
        let mut means = Vec::with_capacity(self.sizes.len());
        let mut start = 0;
        for &n in &self.sizes {
            means.push(data[start..start + n].iter().sum::<f64>() / n as f64);
            start += n;
        }
        let mut fit = Vec::with_capacity(means.len());
        pava_increasing_into(&means, &self.weights, &mut fit);
        fit.iter()
            .zip(&self.weights)
            .map(|(m, w)| w * (m - self.grand_mean).powi(2))
            .sum()
    }
}

/// Permutation test of E̅²: observations are reassigned to groups uniformly
/// at random and `p = (1 + #{E̅²* >= E̅²}) / (B + 1)`.
pub fn bartholomew_permutation(
    layout: &OneWayLayout,
    direction: Direction,
    permutations: usize,
    seed: u64,
) -> Result<TestReport> {
    if permutations == 0 {
        return Err(Error::InvalidInput("at least one permutation is needed".into()));
    }
    let work = BartholomewWork::new(layout, direction)?;
    let observed = work.between(&work.pooled);
    let threshold = observed - 1e-10 * observed.abs().max(work.total_ss * 1e-6);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = work.pooled.clone();
    let mut exceed = 0usize;
    for _ in 0..permutations {
        data.shuffle(&mut rng);
        if work.between(&data) >= threshold {
            exceed += 1;
        }
    }
    let p = (1 + exceed) as f64 / (permutations + 1) as f64;
    let spec = TestSpec::new(TestFamily::BartholomewPermutation)
        .direction(direction)
        .permutations(permutations);
    let df = (layout.total() - layout.n_groups()) as u32;
    Ok(global_report(&spec, observed / work.total_ss, p, df, None))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout(groups: Vec<Vec<f64>>) -> OneWayLayout {
        OneWayLayout::from_groups(groups).unwrap()
    }

    fn noisy_groups(means: &[f64], n: usize) -> OneWayLayout {
        // Deterministic zero-mean pattern, identical in every group.
        let pattern: Vec<f64> = (0..n).map(|j| ((j * 7 % n) as f64 - (n as f64 - 1.0) / 2.0) * 0.3).collect();
        layout(
            means
                .iter()
                .map(|m| pattern.iter().map(|e| m + e).collect())
                .collect(),
        )
    }

    #[test]
    fn anova_zero_when_groups_repeat_pattern() {
        let r = anova_f(&layout(vec![vec![1.0, 2.0, 3.0]; 4])).unwrap();
        assert_eq!(r.statistics[0], 0.0);
        assert_eq!(r.global_p, 1.0);
        assert_eq!(r.df, 8);
        assert_eq!(r.df_numerator, Some(3));
    }

    #[test]
    fn anova_two_groups_is_squared_t() {
        let a = vec![1.2, 0.4, 2.2, 1.9, 0.7];
        let b = vec![2.5, 3.1, 1.8, 2.9, 3.6, 2.2];
        let r = anova_f(&layout(vec![a.clone(), b.clone()])).unwrap();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let ss = |v: &[f64]| {
            let m = mean(v);
            v.iter().map(|x| (x - m).powi(2)).sum::<f64>()
        };
        let s2 = (ss(&a) + ss(&b)) / 9.0;
        let t = (mean(&b) - mean(&a)) / (s2 * (1.0 / 5.0 + 1.0 / 6.0)).sqrt();
        assert!((r.statistics[0] - t * t).abs() < 1e-10);
        let p_t = 2.0 * crate::dist::t_sf(t.abs(), 9).unwrap();
        assert!((r.global_p - p_t).abs() < 1e-10);
    }

    #[test]
    fn anova_degenerate() {
        let r = anova_f(&layout(vec![vec![2.0, 2.0], vec![2.0, 2.0]]));
        assert!(matches!(r, Err(Error::DegenerateVariance(_))));
    }

    #[test]
    fn classic_williams_examples() {
        let equal = noisy_groups(&[1.0, 1.0, 1.0], 6);
        assert!(williams_statistic_classic(&equal, Direction::Increasing).unwrap().abs() < 1e-12);

        // Means (0, 1, 2, 3) with S² = 1 and n = 10.
        let e: Vec<f64> = (0..10).map(|j| if j % 2 == 0 { -1.0 } else { 1.0 } * 0.9486832980505138).collect();
        let l = layout((0..4).map(|m| e.iter().map(|x| x + m as f64).collect()).collect());
        let t = williams_statistic_classic(&l, Direction::Increasing).unwrap();
        assert!((t - 3.0 / 0.2f64.sqrt()).abs() < 1e-10, "{t}");

        let two = layout(vec![vec![0.0, 2.0, 1.0], vec![3.0, 1.0, 2.0]]);
        let t = williams_statistic_classic(&two, Direction::Increasing).unwrap();
        assert!((t - 1.0 / (2.0f64 * 1.0 / 3.0).sqrt()).abs() < 1e-12);

        let unbalanced = layout(vec![vec![0.0, 1.0], vec![1.0, 2.0, 3.0]]);
        assert!(matches!(
            williams_statistic_classic(&unbalanced, Direction::Increasing),
            Err(Error::UnsupportedDesign(_))
        ));
    }

    #[test]
    fn permutation_extremes() {
        let flat = layout(vec![vec![1.0, 2.0, 3.0]; 4]);
        let r = bartholomew_permutation(&flat, Direction::Increasing, 199, 3).unwrap();
        assert_eq!(r.global_p, 1.0);

        let sep = noisy_groups(&[0.0, 10.0, 20.0, 30.0], 5);
        let r = bartholomew_permutation(&sep, Direction::Increasing, 199, 3).unwrap();
        assert_eq!(r.global_p, 1.0 / 200.0);
        assert!(r.statistics[0] > 0.99);

        let same = layout(vec![vec![4.0, 4.0]; 3]);
        assert!(matches!(
            bartholomew_permutation(&same, Direction::Increasing, 10, 1),
            Err(Error::DegenerateVariance(_))
        ));
    }

    #[test]
    fn all_equal_means_flatten_mct() {
        let l = noisy_groups(&[2.0, 2.0, 2.0], 8);
        let spec = TestSpec::new(TestFamily::GrandMeanMCTPava);
        let r = mct(&l, &spec, &EvalOptions::default()).unwrap();
        assert!(r.statistics.iter().all(|t| t.abs() < 1e-12));
        // Balanced grand-mean statistics sum to zero: P(max T <= 0) = 0.
        assert!(r.global_p > 0.999, "{}", r.global_p);
        assert!(r.confidence_intervals.is_none());
    }

    #[test]
    fn grid_names() {
        let names: Vec<String> = standard_grid().iter().map(TestSpec::short_name).collect();
        assert_eq!(
            names,
            [
                "AOV", "MCT2", "heMCT2", "MCT1", "heMCT1", "E2", "WIho2", "WIhe2", "WIho1",
                "WIhe1", "MCTEhe2", "MCTEho2", "MCTEhe1", "MCTEho1"
            ]
        );
        assert_eq!(
            TestSpec::from_short_name("WIhe1").unwrap(),
            TestSpec::new(TestFamily::WilliamsMCT).variance(VarianceMode::Sandwich)
        );
    }

    #[test]
    fn decreasing_mirrors_increasing() {
        let l = noisy_groups(&[0.0, 0.4, 0.5, 1.5], 6);
        let opts = EvalOptions::default();
        for family in [TestFamily::GrandMeanMCT, TestFamily::WilliamsMCT, TestFamily::GrandMeanMCTPava] {
            let up = mct(&l, &TestSpec::new(family), &opts).unwrap();
            let down = mct(&l.negated(), &TestSpec::new(family).direction(Direction::Decreasing), &opts).unwrap();
            assert_eq!(up.adjusted_p, down.adjusted_p);
            for (a, b) in up.statistics.iter().zip(&down.statistics) {
                assert!((a + b).abs() < 1e-12);
            }
        }
    }
}
