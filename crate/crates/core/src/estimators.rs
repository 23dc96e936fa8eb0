//! Group summaries and the variance estimators behind the contrast tests.
//!
//! In the cell-means model every observation in group `i` has leverage
//! `1/nᵢ`, so the heteroskedasticity-consistent covariance of the group means
//! is diagonal with closed-form entries:
//!
//! | flavor | `Var(x̄ᵢ)`                 |
//! |--------|---------------------------|
//! | HC0    | `(nᵢ-1) sᵢ² / nᵢ²`        |
//! | HC1    | HC0 · `N / (N-k)`          |
//! | HC2    | `sᵢ² / nᵢ`                |
//! | HC3    | `sᵢ² / (nᵢ-1)`            |

use serde::{Deserialize, Serialize};

use crate::contrasts::ContrastMatrix;
use crate::isotonic::{pava_increasing_into, pava_fitted};
use crate::{Direction, Error, Result};

/// Observations of a one-way layout, groups in dose order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneWayLayout {
    levels: Vec<String>,
    responses: Vec<Vec<f64>>,
}

impl OneWayLayout {
    pub fn new(levels: Vec<String>, responses: Vec<Vec<f64>>) -> Result<Self> {
        if levels.len() != responses.len() {
            return Err(Error::InvalidInput(format!(
                "{} level labels for {} groups",
                levels.len(),
                responses.len()
            )));
        }
        if responses.len() < 2 {
            return Err(Error::InvalidDesign(format!(
                "a one-way layout needs at least two groups, got {}",
                responses.len()
            )));
        }
        for (label, group) in levels.iter().zip(&responses) {
            if group.len() < 2 {
                return Err(Error::InvalidDesign(format!(
                    "group {label} has {} observation(s); at least 2 are needed",
                    group.len()
                )));
            }
            if group.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "group {label} contains a non-finite response"
                )));
            }
        }
        Ok(Self { levels, responses })
    }

    /// Groups labelled `1, 2, ...`.
    pub fn from_groups(responses: Vec<Vec<f64>>) -> Result<Self> {
        let levels = (1..=responses.len()).map(|i| i.to_string()).collect();
        Self::new(levels, responses)
    }

    pub fn levels(&self) -> &[String] {
        &self.levels
    }

    pub fn responses(&self) -> &[Vec<f64>] {
        &self.responses
    }

    pub fn n_groups(&self) -> usize {
        self.responses.len()
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        self.responses.iter().map(Vec::len).collect()
    }

    pub fn total(&self) -> usize {
        self.responses.iter().map(Vec::len).sum()
    }

    pub fn is_balanced(&self) -> bool {
        let n = self.responses[0].len();
        self.responses.iter().all(|g| g.len() == n)
    }

    /// Applies `x -> a + b x` to every response.
    pub fn affine(&self, a: f64, b: f64) -> Self {
        Self {
            levels: self.levels.clone(),
            responses: self
                .responses
                .iter()
                .map(|g| g.iter().map(|x| a + b * x).collect())
                .collect(),
        }
    }

    pub fn negated(&self) -> Self {
        self.affine(0.0, -1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum VarianceMode {
    #[default]
    Pooled,
    Sandwich,
}

/// Heteroskedasticity-consistent flavor used in [`VarianceMode::Sandwich`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum HcKind {
    Hc0,
    Hc1,
    Hc2,
    #[default]
    Hc3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Estimand {
    #[default]
    ArithmeticMeans,
    PavaMeans,
}

/// Denominator of the contrast statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Studentization {
    /// `sqrt(c' V c)` with `V` the estimated covariance of the means.
    #[default]
    Full,
    /// The pooled `S` alone, without the `sqrt(Σ c²/n)` factor.
    SigmaOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupEstimates {
    pub group_sizes: Vec<usize>,
    pub means: Vec<f64>,
    /// `sᵢ²` with denominator `nᵢ - 1`.
    pub group_variances: Vec<f64>,
    pub pooled_s2: f64,
    pub df: u32,
    pub grand_mean: f64,
    /// Diagonal of the estimated covariance of the group means.
    pub mean_variances: Vec<f64>,
    pub variance_mode: VarianceMode,
    pub hc: HcKind,
}

impl GroupEstimates {
    /// `c' V c` for one contrast row.
    pub fn contrast_variance(&self, row: &[f64]) -> f64 {
        row.iter()
            .zip(&self.mean_variances)
            .map(|(c, v)| c * c * v)
            .sum()
    }
}

/// Summaries with the default HC3 flavor for sandwich mode.
pub fn summarize(layout: &OneWayLayout, variance_mode: VarianceMode) -> Result<GroupEstimates> {
    summarize_with(layout, variance_mode, HcKind::default())
}

pub fn summarize_with(
    layout: &OneWayLayout,
    variance_mode: VarianceMode,
    hc: HcKind,
) -> Result<GroupEstimates> {
    let k = layout.n_groups();
    let group_sizes = layout.group_sizes();
    let total = layout.total();
    let mut means = Vec::with_capacity(k);
    let mut group_variances = Vec::with_capacity(k);
    let mut ss_within = 0.0;
    for g in layout.responses() {
        let n = g.len() as f64;
        let mean = g.iter().sum::<f64>() / n;
        let ss: f64 = g.iter().map(|x| (x - mean) * (x - mean)).sum();
        means.push(mean);
        group_variances.push(ss / (n - 1.0));
        ss_within += ss;
    }
    let df = total - k;
    let pooled_s2 = ss_within / df as f64;
    if !(pooled_s2 > 0.0) {
        return Err(Error::DegenerateVariance(
            "all groups are constant; the pooled variance is zero".into(),
        ));
    }
    let grand_mean = means
        .iter()
        .zip(&group_sizes)
        .map(|(m, &n)| m * n as f64)
        .sum::<f64>()
        / total as f64;

    let mean_variances = match variance_mode {
        VarianceMode::Pooled => group_sizes
            .iter()
            .map(|&n| pooled_s2 / n as f64)
            .collect(),
        VarianceMode::Sandwich => {
            if let Some(i) = group_variances.iter().position(|v| !(*v > 0.0)) {
                return Err(Error::DegenerateVariance(format!(
                    "group {} has zero variance; the sandwich estimate is singular",
                    layout.levels()[i]
                )));
            }
            let inflation = total as f64 / df as f64;
            group_sizes
                .iter()
                .zip(&group_variances)
                .map(|(&n, &s2)| {
                    let n = n as f64;
                    match hc {
                        HcKind::Hc0 => (n - 1.0) * s2 / (n * n),
                        HcKind::Hc1 => inflation * (n - 1.0) * s2 / (n * n),
                        HcKind::Hc2 => s2 / n,
                        HcKind::Hc3 => s2 / (n - 1.0),
                    }
                })
                .collect()
        }
    };

    Ok(GroupEstimates {
        group_sizes,
        means,
        group_variances,
        pooled_s2,
        df: df as u32,
        grand_mean,
        mean_variances,
        variance_mode,
        hc,
    })
}

/// Estimated group means of the requested kind; PAVA always uses `nᵢ` weights.
pub fn estimated_means(
    est: &GroupEstimates,
    estimand: Estimand,
    direction: Direction,
) -> Result<Vec<f64>> {
    match estimand {
        Estimand::ArithmeticMeans => Ok(est.means.clone()),
        Estimand::PavaMeans => {
            let w: Vec<f64> = est.group_sizes.iter().map(|&n| n as f64).collect();
            pava_fitted(&est.means, &w, direction)
        }
    }
}

/// Studentized contrast statistics `c_h'm / sqrt(c_h' V c_h)`.
pub fn contrast_statistics(
    est: &GroupEstimates,
    cm: &ContrastMatrix,
    estimand: Estimand,
    direction: Direction,
) -> Result<Vec<f64>> {
    contrast_statistics_with(est, cm, estimand, direction, Studentization::Full)
}

pub fn contrast_statistics_with(
    est: &GroupEstimates,
    cm: &ContrastMatrix,
    estimand: Estimand,
    direction: Direction,
    studentization: Studentization,
) -> Result<Vec<f64>> {
    if cm.n_groups() != est.means.len() {
        return Err(Error::InvalidInput(format!(
            "contrast matrix has {} columns but the layout has {} groups",
            cm.n_groups(),
            est.means.len()
        )));
    }
    let m = estimated_means(est, estimand, direction)?;
    Ok(studentize(est, cm, &m, studentization))
}

pub(crate) fn studentize(
    est: &GroupEstimates,
    cm: &ContrastMatrix,
    m: &[f64],
    studentization: Studentization,
) -> Vec<f64> {
    let s = est.pooled_s2.sqrt();
    cm.rows()
        .iter()
        .map(|row| {
            let num: f64 = row.iter().zip(m).map(|(c, x)| c * x).sum();
            let den = match studentization {
                Studentization::Full => est.contrast_variance(row).sqrt(),
                Studentization::SigmaOnly => s,
            };
            num / den
        })
        .collect()
}

/// Increasing PAVA of the means with `nᵢ` weights, without validation.
pub(crate) fn pava_means_increasing(est: &GroupEstimates, out: &mut Vec<f64>) {
    let w: Vec<f64> = est.group_sizes.iter().map(|&n| n as f64).collect();
    pava_increasing_into(&est.means, &w, out);
}
