//! Contrast coefficient matrices and the correlation they induce between
//! studentized contrast statistics.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const ROW_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ContrastKind {
    GrandMean,
    Williams,
    Custom,
}

/// A ξ×k matrix of contrast coefficients for a design with group sizes `nᵢ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastMatrix {
    coefficients: Vec<Vec<f64>>,
    kind: ContrastKind,
    group_sizes: Vec<usize>,
}

impl ContrastMatrix {
    /// Validates the contrast property (rows sum to zero, no zero rows).
    pub fn new(
        coefficients: Vec<Vec<f64>>,
        kind: ContrastKind,
        group_sizes: Vec<usize>,
    ) -> Result<Self> {
        let k = group_sizes.len();
        if k < 2 {
            return Err(Error::InvalidDesign(format!(
                "contrasts need at least two groups, got {k}"
            )));
        }
        if let Some(i) = group_sizes.iter().position(|&n| n == 0) {
            return Err(Error::InvalidDesign(format!("group {i} is empty")));
        }
        if coefficients.is_empty() {
            return Err(Error::InvalidInput("contrast matrix has no rows".into()));
        }
        for (h, row) in coefficients.iter().enumerate() {
            if row.len() != k {
                return Err(Error::InvalidInput(format!(
                    "contrast row {h} has {} entries, design has {k} groups",
                    row.len()
                )));
            }
            if row.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidInput(format!("contrast row {h} is not finite")));
            }
            if row.iter().all(|&c| c == 0.0) {
                return Err(Error::InvalidInput(format!("contrast row {h} is all zero")));
            }
            let sum: f64 = row.iter().sum();
            let scale = row.iter().map(|c| c.abs()).fold(0.0, f64::max);
            if sum.abs() > ROW_SUM_TOL * scale.max(1.0) {
                return Err(Error::InvalidInput(format!(
                    "contrast row {h} sums to {sum}, not zero"
                )));
            }
        }
        Ok(Self {
            coefficients,
            kind,
            group_sizes,
        })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.coefficients
    }

    pub fn kind(&self) -> ContrastKind {
        self.kind
    }

    pub fn group_sizes(&self) -> &[usize] {
        &self.group_sizes
    }

    /// Number of contrasts ξ.
    pub fn n_contrasts(&self) -> usize {
        self.coefficients.len()
    }

    /// Number of groups k.
    pub fn n_groups(&self) -> usize {
        self.group_sizes.len()
    }

    /// Human-readable row labels, e.g. `"B - mean"` or `"C,D - A"`.
    pub fn row_labels(&self, levels: &[String]) -> Vec<String> {
        let name = |i: usize| levels.get(i).cloned().unwrap_or_else(|| format!("g{}", i + 1));
        match self.kind {
            ContrastKind::GrandMean => (0..self.n_contrasts())
                .map(|h| format!("{} - mean", name(h)))
                .collect(),
            ContrastKind::Williams => {
                let k = self.n_groups();
                (1..k)
                    .map(|j| {
                        let top: Vec<String> = (k - j..k).map(name).collect();
                        format!("{} - {}", top.join(","), name(0))
                    })
                    .collect()
            }
            ContrastKind::Custom => (0..self.n_contrasts())
                .map(|h| format!("C{}", h + 1))
                .collect(),
        }
    }
}

fn check_sizes(group_sizes: &[usize]) -> Result<()> {
    if group_sizes.len() < 2 {
        return Err(Error::InvalidDesign(format!(
            "contrasts need at least two groups, got {}",
            group_sizes.len()
        )));
    }
    if let Some(i) = group_sizes.iter().position(|&n| n == 0) {
        return Err(Error::InvalidDesign(format!("group {i} is empty")));
    }
    Ok(())
}

/// Each group against the size-weighted grand mean.
///
/// Row `h` is `e_h - n/N`: the own coefficient is `1 - n_h/N` and every other
/// group gets `-n_j/N`. This is the negation (up to positive scale) of the
/// "others minus self" layout sometimes printed for the balanced case, chosen
/// so that an increasing profile yields positive statistics for the upper
/// groups.
pub fn grand_mean_contrasts(group_sizes: &[usize]) -> Result<ContrastMatrix> {
    check_sizes(group_sizes)?;
    let total: usize = group_sizes.iter().sum();
    let total = total as f64;
    let k = group_sizes.len();
    let rows = (0..k)
        .map(|h| {
            (0..k)
                .map(|j| {
                    let share = group_sizes[j] as f64 / total;
                    if j == h {
                        1.0 - share
                    } else {
                        -share
                    }
                })
                .collect()
        })
        .collect();
    ContrastMatrix::new(rows, ContrastKind::GrandMean, group_sizes.to_vec())
}

/// Control (first group) against size-weighted pools of the top `j` doses,
/// `j = 1..k-1`.
pub fn williams_contrasts(group_sizes: &[usize]) -> Result<ContrastMatrix> {
    check_sizes(group_sizes)?;
    let k = group_sizes.len();
    let rows = (1..k)
        .map(|j| {
            let top = k - j..k;
            let pooled: usize = group_sizes[top.clone()].iter().sum();
            let mut row = vec![0.0; k];
            row[0] = -1.0;
            for i in top {
                row[i] = group_sizes[i] as f64 / pooled as f64;
            }
            row
        })
        .collect();
    ContrastMatrix::new(rows, ContrastKind::Williams, group_sizes.to_vec())
}

/// Symmetric ξ×ξ correlation matrix, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    dim: usize,
    entries: Vec<f64>,
}

impl CorrelationMatrix {
    /// Checks shape, symmetry, unit diagonal and the [-1, 1] range.
    /// Positive semi-definiteness is checked later by the integrator's
    /// factorization.
    pub fn new(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(Error::InvalidInput(format!(
                "correlation matrix of dimension {dim} needs {} entries, got {}",
                dim * dim,
                entries.len()
            )));
        }
        for i in 0..dim {
            if (entries[i * dim + i] - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidInput(format!(
                    "correlation diagonal entry {i} is {}",
                    entries[i * dim + i]
                )));
            }
            for j in 0..i {
                let a = entries[i * dim + j];
                let b = entries[j * dim + i];
                if !a.is_finite() || (a - b).abs() > 1e-12 {
                    return Err(Error::InvalidInput(format!(
                        "correlation matrix is not symmetric at ({i}, {j})"
                    )));
                }
                if a.abs() > 1.0 + 1e-12 {
                    return Err(Error::InvalidInput(format!(
                        "correlation entry ({i}, {j}) = {a} outside [-1, 1]"
                    )));
                }
            }
        }
        Ok(Self { dim, entries })
    }

    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![0.0; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = 1.0;
        }
        Self { dim, entries }
    }

    /// Equicorrelated matrix with off-diagonal `rho`.
    pub fn exchangeable(dim: usize, rho: f64) -> Result<Self> {
        let mut entries = vec![rho; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = 1.0;
        }
        Self::new(dim, entries)
    }

    /// Builds from nested rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidInput("correlation matrix is not square".into()));
        }
        Self::new(dim, rows.iter().flatten().copied().collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.dim).map(|r| r.to_vec()).collect()
    }

    /// Simultaneous row/column permutation: entry `(i, j)` of the result is
    /// entry `(perm[i], perm[j])` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let d = self.dim;
        let mut entries = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                entries[i * d + j] = self.get(perm[i], perm[j]);
            }
        }
        Self::new(d, entries)
    }
}

/// Correlation of the contrast statistics under a common variance:
/// `R_hl = Σ c_hi c_li / nᵢ` normalized to unit diagonal.
pub fn contrast_correlation(cm: &ContrastMatrix) -> CorrelationMatrix {
    let inv_n: Vec<f64> = cm.group_sizes.iter().map(|&n| 1.0 / n as f64).collect();
    contrast_correlation_weighted(cm, &inv_n)
        .expect("group sizes of a valid contrast matrix are positive")
}

/// Correlation of the contrast statistics when the group means have
/// (diagonal) variances `mean_variances`, e.g. a sandwich estimate.
pub fn contrast_correlation_weighted(
    cm: &ContrastMatrix,
    mean_variances: &[f64],
) -> Result<CorrelationMatrix> {
    let k = cm.n_groups();
    if mean_variances.len() != k {
        return Err(Error::InvalidInput(format!(
            "{} variances for {k} groups",
            mean_variances.len()
        )));
    }
    if mean_variances.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::DegenerateVariance(
            "group mean variances must be positive".into(),
        ));
    }
    let rows = cm.rows();
    let xi = rows.len();
    let cov = |h: usize, l: usize| -> f64 {
        (0..k)
            .map(|i| rows[h][i] * rows[l][i] * mean_variances[i])
            .sum()
    };
    let sd: Vec<f64> = (0..xi).map(|h| cov(h, h).sqrt()).collect();
    let mut entries = vec![0.0; xi * xi];
    for h in 0..xi {
        entries[h * xi + h] = 1.0;
        for l in 0..h {
            let r = (cov(h, l) / (sd[h] * sd[l])).clamp(-1.0, 1.0);
            entries[h * xi + l] = r;
            entries[l * xi + h] = r;
        }
    }
    CorrelationMatrix::new(xi, entries)
}
