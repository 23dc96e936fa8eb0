//! Reference computations that share no code with the library: exhaustive
//! isotonic regression, quadrature of t densities, and a high-precision
//! normal distribution function.
#![allow(dead_code)]

use std::f64::consts::PI;

/// Isotonic (nondecreasing) least-squares fit by trying every contiguous
/// partition of `0..k` and keeping the best one with nondecreasing block means.
pub fn isotonic_by_partitions(values: &[f64], weights: &[f64]) -> (Vec<f64>, f64) {
    let k = values.len();
    let mut best: Option<(Vec<f64>, f64)> = None;
    for mask in 0u32..(1 << (k - 1)) {
        let mut fitted = vec![0.0; k];
        let mut start = 0;
        let mut last = f64::NEG_INFINITY;
        let mut feasible = true;
        for end in 1..=k {
            let cut = end == k || mask & (1 << (end - 1)) != 0;
            if !cut {
                continue;
            }
            let w: f64 = weights[start..end].iter().sum();
            let m: f64 = values[start..end]
                .iter()
                .zip(&weights[start..end])
                .map(|(v, w)| v * w)
                .sum::<f64>()
                / w;
            if m < last {
                feasible = false;
                break;
            }
            last = m;
            fitted[start..end].iter_mut().for_each(|f| *f = m);
            start = end;
        }
        if !feasible {
            continue;
        }
        let sse = weighted_sse(values, weights, &fitted);
        if best.as_ref().is_none_or(|(_, b)| sse < *b) {
            best = Some((fitted, sse));
        }
    }
    best.expect("the single-block partition is always feasible")
}

pub fn weighted_sse(values: &[f64], weights: &[f64], fitted: &[f64]) -> f64 {
    values
        .iter()
        .zip(weights)
        .zip(fitted)
        .map(|((v, w), f)| w * (v - f).powi(2))
        .sum()
}

/// Adaptive Simpson on `[a, b]`.
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn step(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let diff = left + right - whole;
        if depth == 0 || diff.abs() <= 15.0 * tol {
            left + right + diff / 15.0
        } else {
            step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// Lanczos approximation (g = 7, n = 9).
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + G + 0.5;
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

pub fn t_density(x: f64, df: f64) -> f64 {
    let ln_c = ln_gamma((df + 1.0) / 2.0) - ln_gamma(df / 2.0) - 0.5 * (df * PI).ln();
    (ln_c - (df + 1.0) / 2.0 * (1.0 + x * x / df).ln()).exp()
}

/// `P(T <= x)` by integrating the density over `[0, |x|]`.
pub fn t_cdf_by_quadrature(x: f64, df: f64) -> f64 {
    let half = simpson(&|u| t_density(u, df), 0.0, x.abs(), 1e-14);
    if x >= 0.0 {
        0.5 + half
    } else {
        0.5 - half
    }
}

/// `erf` by its Maclaurin series for small arguments and the Laplace
/// continued fraction of `erfc` otherwise.
pub fn erf(x: f64) -> f64 {
    if x < 0.0 {
        return -erf(-x);
    }
    if x < 3.0 {
        let mut term = x;
        let mut sum = x;
        for n in 1..200 {
            term *= -x * x / n as f64;
            let add = term / (2 * n + 1) as f64;
            sum += add;
            if add.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        2.0 / PI.sqrt() * sum
    } else {
        1.0 - erfc_large(x)
    }
}

fn erfc_large(x: f64) -> f64 {
    // erfc(x) = exp(-x²)/√π · 1/(x + 1/2/(x + 1/(x + 3/2/(x + ...))))
    let mut f = x;
    for n in (1..120).rev() {
        f = x + (n as f64 / 2.0) / f;
    }
    (-x * x).exp() / PI.sqrt() / f
}

pub fn phi(z: f64) -> f64 {
    if z < -3.0 * std::f64::consts::SQRT_2 {
        0.5 * erfc_large(-z / std::f64::consts::SQRT_2)
    } else {
        0.5 * (1.0 + erf(z / std::f64::consts::SQRT_2))
    }
}

/// Density of `χ_ν / √ν`.
pub fn chi_scale_density(r: f64, df: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let ln = (df / 2.0) * df.ln() - (df / 2.0 - 1.0) * 2f64.ln() - ln_gamma(df / 2.0)
        + (df - 1.0) * r.ln()
        - df * r * r / 2.0;
    ln.exp()
}

/// `P(T_1 <= b, ..., T_ξ <= b)` for a ξ-variate t with identity correlation:
/// the components share one `χ` scale, so this is `E[Φ(b R)^ξ]`.
pub fn identity_mvt_by_quadrature(b: f64, dim: usize, df: f64) -> f64 {
    let f = |r: f64| chi_scale_density(r, df) * phi(b * r).powi(dim as i32);
    simpson(&f, 0.0, 1.0, 1e-12) + simpson(&f, 1.0, 12.0, 1e-12)
}

/// `P(T_1 <= b1, T_2 <= b2)` for the bivariate t with correlation `rho`,
/// by integrating the density after `x = b - tan(u)` maps each half-line
/// onto `[0, π/2)`.
pub fn bivariate_t_by_quadrature(b1: f64, b2: f64, rho: f64, df: f64) -> f64 {
    let det = 1.0 - rho * rho;
    let c = 1.0 / (2.0 * PI * det.sqrt());
    let density = |x: f64, y: f64| {
        let q = (x * x - 2.0 * rho * x * y + y * y) / det;
        c * (1.0 + q / df).powf(-(df + 2.0) / 2.0)
    };
    let top = PI / 2.0 - 1e-9;
    let inner = |u: f64| {
        let x = b1 - u.tan();
        let jac = 1.0 / u.cos().powi(2);
        let g = |v: f64| density(x, b2 - v.tan()) / v.cos().powi(2);
        simpson(&g, 0.0, top, 1e-11) * jac
    };
    simpson(&inner, 0.0, top, 1e-10)
}

/// Small deterministic generator for test data (SplitMix64).
pub struct SplitMix(pub u64);

impl SplitMix {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard normal by Box-Muller.
    pub fn normal(&mut self) -> f64 {
        let u = 1.0 - self.uniform();
        let v = self.uniform();
        (-2.0 * u.ln()).sqrt() * (2.0 * PI * v).cos()
    }
}
