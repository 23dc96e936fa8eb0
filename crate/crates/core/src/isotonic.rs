//! Weighted isotonic regression by pool-adjacent-violators.
//!
//! The fit replaces the arithmetic group means in every order-restricted test
//! of this crate. A decreasing fit is obtained by negating the values, fitting
//! an increasing sequence and negating the result back.

use serde::{Deserialize, Serialize};

use crate::{Direction, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsotonicInput {
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
    pub direction: Direction,
}

impl IsotonicInput {
    pub fn new(values: Vec<f64>, weights: Vec<f64>, direction: Direction) -> Self {
        Self {
            values,
            weights,
            direction,
        }
    }

    /// Unit weights.
    pub fn unweighted(values: Vec<f64>, direction: Direction) -> Self {
        let weights = vec![1.0; values.len()];
        Self::new(values, weights, direction)
    }

    fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::InvalidInput("isotonic fit of an empty vector".into()));
        }
        if self.values.len() != self.weights.len() {
            return Err(Error::InvalidInput(format!(
                "{} values but {} weights",
                self.values.len(),
                self.weights.len()
            )));
        }
        if let Some(i) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("value {i} is not finite")));
        }
        if let Some(i) = self
            .weights
            .iter()
            .position(|w| !(w.is_finite() && *w > 0.0))
        {
            return Err(Error::InvalidInput(format!(
                "weight {i} must be positive and finite, got {}",
                self.weights[i]
            )));
        }
        Ok(())
    }
}

/// A level set of the fit: positions `start..end` share `value`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub start: usize,
    pub end: usize,
    pub value: f64,
    pub weight: f64,
}

impl Block {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsotonicFit {
    pub fitted: Vec<f64>,
    /// Contiguous partition of `0..k`. Adjacent blocks with equal pooled
    /// values are not merged, so a tie shows up as two blocks.
    pub blocks: Vec<Block>,
}

impl IsotonicFit {
    /// Weighted sum of squared deviations from `values`.
    pub fn weighted_sse(&self, values: &[f64], weights: &[f64]) -> f64 {
        self.fitted
            .iter()
            .zip(values)
            .zip(weights)
            .map(|((f, v), w)| w * (f - v) * (f - v))
            .sum()
    }
}

/// Weighted least-squares projection onto monotone sequences.
pub fn pava(input: &IsotonicInput) -> Result<IsotonicFit> {
    input.validate()?;
    let sign = input.direction.sign();
    let mut blocks = pool_increasing(
        input.values.iter().map(|v| sign * v),
        input.weights.iter().copied(),
    );
    for b in &mut blocks {
        b.value *= sign;
    }
    let mut fitted = Vec::with_capacity(input.values.len());
    for b in &blocks {
        fitted.extend(std::iter::repeat_n(b.value, b.len()));
    }
    Ok(IsotonicFit { fitted, blocks })
}

/// Shorthand returning only the fitted values.
pub fn pava_fitted(values: &[f64], weights: &[f64], direction: Direction) -> Result<Vec<f64>> {
    pava(&IsotonicInput::new(
        values.to_vec(),
        weights.to_vec(),
        direction,
    ))
    .map(|f| f.fitted)
}

/// Allocation-light increasing fit written into `out`; inputs are trusted.
///
/// Used on the simulation hot path where the caller has already validated
/// the design.
pub(crate) fn pava_increasing_into(values: &[f64], weights: &[f64], out: &mut Vec<f64>) {
    let blocks = pool_increasing(values.iter().copied(), weights.iter().copied());
    out.clear();
    for b in &blocks {
        out.extend(std::iter::repeat_n(b.value, b.len()));
    }
}

fn pool_increasing(
    values: impl Iterator<Item = f64>,
    weights: impl Iterator<Item = f64>,
) -> Vec<Block> {
    let mut stack: Vec<Block> = Vec::new();
    for (i, (v, w)) in values.zip(weights).enumerate() {
        let mut cur = Block {
            start: i,
            end: i + 1,
            value: v,
            weight: w,
        };
        while let Some(prev) = stack.last() {
            if prev.value <= cur.value {
                break;
            }
            let prev = stack.pop().unwrap();
            let weight = prev.weight + cur.weight;
            cur = Block {
                start: prev.start,
                end: cur.end,
                value: (prev.weight * prev.value + cur.weight * cur.value) / weight,
                weight,
            };
        }
        stack.push(cur);
    }
    stack
}
