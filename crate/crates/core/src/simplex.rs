//! Logit and simplex primitives.
//!
//! Everything here works in log space with max-subtraction and only
//! materialises probabilities at the output boundary, so tempering raw logits
//! with `beta` in the thousands neither overflows nor loses the small classes
//! to cancellation.
//!
//! The tempered distribution of a logit vector `z` at inverse temperature
//! `beta` is `softmax(beta * z)`. Its log-normaliser `log Z(beta, z)` has
//! derivatives equal to the mean and variance of the logit of a label drawn
//! from the tempered distribution, which [`log_partition`] reports directly.
//!
//! Entropies are in nats.

use serde::Serialize;

use crate::error::{Error, Result};

/// Tolerance on `sum(p) - 1` after renormalisation.
pub const SIMPLEX_SUM_TOL: f64 = 1e-12;

/// Largest deviation of a raw input's sum from 1 that [`ProbVector::new`]
/// accepts before renormalising.
pub const SIMPLEX_INPUT_TOL: f64 = 1e-6;

/// Default relative tolerance for derivative checks against finite differences.
pub const DERIVATIVE_REL_TOL: f64 = 1e-6;

/// Default step for central finite differences in `beta`.
pub const DERIVATIVE_STEP: f64 = 1e-5;

/// Unnormalised scores `z` for `K >= 2` classes. All entries are finite.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct LogitVector(Vec<f64>);

impl LogitVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "a logit vector needs at least 2 classes, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "logit {i} is not finite ({})",
                values[i]
            )));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// True when every entry equals the first one exactly.
    pub fn is_all_ties(&self) -> bool {
        self.0.iter().all(|&v| v == self.0[0])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for LogitVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

/// A point on the probability simplex with `K >= 2` entries.
///
/// Construction renormalises, so entries always sum to one within
/// [`SIMPLEX_SUM_TOL`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    /// Validates a vector that is already (approximately) on the simplex.
    ///
    /// Entries must be finite and nonnegative and sum to one within
    /// [`SIMPLEX_INPUT_TOL`]; the result is renormalised exactly.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        Self::check_entries(&probs)?;
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_INPUT_TOL {
            return Err(Error::InvalidInput(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        Ok(Self::normalised(probs, total))
    }

    /// Builds a distribution proportional to nonnegative `weights`.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        Self::check_entries(&weights)?;
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::InvalidInput(format!(
                "weights must have a positive finite sum, got {total}"
            )));
        }
        Ok(Self::normalised(weights, total))
    }

    /// Softmax of log-weights. Entries equal to `-inf` become exact zeros.
    ///
    /// Callers guarantee at least two entries, at least one finite entry and
    /// no `+inf`/NaN.
    pub(crate) fn from_log_weights(log_weights: &[f64]) -> Self {
        debug_assert!(log_weights.len() >= 2);
        let max = log_weights
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        debug_assert!(max.is_finite());
        let weights: Vec<f64> = log_weights.iter().map(|&l| (l - max).exp()).collect();
        let total: f64 = weights.iter().sum();
        Self::normalised(weights, total)
    }

    pub fn uniform(k: usize) -> Result<Self> {
        Self::from_weights(vec![1.0; k])
    }

    pub fn point_mass(k: usize, index: usize) -> Result<Self> {
        if index >= k {
            return Err(Error::InvalidInput(format!(
                "point mass index {index} out of range for {k} classes"
            )));
        }
        let mut probs = vec![0.0; k];
        probs[index] = 1.0;
        Self::new(probs)
    }

    fn check_entries(probs: &[f64]) -> Result<()> {
        if probs.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "a probability vector needs at least 2 entries, got {}",
                probs.len()
            )));
        }
        if let Some(i) = probs.iter().position(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidInput(format!(
                "entry {i} is not a nonnegative finite number ({})",
                probs[i]
            )));
        }
        Ok(())
    }

    fn normalised(mut probs: Vec<f64>, total: f64) -> Self {
        for p in &mut probs {
            *p /= total;
        }
        Self(probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.0.iter().all(|&p| p > 0.0)
    }

    /// Componentwise natural log; zero entries map to `-inf`.
    pub fn log_probs(&self) -> Vec<f64> {
        self.0.iter().map(|p| p.ln()).collect()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Inverse temperature `beta > 0`.
///
/// The limits `beta -> 0` (uniform over the support) and `beta -> inf`
/// (point mass on the mode) are never stored as values.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct InverseTemperature(f64);

impl InverseTemperature {
    pub const ONE: Self = Self(1.0);

    pub fn new(beta: f64) -> Result<Self> {
        if beta > 0.0 && beta.is_finite() {
            Ok(Self(beta))
        } else {
            Err(Error::Domain(format!(
                "inverse temperature must be positive and finite, got {beta}"
            )))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    /// For values already known to be positive and finite.
    pub(crate) fn unchecked(beta: f64) -> Self {
        debug_assert!(beta > 0.0 && beta.is_finite());
        Self(beta)
    }
}

impl TryFrom<f64> for InverseTemperature {
    type Error = Error;

    fn try_from(beta: f64) -> Result<Self> {
        Self::new(beta)
    }
}

/// `log Z(beta, z)` together with its first two derivatives in `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogPartitionReport {
    pub log_z: f64,
    /// `E[z_y]` under the tempered distribution.
    pub first_derivative: f64,
    /// `Var(z_y)` under the tempered distribution; zero iff all logits tie.
    pub second_derivative: f64,
}

/// `log(sum(exp(values)))` with max-subtraction. Returns `-inf` for an empty
/// slice or when every entry is `-inf`.
pub fn logsumexp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let top = values.iter().position(|&v| v == max).unwrap_or(0);
    let rest: f64 = values
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != top)
        .map(|(_, &v)| (v - max).exp())
        .sum();
    max + rest.ln_1p()
}

/// Indices attaining the maximum of `values`, with ties honoured up to
/// `tol * max(1, |max|)`.
pub fn argmax_set(values: &[f64], tol: f64) -> Vec<usize> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let slack = tol * max.abs().max(1.0);
    values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v >= max - slack)
        .map(|(i, _)| i)
        .collect()
}

pub fn softmax(z: &LogitVector) -> ProbVector {
    ProbVector::from_log_weights(z.values())
}

/// `softmax(beta * z)`.
pub fn temper(z: &LogitVector, beta: InverseTemperature) -> ProbVector {
    if beta == InverseTemperature::ONE {
        return softmax(z);
    }
    let scaled: Vec<f64> = z.values().iter().map(|&v| beta.get() * v).collect();
    ProbVector::from_log_weights(&scaled)
}

/// The escort distribution `p^beta / sum(p^beta)`. Zero entries stay zero.
pub fn temper_probs(p: &ProbVector, beta: InverseTemperature) -> ProbVector {
    if beta == InverseTemperature::ONE {
        return p.clone();
    }
    let scaled: Vec<f64> = p
        .probs()
        .iter()
        .map(|&q| if q > 0.0 { beta.get() * q.ln() } else { f64::NEG_INFINITY })
        .collect();
    ProbVector::from_log_weights(&scaled)
}

/// `(lse, mean, variance)` of `beta * c` for centred logits `c = z - max z`.
fn centred_moments(z: &LogitVector, beta: f64) -> (f64, f64, f64) {
    let max = z.max();
    // Centred logits are exactly zero when all logits tie, which keeps the
    // variance at an exact zero in that case.
    let centred: Vec<f64> = z.values().iter().map(|&v| v - max).collect();
    let scaled: Vec<f64> = centred.iter().map(|&c| beta * c).collect();
    let lse = logsumexp(&scaled);
    let probs: Vec<f64> = scaled.iter().map(|&s| (s - lse).exp()).collect();
    let mean: f64 = probs.iter().zip(&centred).map(|(p, c)| p * c).sum();
    let variance: f64 = probs
        .iter()
        .zip(&centred)
        .map(|(p, c)| p * (c - mean) * (c - mean))
        .sum();
    (lse, mean, variance)
}

pub fn log_partition(z: &LogitVector, beta: InverseTemperature) -> LogPartitionReport {
    let max = z.max();
    let (lse, mean, variance) = centred_moments(z, beta.get());
    LogPartitionReport {
        log_z: beta.get() * max + lse,
        first_derivative: max + mean,
        second_derivative: variance,
    }
}

/// Shannon entropy in nats, with `0 log 0 = 0`.
pub fn entropy(p: &ProbVector) -> f64 {
    let h: f64 = -p
        .probs()
        .iter()
        .filter(|&&q| q > 0.0)
        .map(|&q| q * q.ln())
        .sum::<f64>();
    h.clamp(0.0, (p.len() as f64).ln())
}

/// Entropy of `softmax(beta * z)` computed as `log Z - beta * E[z]`, without
/// materialising the probabilities.
pub fn tempered_entropy(z: &LogitVector, beta: InverseTemperature) -> f64 {
    let (lse, mean, _) = centred_moments(z, beta.get());
    let h = lse - beta.get() * mean;
    h.clamp(0.0, (z.len() as f64).ln())
}

/// Rényi entropy of order `alpha` in nats, over the support of `p`.
pub fn renyi_entropy(p: &ProbVector, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Domain(format!(
            "Rényi order must be positive and finite, got {alpha}"
        )));
    }
    if alpha == 1.0 {
        return Err(Error::Domain(
            "Rényi order 1 is the Shannon entropy; use `entropy`".into(),
        ));
    }
    let scaled: Vec<f64> = p
        .probs()
        .iter()
        .filter(|&&q| q > 0.0)
        .map(|&q| alpha * q.ln())
        .collect();
    Ok(logsumexp(&scaled) / (1.0 - alpha))
}
