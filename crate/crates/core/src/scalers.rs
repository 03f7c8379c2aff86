//! Affine post-hoc scalers: matrix scaling on logits and Dirichlet-style
//! calibration on log-probabilities.
//!
//! A [`LinearScaler`] maps an input `u` (logits `z`, or `log p`) to
//! `softmax(W u + b)`. The scalers that never change the argmax of any input
//! are exactly those of the form
//!
//! ```text
//! W = beta * I + 1 a^T,   b = gamma * 1,   beta > 0
//! ```
//!
//! and every such scaler outputs the same distribution as plain tempering
//! with inverse temperature `beta`, since the `1 a^T u + gamma 1` term shifts
//! all coordinates equally. [`make_accuracy_preserving`] builds them,
//! [`check_structure`] recognises them, and [`find_argmax_violation`] looks
//! for a concrete input whose argmax set a non-conforming scaler changes.
//!
//! The constructor requires `beta > 0`. With `beta = 0` every output is
//! uniform and every tie-free input loses its argmax, so that case is not
//! accuracy-preserving even though the collapse to tempering would formally
//! still hold.
//!
//! ```
//! use tempering::scalers::{check_structure, make_accuracy_preserving, InputSpace};
//!
//! let s = make_accuracy_preserving(2.0, &[0.5, -1.0, 0.0], 3.0, InputSpace::Logits).unwrap();
//! let report = check_structure(&s, 1e-9);
//! assert!(report.conforms);
//! assert_eq!(report.beta, Some(2.0));
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::calibrate::CalibrationSet;
use crate::error::{Error, Result};
use crate::simplex::{argmax_set, logsumexp, LogitVector, ProbVector};

/// Relative tolerance for ties when comparing argmax sets.
pub const ARGMAX_TIE_TOL: f64 = 1e-12;

/// Default tolerance for [`check_structure`].
pub const DEFAULT_STRUCT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputSpace {
    Logits,
    LogProbs,
}

/// Input accepted by [`apply_scaler`].
#[derive(Debug, Clone, Copy)]
pub enum ScalerInput<'a> {
    Logits(&'a LogitVector),
    Probs(&'a ProbVector),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearScaler {
    w: Vec<Vec<f64>>,
    b: Vec<f64>,
    input_space: InputSpace,
}

impl LinearScaler {
    /// `w` is given as rows.
    pub fn new(w: Vec<Vec<f64>>, b: Vec<f64>, input_space: InputSpace) -> Result<Self> {
        let k = b.len();
        if k < 2 {
            return Err(Error::InvalidInput(format!("scaler needs at least 2 classes, got {k}")));
        }
        if w.len() != k || w.iter().any(|row| row.len() != k) {
            return Err(Error::InvalidInput(format!(
                "weight matrix must be {k}x{k} to match a bias of length {k}"
            )));
        }
        if w.iter().flatten().chain(&b).any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("scaler entries must be finite".into()));
        }
        Ok(Self { w, b, input_space })
    }

    pub fn identity(k: usize, input_space: InputSpace) -> Result<Self> {
        let w = (0..k)
            .map(|i| (0..k).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self::new(w, vec![0.0; k], input_space)
    }

    pub fn classes(&self) -> usize {
        self.b.len()
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.w
    }

    pub fn bias(&self) -> &[f64] {
        &self.b
    }

    pub fn input_space(&self) -> InputSpace {
        self.input_space
    }

    /// `W u + b`.
    pub fn affine(&self, u: &[f64]) -> Vec<f64> {
        self.w
            .iter()
            .zip(&self.b)
            .map(|(row, bias)| row.iter().zip(u).map(|(w, x)| w * x).sum::<f64>() + bias)
            .collect()
    }

    /// Mean cross-entropy of the scaled predictions on `cal`.
    pub fn cross_entropy(&self, cal: &CalibrationSet) -> Result<f64> {
        self.check_classes(cal.classes())?;
        let total: f64 = cal
            .examples()
            .iter()
            .map(|ex| {
                let out = self.affine(&self.input_of(&ex.logits));
                logsumexp(&out) - out[ex.label]
            })
            .sum();
        Ok(total / cal.len() as f64)
    }

    fn input_of(&self, z: &LogitVector) -> Vec<f64> {
        match self.input_space {
            InputSpace::Logits => z.values().to_vec(),
            InputSpace::LogProbs => {
                let lse = logsumexp(z.values());
                z.values().iter().map(|x| x - lse).collect()
            }
        }
    }

    fn check_classes(&self, k: usize) -> Result<()> {
        if k != self.classes() {
            return Err(Error::InvalidInput(format!(
                "scaler has {} classes but the input has {k}",
                self.classes()
            )));
        }
        Ok(())
    }
}

fn softmax_of(values: &[f64]) -> Result<ProbVector> {
    let lse = logsumexp(values);
    let logs: Vec<f64> = values.iter().map(|v| v - lse).collect();
    Ok(ProbVector::from_log_weights(&logs))
}

/// `softmax(W u + b)` with `u = z` for logit scalers and `u = log p` for
/// log-probability scalers.
pub fn apply_scaler(s: &LinearScaler, input: ScalerInput<'_>) -> Result<ProbVector> {
    let u: Vec<f64> = match (s.input_space, input) {
        (InputSpace::Logits, ScalerInput::Logits(z)) => z.values().to_vec(),
        (InputSpace::LogProbs, ScalerInput::Probs(p)) => {
            if !p.is_strictly_positive() {
                return Err(Error::InvalidInput(
                    "log-probability scalers need strictly positive probabilities".into(),
                ));
            }
            p.log_probs()
        }
        (InputSpace::Logits, ScalerInput::Probs(_)) => {
            return Err(Error::InvalidInput("scaler expects logits but got probabilities".into()))
        }
        (InputSpace::LogProbs, ScalerInput::Logits(_)) => {
            return Err(Error::InvalidInput("scaler expects probabilities but got logits".into()))
        }
    };
    s.check_classes(u.len())?;
    let out = s.affine(&u);
    if out.iter().any(|x| !x.is_finite()) {
        return Err(Error::NumericRange("scaled scores are not finite".into()));
    }
    softmax_of(&out)
}

/// Builds `W = beta I + 1 a^T`, `b = gamma 1`.
pub fn make_accuracy_preserving(beta: f64, a: &[f64], gamma: f64, input_space: InputSpace) -> Result<LinearScaler> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Domain(format!("beta must be positive and finite, got {beta}")));
    }
    let k = a.len();
    let w = (0..k)
        .map(|i| (0..k).map(|j| if i == j { beta + a[j] } else { a[j] }).collect())
        .collect();
    LinearScaler::new(w, vec![gamma; k], input_space)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructureReport {
    pub conforms: bool,
    /// Recovered parameters; present when `W` and `b` have the required shape
    /// up to the tolerance, even if `beta <= 0`.
    pub beta: Option<f64>,
    pub a: Option<Vec<f64>>,
    pub gamma: Option<f64>,
    pub max_residual: f64,
}

/// Tests whether `s` has the form `W = beta I + 1 a^T`, `b = gamma 1` with
/// `beta > 0`.
pub fn check_structure(s: &LinearScaler, struct_tol: f64) -> StructureReport {
    let k = s.classes();
    let w = &s.w;
    // Off-diagonal entries of each column must agree.
    let a: Vec<f64> = (0..k).map(|j| w[if j == 0 { 1 } else { 0 }][j]).collect();
    let mut residual: f64 = 0.0;
    for (i, row) in w.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            if i != j {
                residual = residual.max((x - a[j]).abs());
            }
        }
    }
    let beta = w[0][0] - a[0];
    for (kk, row) in w.iter().enumerate() {
        residual = residual.max((row[kk] - a[kk] - beta).abs());
    }
    let gamma = s.b[0];
    for &x in &s.b {
        residual = residual.max((x - gamma).abs());
    }
    let shaped = residual <= struct_tol;
    StructureReport {
        conforms: shaped && beta > 0.0,
        beta: shaped.then_some(beta),
        a: shaped.then_some(a),
        gamma: shaped.then_some(gamma),
        max_residual: residual,
    }
}

fn changes_argmax(s: &LinearScaler, u: &[f64]) -> bool {
    argmax_set(u, ARGMAX_TIE_TOL) != argmax_set(&s.affine(u), ARGMAX_TIE_TOL)
}

/// Searches for an input `u` (in the scaler's own input coordinates) whose
/// argmax set changes under `u -> W u + b`.
///
/// Tries `0`, every `e_i`, every `e_i + e_j`, every `e_i + e_j + e_k` and the
/// all-ones vector before `budget` standard Gaussian vectors drawn from a
/// generator seeded with `seed`.
pub fn find_argmax_violation(s: &LinearScaler, budget: usize, seed: u64) -> Option<LogitVector> {
    let k = s.classes();
    let indicator = |idx: &[usize]| {
        let mut u = vec![0.0; k];
        for &i in idx {
            u[i] = 1.0;
        }
        u
    };
    let mut probes = vec![vec![0.0; k]];
    probes.extend((0..k).map(|i| indicator(&[i])));
    for i in 0..k {
        for j in i + 1..k {
            probes.push(indicator(&[i, j]));
        }
    }
    for i in 0..k {
        for j in i + 1..k {
            for l in j + 1..k {
                probes.push(indicator(&[i, j, l]));
            }
        }
    }
    probes.push(vec![1.0; k]);
    if let Some(u) = probes.into_iter().find(|u| changes_argmax(s, u)) {
        return LogitVector::new(u).ok();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..budget)
        .map(|_| (0..k).map(|_| StandardNormal.sample(&mut rng)).collect::<Vec<f64>>())
        .find(|u| changes_argmax(s, u))
        .and_then(|u| LogitVector::new(u).ok())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalerFit {
    pub scaler: LinearScaler,
    /// Regularised objective after the last step.
    pub final_loss: f64,
    pub steps: usize,
}

/// Full-batch proximal gradient descent on
/// `mean CE + l2 * ||W - I||^2 + l2 * ||b||^2`, starting from the identity.
///
/// The cross-entropy takes an explicit gradient step and the quadratic
/// penalty its exact proximal step, so large `l2` does not force a small
/// `step_size`.
pub fn fit_matrix_scaler(
    cal: &CalibrationSet,
    input_space: InputSpace,
    l2: f64,
    steps: usize,
    step_size: f64,
) -> Result<ScalerFit> {
    if !(l2 >= 0.0 && l2.is_finite()) {
        return Err(Error::Domain(format!("l2 must be nonnegative and finite, got {l2}")));
    }
    if !(step_size > 0.0 && step_size.is_finite()) {
        return Err(Error::Domain(format!("step size must be positive and finite, got {step_size}")));
    }
    let k = cal.classes();
    let mut scaler = LinearScaler::identity(k, input_space)?;
    let inputs: Vec<Vec<f64>> = cal.examples().iter().map(|ex| scaler.input_of(&ex.logits)).collect();
    let labels: Vec<usize> = cal.examples().iter().map(|ex| ex.label).collect();
    let n = cal.len() as f64;
    let shrink = 1.0 / (1.0 + 2.0 * step_size * l2);

    let objective = |s: &LinearScaler, ce: f64| {
        let dev: f64 = s
            .w
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().enumerate().map(move |(j, &x)| if i == j { x - 1.0 } else { x }))
            .map(|d| d * d)
            .sum();
        let bias: f64 = s.b.iter().map(|x| x * x).sum();
        ce + l2 * (dev + bias)
    };

    let mut grad_w = vec![vec![0.0; k]; k];
    let mut grad_b = vec![0.0; k];
    let mut final_loss = f64::NAN;
    for step in 0..=steps {
        grad_w.iter_mut().flatten().for_each(|g| *g = 0.0);
        grad_b.iter_mut().for_each(|g| *g = 0.0);
        let mut ce = 0.0;
        for (u, &y) in inputs.iter().zip(&labels) {
            let out = scaler.affine(u);
            let lse = logsumexp(&out);
            ce += lse - out[y];
            for (i, o) in out.iter().enumerate() {
                let g = (o - lse).exp() - if i == y { 1.0 } else { 0.0 };
                grad_b[i] += g;
                for (gw, x) in grad_w[i].iter_mut().zip(u) {
                    *gw += g * x;
                }
            }
        }
        final_loss = objective(&scaler, ce / n);
        if !final_loss.is_finite() {
            return Err(Error::Divergence(format!(
                "loss became non-finite at step {step}; try a smaller step size than {step_size}"
            )));
        }
        if step == steps {
            break;
        }
        for i in 0..k {
            for j in 0..k {
                let anchor = if i == j { 1.0 } else { 0.0 };
                let moved = scaler.w[i][j] - step_size * grad_w[i][j] / n;
                scaler.w[i][j] = anchor + (moved - anchor) * shrink;
            }
            scaler.b[i] = (scaler.b[i] - step_size * grad_b[i] / n) * shrink;
        }
    }
    Ok(ScalerFit {
        scaler,
        final_loss,
        steps,
    })
}
