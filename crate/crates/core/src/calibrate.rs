//! Fitting the inverse temperature on a labelled calibration set.
//!
//! Two fitting rules are provided:
//!
//! - [`fit_temperature_nll`] minimises the mean cross-entropy `L(beta)`.
//!   `L` is convex with `L'(beta) = mean(E[z_y] - z_label)` and
//!   `L''(beta) = mean(Var(z_y))`, so a safeguarded Newton iteration on the
//!   gradient converges in a handful of steps.
//! - [`fit_temperature_ec`] matches the mean confidence (probability of the
//!   predicted class) to the accuracy, which tempering leaves unchanged.
//!
//! Sets where every prediction is a tie have a constant loss; sets with no
//! misclassification have a strictly decreasing loss whose infimum sits at
//! `beta -> inf`. Both are reported through [`Degeneracy`] instead of being
//! solved.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::geometric_grid;
use crate::simplex::{argmax_set, logsumexp, InverseTemperature, LogitVector};

/// Points in the geometric scan used by the expectation-consistency fit.
pub const EC_GRID_POINTS: usize = 256;
/// Target `|gap|` when refining an expectation-consistency root.
pub const EC_GAP_TOL: f64 = 1e-10;
/// Iteration cap when refining an expectation-consistency root.
pub const EC_MAX_BISECTIONS: usize = 60;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Example {
    pub logits: LogitVector,
    pub label: usize,
}

impl Example {
    /// Correct when the label is in the argmax set of the logits (ties count).
    pub fn is_correct(&self) -> bool {
        argmax_set(self.logits.values(), 0.0).contains(&self.label)
    }
}

/// Held-out `(logits, label)` pairs sharing one class count `K`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationSet {
    examples: Vec<Example>,
    classes: usize,
}

impl CalibrationSet {
    pub fn new(examples: Vec<Example>) -> Result<Self> {
        let Some(first) = examples.first() else {
            return Err(Error::InvalidInput("calibration set is empty".into()));
        };
        let classes = first.logits.len();
        for (i, ex) in examples.iter().enumerate() {
            if ex.logits.len() != classes {
                return Err(Error::InvalidInput(format!(
                    "example {i} has {} classes, expected {classes}",
                    ex.logits.len()
                )));
            }
            if ex.label >= classes {
                return Err(Error::InvalidInput(format!(
                    "example {i} has label {} outside [0, {classes})",
                    ex.label
                )));
            }
        }
        Ok(Self { examples, classes })
    }

    pub fn from_parts(logits: Vec<LogitVector>, labels: Vec<usize>) -> Result<Self> {
        if logits.len() != labels.len() {
            return Err(Error::InvalidInput(format!(
                "{} logit rows but {} labels",
                logits.len(),
                labels.len()
            )));
        }
        Self::new(
            logits
                .into_iter()
                .zip(labels)
                .map(|(logits, label)| Example { logits, label })
                .collect(),
        )
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    /// Every example's logits are a constant vector.
    pub fn is_all_ties(&self) -> bool {
        self.examples.iter().all(|ex| ex.logits.is_all_ties())
    }

    /// Fraction of examples whose label is in the argmax set.
    pub fn accuracy(&self) -> f64 {
        let correct = self.examples.iter().filter(|ex| ex.is_correct()).count();
        correct as f64 / self.len() as f64
    }

    pub fn is_perfectly_classified(&self) -> bool {
        self.examples.iter().all(Example::is_correct)
    }
}

/// Synthetic set with `z ~ N(0, I_k)` and `label ~ softmax(beta0 * z)`.
pub fn synthetic_set(n: usize, k: usize, beta0: f64, seed: u64) -> Result<CalibrationSet> {
    let beta0 = InverseTemperature::new(beta0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut examples = Vec::with_capacity(n);
    for _ in 0..n {
        let z: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
        let logits = LogitVector::new(z)?;
        let probs = crate::simplex::temper(&logits, beta0);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut label = k - 1;
        for (i, &p) in probs.probs().iter().enumerate() {
            acc += p;
            if u < acc {
                label = i;
                break;
            }
        }
        examples.push(Example { logits, label });
    }
    CalibrationSet::new(examples)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Degeneracy {
    None,
    AllTies,
    PerfectAccuracy,
    ClampedAtBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    Nll,
    ExpectationConsistency,
}

/// Root finder for the cross-entropy gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    /// Newton steps, replaced by a bisection step whenever they leave the bracket.
    #[default]
    Newton,
    /// Bisection on the sign of the gradient only.
    Bisection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitConfig {
    pub beta_min: f64,
    pub beta_max: f64,
    pub grad_tol: f64,
    pub max_iter: usize,
    /// Forbid `beta > 1`, so the fitted model is never more confident than the original.
    pub cap_at_one: bool,
    /// Mix each tempered distribution with the uniform one, `(1 - eps) p + eps / K`,
    /// inside the loss.
    pub laplace_epsilon: f64,
    pub solver: Solver,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            beta_min: 1e-4,
            beta_max: 1e4,
            grad_tol: 1e-10,
            max_iter: 100,
            cap_at_one: false,
            laplace_epsilon: 0.0,
            solver: Solver::Newton,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta_min > 0.0) || !self.beta_max.is_finite() || !(self.beta_min < self.beta_max) {
            return Err(Error::InvalidInput(format!(
                "need 0 < beta_min < beta_max < inf, got [{}, {}]",
                self.beta_min, self.beta_max
            )));
        }
        if !(self.grad_tol > 0.0) {
            return Err(Error::InvalidInput(format!(
                "grad_tol must be positive, got {}",
                self.grad_tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidInput("max_iter must be at least 1".into()));
        }
        check_epsilon(self.laplace_epsilon)
    }

    fn clamp(&self, beta: f64) -> f64 {
        beta.clamp(self.beta_min, self.beta_max)
    }
}

fn check_epsilon(eps: f64) -> Result<()> {
    if (0.0..1.0).contains(&eps) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "laplace_epsilon must lie in [0, 1), got {eps}"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TemperatureFit {
    pub beta_hat: f64,
    /// Mean NLL at `beta_hat`, in nats.
    pub objective_at_opt: f64,
    pub gradient_at_opt: f64,
    pub iterations: usize,
    pub degeneracy: Degeneracy,
    pub method: FitMethod,
}

/// Derivatives of the mean NLL, plus the two cross-entropies whose
/// difference (divided by `beta`) is the gradient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GradHess {
    pub gradient: f64,
    pub hessian: f64,
    /// Observed mean cross-entropy of the tempered model.
    pub cross_entropy: f64,
    /// Mean entropy of the tempered predictions (expected cross-entropy).
    pub expected_cross_entropy: f64,
}

/// Per-example quantities of the tempered distribution, on centred logits.
struct Tempered {
    /// `log sum exp(beta * c)` where `c = z - max(z)`.
    lse: f64,
    mean_c: f64,
    var_c: f64,
    /// Centred logit of the label.
    label_c: f64,
}

fn tempered_terms(ex: &Example, beta: f64) -> Tempered {
    let z = ex.logits.values();
    let max = ex.logits.max();
    let centred: Vec<f64> = z.iter().map(|&v| v - max).collect();
    let scaled: Vec<f64> = centred.iter().map(|&c| beta * c).collect();
    let lse = logsumexp(&scaled);
    let mut mean_c = 0.0;
    let probs: Vec<f64> = scaled.iter().map(|&s| (s - lse).exp()).collect();
    for (p, c) in probs.iter().zip(&centred) {
        mean_c += p * c;
    }
    let var_c = probs
        .iter()
        .zip(&centred)
        .map(|(p, c)| p * (c - mean_c) * (c - mean_c))
        .sum();
    Tempered {
        lse,
        mean_c,
        var_c,
        label_c: centred[ex.label],
    }
}

/// Log-probability of the label under the (optionally smoothed) tempered model.
fn label_log_prob(ex: &Example, beta: f64, eps: f64, classes: usize) -> f64 {
    let t = tempered_terms(ex, beta);
    let lp = beta * t.label_c - t.lse;
    if eps == 0.0 {
        lp
    } else {
        logsumexp(&[(1.0 - eps).ln() + lp, (eps / classes as f64).ln()])
    }
}

/// Mean negative log-likelihood of the labels at `beta`.
pub fn nll(cal: &CalibrationSet, beta: InverseTemperature, laplace_epsilon: f64) -> Result<f64> {
    check_epsilon(laplace_epsilon)?;
    Ok(nll_unchecked(cal, beta.get(), laplace_epsilon))
}

fn nll_unchecked(cal: &CalibrationSet, beta: f64, eps: f64) -> f64 {
    let total: f64 = cal
        .examples
        .iter()
        .map(|ex| -label_log_prob(ex, beta, eps, cal.classes))
        .sum();
    total / cal.len() as f64
}

/// Closed-form gradient and Hessian of the unsmoothed NLL.
///
/// Refuses `laplace_epsilon > 0`: the closed forms hold only without smoothing.
pub fn nll_grad_hess(
    cal: &CalibrationSet,
    beta: InverseTemperature,
    laplace_epsilon: f64,
) -> Result<GradHess> {
    if laplace_epsilon != 0.0 {
        return Err(Error::Domain(format!(
            "closed-form derivatives need laplace_epsilon = 0, got {laplace_epsilon}; \
             use a numeric gradient of the smoothed loss"
        )));
    }
    Ok(grad_hess_unchecked(cal, beta.get()))
}

fn grad_hess_unchecked(cal: &CalibrationSet, beta: f64) -> GradHess {
    let (mut g, mut h, mut ce, mut ece) = (0.0, 0.0, 0.0, 0.0);
    for ex in &cal.examples {
        let t = tempered_terms(ex, beta);
        g += t.mean_c - t.label_c;
        h += t.var_c;
        ce += t.lse - beta * t.label_c;
        ece += t.lse - beta * t.mean_c;
    }
    let n = cal.len() as f64;
    GradHess {
        gradient: g / n,
        hessian: h / n,
        cross_entropy: ce / n,
        expected_cross_entropy: ece / n,
    }
}

/// Central-difference gradient of the smoothed loss.
fn numeric_gradient(cal: &CalibrationSet, beta: f64, eps: f64) -> f64 {
    let h = 1e-6 * beta.max(1e-3);
    let lo = (beta - h).max(beta * 0.5);
    let hi = beta + h;
    (nll_unchecked(cal, hi, eps) - nll_unchecked(cal, lo, eps)) / (hi - lo)
}

fn nll_fit_at(
    cal: &CalibrationSet,
    cfg: &FitConfig,
    beta: f64,
    iterations: usize,
    degeneracy: Degeneracy,
) -> TemperatureFit {
    let gradient = if cfg.laplace_epsilon == 0.0 {
        grad_hess_unchecked(cal, beta).gradient
    } else {
        numeric_gradient(cal, beta, cfg.laplace_epsilon)
    };
    TemperatureFit {
        beta_hat: beta,
        objective_at_opt: nll_unchecked(cal, beta, cfg.laplace_epsilon),
        gradient_at_opt: gradient,
        iterations,
        degeneracy,
        method: FitMethod::Nll,
    }
}

/// Minimise the mean cross-entropy over `beta` in `[beta_min, beta_max]`.
pub fn fit_temperature_nll(cal: &CalibrationSet, cfg: &FitConfig) -> Result<TemperatureFit> {
    cfg.validate()?;
    if cal.is_all_ties() {
        return Ok(nll_fit_at(cal, cfg, cfg.clamp(1.0), 0, Degeneracy::AllTies));
    }
    if cal.is_perfectly_classified() {
        let beta = if cfg.cap_at_one { cfg.clamp(1.0) } else { cfg.beta_max };
        return Ok(nll_fit_at(cal, cfg, beta, 0, Degeneracy::PerfectAccuracy));
    }

    let smoothed = cfg.laplace_epsilon > 0.0;
    let eval = |beta: f64| -> (f64, f64) {
        if smoothed {
            (numeric_gradient(cal, beta, cfg.laplace_epsilon), f64::NAN)
        } else {
            let gh = grad_hess_unchecked(cal, beta);
            (gh.gradient, gh.hessian)
        }
    };
    let converged = |g: f64| g.abs() <= cfg.grad_tol;

    let (mut lo, mut hi) = (cfg.beta_min, cfg.beta_max);
    let (g_lo, _) = eval(lo);
    if converged(g_lo) || g_lo > 0.0 {
        let degeneracy = if converged(g_lo) { Degeneracy::None } else { Degeneracy::ClampedAtBound };
        return Ok(capped(nll_fit_at(cal, cfg, lo, 1, degeneracy), cal, cfg));
    }
    let (g_hi, _) = eval(hi);
    if converged(g_hi) || g_hi < 0.0 {
        let degeneracy = if converged(g_hi) { Degeneracy::None } else { Degeneracy::ClampedAtBound };
        return Ok(capped(nll_fit_at(cal, cfg, hi, 2, degeneracy), cal, cfg));
    }

    let use_newton = cfg.solver == Solver::Newton && !smoothed;
    let mut beta = if use_newton { cfg.clamp(1.0) } else { (lo * hi).sqrt() };
    let (mut g, mut h) = eval(beta);
    let mut iterations = 3;
    loop {
        if converged(g) {
            break;
        }
        if g < 0.0 {
            lo = beta;
        } else {
            hi = beta;
        }
        // Bracket has collapsed to adjacent floats.
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            if smoothed {
                break;
            }
            return Err(Error::NumericRange(format!(
                "gradient stalled at {g:e} near beta = {beta} (grad_tol = {:e})",
                cfg.grad_tol
            )));
        }
        if iterations >= cfg.max_iter {
            return Err(Error::NumericRange(format!(
                "no convergence after {} iterations; |gradient| = {:e} at beta = {beta}",
                cfg.max_iter,
                g.abs()
            )));
        }
        let newton = beta - g / h;
        beta = if use_newton && h > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            (lo * hi).sqrt()
        };
        (g, h) = eval(beta);
        iterations += 1;
    }
    Ok(capped(
        nll_fit_at(cal, cfg, beta, iterations, Degeneracy::None),
        cal,
        cfg,
    ))
}

fn capped(fit: TemperatureFit, cal: &CalibrationSet, cfg: &FitConfig) -> TemperatureFit {
    if cfg.cap_at_one && fit.beta_hat > 1.0 {
        let mut out = match fit.method {
            FitMethod::Nll => nll_fit_at(cal, cfg, 1.0, fit.iterations, Degeneracy::ClampedAtBound),
            FitMethod::ExpectationConsistency => {
                ec_fit_at(cal, cfg, 1.0, fit.iterations, Degeneracy::ClampedAtBound)
            }
        };
        out.iterations = fit.iterations;
        out
    } else {
        fit
    }
}

/// Mean tempered confidence minus the accuracy.
///
/// Confidence is the probability of the predicted class, `max_y p_beta(y|x)`.
/// For a tie-broken example it is `1/m` with `m` tied classes, while the
/// accuracy counts that example as correct when its label is among them.
pub fn ec_gap(cal: &CalibrationSet, beta: InverseTemperature) -> f64 {
    ec_gap_unchecked(cal, beta.get(), cal.accuracy())
}

fn ec_gap_unchecked(cal: &CalibrationSet, beta: f64, accuracy: f64) -> f64 {
    // The top centred logit is 0, so the predicted class has log-probability -lse.
    let confidence: f64 = cal
        .examples
        .iter()
        .map(|ex| (-tempered_terms(ex, beta).lse).exp())
        .sum();
    confidence / cal.len() as f64 - accuracy
}

fn ec_fit_at(
    cal: &CalibrationSet,
    cfg: &FitConfig,
    beta: f64,
    iterations: usize,
    degeneracy: Degeneracy,
) -> TemperatureFit {
    let mut fit = nll_fit_at(cal, cfg, beta, iterations, degeneracy);
    fit.method = FitMethod::ExpectationConsistency;
    fit
}

/// Choose `beta` so that mean confidence matches accuracy.
///
/// Scans a geometric grid over `[beta_min, beta_max]` and refines the first
/// sign change of the gap by bisection. When the gap never changes sign, the
/// grid point with the smallest `|gap|` is returned, flagged as clamped.
pub fn fit_temperature_ec(cal: &CalibrationSet, cfg: &FitConfig) -> Result<TemperatureFit> {
    cfg.validate()?;
    if cal.is_all_ties() {
        return Ok(ec_fit_at(cal, cfg, cfg.clamp(1.0), 0, Degeneracy::AllTies));
    }
    if cal.is_perfectly_classified() {
        let beta = if cfg.cap_at_one { cfg.clamp(1.0) } else { cfg.beta_max };
        return Ok(ec_fit_at(cal, cfg, beta, 0, Degeneracy::PerfectAccuracy));
    }
    let accuracy = cal.accuracy();
    let grid = geometric_grid(cfg.beta_min, cfg.beta_max, EC_GRID_POINTS)?;
    let gaps: Vec<f64> = grid
        .iter()
        .map(|&b| ec_gap_unchecked(cal, b, accuracy))
        .collect();
    let mut iterations = grid.len();

    let crossing = (0..grid.len() - 1).find(|&i| gaps[i] == 0.0 || gaps[i] * gaps[i + 1] < 0.0);
    let Some(i) = crossing else {
        let best = (0..grid.len())
            .min_by(|&a, &b| gaps[a].abs().total_cmp(&gaps[b].abs()))
            .unwrap_or(0);
        let fit = ec_fit_at(cal, cfg, grid[best], iterations, Degeneracy::ClampedAtBound);
        return Ok(capped(fit, cal, cfg));
    };
    if gaps[i] == 0.0 {
        return Ok(capped(ec_fit_at(cal, cfg, grid[i], iterations, Degeneracy::None), cal, cfg));
    }

    let (mut lo, mut hi) = (grid[i], grid[i + 1]);
    let lo_sign = gaps[i].signum();
    let mut beta = (lo * hi).sqrt();
    for _ in 0..EC_MAX_BISECTIONS {
        beta = (lo * hi).sqrt();
        let gap = ec_gap_unchecked(cal, beta, accuracy);
        iterations += 1;
        if gap.abs() <= EC_GAP_TOL {
            break;
        }
        if gap.signum() == lo_sign {
            lo = beta;
        } else {
            hi = beta;
        }
    }
    Ok(capped(ec_fit_at(cal, cfg, beta, iterations, Degeneracy::None), cal, cfg))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    pub cross_entropy: f64,
    pub accuracy: f64,
    pub mean_confidence: f64,
    pub mean_entropy: f64,
}

/// Summary statistics of the tempered classifier on a calibration set.
pub fn metrics(cal: &CalibrationSet, beta: InverseTemperature) -> Metrics {
    let beta = beta.get();
    let (mut ce, mut conf, mut ent) = (0.0, 0.0, 0.0);
    for ex in &cal.examples {
        let t = tempered_terms(ex, beta);
        ce += t.lse - beta * t.label_c;
        // The max centred logit is 0, so the top class has log-probability -lse.
        conf += (-t.lse).exp();
        ent += t.lse - beta * t.mean_c;
    }
    let n = cal.len() as f64;
    Metrics {
        cross_entropy: ce / n,
        accuracy: cal.accuracy(),
        mean_confidence: conf / n,
        mean_entropy: ent / n,
    }
}
