//! Entropy geometry of tempering on the simplex.
//!
//! - [`project_to_entropy`]: the KL-closest distribution to `p` with a
//!   prescribed entropy. For a unimodal, fully supported `p` the minimiser is
//!   unique and is a tempered version `p_beta*` of `p`, so the projection
//!   reduces to a one-dimensional monotone search in `beta`.
//! - [`geodesic_point`]: normalised geometric means. Tempering moves along
//!   these curves: `p_beta` is the geometric mean of `p_beta1` and `p_beta2`
//!   with weight `alpha = (beta2 - beta) / (beta2 - beta1)`.
//! - [`majorisation_compare`]: the majorisation order through descending
//!   prefix sums.
//! - [`tempered_marginal`]: class proportions of a tempered mixture.
//!
//! # Orientation of `≺`
//!
//! This crate writes `a ≺ b` when `sum(phi(a)) <= sum(phi(b))` for every
//! convex `phi`, i.e. when `b` is the *more concentrated* vector and its
//! sorted prefix sums dominate those of `a`. This is the reverse of the
//! classical reading "`a` is majorised by `b`" only in wording, not in
//! content: with this orientation tempering satisfies
//! `p_beta1 ≺ p_beta2` whenever `beta1 < beta2`.
//!
//! The projection is defined for targets in `(0, ln K)`. The target `ln K`
//! corresponds to `beta* = 0` (the uniform distribution), which is not a
//! valid [`InverseTemperature`] and is rejected with the rest of the
//! out-of-range targets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::simplex::{argmax_set, entropy, temper_probs, InverseTemperature, ProbVector, SIMPLEX_INPUT_TOL};

/// Default tolerance on `|H(q) - h*|` for [`project_to_entropy`].
pub const DEFAULT_ENTROPY_TOL: f64 = 1e-10;

/// Absolute tolerance on prefix sums when deciding majorisation.
pub const MAJORISATION_TOL: f64 = 1e-12;

/// Smallest `beta` the projection bracket may expand to.
pub const PROJECTION_BETA_MIN: f64 = 1e-8;
/// Largest `beta` the projection bracket may expand to.
pub const PROJECTION_BETA_MAX: f64 = 1e8;

const MAX_BISECTIONS: usize = 500;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectionResult {
    pub beta_star: f64,
    pub projected: ProbVector,
    /// Entropy of `projected`, in nats.
    pub achieved_entropy: f64,
    /// `KL(projected || p)`.
    pub kl_to_original: f64,
}

fn check_projection_input(p: &ProbVector) -> Result<()> {
    if let Some(i) = p.probs().iter().position(|&q| q <= 0.0) {
        return Err(Error::Precondition(format!(
            "projection needs full support, but entry {i} is zero"
        )));
    }
    let modes = argmax_set(p.probs(), 0.0);
    if modes.len() > 1 {
        return Err(Error::Precondition(format!(
            "projection needs a unimodal distribution, but classes {modes:?} tie for the maximum"
        )));
    }
    Ok(())
}

/// Information projection of `p` onto `{q : H(q) = h_star}`.
///
/// Requires `p` to be strictly positive with a unique mode. The returned
/// `beta_star` is found by bracketing from `[1, 1]` (expanding by factors of
/// 2) and bisecting until the entropy is within `entropy_tol` of `h_star`.
pub fn project_to_entropy(p: &ProbVector, h_star: f64, entropy_tol: f64) -> Result<ProjectionResult> {
    let max_entropy = (p.len() as f64).ln();
    if !(h_star > 0.0 && h_star < max_entropy) {
        return Err(Error::Domain(format!(
            "target entropy {h_star} nats is outside the open range (0, ln K) = (0, {max_entropy}) for K = {}",
            p.len()
        )));
    }
    if !(entropy_tol > 0.0) {
        return Err(Error::Domain(format!(
            "entropy tolerance must be positive, got {entropy_tol}"
        )));
    }
    check_projection_input(p)?;

    let h_at = |beta: f64| entropy(&temper_probs(p, InverseTemperature::unchecked(beta)));
    let done = |beta: f64, h: f64| -> Result<ProjectionResult> {
        let projected = temper_probs(p, InverseTemperature::unchecked(beta));
        let kl_to_original = kl_divergence(&projected, p)?;
        Ok(ProjectionResult {
            beta_star: beta,
            projected,
            achieved_entropy: h,
            kl_to_original,
        })
    };

    let h_one = entropy(p);
    if (h_one - h_star).abs() <= entropy_tol {
        return done(1.0, h_one);
    }

    // Entropy is strictly decreasing in beta.
    let (mut lo, mut hi) = (1.0, 1.0);
    if h_one > h_star {
        loop {
            lo = hi;
            hi *= 2.0;
            if hi > PROJECTION_BETA_MAX {
                return Err(Error::NumericRange(format!(
                    "entropy {h_star} not reached for beta up to {PROJECTION_BETA_MAX}"
                )));
            }
            let h = h_at(hi);
            if (h - h_star).abs() <= entropy_tol {
                return done(hi, h);
            }
            if h < h_star {
                break;
            }
        }
    } else {
        loop {
            hi = lo;
            lo *= 0.5;
            if lo < PROJECTION_BETA_MIN {
                return Err(Error::NumericRange(format!(
                    "entropy {h_star} not reached for beta down to {PROJECTION_BETA_MIN}"
                )));
            }
            let h = h_at(lo);
            if (h - h_star).abs() <= entropy_tol {
                return done(lo, h);
            }
            if h > h_star {
                break;
            }
        }
    }

    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        let h = h_at(mid);
        if (h - h_star).abs() <= entropy_tol {
            return done(mid, h);
        }
        if h > h_star {
            lo = mid;
        } else {
            hi = mid;
        }
        if mid <= lo && mid >= hi {
            break;
        }
    }
    Err(Error::NumericRange(format!(
        "bisection on beta in [{lo}, {hi}] could not resolve entropy {h_star} to within {entropy_tol}"
    )))
}

/// `KL(q || p) = sum q log(q / p)`, in nats.
pub fn kl_divergence(q: &ProbVector, p: &ProbVector) -> Result<f64> {
    if q.len() != p.len() {
        return Err(Error::InvalidInput(format!(
            "length mismatch: {} vs {}",
            q.len(),
            p.len()
        )));
    }
    let mut kl = 0.0;
    for (i, (&qi, &pi)) in q.probs().iter().zip(p.probs()).enumerate() {
        if qi == 0.0 {
            continue;
        }
        if pi == 0.0 {
            return Err(Error::Domain(format!(
                "support of q is not contained in support of p (entry {i})"
            )));
        }
        kl += qi * (qi.ln() - pi.ln());
    }
    Ok(kl.max(0.0))
}

/// Randomised audit of a projection: no point of the entropy level set that
/// we can sample should be KL-closer to `p` than `result.projected`.
///
/// Candidates are drawn alternately from the flat Dirichlet and as log-space
/// perturbations of the projection, then moved onto the level set by the same
/// bisection applied to the candidate itself. Candidates that cannot be moved
/// (ties, or leaving the bracket) are redrawn.
pub fn projection_optimality_check(p: &ProbVector, result: &ProjectionResult, trials: usize, seed: u64) -> bool {
    let h_target = result.achieved_entropy;
    let level_tol = DEFAULT_ENTROPY_TOL * 1e3;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = p.len();
    let mut accepted = 0;
    let mut attempts = 0;
    while accepted < trials && attempts < 50 * trials.max(1) {
        attempts += 1;
        let weights: Vec<f64> = if attempts % 2 == 0 {
            (0..k).map(|_| rng.sample::<f64, _>(Exp1)).collect()
        } else {
            let scale = 10f64.powf(rng.random_range(-4.0..0.0));
            result
                .projected
                .probs()
                .iter()
                .map(|&q| q * (scale * rng.sample::<f64, _>(StandardNormal)).exp())
                .collect()
        };
        let Ok(candidate) = ProbVector::from_weights(weights) else {
            continue;
        };
        let Ok(on_level) = project_to_entropy(&candidate, h_target, DEFAULT_ENTROPY_TOL) else {
            continue;
        };
        if (entropy(&on_level.projected) - h_target).abs() > level_tol {
            continue;
        }
        accepted += 1;
        match kl_divergence(&on_level.projected, p) {
            Ok(kl) if kl >= result.kl_to_original - 1e-9 => {}
            _ => return false,
        }
    }
    true
}

/// Geodesic interpolation weight `alpha` placing `beta` between `beta1` and `beta2`.
pub fn geodesic_alpha(beta1: f64, beta: f64, beta2: f64) -> f64 {
    (beta2 - beta) / (beta2 - beta1)
}

/// Normalised geometric mean `p1^alpha * p2^(1 - alpha)`.
pub fn geodesic_point(p1: &ProbVector, p2: &ProbVector, alpha: f64) -> Result<ProbVector> {
    if p1.len() != p2.len() {
        return Err(Error::InvalidInput(format!(
            "length mismatch: {} vs {}",
            p1.len(),
            p2.len()
        )));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Domain(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    if alpha == 1.0 {
        return Ok(p1.clone());
    }
    if alpha == 0.0 {
        return Ok(p2.clone());
    }
    let logs: Vec<f64> = p1
        .probs()
        .iter()
        .zip(p2.probs())
        .map(|(&a, &b)| {
            if a > 0.0 && b > 0.0 {
                alpha * a.ln() + (1.0 - alpha) * b.ln()
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    if logs.iter().all(|&l| l == f64::NEG_INFINITY) {
        return Err(Error::Domain("the two distributions have disjoint supports".into()));
    }
    Ok(ProbVector::from_log_weights(&logs))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MajorisationRelation {
    /// `a ≺ b`: `b` is more concentrated.
    FirstPrecedesSecond,
    /// `b ≺ a`: `a` is more concentrated.
    SecondPrecedesFirst,
    Equal,
    Incomparable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MajorisationVerdict {
    pub relation: MajorisationRelation,
    /// For incomparable pairs, the first prefix index at which the ordering of
    /// the two prefix sums reverses.
    pub witness: Option<usize>,
    /// Prefix sums of `a` sorted in decreasing order.
    pub first_prefix: Vec<f64>,
    /// Prefix sums of `b` sorted in decreasing order.
    pub second_prefix: Vec<f64>,
}

fn descending_prefix_sums(p: &ProbVector) -> Vec<f64> {
    let mut sorted = p.probs().to_vec();
    sorted.sort_by(|x, y| y.total_cmp(x));
    sorted
        .iter()
        .scan(0.0, |acc, &x| {
            *acc += x;
            Some(*acc)
        })
        .collect()
}

/// Compare `a` and `b` in the majorisation order (see the module docs for the
/// orientation of `≺`).
pub fn majorisation_compare(a: &ProbVector, b: &ProbVector) -> Result<MajorisationVerdict> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput(format!(
            "length mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let first_prefix = descending_prefix_sums(a);
    let second_prefix = descending_prefix_sums(b);
    let diffs: Vec<f64> = second_prefix.iter().zip(&first_prefix).map(|(y, x)| y - x).collect();
    let b_dominates = diffs.iter().all(|&d| d >= -MAJORISATION_TOL);
    let a_dominates = diffs.iter().all(|&d| d <= MAJORISATION_TOL);
    let (relation, witness) = match (b_dominates, a_dominates) {
        (true, true) => (MajorisationRelation::Equal, None),
        (true, false) => (MajorisationRelation::FirstPrecedesSecond, None),
        (false, true) => (MajorisationRelation::SecondPrecedesFirst, None),
        (false, false) => {
            let first = diffs.iter().position(|d| d.abs() > MAJORISATION_TOL);
            let witness = first.and_then(|i| {
                let sign = diffs[i].signum();
                (i + 1..diffs.len()).find(|&j| diffs[j].abs() > MAJORISATION_TOL && diffs[j].signum() != sign)
            });
            (MajorisationRelation::Incomparable, witness)
        }
    };
    Ok(MajorisationVerdict {
        relation,
        witness,
        first_prefix,
        second_prefix,
    })
}

/// Class proportions `sum_x w_x * temper_probs(p(.|x), beta)` of a finite mixture.
pub fn tempered_marginal(
    conditionals: &[ProbVector],
    weights: &[f64],
    beta: InverseTemperature,
) -> Result<ProbVector> {
    let Some(first) = conditionals.first() else {
        return Err(Error::InvalidInput("no conditionals given".into()));
    };
    if weights.len() != conditionals.len() {
        return Err(Error::InvalidInput(format!(
            "{} weights for {} conditionals",
            weights.len(),
            conditionals.len()
        )));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::InvalidInput("weights must be nonnegative and finite".into()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > SIMPLEX_INPUT_TOL {
        return Err(Error::InvalidInput(format!("weights sum to {total}, expected 1")));
    }
    let k = first.len();
    let mut mix = vec![0.0; k];
    for (i, (cond, &w)) in conditionals.iter().zip(weights).enumerate() {
        if cond.len() != k {
            return Err(Error::InvalidInput(format!(
                "conditional {i} has {} classes, expected {k}",
                cond.len()
            )));
        }
        for (m, &q) in mix.iter_mut().zip(temper_probs(cond, beta).probs()) {
            *m += w * q;
        }
    }
    ProbVector::from_weights(mix)
}
