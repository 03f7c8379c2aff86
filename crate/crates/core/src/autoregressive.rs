//! Toy first-order autoregressive models and two ways of tempering them.
//!
//! A model over a vocabulary of `V` tokens emits `T` tokens: the first from
//! `initial`, each later one from the transition row of the previous token.
//!
//! - *Exact* tempering raises the whole sequence distribution to the power
//!   `beta` and renormalises over all `V^T` sequences. Its entropy is
//!   nonincreasing in `beta`, like any tempered categorical.
//! - *Myopic* tempering tempers `initial` and every transition row on their
//!   own, which is what per-step decoding temperature does. The resulting
//!   joint entropy need not be monotone in `beta`: see [`binary_chain`] with
//!   `pi = 0.51, rho0 = 0.01, rho1 = 0.51`.
//!
//! Sequences are indexed lexicographically with the first token most
//! significant, so for `V = 2, T = 2` the order is `00, 01, 10, 11`.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simplex::{entropy, logsumexp, temper_probs, InverseTemperature, ProbVector};

/// Largest number of joint outcomes the exact operations will enumerate.
pub const DEFAULT_ENUMERATION_CAP: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelFile", into = "ModelFile")]
pub struct ARModel {
    vocab_size: usize,
    horizon: usize,
    initial: ProbVector,
    transitions: Vec<ProbVector>,
    enumeration_cap: usize,
}

/// On-disk JSON layout of an [`ARModel`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    vocab_size: usize,
    horizon: usize,
    initial: Vec<f64>,
    transitions: Vec<Vec<f64>>,
}

impl TryFrom<ModelFile> for ARModel {
    type Error = Error;

    fn try_from(f: ModelFile) -> Result<Self> {
        let row = |what: String, v: Vec<f64>| {
            ProbVector::new(v).map_err(|e| Error::InvalidInput(format!("{what}: {e}")))
        };
        let initial = row("initial distribution".into(), f.initial)?;
        let transitions = f
            .transitions
            .into_iter()
            .enumerate()
            .map(|(i, v)| row(format!("transition row {i}"), v))
            .collect::<Result<Vec<_>>>()?;
        ARModel::new(f.vocab_size, f.horizon, initial, transitions)
    }
}

impl From<ARModel> for ModelFile {
    fn from(m: ARModel) -> Self {
        ModelFile {
            vocab_size: m.vocab_size,
            horizon: m.horizon,
            initial: m.initial.into_inner(),
            transitions: m.transitions.into_iter().map(ProbVector::into_inner).collect(),
        }
    }
}

impl ARModel {
    /// `transitions[i]` is `p(x_{t+1} | x_t = i)`.
    pub fn new(vocab_size: usize, horizon: usize, initial: ProbVector, transitions: Vec<ProbVector>) -> Result<Self> {
        if vocab_size < 2 {
            return Err(Error::InvalidInput(format!("vocabulary needs at least 2 tokens, got {vocab_size}")));
        }
        if horizon < 1 {
            return Err(Error::InvalidInput("horizon must be at least 1".into()));
        }
        if initial.len() != vocab_size {
            return Err(Error::InvalidInput(format!(
                "initial distribution has {} entries, expected {vocab_size}",
                initial.len()
            )));
        }
        if transitions.len() != vocab_size {
            return Err(Error::InvalidInput(format!(
                "{} transition rows, expected {vocab_size}",
                transitions.len()
            )));
        }
        if let Some(i) = transitions.iter().position(|r| r.len() != vocab_size) {
            return Err(Error::InvalidInput(format!(
                "transition row {i} has {} entries, expected {vocab_size}",
                transitions[i].len()
            )));
        }
        Ok(Self {
            vocab_size,
            horizon,
            initial,
            transitions,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
        })
    }

    pub fn with_enumeration_cap(mut self, cap: usize) -> Self {
        self.enumeration_cap = cap;
        self
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn initial(&self) -> &ProbVector {
        &self.initial
    }

    pub fn transitions(&self) -> &[ProbVector] {
        &self.transitions
    }

    pub fn enumeration_cap(&self) -> usize {
        self.enumeration_cap
    }

    /// `V^T`, or a resource error if it exceeds the enumeration cap.
    pub fn sequence_count(&self) -> Result<usize> {
        u32::try_from(self.horizon)
            .ok()
            .and_then(|t| self.vocab_size.checked_pow(t))
            .filter(|&n| n <= self.enumeration_cap)
            .ok_or_else(|| {
                Error::Resource(format!(
                    "{}^{} joint sequences exceed the enumeration cap of {}",
                    self.vocab_size, self.horizon, self.enumeration_cap
                ))
            })
    }

    /// The model with `initial` and every transition row tempered separately.
    pub fn myopic(&self, beta: InverseTemperature) -> ARModel {
        ARModel {
            initial: temper_probs(&self.initial, beta),
            transitions: self.transitions.iter().map(|r| temper_probs(r, beta)).collect(),
            ..self.clone()
        }
    }

    /// Token sequence of a lexicographic index.
    pub fn sequence_of(&self, mut index: usize) -> Vec<usize> {
        let mut seq = vec![0; self.horizon];
        for slot in seq.iter_mut().rev() {
            *slot = index % self.vocab_size;
            index /= self.vocab_size;
        }
        seq
    }

    /// Lexicographic index of a token sequence.
    pub fn index_of(&self, seq: &[usize]) -> usize {
        seq.iter().fold(0, |acc, &x| acc * self.vocab_size + x)
    }

    fn log_joint(&self) -> Result<Vec<f64>> {
        let n = self.sequence_count()?;
        let ln = |q: f64| if q > 0.0 { q.ln() } else { f64::NEG_INFINITY };
        let log_init: Vec<f64> = self.initial.probs().iter().map(|&q| ln(q)).collect();
        let log_rows: Vec<Vec<f64>> = self
            .transitions
            .iter()
            .map(|r| r.probs().iter().map(|&q| ln(q)).collect())
            .collect();
        // Extend one step at a time; entries stay in lexicographic order.
        let mut logs = log_init;
        for _ in 1..self.horizon {
            let mut next = Vec::with_capacity(logs.len() * self.vocab_size);
            for (i, &l) in logs.iter().enumerate() {
                let last = i % self.vocab_size;
                next.extend(log_rows[last].iter().map(|&r| l + r));
            }
            logs = next;
        }
        debug_assert_eq!(logs.len(), n);
        Ok(logs)
    }
}

/// Two-token model: `p(x_1 = 1) = pi`, `p(x_{t+1} = 1 | x_t = i) = rho_i`.
pub fn binary_chain(pi: f64, rho0: f64, rho1: f64, horizon: usize) -> Result<ARModel> {
    let bern = |q: f64| ProbVector::new(vec![1.0 - q, q]);
    ARModel::new(2, horizon, bern(pi)?, vec![bern(rho0)?, bern(rho1)?])
}

/// Probability of every sequence, in lexicographic order.
pub fn joint_distribution(m: &ARModel) -> Result<ProbVector> {
    Ok(ProbVector::from_log_weights(&m.log_joint()?))
}

/// `p(x)^beta / sum_x' p(x')^beta` over all sequences.
pub fn exact_tempered_joint(m: &ARModel, beta: InverseTemperature) -> Result<ProbVector> {
    let scaled: Vec<f64> = m.log_joint()?.iter().map(|&l| beta.get() * l).collect();
    Ok(ProbVector::from_log_weights(&scaled))
}

/// Joint distribution of the per-step tempered model.
pub fn myopic_tempered_joint(m: &ARModel, beta: InverseTemperature) -> Result<ProbVector> {
    joint_distribution(&m.myopic(beta))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemperingMode {
    ExactJoint,
    Myopic,
}

impl TemperingMode {
    pub fn as_str(self) -> &'static str {
        match self {
            TemperingMode::ExactJoint => "exact_joint",
            TemperingMode::Myopic => "myopic",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TemperingCurve {
    pub betas: Vec<f64>,
    /// Joint entropies in nats.
    pub entropies: Vec<f64>,
    pub mode: TemperingMode,
}

#[derive(Serialize)]
struct CurveRow<'a> {
    beta: String,
    entropy: String,
    mode: &'a str,
}

impl TemperingCurve {
    /// Writes `beta,entropy,mode` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for (b, h) in self.betas.iter().zip(&self.entropies) {
            w.serialize(CurveRow {
                beta: format!("{b:.16e}"),
                entropy: format!("{h:.16e}"),
                mode: self.mode.as_str(),
            })
            .map_err(|e| Error::InvalidInput(format!("cannot write curve: {e}")))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Index pairs `(i, i + 1)` where the entropy strictly increases.
    pub fn increasing_steps(&self) -> Vec<usize> {
        self.entropies
            .windows(2)
            .enumerate()
            .filter(|(_, w)| w[1] > w[0])
            .map(|(i, _)| i)
            .collect()
    }
}

/// Entropy of the tempered joint at each `beta` of a strictly increasing grid.
pub fn entropy_curve(m: &ARModel, betas: &[f64], mode: TemperingMode) -> Result<TemperingCurve> {
    if betas.is_empty() {
        return Err(Error::InvalidInput("beta grid is empty".into()));
    }
    if betas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("beta grid must be strictly increasing".into()));
    }
    let entropies = betas
        .iter()
        .map(|&b| {
            let beta = InverseTemperature::new(b)?;
            let joint = match mode {
                TemperingMode::ExactJoint => exact_tempered_joint(m, beta)?,
                TemperingMode::Myopic => myopic_tempered_joint(m, beta)?,
            };
            Ok(entropy(&joint))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TemperingCurve {
        betas: betas.to_vec(),
        entropies,
        mode,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionalTerm {
    /// Position `t` of the conditioning token (1-based, `1 <= t < T`).
    pub step: usize,
    pub context: usize,
    /// `p'_beta(x_t = context)`.
    pub weight: f64,
    /// `H(p_beta(x_{t+1} | x_t = context))`.
    pub entropy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainRuleDecomposition {
    pub marginal_entropy: f64,
    pub conditional_entropy_terms: Vec<ConditionalTerm>,
}

impl ChainRuleDecomposition {
    /// `H(x_1) + sum weight * entropy`, the entropy of the myopic joint.
    pub fn total(&self) -> f64 {
        self.marginal_entropy
            + self
                .conditional_entropy_terms
                .iter()
                .map(|t| t.weight * t.entropy)
                .sum::<f64>()
    }
}

/// Chain rule for the myopic joint:
/// `H = H(x_1) + sum_t sum_v p'_beta(x_t = v) H(p_beta(. | v))`.
///
/// Works for any horizon without enumerating sequences.
pub fn chain_rule_decomposition(m: &ARModel, beta: InverseTemperature) -> ChainRuleDecomposition {
    let tempered = m.myopic(beta);
    let row_entropy: Vec<f64> = tempered.transitions.iter().map(entropy).collect();
    let mut marginal = tempered.initial.probs().to_vec();
    let mut terms = Vec::with_capacity((m.horizon - 1) * m.vocab_size);
    for step in 1..m.horizon {
        terms.extend(marginal.iter().enumerate().map(|(v, &w)| ConditionalTerm {
            step,
            context: v,
            weight: w,
            entropy: row_entropy[v],
        }));
        let mut next = vec![0.0; m.vocab_size];
        for (row, &w) in tempered.transitions.iter().zip(&marginal) {
            for (n, &q) in next.iter_mut().zip(row.probs()) {
                *n += w * q;
            }
        }
        marginal = next;
    }
    ChainRuleDecomposition {
        marginal_entropy: entropy(&tempered.initial),
        conditional_entropy_terms: terms,
    }
}

fn draw(rng: &mut ChaCha8Rng, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &q) in probs.iter().enumerate() {
        acc += q;
        if u < acc {
            return i;
        }
    }
    // Rounding left `u` above the last partial sum.
    probs.iter().rposition(|&q| q > 0.0).unwrap_or(0)
}

/// `n` independent sequences from the selected tempered model.
///
/// Myopic samples are drawn token by token from the tempered rows. Exact
/// samples use backward messages `m_t(x) = sum_x' p(x' | x)^beta m_{t+1}(x')`,
/// so neither mode enumerates the `V^T` sequences.
pub fn sample_sequences(
    m: &ARModel,
    beta: InverseTemperature,
    n: usize,
    seed: u64,
    mode: TemperingMode,
) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match mode {
        TemperingMode::Myopic => {
            let t = m.myopic(beta);
            (0..n)
                .map(|_| {
                    let mut seq = Vec::with_capacity(t.horizon);
                    seq.push(draw(&mut rng, t.initial.probs()));
                    for _ in 1..t.horizon {
                        let prev = *seq.last().unwrap_or(&0);
                        seq.push(draw(&mut rng, t.transitions[prev].probs()));
                    }
                    seq
                })
                .collect()
        }
        TemperingMode::ExactJoint => {
            let b = beta.get();
            let ln = |q: f64| if q > 0.0 { b * q.ln() } else { f64::NEG_INFINITY };
            let log_rows: Vec<Vec<f64>> = m
                .transitions
                .iter()
                .map(|r| r.probs().iter().map(|&q| ln(q)).collect())
                .collect();
            // messages[t][x]: log of the tempered mass of all continuations
            // after emitting x at position t.
            let mut messages = vec![vec![0.0; m.vocab_size]; m.horizon];
            for t in (0..m.horizon.saturating_sub(1)).rev() {
                let (head, tail) = messages.split_at_mut(t + 1);
                let later = &tail[0];
                for (x, slot) in head[t].iter_mut().enumerate() {
                    let terms: Vec<f64> = log_rows[x].iter().zip(later).map(|(a, c)| a + c).collect();
                    *slot = logsumexp(&terms);
                }
            }
            let conditional = |logs: Vec<f64>| {
                let lse = logsumexp(&logs);
                logs.iter().map(|l| (l - lse).exp()).collect::<Vec<f64>>()
            };
            let first = conditional(
                m.initial
                    .probs()
                    .iter()
                    .zip(&messages[0])
                    .map(|(&q, c)| ln(q) + c)
                    .collect(),
            );
            let steps: Vec<Vec<Vec<f64>>> = (1..m.horizon)
                .map(|t| {
                    log_rows
                        .iter()
                        .map(|row| conditional(row.iter().zip(&messages[t]).map(|(a, c)| a + c).collect()))
                        .collect()
                })
                .collect();
            (0..n)
                .map(|_| {
                    let mut seq = Vec::with_capacity(m.horizon);
                    seq.push(draw(&mut rng, &first));
                    for step in &steps {
                        let prev = *seq.last().unwrap_or(&0);
                        seq.push(draw(&mut rng, &step[prev]));
                    }
                    seq
                })
                .collect()
        }
    }
}
