//! # tempering
//!
//! Temperature scaling, end to end: fitting the inverse temperature of a
//! classifier, the entropy geometry of tempered distributions, majorisation,
//! the structure of accuracy-preserving linear scalers, and tempering of toy
//! autoregressive models.
//!
//! | Module | What it covers |
//! |---|---|
//! | [`simplex`] | softmax, tempering of logits and of probabilities, `log Z` and its derivatives, entropies |
//! | [`calibrate`] | cross-entropy and expectation-consistency fits of `beta`, with degenerate-set handling |
//! | [`geometry`] | entropy-constrained KL projection, geodesics, majorisation, tempered class proportions |
//! | [`scalers`] | matrix scaling / Dirichlet calibration, accuracy-preserving structure check and violation search |
//! | [`autoregressive`] | exact vs per-step (myopic) tempering of first-order token models |
//! | [`cli`] | the `tempering` batch tool |
//!
//! Inverse temperatures are `beta = 1 / T`: `beta < 1` flattens a
//! distribution, `beta > 1` sharpens it. Entropies are in nats.
//!
//! ```
//! use tempering::simplex::{entropy, temper_probs, InverseTemperature, ProbVector};
//!
//! let p = ProbVector::new(vec![0.4, 0.35, 0.25]).unwrap();
//! let cooled = temper_probs(&p, InverseTemperature::new(4.0).unwrap());
//! assert!(entropy(&cooled) < entropy(&p));
//! ```

pub mod autoregressive;
pub mod calibrate;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod scalers;
pub mod simplex;

pub use error::{Error, Result};
pub use simplex::{InverseTemperature, LogitVector, ProbVector};
