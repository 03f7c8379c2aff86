//! Information projection onto an entropy level set.
//!
//! Moves two distributions to entropy 0.9 nats: the first has to be warmed
//! up (`beta < 1`), the second cooled down (`beta > 1`).

use tempering::geometry::{project_to_entropy, projection_optimality_check, DEFAULT_ENTROPY_TOL};
use tempering::simplex::entropy;
use tempering::ProbVector;

fn main() -> tempering::Result<()> {
    for probs in [vec![0.01, 0.09, 0.9], vec![0.4, 0.35, 0.25]] {
        let p = ProbVector::new(probs)?;
        let r = project_to_entropy(&p, 0.9, DEFAULT_ENTROPY_TOL)?;
        let audit = projection_optimality_check(&p, &r, 1_000, 0);
        println!(
            "H(p) = {:.4} -> beta* = {:.4}, q = {:.4?}, KL(q||p) = {:.4}, audit passed: {audit}",
            entropy(&p),
            r.beta_star,
            r.projected.probs(),
            r.kl_to_original
        );
    }
    Ok(())
}
