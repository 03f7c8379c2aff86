//! Fit the inverse temperature of a synthetic classifier with both rules.
//!
//! The logits are drawn so that the true labels follow `softmax(2 z)`, so a
//! well-behaved fit should land near `beta = 2`.

use tempering::calibrate::{fit_temperature_ec, fit_temperature_nll, metrics, synthetic_set, FitConfig};
use tempering::InverseTemperature;

fn main() -> tempering::Result<()> {
    let cal = synthetic_set(20_000, 5, 2.0, 7)?;
    let cfg = FitConfig::default();

    let nll = fit_temperature_nll(&cal, &cfg)?;
    let ec = fit_temperature_ec(&cal, &cfg)?;
    println!("cross-entropy fit:          beta = {:.4} ({} iterations)", nll.beta_hat, nll.iterations);
    println!("expectation-consistent fit: beta = {:.4}", ec.beta_hat);

    for (label, beta) in [("before", 1.0), ("after", nll.beta_hat)] {
        let m = metrics(&cal, InverseTemperature::new(beta)?);
        println!(
            "{label:>6}: NLL {:.4}  accuracy {:.4}  mean confidence {:.4}",
            m.cross_entropy, m.accuracy, m.mean_confidence
        );
    }
    Ok(())
}
