//! The log-partition function of tempered logits and its derivatives.
//!
//! `d log Z / d beta` is the tempered mean logit, the second derivative its
//! variance, and entropy falls at rate `beta * variance`.

use tempering::simplex::{log_partition, tempered_entropy};
use tempering::{InverseTemperature, LogitVector};

fn main() -> tempering::Result<()> {
    let z = LogitVector::new(vec![2.0, 0.5, -1.0, 0.0])?;
    println!("{:>6} {:>10} {:>10} {:>10} {:>10}", "beta", "log Z", "E[z]", "Var[z]", "H");
    for beta in [0.1, 0.5, 1.0, 2.0, 5.0] {
        let b = InverseTemperature::new(beta)?;
        let r = log_partition(&z, b);
        println!(
            "{beta:>6} {:>10.5} {:>10.5} {:>10.5} {:>10.5}",
            r.log_z,
            r.first_derivative,
            r.second_derivative,
            tempered_entropy(&z, b)
        );
    }
    Ok(())
}
