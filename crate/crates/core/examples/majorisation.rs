//! Tempering orders distributions by majorisation.

use tempering::geometry::{geodesic_alpha, geodesic_point, majorisation_compare};
use tempering::simplex::{entropy, temper_probs};
use tempering::{InverseTemperature, ProbVector};

fn main() -> tempering::Result<()> {
    let p = ProbVector::new(vec![0.1, 0.2, 0.3, 0.4])?;
    let warm = temper_probs(&p, InverseTemperature::new(0.5)?);
    let cold = temper_probs(&p, InverseTemperature::new(3.0)?);
    let v = majorisation_compare(&warm, &cold)?;
    println!("warm vs cold: {:?}", v.relation);
    println!("  prefix sums warm: {:.4?}", v.first_prefix);
    println!("  prefix sums cold: {:.4?}", v.second_prefix);
    println!("  entropies: {:.4} >= {:.4}", entropy(&warm), entropy(&cold));

    // The tempering path is the geodesic between any two of its points.
    let alpha = geodesic_alpha(0.5, 1.0, 3.0);
    let mid = geodesic_point(&warm, &cold, alpha)?;
    println!("geodesic at beta = 1: {:.6?} (p = {:?})", mid.probs(), p.probs());

    let a = ProbVector::new(vec![0.4, 0.4, 0.1, 0.1])?;
    let b = ProbVector::new(vec![0.5, 0.2, 0.2, 0.1])?;
    let v = majorisation_compare(&a, &b)?;
    println!("crossing pair: {:?}, prefix sums cross at index {:?}", v.relation, v.witness);
    Ok(())
}
