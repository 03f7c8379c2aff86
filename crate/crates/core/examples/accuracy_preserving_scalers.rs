//! Which linear scalers keep every argmax, and what they reduce to.

use tempering::scalers::{
    apply_scaler, check_structure, find_argmax_violation, make_accuracy_preserving, InputSpace, LinearScaler,
    ScalerInput, DEFAULT_STRUCT_TOL,
};
use tempering::simplex::temper;
use tempering::{InverseTemperature, LogitVector};

fn main() -> tempering::Result<()> {
    let good = make_accuracy_preserving(3.0, &[1.0, -2.0, 0.0], 5.0, InputSpace::Logits)?;
    let z = LogitVector::new(vec![0.4, 1.1, -0.7])?;
    println!("scaled:   {:.6?}", apply_scaler(&good, ScalerInput::Logits(&z))?.probs());
    println!("tempered: {:.6?}", temper(&z, InverseTemperature::new(3.0)?).probs());
    println!("{:?}", check_structure(&good, DEFAULT_STRUCT_TOL));

    let diagonal = LinearScaler::new(
        vec![vec![2.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
        vec![0.0; 3],
        InputSpace::Logits,
    )?;
    let report = check_structure(&diagonal, DEFAULT_STRUCT_TOL);
    let witness = find_argmax_violation(&diagonal, 10_000, 0);
    println!("diag(2, 1, 1): conforms = {}, witness = {:?}", report.conforms, witness.map(LogitVector::into_inner));
    Ok(())
}
