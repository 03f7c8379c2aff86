//! Fit a full matrix scaler and compare it with temperature scaling.

use tempering::calibrate::{fit_temperature_nll, synthetic_set, FitConfig};
use tempering::scalers::{check_structure, fit_matrix_scaler, InputSpace, DEFAULT_STRUCT_TOL};

fn main() -> tempering::Result<()> {
    let cal = synthetic_set(5_000, 3, 1.5, 11)?;
    let temp = fit_temperature_nll(&cal, &FitConfig::default())?;
    println!("temperature scaling: beta = {:.4}, NLL = {:.5}", temp.beta_hat, temp.objective_at_opt);

    for l2 in [0.0, 1e-2, 1.0] {
        let fit = fit_matrix_scaler(&cal, InputSpace::Logits, l2, 500, 1.0)?;
        let report = check_structure(&fit.scaler, DEFAULT_STRUCT_TOL);
        println!(
            "matrix scaling, l2 = {l2:<5}: objective = {:.5}, structure residual = {:.3e}",
            fit.final_loss, report.max_residual
        );
    }
    Ok(())
}
