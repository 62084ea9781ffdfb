//! Monotone cubic regression under Gaussian noise.
//!
//!     cargo run --release --example regression

use dp_conic::apps::{
    evaluate_regression, privatize_regression_with, regression_sensitivity, solve_regression, RegressionModel,
};
use dp_conic::dp::calibrate_gaussian;
use dp_conic::ldr::{ChanceSpec, EtaBar};
use dp_conic::SolverSettings;

fn main() -> dp_conic::Result<()> {
    let settings = SolverSettings::default();
    let model = RegressionModel::cubic_example(100, 15.0, 1e-4, 2)?;
    let rep = regression_sensitivity(&model, 0.5, 0.1, 3)?;
    let noise = calibrate_gaussian(rep.delta_p, 1.0, 0.01, 2)?;
    println!("Δ₂ ≈ {:.3}, σ = {:.3}", rep.delta_p, noise.scale);

    let base = solve_regression(&model, &settings)?;
    let w0: Vec<f64> = base.x.rows(0, 2).iter().copied().collect();
    let p = privatize_regression_with(&model, &noise, &ChanceSpec::individual(EtaBar::Uniform(0.03)), 1, &settings)?;

    for (name, w) in [("output", w0), ("program", p.nominal())] {
        let m = evaluate_regression(&model, &w, &noise, 1000, 9)?;
        println!(
            "{name:>8}: w = [{:.3}, {:.3}], monotonicity violated {:.1}%, mean loss {:.0}",
            w[0],
            w[1],
            100.0 * m.violation_rate,
            m.mean_loss
        );
    }
    Ok(())
}
