//! Monotone fit of a noisy wind power curve with radial bases.
//!
//!     cargo run --release --example wind_curve

use dp_conic::apps::{
    build_wind_curve_dataset, bundled_wind_curve, evaluate_regression, privatize_regression, regression_sensitivity,
    solve_regression,
};
use dp_conic::ldr::{ChanceSpec, EtaBar};
use dp_conic::SolverSettings;

fn main() -> dp_conic::Result<()> {
    let settings = SolverSettings::default();
    let curve = bundled_wind_curve()?;
    let model = build_wind_curve_dataset(&curve, 0.05, 1e-4, 1)?;
    let k = model.basis.dim();

    let base = solve_regression(&model, &settings)?;
    let w0: Vec<f64> = base.x.rows(0, k).iter().copied().collect();
    println!("non-private fit monotone: {}, loss {:.4}", model.is_monotone(&w0), model.loss(&w0));

    let rep = regression_sensitivity(&model, 0.5, 0.1, 2)?;
    let privacy = rep.privacy(1.0, 0.01);
    println!("Δ₂ ≈ {:.4} from {} pairs", rep.delta_p, rep.sample_size);
    let p = privatize_regression(&model, &privacy, &ChanceSpec::individual(EtaBar::Uniform(0.05)), 1, &settings)?;
    let w = p.nominal();

    for (name, w) in [("output", &w0), ("program", &w)] {
        let m = evaluate_regression(&model, w, &p.noise, 1000, 5)?;
        println!("{name:>8}: violated {:.1}%, mean loss {:.4}", 100.0 * m.violation_rate, m.mean_loss);
    }
    println!("{:>6} {:>8} {:>8} {:>9}", "speed", "curve", "fit", "nominal");
    for &(v, pw) in curve.iter().step_by(4) {
        println!("{v:>6.1} {pw:>8.3} {:>8.3} {:>9.3}", model.predict(&w0, v), model.predict(&w, v));
    }
    Ok(())
}
