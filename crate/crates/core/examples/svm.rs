//! Private support vector machine on a two-Gaussian mixture.
//!
//!     cargo run --release --example svm

use dp_conic::apps::{
    accuracy, hyperplane, perturbed_accuracy, privatize_svm, solve_svm, svm_sensitivity, LabeledPoints,
};
use dp_conic::ldr::{ChanceSpec, EtaBar};
use dp_conic::SolverSettings;

fn main() -> dp_conic::Result<()> {
    let settings = SolverSettings::default();
    let train = LabeledPoints::two_gaussians(100, 1e-5, 1, 0)?;
    let scale = train.min_max();
    let train = train.transformed(&scale);
    let test = LabeledPoints::two_gaussians(1000, 1e-5, 1, 1)?.transformed(&scale);

    let rep = svm_sensitivity(&train, 0.1, 0.1, 3)?;
    println!("Δ₁ ≈ {:.2} from {} pairs", rep.delta_p, rep.sample_size);
    let privacy = rep.privacy(1.0, 0.0);

    let base = solve_svm(&train, &settings)?;
    let (w0, b0) = hyperplane(&base.x, 2);
    let p = privatize_svm(&train, &privacy, &ChanceSpec::individual(EtaBar::Each(0.05)), 1, &settings)?;
    let (w, b) = p.nominal();

    let mean = |v: Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
    println!("non-private accuracy  {:.3}", accuracy(&w0, b0, &test));
    println!("output perturbation   {:.3}", mean(perturbed_accuracy(&w0, b0, &p.noise, &test, 100, 9)?));
    println!("program perturbation  {:.3}", mean(perturbed_accuracy(&w, b, &p.noise, &test, 100, 9)?));
    Ok(())
}
