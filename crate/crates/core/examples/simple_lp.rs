//! Input, output and program perturbation on `min x s.t. ℓ ≤ x ≤ u`, where the
//! lower bound is the private datum.
//!
//!     cargo run --release --example simple_lp

use dp_conic::apps::{evaluate_rule_metrics, SimpleLp};
use dp_conic::dp::{calibrate_laplace, monte_carlo_noise};
use dp_conic::ldr::{privatize, ChanceSpec, QueryConstraint};
use dp_conic::{solve, SolverSettings};

fn main() -> dp_conic::Result<()> {
    let settings = SolverSettings::default();
    let lp = SimpleLp::default();
    let program = lp.program()?;
    let base = solve(&program, &settings)?.into_optimal()?;
    let (alpha, eps, draws) = (1.0, 1.0, 10_000);
    let noise = calibrate_laplace(alpha, eps, 1)?;
    let z = monte_carlo_noise(&noise, 7, draws)?;

    // output perturbation releases x* + ζ, input perturbation re-solves with ℓ + ζ;
    // both land below ℓ half the time
    let below = z.column(0).iter().filter(|v| base.x[0] + **v < lp.lower).count();
    println!("output/input: {:.1}% of releases below ℓ = {}", 100.0 * below as f64 / draws as f64, lp.lower);

    let chance = ChanceSpec::vertex(0.05, 0.01);
    let pv = privatize(&program, &noise, &QueryConstraint::identity(1), &chance, 7)?;
    let (rule, _) = pv.solve(&settings)?;
    let m = evaluate_rule_metrics(&rule, &program, &base, &noise, draws, 7)?;
    println!(
        "program: x̄ = {:.3} (vertex S = {:?}), infeasible {:.2}%, mean loss {:.3}",
        rule.xbar[0],
        pv.sample_size,
        100.0 * m.infeasibility_rate,
        m.mean_loss
    );
    Ok(())
}
