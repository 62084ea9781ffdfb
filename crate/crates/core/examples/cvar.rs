//! Trading expected cost for tail cost: the decision rule is chosen to
//! minimise CVaR of total dispatch cost at several tail fractions.
//!
//!     cargo run --release --example cvar

use dp_conic::apps::{build_opf, evaluate_rule_metrics, PowerNetwork};
use dp_conic::dp::{calibrate_laplace, rng};
use dp_conic::ldr::{privatize, ChanceSpec, QueryConstraint};
use dp_conic::risk::{augment_with_cvar, CVaRSpec, CvarObjective, LinearLoss};
use dp_conic::{solve, SolverSettings};

fn main() -> dp_conic::Result<()> {
    let settings = SolverSettings::default();
    let net = PowerNetwork::bundled("net3")?;
    let program = build_opf(&net)?;
    let base = solve(&program, &settings)?.into_optimal()?;

    // release the joint output of generators 0 and 2
    let noise = calibrate_laplace(3.0, 1.0, 1)?;
    let seed = 1;
    let pv = privatize(
        &program,
        &noise,
        &QueryConstraint::Sum { support: vec![0, 2] },
        &ChanceSpec::vertex(0.05, 0.01),
        seed,
    )?;
    let samples = 200;
    let draws = noise.draw_many(&mut rng::stream(seed, rng::SCENARIO_STREAM), samples);

    println!("{:>6} {:>10} {:>10}", "tail", "mean", "CVaR 5%");
    for tail in [0.99, 0.5, 0.2, 0.05, 0.01] {
        let spec = CVaRSpec { q: 1.0 - tail, samples, loss: LinearLoss::new(net.c.clone()) };
        let mut p = pv.clone();
        p.program = augment_with_cvar(&pv.program, &pv.layout, &spec, &draws, CvarObjective::Replace)?.program;
        let (rule, _) = p.solve(&settings)?;
        let m = evaluate_rule_metrics(&rule, &program, &base, &noise, 5000, 9)?;
        println!("{:>5.0}% {:>10.2} {:>10.2}", 100.0 * tail, m.mean_loss, m.cvar05);
    }
    Ok(())
}
