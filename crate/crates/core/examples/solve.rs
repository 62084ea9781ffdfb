//! Builds a small second-order cone program, solves it and checks the KKT residuals.
//!
//!     cargo run --example solve

use dp_conic::conic::{Affine, ConicBuilder};
use dp_conic::solver::kkt_report;
use dp_conic::{build_simple_lp, solve, SolverSettings};

fn main() -> dp_conic::Result<()> {
    let settings = SolverSettings::default();

    // min x s.t. 10 ≤ x ≤ 30
    let lp = build_simple_lp(1.0, 10.0, 30.0)?;
    let sol = solve(&lp, &settings)?;
    println!("simple LP: {:?}, x = {:.8}", sol.status, sol.x[0]);

    // min x + y s.t. ‖(x − 1, y − 2)‖ ≤ 1
    let mut bld = ConicBuilder::new();
    let x = bld.add_var("x");
    let y = bld.add_var("y");
    bld.set_cost(x, 1.0);
    bld.set_cost(y, 1.0);
    bld.soc(vec![Affine::constant(1.0), Affine::var(x).plus_const(-1.0), Affine::var(y).plus_const(-2.0)]);
    let program = bld.build();
    let sol = solve(&program, &settings)?;
    let kkt = kkt_report(&program, &sol)?;
    println!(
        "disk: {:?} after {} iterations, (x, y) = ({:.6}, {:.6}), objective {:.6} (exact {:.6})",
        sol.status,
        sol.iterations,
        sol.x[x],
        sol.x[y],
        sol.objective,
        3.0 - std::f64::consts::SQRT_2
    );
    println!("KKT max residual {:.1e} ({kkt:?})", kkt.max());
    Ok(())
}
