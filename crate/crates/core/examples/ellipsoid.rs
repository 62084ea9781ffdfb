//! Largest inscribed ellipse of a polygon, privately.
//!
//!     cargo run --release --example ellipsoid

use dp_conic::apps::{
    ellipsoid_sensitivity, evaluate_ellipsoids, privatize_ellipsoid, solve_ellipsoid, EllipsoidInstance,
};
use dp_conic::ldr::ChanceSpec;
use dp_conic::SolverSettings;

fn main() -> dp_conic::Result<()> {
    let settings = SolverSettings::default();
    let inst =
        EllipsoidInstance::new(vec![[-1.0, 0.0], [0.0, -1.0], [1.0, 1.0], [1.0, -0.5]], vec![1.0, 1.0, 2.0, 1.5])?;
    let (best, _) = solve_ellipsoid(&inst, &settings)?;
    println!("non-private: centre ({:.3}, {:.3}), volume {:.3}", best.z[0], best.z[1], best.volume());

    let rep = ellipsoid_sensitivity(&inst, 0.01, 0.1, 0.1, 3)?;
    let privacy = rep.privacy(1.0, 0.1);
    let p = privatize_ellipsoid(&inst, &privacy, &ChanceSpec::vertex(0.1, 0.01), 32, 1, &settings)?;
    let nominal = p.nominal();
    println!(
        "Δ₂ ≈ {:.4}, σ = {:.4}; nominal centre ({:.3}, {:.3}), volume {:.3}",
        rep.delta_p,
        p.noise.scale,
        nominal.z[0],
        nominal.z[1],
        nominal.volume()
    );
    let released = p.released();
    println!("released ellipse contained: {}", released.contained_in(&inst, 1e-9));

    let m = evaluate_ellipsoids(&inst, &p.rule, &p.noise, 2000, 9)?;
    println!("containment {:.3}, mean volume {:.3} ± {:.3}", m.containment_rate, m.mean_volume, m.volume_se);
    Ok(())
}
