//! Runs a batch experiment from a JSON config and prints its table.
//!
//!     cargo run --release --example experiment -- crates/core/examples/configs/simple_lp.json

use dp_conic::harness::{run_experiment, ExperimentConfig};

fn main() -> dp_conic::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/simple_lp.json").into());
    let cfg = ExperimentConfig::read(&path)?;
    let rep = run_experiment(&cfg)?;
    println!("{:>9} {:>6} {:>5} {:>12} {:>12} {:>12}  status", "strategy", "α", "q", "loss", "CVaR", "infeasible");
    let show = |v: Option<f64>| v.map_or("--".to_string(), |v| format!("{v:.4}"));
    for r in &rep.rows {
        println!(
            "{:>9} {:>6} {:>5} {:>12} {:>12} {:>12}  {}",
            r.strategy.name(),
            r.alpha,
            r.q.map_or("-".to_string(), |q| q.to_string()),
            show(r.loss_mean),
            show(r.loss_cvar),
            show(r.infeasibility),
            r.status
        );
    }
    println!("wrote {} and {}", rep.csv.display(), rep.manifest.display());
    Ok(())
}
