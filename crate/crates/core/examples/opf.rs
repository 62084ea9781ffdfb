//! Private DC optimal power flow on the bundled 5-bus network. Pass `net3` to
//! use the 3-bus network instead.
//!
//!     cargo run --release --example opf -- net5

use dp_conic::apps::{evaluate_opf_strategy, privatize_opf, PowerNetwork, Strategy};
use dp_conic::ldr::ChanceSpec;
use dp_conic::{Error, SolverSettings, Status};

fn main() -> dp_conic::Result<()> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "net5".into());
    let net = PowerNetwork::bundled(&name)?;
    let settings = SolverSettings::default();
    let chance = ChanceSpec::vertex(0.01, 0.01);

    let p = privatize_opf(&net, 1.0, 3.0, &chance, 1, &settings)?;
    let dispatch: Vec<String> = p.rule.xbar.iter().take(net.c.len()).map(|v| format!("{v:.2}")).collect();
    println!("{name} at α = 3: nominal dispatch [{}]", dispatch.join(", "));
    println!("released cost {:.2} (nominal {:.2})", p.release.released[0], p.release.nominal[0]);

    println!("{:>6} {:>9} {:>12} {:>12}", "α", "strategy", "loss %", "infeasible %");
    for alpha in [1.0, 3.0, 10.0] {
        for s in [Strategy::Input, Strategy::Output, Strategy::Program] {
            match evaluate_opf_strategy(&net, s, 1.0, alpha, &chance, 1000, 11, &settings) {
                Ok(m) => println!(
                    "{alpha:>6} {:>9} {:>12.2} {:>12.1}",
                    s.name(),
                    m.loss_percent(),
                    100.0 * m.infeasibility_rate
                ),
                Err(Error::Infeasible(Status::PrimalInfeasible)) => {
                    println!("{alpha:>6} {:>9} {:>12} {:>12}", s.name(), "--", "--")
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(())
}
