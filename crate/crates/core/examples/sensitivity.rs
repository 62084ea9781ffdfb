//! Sampled sensitivity of the simple LP and of the OPF cost, next to the
//! closed-form values they should approach.
//!
//!     cargo run --release --example sensitivity

use dp_conic::apps::{opf_sensitivity_bound, OpfAdjacency, PowerNetwork, SimpleLp, SimpleLpAdjacency};
use dp_conic::dp::{estimate_sensitivity, sensitivity_sample_size, NormOrder, SensitivityConfig};

fn main() -> dp_conic::Result<()> {
    println!("pairs needed for γ = β = 0.1: {}", sensitivity_sample_size(0.1, 0.1)?);

    for alpha in [0.5, 1.0, 2.0] {
        let model = SimpleLpAdjacency { base: SimpleLp::default(), alpha };
        let rep = estimate_sensitivity(&model, &SensitivityConfig::new(NormOrder::L1, 0.1, 0.1, 1))?;
        println!("simple LP α = {alpha}: Δ₁ ≈ {:.4} from {} pairs (exact {alpha})", rep.delta_p, rep.sample_size);
    }

    let net = PowerNetwork::bundled("net5")?;
    for alpha in [1.0, 3.0, 10.0] {
        let model = OpfAdjacency { net: net.clone(), alpha };
        let rep = estimate_sensitivity(&model, &SensitivityConfig::new(NormOrder::L1, 0.1, 0.1, 2).with_samples(500))?;
        println!(
            "net5 α = {alpha}: Δ₁ ≈ {:.3}, bound max(c)·α = {:.3}",
            rep.delta_p,
            opf_sensitivity_bound(&net.c, alpha)
        );
    }
    Ok(())
}
