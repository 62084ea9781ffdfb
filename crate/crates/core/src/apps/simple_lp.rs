use nalgebra::DVector;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::conic::{build_simple_lp, ConicProgram};
use crate::dp::rng::Rng;
use crate::dp::{AdjacencyModel, PrivateDataset};
use crate::error::{Error, Result};
use crate::solver::{solve, SolverSettings};

/// `min cx` s.t. `ℓ ≤ x ≤ u` with `ℓ` private.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimpleLp {
    pub c: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Default for SimpleLp {
    fn default() -> Self {
        Self { c: 1.0, lower: 10.0, upper: 30.0 }
    }
}

impl SimpleLp {
    pub fn program(&self) -> Result<ConicProgram> {
        build_simple_lp(self.c, self.lower, self.upper)
    }
}

impl PrivateDataset for SimpleLp {
    fn private_values(&self) -> DVector<f64> {
        DVector::from_element(1, self.lower)
    }

    fn with_private_values(&self, v: &DVector<f64>) -> Self {
        Self { lower: v[0], ..*self }
    }

    fn program(&self) -> Result<ConicProgram> {
        SimpleLp::program(self)
    }
}

/// Pairs `(ℓ, ℓ + u)` with `u ∼ U(−α, α)`; the query is `x*`.
#[derive(Debug, Clone, Copy)]
pub struct SimpleLpAdjacency {
    pub base: SimpleLp,
    pub alpha: f64,
}

impl AdjacencyModel for SimpleLpAdjacency {
    type Dataset = SimpleLp;

    fn alpha(&self) -> f64 {
        self.alpha
    }

    fn sample_pair(&self, rng: &mut Rng) -> (SimpleLp, SimpleLp) {
        let u = if self.alpha > 0.0 { rng.random_range(-self.alpha..=self.alpha) } else { 0.0 };
        (self.base, SimpleLp { lower: self.base.lower + u, ..self.base })
    }

    fn query(&self, data: &SimpleLp, settings: &SolverSettings) -> Result<DVector<f64>> {
        let sol = solve(&data.program()?, settings)?;
        if !sol.is_optimal() {
            return Err(Error::Infeasible(sol.status));
        }
        Ok(sol.x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dp::{estimate_sensitivity, NormOrder, SensitivityConfig};

    #[test]
    fn optimum_is_lower_bound() {
        let sol = solve(&SimpleLp::default().program().unwrap(), &SolverSettings::default()).unwrap();
        assert!((sol.x[0] - 10.0).abs() < 1e-7);
    }

    #[test]
    fn sensitivity_approaches_alpha() {
        let m = SimpleLpAdjacency { base: SimpleLp::default(), alpha: 2.0 };
        let cfg = SensitivityConfig::new(NormOrder::L1, 0.1, 0.1, 3).with_samples(2000);
        let r = estimate_sensitivity(&m, &cfg).unwrap();
        assert!(r.delta_p <= 2.0 + 1e-6 && r.delta_p > 1.95, "{}", r.delta_p);
    }
}
