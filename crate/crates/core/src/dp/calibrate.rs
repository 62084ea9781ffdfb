use serde::{Deserialize, Serialize};

use super::noise::{NoiseFamily, NoiseSpec};
use crate::error::{Error, Result};

/// How a Laplace scale is derived from `(Δ₁, ε)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScaleConvention {
    /// `s = Δ₁/ε`, the standard Laplace mechanism.
    #[default]
    SensitivityOverEpsilon,
    /// `s = ε/Δ₁`, an alternative reading kept for reproducing published settings.
    EpsilonOverSensitivity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum NormOrder {
    L1,
    L2,
}

impl NormOrder {
    pub fn p(&self) -> u8 {
        match self {
            NormOrder::L1 => 1,
            NormOrder::L2 => 2,
        }
    }

    pub fn norm(&self, v: &[f64]) -> f64 {
        match self {
            NormOrder::L1 => v.iter().map(|x| x.abs()).sum(),
            NormOrder::L2 => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
        }
    }

    /// Natural norm for a noise family: `ℓ₁` for Laplace, `ℓ₂` for Gaussian.
    pub fn for_family(f: NoiseFamily) -> Self {
        match f {
            NoiseFamily::Laplace => NormOrder::L1,
            NoiseFamily::Gaussian => NormOrder::L2,
        }
    }
}

impl From<NormOrder> for u8 {
    fn from(p: NormOrder) -> u8 {
        p.p()
    }
}

impl TryFrom<u8> for NormOrder {
    type Error = String;

    fn try_from(p: u8) -> std::result::Result<Self, String> {
        match p {
            1 => Ok(NormOrder::L1),
            2 => Ok(NormOrder::L2),
            other => Err(format!("norm order must be 1 or 2, got {other}")),
        }
    }
}

/// Privacy budget, adjacency radius and the estimated sensitivity with the
/// confidence parameters of its estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyParams {
    pub epsilon: f64,
    pub delta: f64,
    /// Adjacency radius; may be `+∞`.
    #[serde(with = "crate::util::inf_f64")]
    pub alpha: f64,
    pub p: NormOrder,
    pub delta_p: f64,
    pub gamma: f64,
    pub beta: f64,
    #[serde(rename = "S")]
    pub sample_size: usize,
}

impl PrivacyParams {
    /// Noise calibrated to `delta_p`: Laplace for `p = 1`, Gaussian for `p = 2`.
    pub fn noise(&self, dim: usize) -> Result<NoiseSpec> {
        match self.p {
            NormOrder::L1 => calibrate_laplace(self.delta_p, self.epsilon, dim),
            NormOrder::L2 => calibrate_gaussian(self.delta_p, self.epsilon, self.delta, dim),
        }
    }
}

pub fn calibrate_laplace(delta1: f64, epsilon: f64, dim: usize) -> Result<NoiseSpec> {
    calibrate_laplace_with(delta1, epsilon, dim, ScaleConvention::default())
}

pub fn calibrate_laplace_with(delta1: f64, epsilon: f64, dim: usize, convention: ScaleConvention) -> Result<NoiseSpec> {
    if !(delta1 > 0.0 && epsilon > 0.0) {
        return Err(Error::arg(format!("need Δ₁ > 0 and ε > 0, got Δ₁ = {delta1}, ε = {epsilon}")));
    }
    let scale = match convention {
        ScaleConvention::SensitivityOverEpsilon => delta1 / epsilon,
        ScaleConvention::EpsilonOverSensitivity => epsilon / delta1,
    };
    NoiseSpec::laplace(dim, scale)
}

/// `σ = √(2 ln(1.25/δ)) Δ₂/ε`.
pub fn calibrate_gaussian(delta2: f64, epsilon: f64, delta: f64, dim: usize) -> Result<NoiseSpec> {
    if !(delta2 > 0.0 && epsilon > 0.0) {
        return Err(Error::arg(format!("need Δ₂ > 0 and ε > 0, got Δ₂ = {delta2}, ε = {epsilon}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::arg(format!("δ must lie in (0, 1), got {delta}")));
    }
    NoiseSpec::gaussian(dim, gaussian_multiplier(delta) * delta2 / epsilon)
}

fn gaussian_multiplier(delta: f64) -> f64 {
    (2.0 * (1.25 / delta).ln()).sqrt()
}

/// Samples needed so the sampled sensitivity is a `(γ, β)` lower bound:
/// `⌈1/(γβ) − 1⌉`.
pub fn sensitivity_sample_size(gamma: f64, beta: f64) -> Result<usize> {
    if !(gamma > 0.0 && gamma < 1.0 && beta > 0.0 && beta < 1.0) {
        return Err(Error::arg(format!("γ and β must lie in (0, 1), got γ = {gamma}, β = {beta}")));
    }
    Ok(ceil_tol(1.0 / (gamma * beta) - 1.0))
}

/// Ceiling that ignores round-off just above an integer.
pub(crate) fn ceil_tol(x: f64) -> usize {
    let r = x.round();
    let v = if (x - r).abs() <= 1e-9 * x.abs().max(1.0) { r } else { x.ceil() };
    v.max(0.0) as usize
}

/// Whether two nominal query values are close enough for the calibrated noise
/// to cover them: `‖Δq‖₁ ≤ ε·s` (Laplace) or `‖Δq‖₂ ≤ Δ₂` (Gaussian).
pub fn privacy_ratio_check(q_d: &[f64], q_d_adj: &[f64], spec: &NoiseSpec, epsilon: f64, delta: f64) -> bool {
    if q_d.len() != q_d_adj.len() {
        return false;
    }
    let gap: Vec<f64> = q_d.iter().zip(q_d_adj).map(|(a, b)| a - b).collect();
    let slack = 1e-12;
    match spec.family {
        NoiseFamily::Laplace => {
            let bound = epsilon * spec.scale;
            NormOrder::L1.norm(&gap) <= bound * (1.0 + slack)
        }
        NoiseFamily::Gaussian => {
            if !(delta > 0.0 && delta < 1.0) {
                return false;
            }
            let delta2 = spec.scale * epsilon / gaussian_multiplier(delta);
            NormOrder::L2.norm(&gap) <= delta2 * (1.0 + slack)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplace_scales() {
        assert_eq!(calibrate_laplace(1.0, 1.0, 1).unwrap().scale, 1.0);
        assert_eq!(calibrate_laplace(21.8, 1.0, 1).unwrap().scale, 21.8);
        assert_eq!(calibrate_laplace(2.0, 4.0, 1).unwrap().scale, 0.5);
        let alt = calibrate_laplace_with(21.8, 1.0, 1, ScaleConvention::EpsilonOverSensitivity).unwrap();
        assert!((alt.scale - 1.0 / 21.8).abs() < 1e-15);
        assert!(calibrate_laplace(0.0, 1.0, 1).is_err());
        assert!(calibrate_laplace(1.0, -1.0, 1).is_err());
    }

    #[test]
    fn gaussian_sigma() {
        // 40-digit evaluation of √(2 ln 125)·0.46
        let s = calibrate_gaussian(0.46, 1.0, 0.01, 1).unwrap().scale;
        assert!((s - 1.429_455_271_642_430_2).abs() < 1e-14, "{s}");
        let d = 1.25 * (-0.5f64).exp();
        let s = calibrate_gaussian(1.0, 1.0, d, 1).unwrap().scale;
        assert!((s - 1.0).abs() < 1e-12);
        let a = calibrate_gaussian(1.0, 1.0, 0.05, 1).unwrap().scale;
        let b = calibrate_gaussian(1.0, 2.0, 0.05, 1).unwrap().scale;
        assert!((a - 2.0 * b).abs() < 1e-15);
        assert!(calibrate_gaussian(1.0, 1.0, 1.0, 1).is_err());
        assert!(calibrate_gaussian(1.0, 1.0, 0.0, 1).is_err());
    }

    #[test]
    fn sample_sizes() {
        assert_eq!(sensitivity_sample_size(0.1, 0.1).unwrap(), 99);
        assert_eq!(sensitivity_sample_size(0.5, 0.1).unwrap(), 19);
        assert_eq!(sensitivity_sample_size(0.05, 0.1).unwrap(), 199);
        assert!(sensitivity_sample_size(0.999_999, 0.999_999).unwrap() <= 1);
        assert!(sensitivity_sample_size(1.0, 0.5).is_err());
    }

    #[test]
    fn ratio_check() {
        let spec = NoiseSpec::laplace(1, 1.0).unwrap();
        assert!(privacy_ratio_check(&[3.0], &[3.0], &spec, 0.01, 0.0));
        assert!(!privacy_ratio_check(&[0.0], &[2.0], &spec, 1.0, 0.0));
        let spec = calibrate_laplace(0.7, 0.3, 1).unwrap();
        assert!(privacy_ratio_check(&[0.0], &[0.7], &spec, 0.3, 0.0));
        let g = calibrate_gaussian(0.5, 1.0, 0.01, 2).unwrap();
        assert!(privacy_ratio_check(&[0.0, 0.0], &[0.3, 0.4], &g, 1.0, 0.01));
        assert!(!privacy_ratio_check(&[0.0, 0.0], &[0.3, 0.5], &g, 1.0, 0.01));
    }

    #[test]
    fn laplace_density_ratio_supremum() {
        // sup over outputs of p(x; 0)/p(x; g) equals e^{g/s}
        let (g, s) = (0.8, 0.5);
        let mut sup: f64 = 0.0;
        for i in -4000..4000 {
            let x = i as f64 * 1e-3;
            sup = sup.max(NoiseSpec::laplace_density(x, 0.0, s) / NoiseSpec::laplace_density(x, g, s));
        }
        assert!((sup - (g / s).exp()).abs() < 1e-9);
        let (d1, eps) = (2.0, 0.7);
        let r = NoiseSpec::laplace_density(-1.0, 0.0, d1 / eps) / NoiseSpec::laplace_density(-1.0, d1, d1 / eps);
        assert!((r - eps.exp()).abs() < 1e-12);
    }
}
