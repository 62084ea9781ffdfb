use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::calibrate::{sensitivity_sample_size, NormOrder, PrivacyParams};
use super::rng::{stream, Rng};
use crate::error::{Error, Result};
use crate::solver::{SolverSettings, Status};

/// Generator of α-adjacent dataset pairs together with the released query.
///
/// Pairs are built directly inside the α-ball, so no rejection is needed.
pub trait AdjacencyModel: Sync {
    type Dataset: Send;

    fn alpha(&self) -> f64;

    fn sample_pair(&self, rng: &mut Rng) -> (Self::Dataset, Self::Dataset);

    /// `q(x*(D))`; solver failures surface as `Error::Infeasible`.
    fn query(&self, data: &Self::Dataset, settings: &SolverSettings) -> Result<DVector<f64>>;
}

#[derive(Debug, Clone, Copy)]
pub struct SensitivityConfig {
    pub p: NormOrder,
    pub gamma: f64,
    pub beta: f64,
    /// Overrides the minimal sample size; must not be smaller than it.
    pub samples: Option<usize>,
    pub seed: u64,
    pub settings: SolverSettings,
}

impl SensitivityConfig {
    pub fn new(p: NormOrder, gamma: f64, beta: f64, seed: u64) -> Self {
        Self { p, gamma, beta, samples: None, seed, settings: SolverSettings::default() }
    }

    pub fn with_samples(mut self, s: usize) -> Self {
        self.samples = Some(s);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub p: NormOrder,
    #[serde(with = "crate::util::inf_f64")]
    pub alpha: f64,
    pub gamma: f64,
    pub beta: f64,
    #[serde(rename = "S")]
    pub sample_size: usize,
    pub delta_p: f64,
    pub failures: usize,
    /// Per-sample query gaps in sample order; `None` for dropped samples.
    #[serde(skip)]
    pub gaps: Vec<Option<f64>>,
}

impl SensitivityReport {
    pub fn privacy(&self, epsilon: f64, delta: f64) -> PrivacyParams {
        PrivacyParams {
            epsilon,
            delta,
            alpha: self.alpha,
            p: self.p,
            delta_p: self.delta_p,
            gamma: self.gamma,
            beta: self.beta,
            sample_size: self.sample_size,
        }
    }
}

/// Maximum sampled query change over adjacent pairs. Sample `s` draws from
/// stream `s + 1`, so a larger sample extends a smaller one.
pub fn estimate_sensitivity<M: AdjacencyModel>(model: &M, cfg: &SensitivityConfig) -> Result<SensitivityReport> {
    let min = sensitivity_sample_size(cfg.gamma, cfg.beta)?;
    let s = cfg.samples.unwrap_or(min);
    if s < min {
        return Err(Error::arg(format!(
            "{s} samples is below the required {min} for γ = {}, β = {}",
            cfg.gamma, cfg.beta
        )));
    }
    if s == 0 {
        return Err(Error::arg("at least one sample is required"));
    }
    let outcomes: Vec<Result<f64, (usize, Status)>> = (0..s)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(cfg.seed, i as u64 + 1);
            let (d, d2) = model.sample_pair(&mut rng);
            let eval = |ds| match model.query(ds, &cfg.settings) {
                Ok(q) => Ok(q),
                Err(Error::Infeasible(st)) => Err((i, st)),
                Err(Error::NumericalBreakdown(_)) => Err((i, Status::MaxIter)),
                Err(_) => Err((i, Status::MaxIter)),
            };
            let (q, q2) = (eval(&d)?, eval(&d2)?);
            let diff: Vec<f64> = q.iter().zip(q2.iter()).map(|(a, b)| a - b).collect();
            Ok(cfg.p.norm(&diff))
        })
        .collect();

    let failures: Vec<(usize, Status)> = outcomes.iter().filter_map(|o| o.as_ref().err().copied()).collect();
    if !failures.is_empty() && failures.len() as f64 >= 0.01 * s as f64 {
        let (index, status) = failures[0];
        return Err(Error::SolveFailure { index, status });
    }
    let gaps: Vec<Option<f64>> = outcomes.iter().map(|o| o.as_ref().ok().copied()).collect();
    let delta_p = gaps.iter().flatten().copied().fold(0.0, f64::max);
    Ok(SensitivityReport {
        p: cfg.p,
        alpha: model.alpha(),
        gamma: cfg.gamma,
        beta: cfg.beta,
        sample_size: s,
        delta_p,
        failures: failures.len(),
        gaps,
    })
}
