use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use crate::conic::{cone_membership, ConicProgram};
use crate::dp::{monte_carlo_noise, NoiseSpec};
use crate::error::{Error, Result};
use crate::ldr::DecisionRule;
use crate::risk::cvar_empirical;
use crate::solver::Solution;
use crate::util::{binomial_se, mean_se};

/// Membership tolerance, scaled by `1 + ‖b‖∞` of the program.
pub const FEASIBILITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleRecord {
    pub loss: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuleMetrics {
    /// `cᵀx*` of the deterministic optimum.
    pub base_objective: f64,
    pub mean_loss: f64,
    pub loss_se: f64,
    /// Mean of the worst 5% of losses.
    pub cvar05: f64,
    pub infeasibility_rate: f64,
    pub infeasibility_se: f64,
    pub samples: Vec<SampleRecord>,
}

impl RuleMetrics {
    /// Mean loss as a percentage of `|cᵀx*|`.
    pub fn loss_percent(&self) -> f64 {
        100.0 * self.mean_loss / self.base_objective.abs().max(f64::MIN_POSITIVE)
    }
}

/// Monte Carlo loss `cᵀ(x̄ + Xζ) − cᵀx*` and infeasibility of `x̄ + Xζ` in the
/// base program over `count` draws.
pub fn evaluate_rule_metrics(
    rule: &DecisionRule,
    program: &ConicProgram,
    base: &Solution,
    noise: &NoiseSpec,
    count: usize,
    seed: u64,
) -> Result<RuleMetrics> {
    if rule.n() != program.n() || noise.dim != rule.k() {
        return Err(Error::dim(format!(
            "rule is {}×{}, program has n = {}, noise dim {}",
            rule.n(),
            rule.k(),
            program.n(),
            noise.dim
        )));
    }
    let draws = monte_carlo_noise(noise, seed, count)?;
    let xs: Vec<DVector<f64>> = (0..count).map(|s| rule.eval(&draws.row(s).transpose())).collect();
    evaluate_points(program, base, &xs)
}

/// Same statistics for an explicit list of perturbed solutions.
pub fn evaluate_points(program: &ConicProgram, base: &Solution, xs: &[DVector<f64>]) -> Result<RuleMetrics> {
    if xs.is_empty() {
        return Err(Error::arg("no samples to evaluate"));
    }
    let best = program.objective(&base.x);
    let tol = FEASIBILITY_TOL * (1.0 + program.b.amax());
    let samples: Vec<SampleRecord> = xs
        .par_iter()
        .map(|x| {
            let s = program.slack(x)?;
            Ok(SampleRecord {
                loss: program.objective(x) - best,
                feasible: cone_membership(s.as_slice(), &program.cones, tol)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(summarize(best, samples))
}

pub(crate) fn summarize(base_objective: f64, samples: Vec<SampleRecord>) -> RuleMetrics {
    let losses: Vec<f64> = samples.iter().map(|r| r.loss).collect();
    let (mean_loss, loss_se) = mean_se(&losses);
    let bad = samples.iter().filter(|r| !r.feasible).count();
    let rate = bad as f64 / samples.len() as f64;
    RuleMetrics {
        base_objective,
        mean_loss,
        loss_se,
        cvar05: cvar_empirical(&losses, 0.95).unwrap_or(f64::NAN),
        infeasibility_rate: rate,
        infeasibility_se: binomial_se(rate, samples.len()),
        samples,
    }
}
