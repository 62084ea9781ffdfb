//! Optimality loss of a decision rule and its conditional value-at-risk.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conic::{Affine, ConicBuilder, ConicProgram};
use crate::dp::{monte_carlo_noise, NoiseSpec};
use crate::error::{Error, Result};
use crate::ldr::{DecisionRule, RuleLayout};
use crate::solver::Solution;
use crate::util::mean_se;

/// `ℓ(x) = wᵀx + constant`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearLoss {
    pub weights: Vec<f64>,
    pub constant: f64,
}

impl LinearLoss {
    pub fn new(weights: Vec<f64>) -> Self {
        Self { weights, constant: 0.0 }
    }

    /// Program cost restricted to `subset`.
    pub fn cost_on(c: &DVector<f64>, subset: &[usize]) -> Self {
        let mut w = vec![0.0; c.len()];
        for &i in subset {
            w[i] = c[i];
        }
        Self::new(w)
    }

    pub fn eval(&self, x: &DVector<f64>) -> f64 {
        self.constant + self.weights.iter().zip(x.iter()).map(|(w, v)| w * v).sum::<f64>()
    }

    fn check(&self, n: usize) -> Result<()> {
        if self.weights.len() != n {
            return Err(Error::dim(format!("loss has {} weights, rule has n = {n}", self.weights.len())));
        }
        Ok(())
    }
}

/// CVaR over the worst `1 − q` fraction of `samples` scenario losses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CVaRSpec {
    pub q: f64,
    pub samples: usize,
    pub loss: LinearLoss,
}

impl CVaRSpec {
    pub fn check(&self) -> Result<()> {
        if !(self.q > 0.0 && self.q < 1.0) {
            return Err(Error::arg(format!("q must lie in (0, 1), got {}", self.q)));
        }
        if self.samples == 0 {
            return Err(Error::arg("CVaR needs at least one sample"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossSamples {
    pub mean: f64,
    pub std_err: f64,
    pub samples: Vec<f64>,
}

/// `ℓ(x̄ + Xζₛ) − ℓ(x*)` over `count` Monte Carlo draws.
pub fn optimality_loss(
    rule: &DecisionRule,
    base: &Solution,
    loss: &LinearLoss,
    noise: &NoiseSpec,
    count: usize,
    seed: u64,
) -> Result<LossSamples> {
    loss.check(rule.n())?;
    if noise.dim != rule.k() {
        return Err(Error::dim(format!("noise dim {} but rule has k = {}", noise.dim, rule.k())));
    }
    let best = loss.eval(&base.x);
    let draws = monte_carlo_noise(noise, seed, count)?;
    // ℓ is linear: ℓ(x̄ + Xζ) = ℓ(x̄) + (wᵀX)ζ
    let w = DVector::from_column_slice(&loss.weights);
    let nominal = loss.eval(&rule.xbar) - best;
    let g = rule.x.tr_mul(&w);
    let samples: Vec<f64> = (0..count).into_par_iter().map(|s| nominal + draws.row(s).dot(&g.transpose())).collect();
    let (mean, std_err) = mean_se(&samples);
    Ok(LossSamples { mean, std_err, samples })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvarValue {
    pub cvar: f64,
    /// Smallest minimising `γ`, an empirical `q`-quantile of the losses.
    pub var: f64,
}

/// `min_γ γ + Σₛ[lossₛ − γ]⁺ / ((1 − q)S)`.
pub fn cvar_empirical(losses: &[f64], q: f64) -> Result<f64> {
    Ok(cvar_and_var(losses, q)?.cvar)
}

pub fn cvar_and_var(losses: &[f64], q: f64) -> Result<CvarValue> {
    if losses.is_empty() {
        return Err(Error::arg("no losses"));
    }
    if !(0.0..1.0).contains(&q) {
        return Err(Error::arg(format!("q must lie in [0, 1), got {q}")));
    }
    let mut v = losses.to_vec();
    v.sort_by(f64::total_cmp);
    let denom = (1.0 - q) * v.len() as f64;
    // The objective is piecewise linear and convex with kinks at the samples;
    // evaluate it at each one using suffix sums of the tail above it.
    let mut best = CvarValue { cvar: f64::INFINITY, var: v[0] };
    let mut tail = 0.0;
    for i in (0..v.len()).rev() {
        let g = v[i];
        let f = g + (tail - (v.len() - 1 - i) as f64 * g) / denom;
        if f <= best.cvar {
            best = CvarValue { cvar: f, var: g };
        }
        tail += g;
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CvarObjective {
    /// CVaR is the whole objective.
    Replace,
    /// `(1 − w)·original + w·CVaR`.
    Blend(f64),
}

#[derive(Debug, Clone)]
pub struct CvarProgram {
    pub program: ConicProgram,
    pub gamma: usize,
    pub z: Vec<usize>,
}

impl CvarProgram {
    /// `γ*`, the value-at-risk of the sampled losses at the optimum.
    pub fn var(&self, sol: &Solution) -> f64 {
        sol.x[self.gamma]
    }
}

/// Adds `γ, z₁..z_S` with `zₛ ≥ 0`, `zₛ ≥ ℓ(x̄ + Xζₛ) − γ` and the CVaR term to
/// the objective. Query structure on `X` is left untouched.
pub fn augment_with_cvar(
    transformed: &ConicProgram,
    layout: &RuleLayout,
    spec: &CVaRSpec,
    draws: &DMatrix<f64>,
    mode: CvarObjective,
) -> Result<CvarProgram> {
    spec.check()?;
    spec.loss.check(layout.n)?;
    if draws.ncols() != layout.k || draws.nrows() != spec.samples {
        return Err(Error::dim(format!("draws are {:?}, expected {} × {}", draws.shape(), spec.samples, layout.k)));
    }
    let w = match mode {
        CvarObjective::Replace => 1.0,
        CvarObjective::Blend(w) if (0.0..=1.0).contains(&w) => w,
        CvarObjective::Blend(w) => return Err(Error::arg(format!("blend weight must lie in [0, 1], got {w}"))),
    };
    let mut bld = ConicBuilder::from_program(transformed);
    for j in 0..transformed.n() {
        bld.set_cost(j, (1.0 - w) * transformed.c[j]);
    }
    let gamma = bld.add_var("cvar_gamma");
    bld.set_cost(gamma, w);
    let z = bld.add_vars("cvar_z", spec.samples);
    let per = w / ((1.0 - spec.q) * spec.samples as f64);
    let scenario: Vec<Affine> = (0..spec.samples)
        .into_par_iter()
        .map(|s| {
            let zeta: Vec<f64> = draws.row(s).iter().copied().collect();
            layout.at(&spec.loss.weights, &zeta).plus_const(spec.loss.constant)
        })
        .collect();
    for (s, l) in scenario.into_iter().enumerate() {
        bld.set_cost(z[s], per);
        bld.nonneg(Affine::var(z[s]));
        bld.nonneg(Affine::var(z[s]) + Affine::var(gamma) - l);
    }
    Ok(CvarProgram { program: bld.build(), gamma, z })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::build_simple_lp;
    use crate::ldr::{privatize, ChanceSpec, QueryConstraint};
    use crate::solver::{solve, SolverSettings};

    fn brute_force(losses: &[f64], q: f64) -> f64 {
        let lo = losses.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = losses.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let denom = (1.0 - q) * losses.len() as f64;
        (0..=100_000)
            .map(|i| lo + (hi - lo) * i as f64 / 100_000.0)
            .map(|g| g + losses.iter().map(|l| (l - g).max(0.0)).sum::<f64>() / denom)
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn worst_quarter() {
        let l = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(cvar_empirical(&l, 0.75).unwrap(), 4.0);
        assert!((brute_force(&l, 0.75) - 4.0).abs() < 1e-9);
        assert!((cvar_empirical(&l, 0.5).unwrap() - 3.5).abs() < 1e-12);
    }

    #[test]
    fn limits() {
        let l = [3.0, -1.0, 7.0, 0.5, 2.0];
        assert!((cvar_empirical(&l, 0.0).unwrap() - 2.3).abs() < 1e-12);
        for q in [0.1, 0.5, 0.9] {
            assert_eq!(cvar_empirical(&[2.5; 7], q).unwrap(), 2.5);
        }
        assert_eq!(cvar_empirical(&[4.2], 0.99).unwrap(), 4.2);
    }

    #[test]
    fn matches_grid_oracle() {
        let l = [0.3, 1.7, -0.4, 2.2, 0.9, 1.1, 3.0];
        for q in [0.2, 0.45, 0.8, 0.9] {
            let c = cvar_empirical(&l, q).unwrap();
            assert!((c - brute_force(&l, q)).abs() < 1e-3, "q = {q}");
        }
    }

    #[test]
    fn var_is_quantile() {
        let l: Vec<f64> = (1..=10).map(f64::from).collect();
        let v = cvar_and_var(&l, 0.8).unwrap();
        assert_eq!(v.var, 8.0);
        assert!((v.cvar - 9.5).abs() < 1e-12);
    }

    #[test]
    fn deterministic_rule_has_zero_loss() {
        let p = build_simple_lp(1.0, 1.0, 3.0).unwrap();
        let sol = solve(&p, &SolverSettings::default()).unwrap();
        let rule = DecisionRule::constant(sol.x.clone(), 1);
        let noise = NoiseSpec::laplace(1, 1.0).unwrap();
        let l = optimality_loss(&rule, &sol, &LinearLoss::new(vec![1.0]), &noise, 100, 0).unwrap();
        assert!(l.samples.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn frozen_rule_reproduces_sort_cvar() {
        let p = build_simple_lp(1.0, 10.0, 30.0).unwrap();
        let noise = NoiseSpec::laplace(1, 1.0).unwrap();
        let pv = privatize(&p, &noise, &QueryConstraint::sum(1), &ChanceSpec::vertex(0.05, 0.01), 2).unwrap();
        let (rule, _) = pv.solve(&SolverSettings::default()).unwrap();
        let spec = CVaRSpec { q: 0.9, samples: 200, loss: LinearLoss::new(vec![1.0]) };
        let draws = monte_carlo_noise(&noise, 5, 200).unwrap();
        let aug = augment_with_cvar(&pv.program, &pv.layout, &spec, &draws, CvarObjective::Replace).unwrap();
        let mut bld = ConicBuilder::from_program(&aug.program);
        bld.eq(Affine::var(pv.layout.xbar[0]).plus_const(-rule.xbar[0]));
        let sol = solve(&bld.build(), &SolverSettings::default().with_tol(1e-11)).unwrap();
        let losses: Vec<f64> = (0..200).map(|s| rule.xbar[0] + draws[(s, 0)]).collect();
        let expect = cvar_empirical(&losses, 0.9).unwrap();
        assert!((sol.objective - expect).abs() < 1e-7 * (1.0 + expect.abs()), "{} vs {expect}", sol.objective);
    }
}
