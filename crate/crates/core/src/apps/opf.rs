use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{evaluate_rule_metrics, summarize, RuleMetrics, SampleRecord};
use crate::conic::{Affine, ConeKind, ConicBuilder, ConicProgram};
use crate::dp::rng::Rng;
use crate::dp::{calibrate_laplace, monte_carlo_noise, AdjacencyModel, NoiseSpec};
use crate::error::{Error, Result};
use crate::ldr::{
    privatize_with, release_query, ChanceSpec, DecisionRule, PrivatizeOptions, Privatized, QueryConstraint, Release,
};
use crate::solver::{solve, Solution, SolverSettings, Status};

/// DC network with one generator and one load per node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerNetwork {
    pub nodes: usize,
    pub lines: usize,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
    pub xmin: Vec<f64>,
    pub xmax: Vec<f64>,
    pub fmax: Vec<f64>,
    /// `lines × nodes` power transfer distribution factors.
    #[serde(rename = "F")]
    pub f: Vec<Vec<f64>>,
}

const NET3: &str = include_str!("../../data/net3.json");
const NET5: &str = include_str!("../../data/net5.json");

impl PowerNetwork {
    /// Networks shipped with the crate: `net3` and `net5`.
    pub fn bundled(name: &str) -> Result<Self> {
        let s = match name {
            "net3" => NET3,
            "net5" => NET5,
            _ => return Err(Error::arg(format!("unknown bundled network {name:?}, expected net3 or net5"))),
        };
        Self::from_json(s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let net: Self = serde_json::from_str(s)?;
        net.validate()?;
        Ok(net)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.nodes;
        for (name, len) in
            [("c", self.c.len()), ("d", self.d.len()), ("xmin", self.xmin.len()), ("xmax", self.xmax.len())]
        {
            if len != n {
                return Err(Error::dim(format!("{name} has length {len}, network has {n} nodes")));
            }
        }
        if self.fmax.len() != self.lines || self.f.len() != self.lines || self.f.iter().any(|r| r.len() != n) {
            return Err(Error::dim(format!("fmax and F must describe {} lines over {n} nodes", self.lines)));
        }
        let all = self
            .c
            .iter()
            .chain(&self.d)
            .chain(&self.xmin)
            .chain(&self.xmax)
            .chain(&self.fmax)
            .chain(self.f.iter().flatten());
        if all.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::arg("network data must be finite"));
        }
        if self.xmin.iter().zip(&self.xmax).any(|(lo, hi)| lo > hi) {
            return Err(Error::arg("xmin must not exceed xmax"));
        }
        if self.xmax.iter().sum::<f64>() < self.d.iter().sum::<f64>() {
            return Err(Error::arg("total capacity is below total demand"));
        }
        Ok(())
    }

    pub fn ptdf(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.lines, self.nodes, |l, i| self.f[l][i])
    }

    pub fn with_demand(&self, d: Vec<f64>) -> Self {
        Self { d, ..self.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Balance {
    /// `1ᵀ(x − d) = 0`.
    Equality,
    /// `1ᵀ(x − d) ≥ 0`; lets Sum and Identity queries coexist with the balance row.
    Relaxed,
}

pub fn build_opf(net: &PowerNetwork) -> Result<ConicProgram> {
    build_opf_with(net, Balance::Equality)
}

/// Block 0 is the balance row, block 1 stacks `fmax ∓ F(x − d)`, `x − xmin`
/// and `xmax − x`.
pub fn build_opf_with(net: &PowerNetwork, balance: Balance) -> Result<ConicProgram> {
    if net.nodes == 0 {
        return Err(Error::arg("network has no nodes"));
    }
    if net.c.len() != net.nodes || net.d.len() != net.nodes || net.f.len() != net.lines {
        return Err(Error::dim("network vectors do not match its size"));
    }
    let n = net.nodes;
    let mut b = ConicBuilder::new();
    let x = b.add_vars("x", n);
    for i in 0..n {
        b.set_cost(x[i], net.c[i]);
    }
    let total: f64 = net.d.iter().sum();
    let bal = x.iter().fold(Affine::constant(-total), |e, &j| e.plus_term(j, 1.0));
    let kind = match balance {
        Balance::Equality => ConeKind::Zero,
        Balance::Relaxed => ConeKind::NonNeg,
    };
    b.constrain(kind, vec![bal]);

    // F(x − d)
    let flow: Vec<Affine> = net
        .f
        .iter()
        .map(|row| {
            let fd: f64 = row.iter().zip(&net.d).map(|(f, d)| f * d).sum();
            row.iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .fold(Affine::constant(-fd), |e, (i, &v)| e.plus_term(x[i], v))
        })
        .collect();
    let mut rows = Vec::with_capacity(2 * net.lines + 2 * n);
    rows.extend(flow.iter().zip(&net.fmax).map(|(e, &fm)| Affine::constant(fm) - e.clone()));
    rows.extend(flow.iter().zip(&net.fmax).map(|(e, &fm)| Affine::constant(fm) + e.clone()));
    rows.extend((0..n).map(|i| Affine::var(x[i]).plus_const(-net.xmin[i])));
    rows.extend((0..n).map(|i| Affine::constant(net.xmax[i]) - Affine::var(x[i])));
    b.constrain(ConeKind::NonNeg, rows);
    Ok(b.build())
}

/// `max(c)·α`, the cost change of the dearest unit absorbing a load change of `α`.
pub fn opf_sensitivity_bound(c: &[f64], alpha: f64) -> f64 {
    if alpha == 0.0 {
        return 0.0;
    }
    c.iter().copied().fold(f64::NEG_INFINITY, f64::max) * alpha
}

fn solve_optimal(p: &ConicProgram, settings: &SolverSettings) -> Result<Solution> {
    let sol = solve(p, settings)?;
    if !sol.is_optimal() {
        return Err(Error::Infeasible(sol.status));
    }
    Ok(sol)
}

/// Cheapest and dearest dispatch cost over the feasible set.
pub fn cost_range(net: &PowerNetwork, settings: &SolverSettings) -> Result<(f64, f64)> {
    let p = build_opf(net)?;
    let lo = solve_optimal(&p, settings)?.objective;
    let mut q = p.clone();
    q.c = -&q.c;
    let hi = -solve_optimal(&q, settings)?.objective;
    Ok((lo, hi))
}

/// One load, picked uniformly among the loaded nodes, moves by `U(−α, α)`.
/// The query is the optimal cost.
#[derive(Debug, Clone)]
pub struct OpfAdjacency {
    pub net: PowerNetwork,
    pub alpha: f64,
}

impl AdjacencyModel for OpfAdjacency {
    type Dataset = PowerNetwork;

    fn alpha(&self) -> f64 {
        self.alpha
    }

    fn sample_pair(&self, rng: &mut Rng) -> (PowerNetwork, PowerNetwork) {
        let loaded: Vec<usize> = (0..self.net.nodes).filter(|&i| self.net.d[i] != 0.0).collect();
        let pool: Vec<usize> = if loaded.is_empty() { (0..self.net.nodes).collect() } else { loaded };
        let i = pool[rng.random_range(0..pool.len())];
        let u = if self.alpha > 0.0 { rng.random_range(-self.alpha..=self.alpha) } else { 0.0 };
        let mut d = self.net.d.clone();
        d[i] += u;
        (self.net.clone(), self.net.with_demand(d))
    }

    fn query(&self, data: &PowerNetwork, settings: &SolverSettings) -> Result<DVector<f64>> {
        Ok(DVector::from_element(1, solve_optimal(&build_opf(data)?, settings)?.objective))
    }
}

#[derive(Debug, Clone)]
pub struct OpfPrivate {
    pub privatized: Privatized,
    pub rule: DecisionRule,
    pub solution: Solution,
    pub noise: NoiseSpec,
    pub release: Release,
}

/// Cost query `cᵀx̄ + ζ̂` with `cᵀX = 1`, balance split and the remaining rows
/// chance-constrained. Laplace scale `max(c)·α/ε`.
pub fn privatize_opf(
    net: &PowerNetwork,
    epsilon: f64,
    alpha: f64,
    chance: &ChanceSpec,
    seed: u64,
    settings: &SolverSettings,
) -> Result<OpfPrivate> {
    let noise = calibrate_laplace(opf_sensitivity_bound(&net.c, alpha), epsilon, 1)?;
    let query = QueryConstraint::WeightedSum { weights: net.c.clone() };
    privatize_opf_with(net, Balance::Equality, &noise, &query, chance, seed, settings)
}

pub fn privatize_opf_with(
    net: &PowerNetwork,
    balance: Balance,
    noise: &NoiseSpec,
    query: &QueryConstraint,
    chance: &ChanceSpec,
    seed: u64,
    settings: &SolverSettings,
) -> Result<OpfPrivate> {
    let program = build_opf_with(net, balance)?;
    let privatized = match privatize_with(&program, noise, query, chance, seed, &PrivatizeOptions::default()) {
        Err(Error::ConflictingConstraints(msg)) if balance == Balance::Equality => {
            return Err(Error::ConflictingConstraints(format!(
                "{msg}; the balance row forces 1ᵀX = 0, so the query may not fix 1ᵀX (use a cost-weighted query or relax the balance)"
            )))
        }
        r => r?,
    };
    let (rule, solution) = privatized.solve(settings)?;
    let release = release_query(&rule, query, noise, seed)?;
    Ok(OpfPrivate { privatized, rule, solution, noise: *noise, release })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Input,
    Output,
    Program,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Input => "input",
            Strategy::Output => "output",
            Strategy::Program => "program",
        }
    }
}

/// Released-cost loss and query infeasibility of one strategy over `draws`
/// realisations. Output and input releases are infeasible when no dispatch of
/// the true network attains them; program releases when the dispatch
/// `x̄ + Xζ` violates the network.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_opf_strategy(
    net: &PowerNetwork,
    strategy: Strategy,
    epsilon: f64,
    alpha: f64,
    chance: &ChanceSpec,
    draws: usize,
    seed: u64,
    settings: &SolverSettings,
) -> Result<RuleMetrics> {
    let program = build_opf(net)?;
    let base = solve_optimal(&program, settings)?;
    match strategy {
        Strategy::Program => {
            let p = privatize_opf(net, epsilon, alpha, chance, seed, settings)?;
            evaluate_rule_metrics(&p.rule, &program, &base, &p.noise, draws, seed)
        }
        Strategy::Output => {
            let (lo, hi) = cost_range(net, settings)?;
            let noise = calibrate_laplace(opf_sensitivity_bound(&net.c, alpha), epsilon, 1)?;
            let z = monte_carlo_noise(&noise, seed, draws)?;
            let tol = 1e-6 * (1.0 + lo.abs());
            let samples = z
                .column(0)
                .iter()
                .map(|zeta| {
                    let v = base.objective + zeta;
                    SampleRecord { loss: zeta.to_owned(), feasible: v >= lo - tol && v <= hi + tol }
                })
                .collect();
            Ok(summarize(base.objective, samples))
        }
        Strategy::Input => {
            let (lo, hi) = cost_range(net, settings)?;
            let noise = calibrate_laplace(alpha, epsilon, net.nodes)?;
            let z = monte_carlo_noise(&noise, seed, draws)?;
            let tol = 1e-6 * (1.0 + lo.abs());
            let samples = (0..draws)
                .into_par_iter()
                .map(|s| {
                    let d: Vec<f64> = net.d.iter().enumerate().map(|(i, v)| v + z[(s, i)]).collect();
                    let sol = solve(&build_opf(&net.with_demand(d))?, settings)?;
                    Ok(match sol.status {
                        Status::Optimal => SampleRecord {
                            loss: sol.objective - base.objective,
                            feasible: sol.objective >= lo - tol && sol.objective <= hi + tol,
                        },
                        // an infeasible perturbed network releases nothing usable
                        _ => SampleRecord { loss: 0.0, feasible: false },
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(summarize(base.objective, samples))
        }
    }
}
