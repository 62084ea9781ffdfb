use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::conic::{Affine, ConeKind, ConicBuilder, ConicProgram};
use crate::dp::rng::{self, Rng};
use crate::dp::{
    estimate_sensitivity, monte_carlo_noise, AdjacencyModel, NoiseSpec, NormOrder, PrivacyParams, SensitivityConfig,
    SensitivityReport,
};
use crate::error::{Error, Result};
use crate::ldr::{
    privatize_with, release_query, BlockTreatment, ChanceSpec, DecisionRule, PrivatizeOptions, Privatized,
    QueryConstraint, Release,
};
use crate::solver::{solve, Solution, SolverSettings};
use crate::util::{binomial_se, mean_se};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Basis {
    /// `φ(x) = (x)`.
    Linear,
    /// `φ(x) = (x, ½(x − centre)³)`.
    Cubic { centre: f64 },
    /// `φᵢ(x) = √(1 + (μᵢ − x)²)`.
    Radial { centres: Vec<f64> },
}

impl Basis {
    pub fn dim(&self) -> usize {
        match self {
            Basis::Linear => 1,
            Basis::Cubic { .. } => 2,
            Basis::Radial { centres } => centres.len(),
        }
    }

    pub fn eval(&self, x: f64) -> Vec<f64> {
        match self {
            Basis::Linear => vec![x],
            Basis::Cubic { centre } => vec![x, 0.5 * (x - centre).powi(3)],
            Basis::Radial { centres } => centres.iter().map(|m| (1.0 + (m - x).powi(2)).sqrt()).collect(),
        }
    }

    pub fn derivative(&self, x: f64) -> Vec<f64> {
        match self {
            Basis::Linear => vec![1.0],
            Basis::Cubic { centre } => vec![1.0, 1.5 * (x - centre).powi(2)],
            Basis::Radial { centres } => centres.iter().map(|m| (x - m) / (1.0 + (m - x).powi(2)).sqrt()).collect(),
        }
    }
}

/// Ridge regression on a basis with `φ′(uᵢ)ᵀw ≥ 0` at the monotonicity points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionModel {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub basis: Basis,
    pub points: Vec<f64>,
    pub lambda: f64,
}

impl RegressionModel {
    pub fn validate(&self) -> Result<()> {
        if self.x.len() != self.y.len() || self.x.is_empty() {
            return Err(Error::dim(format!("{} inputs and {} targets", self.x.len(), self.y.len())));
        }
        if self.basis.dim() == 0 {
            return Err(Error::arg("basis is empty"));
        }
        if self.x.iter().chain(&self.y).chain(&self.points).any(|v| !v.is_finite()) {
            return Err(Error::arg("regression data must be finite"));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::arg(format!("λ must be finite and nonnegative, got {}", self.lambda)));
        }
        Ok(())
    }

    /// `m × mᵦ` design matrix `Φ`.
    pub fn design(&self) -> DMatrix<f64> {
        let mb = self.basis.dim();
        let mut phi = DMatrix::zeros(self.x.len(), mb);
        for (i, &x) in self.x.iter().enumerate() {
            for (j, v) in self.basis.eval(x).into_iter().enumerate() {
                phi[(i, j)] = v;
            }
        }
        phi
    }

    /// `p × mᵦ` matrix with rows `φ′(uᵢ)ᵀ`.
    pub fn c_matrix(&self) -> DMatrix<f64> {
        let mb = self.basis.dim();
        let mut c = DMatrix::zeros(self.points.len(), mb);
        for (i, &u) in self.points.iter().enumerate() {
            for (j, v) in self.basis.derivative(u).into_iter().enumerate() {
                c[(i, j)] = v;
            }
        }
        c
    }

    pub fn predict(&self, w: &[f64], x: f64) -> f64 {
        self.basis.eval(x).iter().zip(w).map(|(a, b)| a * b).sum()
    }

    /// `‖y − Φw‖² + λ‖w‖²`.
    pub fn loss(&self, w: &[f64]) -> f64 {
        let fit: f64 = self.x.iter().zip(&self.y).map(|(&x, y)| (y - self.predict(w, x)).powi(2)).sum();
        fit + self.lambda * w.iter().map(|v| v * v).sum::<f64>()
    }

    /// `Cw ≥ 0` up to a relative tolerance of 1e-8 per row.
    pub fn is_monotone(&self, w: &[f64]) -> bool {
        let c = self.c_matrix();
        (0..c.nrows()).all(|i| {
            let terms = (0..c.ncols()).map(|j| c[(i, j)] * w[j]);
            let scale: f64 = terms.clone().map(f64::abs).sum();
            terms.sum::<f64>() >= -1e-8 * scale
        })
    }

    /// `y = x + ½(x − 5)³ + z` with `x ∼ U(0, 10)`, `z ∼ N(0, sd²)` and checks
    /// at `u = 1, 9`.
    pub fn cubic_example(m: usize, sd: f64, lambda: f64, seed: u64) -> Result<Self> {
        let mut r = rng::stream(seed, 0);
        let basis = Basis::Cubic { centre: 5.0 };
        let noise = Normal::new(0.0, sd).map_err(|e| Error::arg(e.to_string()))?;
        let x: Vec<f64> = (0..m).map(|_| r.random_range(0.0..10.0)).collect();
        let y = x.iter().map(|&v| basis.eval(v).iter().sum::<f64>() + noise.sample(&mut r)).collect();
        let model = Self { x, y, basis, points: vec![1.0, 9.0], lambda };
        model.validate()?;
        Ok(model)
    }

    /// CSV with a header row and columns `x, y`.
    pub fn read_points(path: impl AsRef<Path>) -> Result<Vec<(f64, f64)>> {
        let mut rdr = csv::Reader::from_path(path)?;
        rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
    }
}

const WIND_CURVE: &str = include_str!("../../data/wind_curve.csv");

/// Normalised power curve shipped with the crate, `(speed m/s, power)`.
pub fn bundled_wind_curve() -> Result<Vec<(f64, f64)>> {
    let mut rdr = csv::Reader::from_reader(WIND_CURVE.as_bytes());
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}

/// Curve points with `N(0, σ²)` noise clamped to `[0, 1]`, radial bases at
/// 3, 7, 11, 15 m/s and 10 monotonicity points drawn from `U(3, 10)`.
pub fn build_wind_curve_dataset(curve: &[(f64, f64)], sigma: f64, lambda: f64, seed: u64) -> Result<RegressionModel> {
    if curve.iter().any(|&(_, p)| !(0.0..=1.0).contains(&p)) {
        return Err(Error::arg("curve power must be normalised to [0, 1]"));
    }
    if !(sigma >= 0.0) {
        return Err(Error::arg(format!("σ must be nonnegative, got {sigma}")));
    }
    let mut r = rng::stream(seed, 0);
    let y = curve
        .iter()
        .map(|&(_, p)| {
            let z = if sigma > 0.0 { Normal::new(0.0, sigma).expect("valid normal").sample(&mut r) } else { 0.0 };
            (p + z).clamp(0.0, 1.0)
        })
        .collect();
    let points = (0..10).map(|_| r.random_range(3.0..10.0)).collect();
    let model = RegressionModel {
        x: curve.iter().map(|&(v, _)| v).collect(),
        y,
        basis: Basis::Radial { centres: vec![3.0, 7.0, 11.0, 15.0] },
        points,
        lambda,
    };
    model.validate()?;
    Ok(model)
}

/// Blocks: fit epigraph `(t₁, ½, y − Φw)`, ridge epigraph `(t₂, ½, w)`,
/// monotonicity rows `Cw ≥ 0`. Objective `t₁ + λt₂`; `w` comes first.
pub fn build_monotone_regression(model: &RegressionModel) -> Result<ConicProgram> {
    model.validate()?;
    let mb = model.basis.dim();
    let mut bld = ConicBuilder::new();
    let w = bld.add_vars("w", mb);
    let t1 = bld.add_var("t_fit");
    let t2 = bld.add_var("t_ridge");
    bld.set_cost(t1, 1.0);
    bld.set_cost(t2, model.lambda);
    let mut fit = vec![Affine::var(t1), Affine::constant(0.5)];
    for (&x, &y) in model.x.iter().zip(&model.y) {
        let phi = model.basis.eval(x);
        fit.push((0..mb).fold(Affine::constant(y), |e, j| e.plus_term(w[j], -phi[j])));
    }
    bld.rsoc(fit);
    let mut ridge = vec![Affine::var(t2), Affine::constant(0.5)];
    ridge.extend(w.iter().map(|&j| Affine::var(j)));
    bld.rsoc(ridge);
    let c = model.c_matrix();
    if c.nrows() > 0 {
        let rows =
            (0..c.nrows()).map(|i| (0..mb).fold(Affine::default(), |e, j| e.plus_term(w[j], c[(i, j)]))).collect();
        bld.constrain(ConeKind::NonNeg, rows);
    }
    Ok(bld.build())
}

pub fn solve_regression(model: &RegressionModel, settings: &SolverSettings) -> Result<Solution> {
    solve(&build_monotone_regression(model)?, settings)?.into_optimal()
}

/// Point `i` moves to `(xᵢ + 0.35r cos t, yᵢ + 8r sin t)`, `r ∼ U(0, 1)`,
/// `t ∼ U(0, 2π)`; any two datasets of this universe are adjacent. Query `w*`.
#[derive(Debug, Clone)]
pub struct RegressionAdjacency {
    pub model: RegressionModel,
    pub scale: (f64, f64),
}

impl RegressionAdjacency {
    pub fn new(model: RegressionModel) -> Self {
        Self { model, scale: (0.35, 8.0) }
    }

    fn draw(&self, rng: &mut Rng) -> RegressionModel {
        let mut m = self.model.clone();
        for i in 0..m.x.len() {
            let r = rng.random_range(0.0..1.0);
            let t = rng.random_range(0.0..std::f64::consts::TAU);
            m.x[i] += self.scale.0 * r * t.cos();
            m.y[i] += self.scale.1 * r * t.sin();
        }
        m
    }
}

impl AdjacencyModel for RegressionAdjacency {
    type Dataset = RegressionModel;

    fn alpha(&self) -> f64 {
        f64::INFINITY
    }

    fn sample_pair(&self, rng: &mut Rng) -> (RegressionModel, RegressionModel) {
        let a = self.draw(rng);
        (a, self.draw(rng))
    }

    fn query(&self, data: &RegressionModel, settings: &SolverSettings) -> Result<DVector<f64>> {
        Ok(solve_regression(data, settings)?.x.rows(0, data.basis.dim()).into_owned())
    }
}

/// `Δ₂` of `w*` over the circle universe.
pub fn regression_sensitivity(model: &RegressionModel, gamma: f64, beta: f64, seed: u64) -> Result<SensitivityReport> {
    estimate_sensitivity(
        &RegressionAdjacency::new(model.clone()),
        &SensitivityConfig::new(NormOrder::L2, gamma, beta, seed),
    )
}

#[derive(Debug, Clone)]
pub struct RegressionPrivate {
    pub privatized: Privatized,
    pub rule: DecisionRule,
    pub solution: Solution,
    pub noise: NoiseSpec,
    /// Released weights `w̄ + ζ̂`.
    pub release: Release,
}

impl RegressionPrivate {
    pub fn nominal(&self) -> Vec<f64> {
        self.rule.xbar.rows(0, self.noise.dim).iter().copied().collect()
    }
}

/// Identity query on `w`; both epigraphs stay nominal and the expected loss
/// picks up `Tr(ΦΣΦᵀ) + λ Tr Σ`; monotonicity rows are chance constrained.
pub fn privatize_regression(
    model: &RegressionModel,
    privacy: &PrivacyParams,
    chance: &ChanceSpec,
    seed: u64,
    settings: &SolverSettings,
) -> Result<RegressionPrivate> {
    let noise = privacy.noise(model.basis.dim())?;
    privatize_regression_with(model, &noise, chance, seed, settings)
}

pub fn privatize_regression_with(
    model: &RegressionModel,
    noise: &NoiseSpec,
    chance: &ChanceSpec,
    seed: u64,
    settings: &SolverSettings,
) -> Result<RegressionPrivate> {
    let mb = model.basis.dim();
    if noise.dim != mb {
        return Err(Error::dim(format!("noise dim {} but the model has {mb} weights", noise.dim)));
    }
    let program = build_monotone_regression(model)?;
    let phi = model.design();
    let m = phi.nrows();
    let mut quad = DMatrix::zeros(m + mb, program.n());
    quad.view_mut((0, 0), (m, mb)).copy_from(&phi);
    for j in 0..mb {
        quad[(m + j, j)] = model.lambda.sqrt();
    }
    let opts = PrivatizeOptions { quadratic: Some(quad), ..PrivatizeOptions::default() }
        .treat(0, BlockTreatment::Nominal)
        .treat(1, BlockTreatment::Nominal);
    let query = QueryConstraint::Identity { support: (0..mb).collect() };
    let privatized = privatize_with(&program, noise, &query, chance, seed, &opts)?;
    let (rule, solution) = privatized.solve(settings)?;
    let release = release_query(&rule, &query, noise, seed)?;
    Ok(RegressionPrivate { privatized, rule, solution, noise: *noise, release })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionMetrics {
    /// Fraction of draws with `C(w + ζ) ≥ 0` violated.
    pub violation_rate: f64,
    pub violation_se: f64,
    pub mean_loss: f64,
    pub loss_se: f64,
    #[serde(skip)]
    pub losses: Vec<f64>,
}

/// Monotonicity violation and loss of `w + ζ` over `count` draws.
pub fn evaluate_regression(
    model: &RegressionModel,
    w: &[f64],
    noise: &NoiseSpec,
    count: usize,
    seed: u64,
) -> Result<RegressionMetrics> {
    if noise.dim != w.len() || w.len() != model.basis.dim() {
        return Err(Error::dim(format!("{} weights, noise dim {}", w.len(), noise.dim)));
    }
    let z = monte_carlo_noise(noise, seed, count)?;
    let mut bad = 0;
    let mut losses = Vec::with_capacity(count);
    for s in 0..count {
        let ws: Vec<f64> = w.iter().enumerate().map(|(j, v)| v + z[(s, j)]).collect();
        if !model.is_monotone(&ws) {
            bad += 1;
        }
        losses.push(model.loss(&ws));
    }
    let rate = bad as f64 / count as f64;
    let (mean_loss, loss_se) = mean_se(&losses);
    Ok(RegressionMetrics { violation_rate: rate, violation_se: binomial_se(rate, count), mean_loss, loss_se, losses })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear(y: Vec<f64>) -> RegressionModel {
        RegressionModel { x: vec![1.0, 2.0, 3.0], y, basis: Basis::Linear, points: vec![0.0], lambda: 0.0 }
    }

    #[test]
    fn exact_line() {
        let m = linear(vec![1.0, 2.0, 3.0]);
        let sol = solve_regression(&m, &SolverSettings::default()).unwrap();
        assert!((sol.x[0] - 1.0).abs() < 1e-6);
        assert!(sol.objective.abs() < 1e-6);
    }

    #[test]
    fn decreasing_data_binds() {
        let m = linear(vec![-1.0, -2.0, -3.0]);
        let sol = solve_regression(&m, &SolverSettings::default()).unwrap();
        assert!(sol.x[0].abs() < 1e-6, "{}", sol.x[0]);
        // KKT: the monotonicity multiplier is positive on the binding row
        let row = sol.y.len() - 1;
        assert!(sol.y[row] > 1.0);
    }

    #[test]
    fn c_matrix_matches_finite_differences() {
        let h = 1e-5;
        for basis in [Basis::Cubic { centre: 5.0 }, Basis::Radial { centres: vec![3.0, 7.0, 11.0, 15.0] }] {
            for u in [0.5, 1.0, 4.2, 9.0] {
                let d = basis.derivative(u);
                let (hi, lo) = (basis.eval(u + h), basis.eval(u - h));
                for j in 0..basis.dim() {
                    assert!((d[j] - (hi[j] - lo[j]) / (2.0 * h)).abs() < 1e-6);
                }
            }
        }
        let m = RegressionModel::cubic_example(10, 1.0, 0.0, 0).unwrap();
        let c = m.c_matrix();
        assert_eq!((c[(0, 1)], c[(1, 1)]), (24.0, 24.0));
    }

    #[test]
    fn radial_values() {
        let b = Basis::Radial { centres: vec![3.0, 7.0, 11.0, 15.0] };
        assert_eq!(b.eval(7.0)[1], 1.0);
        assert!((b.eval(3.0)[1] - 17f64.sqrt()).abs() < 1e-15);
        assert!((b.eval(7.0)[0] - 4.1231).abs() < 1e-4);
    }

    #[test]
    fn cubic_weights_match_least_squares() {
        let m = RegressionModel::cubic_example(100, 15.0, 0.0, 3).unwrap();
        let sol = solve_regression(&m, &SolverSettings::default()).unwrap();
        let phi = m.design();
        let y = DVector::from_column_slice(&m.y);
        let ls = (phi.transpose() * &phi).lu().solve(&(phi.transpose() * y)).unwrap();
        for j in 0..2 {
            assert!((sol.x[j] - ls[j]).abs() < 1e-5 * (1.0 + ls[j].abs()));
        }
        assert!((ls[1] - 1.0).abs() < 0.1 && (ls[0] - 1.0).abs() < 1.5, "{ls}");
    }

    #[test]
    fn noiseless_wind_curve() {
        let curve = bundled_wind_curve().unwrap();
        let m = build_wind_curve_dataset(&curve, 0.0, 1e-4, 1).unwrap();
        assert!(m.y.iter().zip(&curve).all(|(a, (_, b))| a == b));
        assert_eq!(m.points.len(), 10);
        assert!(m.points.iter().all(|u| (3.0..10.0).contains(u)));
    }
}
