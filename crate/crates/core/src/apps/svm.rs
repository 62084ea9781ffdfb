use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::conic::{Affine, ConicBuilder, ConicProgram};
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

/// Binary classification data with labels in `{−1, +1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledPoints {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub lambda: f64,
}

/// Per-feature affine map onto `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMax {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl MinMax {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(v, (lo, hi))| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 })
            .collect()
    }
}

impl LabeledPoints {
    pub fn new(x: Vec<Vec<f64>>, y: Vec<f64>, lambda: f64) -> Result<Self> {
        let d = Self { x, y, lambda };
        d.validate()?;
        Ok(d)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        if self.x.len() != self.y.len() {
            return Err(Error::dim(format!("{} points but {} labels", self.x.len(), self.y.len())));
        }
        if self.len() < 2 {
            return Err(Error::arg("need at least two points"));
        }
        let n = self.dim();
        if n == 0 || self.x.iter().any(|p| p.len() != n) {
            return Err(Error::dim("all points need the same positive dimension"));
        }
        if self.x.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::arg("features must be finite"));
        }
        if self.y.iter().any(|&v| v != 1.0 && v != -1.0) {
            return Err(Error::arg("labels must be −1 or +1"));
        }
        if !self.y.contains(&1.0) || !self.y.contains(&-1.0) {
            return Err(Error::arg("both classes must be present"));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::arg(format!("λ must be finite and nonnegative, got {}", self.lambda)));
        }
        Ok(())
    }

    /// Two Gaussian classes `N((1,1), 0.5I)` (label +1) and `N((3,3), 0.5I)`
    /// (label −1), alternating.
    pub fn two_gaussians(m: usize, lambda: f64, seed: u64, stream: u64) -> Result<Self> {
        let mut r = rng::stream(seed, stream);
        let noise = Normal::new(0.0, 0.5f64.sqrt()).expect("valid normal");
        let mut x = Vec::with_capacity(m);
        let mut y = Vec::with_capacity(m);
        for i in 0..m {
            let (centre, label) = if i % 2 == 0 { (1.0, 1.0) } else { (3.0, -1.0) };
            x.push(vec![centre + noise.sample(&mut r), centre + noise.sample(&mut r)]);
            y.push(label);
        }
        Self::new(x, y, lambda)
    }

    /// CSV with a header row; the last column is the label.
    pub fn read_csv(path: impl AsRef<Path>, lambda: f64) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let mut x = Vec::new();
        let mut y = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let vals: Vec<f64> = rec
                .iter()
                .map(|s| s.trim().parse::<f64>().map_err(|e| Error::arg(format!("bad number {s:?}: {e}"))))
                .collect::<Result<_>>()?;
            let (label, feats) = vals.split_last().ok_or_else(|| Error::arg("empty CSV row"))?;
            x.push(feats.to_vec());
            y.push(*label);
        }
        Self::new(x, y, lambda)
    }

    pub fn min_max(&self) -> MinMax {
        let n = self.dim();
        let mut lo = vec![f64::INFINITY; n];
        let mut hi = vec![f64::NEG_INFINITY; n];
        for p in &self.x {
            for j in 0..n {
                lo[j] = lo[j].min(p[j]);
                hi[j] = hi[j].max(p[j]);
            }
        }
        MinMax { lo, hi }
    }

    pub fn transformed(&self, t: &MinMax) -> Self {
        Self { x: self.x.iter().map(|p| t.apply(p)).collect(), ..self.clone() }
    }
}

/// Column indices of the SVM program: `w`, `b`, hinge slacks `z`, epigraph `t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SvmLayout {
    pub w: Vec<usize>,
    pub b: usize,
    pub z: Vec<usize>,
    pub t: usize,
}

impl SvmLayout {
    pub fn new(n: usize, m: usize) -> Self {
        Self { w: (0..n).collect(), b: n, z: (n + 1..n + 1 + m).collect(), t: n + 1 + m }
    }
}

/// `min λt + (1/m)Σzᵢ` with `(t, ½, w)` rotated-cone, margin rows
/// `yᵢ(wᵀxᵢ − b) − 1 + zᵢ ≥ 0` and `z ≥ 0`, in that block order.
pub fn build_svm(data: &LabeledPoints) -> Result<ConicProgram> {
    data.validate()?;
    let (n, m) = (data.dim(), data.len());
    let mut bld = ConicBuilder::new();
    let w = bld.add_vars("w", n);
    let b = bld.add_var("b");
    let z = bld.add_vars("z", m);
    let t = bld.add_var("t");
    bld.set_cost(t, data.lambda);
    for &zi in &z {
        bld.set_cost(zi, 1.0 / m as f64);
    }
    let mut cone = vec![Affine::var(t), Affine::constant(0.5)];
    cone.extend(w.iter().map(|&j| Affine::var(j)));
    bld.rsoc(cone);
    let margins = (0..m)
        .map(|i| {
            let yi = data.y[i];
            (0..n)
                .fold(Affine::constant(-1.0), |e, j| e.plus_term(w[j], yi * data.x[i][j]))
                .plus_term(b, -yi)
                .plus_term(z[i], 1.0)
        })
        .collect();
    bld.constrain(crate::conic::ConeKind::NonNeg, margins);
    bld.constrain(crate::conic::ConeKind::NonNeg, z.iter().map(|&j| Affine::var(j)).collect());
    Ok(bld.build())
}

/// `sign(wᵀx − b)` with ties sent to `+1`.
pub fn classify(w: &[f64], b: f64, x: &[f64]) -> f64 {
    let s: f64 = w.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() - b;
    if s >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

pub fn accuracy(w: &[f64], b: f64, data: &LabeledPoints) -> f64 {
    let hits = data.x.iter().zip(&data.y).filter(|(x, y)| classify(w, b, x) == **y).count();
    hits as f64 / data.len() as f64
}

/// Hyperplane `(w, b)` of a solved SVM program.
pub fn hyperplane(x: &DVector<f64>, n: usize) -> (Vec<f64>, f64) {
    (x.rows(0, n).iter().copied().collect(), x[n])
}

pub fn solve_svm(data: &LabeledPoints, settings: &SolverSettings) -> Result<Solution> {
    solve(&build_svm(data)?, settings)?.into_optimal()
}

/// Every point moves to `xᵢ + r(sin t, cos t)` with `r ∼ U(0, radius)`,
/// `t ∼ U(0, 2π)`; any two such datasets are adjacent. Query `(w*, b*)`.
#[derive(Debug, Clone)]
pub struct SvmAdjacency {
    pub data: LabeledPoints,
    pub radius: f64,
}

impl SvmAdjacency {
    fn draw(&self, rng: &mut Rng) -> LabeledPoints {
        let x = self
            .data
            .x
            .iter()
            .map(|p| {
                let r = rng.random_range(0.0..self.radius);
                let t = rng.random_range(0.0..std::f64::consts::TAU);
                let mut q = p.clone();
                q[0] += r * t.sin();
                if q.len() > 1 {
                    q[1] += r * t.cos();
                }
                q
            })
            .collect();
        LabeledPoints { x, ..self.data.clone() }
    }
}

impl AdjacencyModel for SvmAdjacency {
    type Dataset = LabeledPoints;

    fn alpha(&self) -> f64 {
        f64::INFINITY
    }

    fn sample_pair(&self, rng: &mut Rng) -> (LabeledPoints, LabeledPoints) {
        let a = self.draw(rng);
        (a, self.draw(rng))
    }

    fn query(&self, data: &LabeledPoints, settings: &SolverSettings) -> Result<DVector<f64>> {
        let sol = solve_svm(data, settings)?;
        Ok(sol.x.rows(0, data.dim() + 1).into_owned())
    }
}

/// `Δ₁` of `(w*, b*)` over the circle-law universe of radius 0.05.
pub fn svm_sensitivity(data: &LabeledPoints, gamma: f64, beta: f64, seed: u64) -> Result<SensitivityReport> {
    let model = SvmAdjacency { data: data.clone(), radius: 0.05 };
    estimate_sensitivity(&model, &SensitivityConfig::new(NormOrder::L1, gamma, beta, seed))
}

#[derive(Debug, Clone)]
pub struct SvmPrivate {
    pub privatized: Privatized,
    pub rule: DecisionRule,
    pub solution: Solution,
    pub noise: NoiseSpec,
    /// Released `(w, b)`.
    pub release: Release,
}

impl SvmPrivate {
    /// Nominal `(w̄, b̄)`.
    pub fn nominal(&self) -> (Vec<f64>, f64) {
        hyperplane(&self.rule.xbar, self.noise.dim - 1)
    }
}

/// Identity query on `(w, b)`, noise of dimension `n + 1` calibrated from
/// `privacy`, free slack recourse. The epigraph block is kept nominal and the
/// regulariser picks up `λ Tr Σ_w`; margin and slack rows are chance
/// constrained by `chance`.
pub fn privatize_svm(
    data: &LabeledPoints,
    privacy: &PrivacyParams,
    chance: &ChanceSpec,
    seed: u64,
    settings: &SolverSettings,
) -> Result<SvmPrivate> {
    let noise = privacy.noise(data.dim() + 1)?;
    privatize_svm_with(data, &noise, chance, seed, settings)
}

pub fn privatize_svm_with(
    data: &LabeledPoints,
    noise: &NoiseSpec,
    chance: &ChanceSpec,
    seed: u64,
    settings: &SolverSettings,
) -> Result<SvmPrivate> {
    let n = data.dim();
    if noise.dim != n + 1 {
        return Err(Error::dim(format!("noise dim {} but the hyperplane has {} parameters", noise.dim, n + 1)));
    }
    let program = build_svm(data)?;
    let mut m = DMatrix::zeros(n, program.n());
    for j in 0..n {
        m[(j, j)] = data.lambda.sqrt();
    }
    let opts = PrivatizeOptions { quadratic: Some(m), ..PrivatizeOptions::default() }.treat(0, BlockTreatment::Nominal);
    let query = QueryConstraint::Identity { support: (0..=n).collect() };
    let privatized = privatize_with(&program, noise, &query, chance, seed, &opts)?;
    let (rule, solution) = privatized.solve(settings)?;
    let release = release_query(&rule, &query, noise, seed)?;
    Ok(SvmPrivate { privatized, rule, solution, noise: *noise, release })
}

/// Accuracy on `test` of `count` hyperplanes `(w, b) + ζ`.
pub fn perturbed_accuracy(
    w: &[f64],
    b: f64,
    noise: &NoiseSpec,
    test: &LabeledPoints,
    count: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if noise.dim != w.len() + 1 {
        return Err(Error::dim(format!("noise dim {} for {} hyperplane parameters", noise.dim, w.len() + 1)));
    }
    let z = monte_carlo_noise(noise, seed, count)?;
    Ok((0..count)
        .map(|s| {
            let ws: Vec<f64> = w.iter().enumerate().map(|(j, v)| v + z[(s, j)]).collect();
            accuracy(&ws, b + z[(s, w.len())], test)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ldr::EtaBar;

    #[test]
    fn one_dimensional_threshold() {
        let d = LabeledPoints::new(vec![vec![0.0], vec![2.0]], vec![-1.0, 1.0], 1e-4).unwrap();
        let sol = solve_svm(&d, &SolverSettings::default()).unwrap();
        let (w, b) = hyperplane(&sol.x, 1);
        assert!((b / w[0] - 1.0).abs() < 1e-5, "threshold {}", b / w[0]);
        let hinge: f64 = sol.x.rows(2, 2).iter().sum();
        assert!(hinge.abs() < 1e-6);
        // brute force over (w, b) on a grid: λw² + mean hinge
        let obj =
            |w: f64, b: f64| 1e-4 * w * w + 0.5 * ((1.0 + (0.0 * w - b)).max(0.0) + (1.0 - (2.0 * w - b)).max(0.0));
        let mut best = f64::INFINITY;
        for i in 0..=400 {
            for j in 0..=400 {
                best = best.min(obj(i as f64 * 0.01, j as f64 * 0.01));
            }
        }
        assert!((sol.objective - best).abs() < 1e-4, "{} vs {best}", sol.objective);
    }

    #[test]
    fn single_class_rejected() {
        assert!(LabeledPoints::new(vec![vec![0.0], vec![1.0]], vec![1.0, 1.0], 0.1).is_err());
    }

    #[test]
    fn classify_ties_positive() {
        assert_eq!(classify(&[1.0, 0.0], 0.0, &[2.0, 0.0]), 1.0);
        assert_eq!(classify(&[1.0, 0.0], 0.0, &[-2.0, 0.0]), -1.0);
        assert_eq!(classify(&[1.0, 0.0], 0.0, &[0.0, 0.0]), 1.0);
    }

    #[test]
    fn synthetic_accuracy() {
        // the Bayes rate of this mixture is about 97.7%, so average over draws
        let mut total = 0.0;
        for seed in 0..5 {
            let train = LabeledPoints::two_gaussians(100, 1e-5, seed, 0).unwrap();
            let mm = train.min_max();
            let train = train.transformed(&mm);
            let test = LabeledPoints::two_gaussians(1000, 1e-5, seed, 1).unwrap().transformed(&mm);
            let sol = solve_svm(&train, &SolverSettings::default()).unwrap();
            let (w, b) = hyperplane(&sol.x, 2);
            total += accuracy(&w, b, &test);
        }
        assert!(total / 5.0 >= 0.97, "{}", total / 5.0);
    }

    #[test]
    fn tiny_noise_recovers_deterministic() {
        let train = LabeledPoints::two_gaussians(20, 1e-3, 4, 0).unwrap();
        let st = SolverSettings::default();
        let base = solve_svm(&train, &st).unwrap();
        let noise = NoiseSpec::laplace(3, 1e-9).unwrap();
        let p = privatize_svm_with(&train, &noise, &ChanceSpec::individual(EtaBar::Each(0.05)), 1, &st).unwrap();
        let (w, b) = p.nominal();
        let (w0, b0) = hyperplane(&base.x, 2);
        assert!((w[0] - w0[0]).abs() < 1e-3 * (1.0 + w0[0].abs()) && (b - b0).abs() < 1e-3 * (1.0 + b0.abs()));
    }
}
