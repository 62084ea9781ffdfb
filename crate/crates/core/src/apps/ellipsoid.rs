use nalgebra::{DMatrix, DVector, Matrix2};
use rand::Rng as _;
use rayon::prelude::*;
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
use crate::solver::{solve, Solution, SolverSettings, Status};
use crate::util::{binomial_se, mean_se};

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Column order of the ellipsoid program; `Y` is stored column-major.
pub const Z1: usize = 0;
pub const Z2: usize = 1;
pub const Y11: usize = 2;
pub const Y21: usize = 3;
pub const Y12: usize = 4;
pub const Y22: usize = 5;
pub const T: usize = 6;

/// Bounded polygon `{x ∈ R² : aᵢᵀx ≤ bᵢ}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipsoidInstance {
    pub a: Vec<[f64; 2]>,
    pub b: Vec<f64>,
}

/// `E = {Yu + z : ‖u‖ ≤ 1}`; `Y` need not be symmetric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipse {
    pub z: [f64; 2],
    pub y: Matrix2<f64>,
}

impl Ellipse {
    /// Reads `(z, Y)` from the first six program columns.
    pub fn from_columns(x: &[f64]) -> Self {
        Self { z: [x[Z1], x[Z2]], y: Matrix2::new(x[Y11], x[Y12], x[Y21], x[Y22]) }
    }

    pub fn volume(&self) -> f64 {
        std::f64::consts::PI * self.y.determinant().abs()
    }

    /// Support-function test `‖Yᵀaᵢ‖ ≤ bᵢ − aᵢᵀz` on every row.
    pub fn contained_in(&self, inst: &EllipsoidInstance, tol: f64) -> bool {
        inst.a.iter().zip(&inst.b).all(|(a, &b)| {
            let ya = self.y.transpose() * nalgebra::Vector2::new(a[0], a[1]);
            ya.norm() <= b - a[0] * self.z[0] - a[1] * self.z[1] + tol
        })
    }

    /// `(Y + Yᵀ)/2 ⪰ 0`.
    pub fn symmetric_part_psd(&self, tol: f64) -> bool {
        let s = (self.y + self.y.transpose()) * 0.5;
        s.symmetric_eigenvalues().iter().all(|&v| v >= -tol)
    }
}

impl EllipsoidInstance {
    pub fn new(a: Vec<[f64; 2]>, b: Vec<f64>) -> Result<Self> {
        let inst = Self { a, b };
        inst.validate()?;
        Ok(inst)
    }

    /// `[−h, h]²`.
    pub fn square(h: f64) -> Self {
        Self { a: vec![[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]], b: vec![h; 4] }
    }

    pub fn validate(&self) -> Result<()> {
        if self.a.len() != self.b.len() {
            return Err(Error::dim(format!("{} normals and {} offsets", self.a.len(), self.b.len())));
        }
        if self.a.iter().flatten().chain(&self.b).any(|v| !v.is_finite()) {
            return Err(Error::arg("polygon data must be finite"));
        }
        Ok(())
    }

    /// Solves `min ±xⱼ` over the polygon for both coordinates.
    pub fn check_bounded(&self, settings: &SolverSettings) -> Result<()> {
        self.validate()?;
        for j in 0..2 {
            for sign in [1.0, -1.0] {
                let mut bld = ConicBuilder::new();
                let x = bld.add_vars("x", 2);
                bld.set_cost(x[j], sign);
                let rows = self
                    .a
                    .iter()
                    .zip(&self.b)
                    .map(|(a, &b)| Affine::constant(b).plus_term(x[0], -a[0]).plus_term(x[1], -a[1]))
                    .collect();
                bld.constrain(ConeKind::NonNeg, rows);
                match solve(&bld.build(), settings)?.status {
                    Status::Optimal => {}
                    Status::DualInfeasible => return Err(Error::arg("polygon is unbounded")),
                    Status::PrimalInfeasible => return Err(Error::arg("polygon is empty")),
                    s => return Err(Error::Infeasible(s)),
                }
            }
        }
        Ok(())
    }

    pub fn with_offsets(&self, b: Vec<f64>) -> Self {
        Self { b, ..self.clone() }
    }
}

/// Containment SOC rows `(bᵢ − aᵢᵀz, Yᵀaᵢ)` in one block each, then
/// the symmetry row `Y₁₂ = Y₂₁` and the determinant hypograph
/// `(Y₁₁, Y₂₂, √2·t, √2·s) ∈ RSOC` with `s = (Y₁₂ + Y₂₁)/2`, i.e.
/// `t² ≤ Y₁₁Y₂₂ − s²`. Maximises `t`.
pub fn build_ellipsoid(inst: &EllipsoidInstance) -> Result<ConicProgram> {
    build_ellipsoid_blocks(inst, true)
}

fn build_ellipsoid_blocks(inst: &EllipsoidInstance, det: bool) -> Result<ConicProgram> {
    inst.validate()?;
    let mut bld = ConicBuilder::new();
    for name in ["z1", "z2", "Y11", "Y21", "Y12", "Y22"] {
        bld.add_var(name);
    }
    if det {
        bld.add_var("t");
        bld.set_cost(T, -1.0);
    }
    for (a, &b) in inst.a.iter().zip(&inst.b) {
        bld.soc(vec![
            Affine::constant(b).plus_term(Z1, -a[0]).plus_term(Z2, -a[1]),
            Affine::term(Y11, a[0]).plus_term(Y21, a[1]),
            Affine::term(Y12, a[0]).plus_term(Y22, a[1]),
        ]);
    }
    bld.eq(Affine::var(Y12).plus_term(Y21, -1.0));
    let sym = Affine::term(Y12, SQRT2 / 2.0).plus_term(Y21, SQRT2 / 2.0);
    if det {
        bld.rsoc(vec![Affine::var(Y11), Affine::var(Y22), Affine::term(T, SQRT2), sym]);
    } else {
        bld.rsoc(vec![Affine::var(Y11), Affine::var(Y22), sym]);
    }
    Ok(bld.build())
}

pub fn solve_ellipsoid(inst: &EllipsoidInstance, settings: &SolverSettings) -> Result<(Ellipse, Solution)> {
    inst.check_bounded(settings)?;
    let sol = solve(&build_ellipsoid(inst)?, settings)?.into_optimal()?;
    Ok((Ellipse::from_columns(sol.x.as_slice()), sol))
}

/// Offsets move within `[bᵢ − γ|bᵢ|, bᵢ + γ|bᵢ|]`; any two such polygons are
/// adjacent. The query is `(z*, vec Y*)`.
#[derive(Debug, Clone)]
pub struct EllipsoidAdjacency {
    pub inst: EllipsoidInstance,
    pub gamma: f64,
}

impl EllipsoidAdjacency {
    fn draw(&self, rng: &mut Rng) -> EllipsoidInstance {
        let b = self
            .inst
            .b
            .iter()
            .map(|&v| if self.gamma > 0.0 { v + self.gamma * v.abs() * rng.random_range(-1.0..=1.0) } else { v })
            .collect();
        self.inst.with_offsets(b)
    }
}

impl AdjacencyModel for EllipsoidAdjacency {
    type Dataset = EllipsoidInstance;

    fn alpha(&self) -> f64 {
        f64::INFINITY
    }

    fn sample_pair(&self, rng: &mut Rng) -> (EllipsoidInstance, EllipsoidInstance) {
        let a = self.draw(rng);
        (a, self.draw(rng))
    }

    fn query(&self, data: &EllipsoidInstance, settings: &SolverSettings) -> Result<DVector<f64>> {
        let sol = solve(&build_ellipsoid(data)?, settings)?.into_optimal()?;
        Ok(sol.x.rows(0, 6).into_owned())
    }
}

/// `Δ₂` of `(z*, vec Y*)` when every offset may move by `gamma·|bᵢ|`.
pub fn ellipsoid_sensitivity(
    inst: &EllipsoidInstance,
    gamma: f64,
    conf_gamma: f64,
    beta: f64,
    seed: u64,
) -> Result<SensitivityReport> {
    let model = EllipsoidAdjacency { inst: inst.clone(), gamma };
    estimate_sensitivity(&model, &SensitivityConfig::new(NormOrder::L2, conf_gamma, beta, seed))
}

#[derive(Debug, Clone)]
pub struct EllipsoidPrivate {
    pub privatized: Privatized,
    pub rule: DecisionRule,
    pub solution: Solution,
    pub noise: NoiseSpec,
    /// Released `(z, vec Y)`.
    pub release: Release,
    /// Noise scenarios of the sampled objective, `S_obj × 6`.
    pub scenarios: DMatrix<f64>,
}

impl EllipsoidPrivate {
    pub fn nominal(&self) -> Ellipse {
        Ellipse::from_columns(self.rule.xbar.as_slice())
    }

    pub fn released(&self) -> Ellipse {
        Ellipse::from_columns(self.release.released.as_slice())
    }
}

/// `z(ζ) = z̄ + ζ₁:₂`, `Y(ζ) = Ȳ + [ζ₃:₄ ζ₅:₆]`; containment and the PSD
/// condition on the symmetric part are chance constrained, the symmetry row
/// holds for `Ȳ` only, and the objective is the average of `S_obj` sampled
/// determinant hypographs.
pub fn privatize_ellipsoid(
    inst: &EllipsoidInstance,
    privacy: &PrivacyParams,
    chance: &ChanceSpec,
    objective_samples: usize,
    seed: u64,
    settings: &SolverSettings,
) -> Result<EllipsoidPrivate> {
    let noise = privacy.noise(6)?;
    privatize_ellipsoid_with(inst, &noise, chance, objective_samples, seed, settings)
}

pub fn privatize_ellipsoid_with(
    inst: &EllipsoidInstance,
    noise: &NoiseSpec,
    chance: &ChanceSpec,
    objective_samples: usize,
    seed: u64,
    settings: &SolverSettings,
) -> Result<EllipsoidPrivate> {
    if noise.dim != 6 {
        return Err(Error::dim(format!("ellipsoid noise has dimension 6, got {}", noise.dim)));
    }
    if objective_samples == 0 {
        return Err(Error::arg("at least one objective sample is required"));
    }
    inst.check_bounded(settings)?;
    let program = build_ellipsoid_blocks(inst, false)?;
    let m = inst.a.len();
    let mut pins = Vec::with_capacity(36);
    for i in 0..6 {
        for j in 0..6 {
            pins.push((i, j, if i == j { 1.0 } else { 0.0 }));
        }
    }
    let query = QueryConstraint::FixedRecourse { k: 6, pins };
    // symmetry holds for the nominal matrix only; the noise perturbs Y entrywise
    let opts = PrivatizeOptions::default().treat(m, BlockTreatment::Nominal);
    let mut privatized = privatize_with(&program, noise, &query, chance, seed, &opts)?;

    let mut r = rng::stream(seed, rng::SCENARIO_STREAM);
    let scenarios = noise.draw_many(&mut r, objective_samples);
    let layout = privatized.layout.clone();
    let mut bld = ConicBuilder::from_program(&privatized.program);
    let ts = bld.add_vars("t_obj", objective_samples);
    let unit = |j: usize| {
        let mut a = [0.0; 6];
        a[j] = 1.0;
        a
    };
    let blocks: Vec<Vec<Affine>> = (0..objective_samples)
        .into_par_iter()
        .map(|s| {
            let zeta: Vec<f64> = scenarios.row(s).iter().copied().collect();
            let at = |j: usize| layout.at(&unit(j), &zeta);
            let sym = (at(Y12) + at(Y21)).scaled(SQRT2 / 2.0);
            vec![at(Y11), at(Y22), Affine::term(ts[s], SQRT2), sym]
        })
        .collect();
    for (s, rows) in blocks.into_iter().enumerate() {
        bld.set_cost(ts[s], -1.0 / objective_samples as f64);
        bld.rsoc(rows);
    }
    privatized.program = bld.build();

    let (rule, solution) = privatized.solve(settings)?;
    let release = release_query(&rule, &query, noise, seed)?;
    Ok(EllipsoidPrivate { privatized, rule, solution, noise: *noise, release, scenarios })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EllipsoidMetrics {
    /// Fraction of draws contained in the polygon with a PSD symmetric part.
    pub containment_rate: f64,
    pub containment_se: f64,
    pub mean_volume: f64,
    pub volume_se: f64,
    #[serde(skip)]
    pub volumes: Vec<f64>,
}

/// Containment and volume of `rule(ζ)` over `count` draws.
pub fn evaluate_ellipsoids(
    inst: &EllipsoidInstance,
    rule: &DecisionRule,
    noise: &NoiseSpec,
    count: usize,
    seed: u64,
) -> Result<EllipsoidMetrics> {
    if rule.k() != noise.dim || rule.n() < 6 {
        return Err(Error::dim("rule does not describe an ellipse under this noise"));
    }
    let z = monte_carlo_noise(noise, seed, count)?;
    let tol = 1e-9 * (1.0 + inst.b.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    let (ok, vols): (Vec<bool>, Vec<f64>) = (0..count)
        .into_par_iter()
        .map(|s| {
            let x = rule.eval(&z.row(s).transpose());
            let e = Ellipse::from_columns(x.as_slice());
            (e.contained_in(inst, tol) && e.symmetric_part_psd(tol), e.volume())
        })
        .unzip();
    let rate = ok.iter().filter(|v| **v).count() as f64 / count as f64;
    let (mean_volume, volume_se) = mean_se(&vols);
    Ok(EllipsoidMetrics {
        containment_rate: rate,
        containment_se: binomial_se(rate, count),
        mean_volume,
        volume_se,
        volumes: vols,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Best axis-aligned ellipse by grid search over centre and semi-axes.
    fn grid_oracle(inst: &EllipsoidInstance, half: f64) -> f64 {
        let steps = 40;
        let mut best: f64 = 0.0;
        for i in 0..=steps {
            for j in 0..=steps {
                let z = [-half + 2.0 * half * i as f64 / steps as f64, -half + 2.0 * half * j as f64 / steps as f64];
                for p in 1..=steps {
                    for q in 1..=steps {
                        let (r1, r2) = (2.0 * half * p as f64 / steps as f64, 2.0 * half * q as f64 / steps as f64);
                        let e = Ellipse { z, y: Matrix2::new(r1, 0.0, 0.0, r2) };
                        if e.contained_in(inst, 1e-12) {
                            best = best.max((r1 * r2).sqrt());
                        }
                    }
                }
            }
        }
        best
    }

    #[test]
    fn unit_square_gives_unit_disk() {
        let inst = EllipsoidInstance::square(1.0);
        let (e, sol) = solve_ellipsoid(&inst, &SolverSettings::default()).unwrap();
        assert!(e.z[0].abs() < 1e-5 && e.z[1].abs() < 1e-5);
        assert!((e.y - Matrix2::identity()).amax() < 1e-5);
        assert!((sol.x[T] - 1.0).abs() < 1e-5);
        assert!((grid_oracle(&inst, 1.0) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rectangle_matches_grid() {
        let inst =
            EllipsoidInstance::new(vec![[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]], vec![2.0, 2.0, 1.0, 1.0])
                .unwrap();
        let (_, sol) = solve_ellipsoid(&inst, &SolverSettings::default()).unwrap();
        assert!((sol.x[T] - grid_oracle(&inst, 2.0)).abs() < 1e-4, "{}", sol.x[T]);
    }

    #[test]
    fn scaling_doubles_t() {
        let (_, sol) = solve_ellipsoid(&EllipsoidInstance::square(2.0), &SolverSettings::default()).unwrap();
        assert!((sol.x[T] - 2.0).abs() < 1e-5);
    }

    #[test]
    fn slab_is_rejected() {
        let inst = EllipsoidInstance::new(vec![[1.0, 0.0], [-1.0, 0.0]], vec![1.0, 1.0]).unwrap();
        assert!(matches!(solve_ellipsoid(&inst, &SolverSettings::default()), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn hypograph_is_tight() {
        let tri = EllipsoidInstance::new(vec![[-1.0, 0.0], [0.0, -1.0], [1.0, 1.0]], vec![0.0, 0.0, 1.0]).unwrap();
        let (e, sol) = solve_ellipsoid(&tri, &SolverSettings::default().with_tol(1e-11)).unwrap();
        let t = sol.x[T];
        assert!((t * t - e.y.determinant()).abs() < 1e-8, "{} vs {}", t * t, e.y.determinant());
        // the cone row itself is exactly on the boundary when t² = det Y
        let (y11, y22, s) = (0.7f64, 0.4, 0.2);
        let t = (y11 * y22 - s * s).sqrt();
        assert!((2.0 * y11 * y22 - 2.0 * t * t - 2.0 * s * s).abs() < 1e-9);
    }

    #[test]
    fn zero_noise_recovers_deterministic() {
        let inst = EllipsoidInstance::square(1.0);
        let noise = NoiseSpec::gaussian(6, 1e-9).unwrap();
        let p =
            privatize_ellipsoid_with(&inst, &noise, &ChanceSpec::vertex(0.1, 0.01), 8, 1, &SolverSettings::default())
                .unwrap();
        let e = p.nominal();
        assert!((e.y - Matrix2::identity()).amax() < 1e-4, "{}", e.y);
    }
}
