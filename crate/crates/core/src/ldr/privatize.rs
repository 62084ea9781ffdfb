use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::query::{apply_query_constraint, QueryConstraint};
use super::rule::{DecisionRule, Entry, RuleLayout};
use super::safety::{safety_factor, SafetyKind};
use super::vertex::{hyperrectangle_vertices, vertex_sample_size};
use crate::conic::{Affine, ConeKind, ConicBuilder, ConicProgram};
use crate::dp::{rng, NoiseFamily, NoiseSpec};
use crate::error::{Error, Result};
use crate::solver::{solve, Solution, SolverSettings};

/// Per-row violation budgets for the Individual method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum EtaBar {
    /// Split a joint budget `η` evenly over the chance-constrained linear rows.
    Uniform(f64),
    /// Same budget on every row.
    Each(f64),
    /// One budget per chance-constrained linear row, in program order.
    PerRow(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ChanceSpec {
    /// Enforce every chance block at the corners of a sampled noise box.
    Vertex { eta: f64, beta: f64, samples: Option<usize> },
    /// Tighten each linear row by `z(η̄ᵢ)·sd` of its noise term.
    Individual { eta_bar: EtaBar, safety: Option<SafetyKind> },
}

impl ChanceSpec {
    pub fn vertex(eta: f64, beta: f64) -> Self {
        ChanceSpec::Vertex { eta, beta, samples: None }
    }

    pub fn individual(eta_bar: EtaBar) -> Self {
        ChanceSpec::Individual { eta_bar, safety: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlockTreatment {
    /// Equality block: nominal and recourse parts vanish separately.
    Split,
    /// Enforced through the chance-constraint method.
    Chance,
    /// Enforced at `ζ = 0` only, e.g. an objective epigraph whose noise
    /// contribution is accounted for through [`PrivatizeOptions::quadratic`].
    Nominal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrivatizeOptions {
    /// Overrides by cone block index. Zero blocks default to `Split`, the rest to `Chance`.
    pub treatments: Vec<(usize, BlockTreatment)>,
    /// Weight of `‖vec X‖` added to the objective; picks the smallest recourse among ties.
    pub recourse_norm_weight: f64,
    /// `M` with the objective containing `‖Mx‖²` through a nominal epigraph;
    /// its expectation adds `Tr(MXΣXᵀMᵀ)`.
    pub quadratic: Option<DMatrix<f64>>,
}

impl Default for PrivatizeOptions {
    fn default() -> Self {
        Self { treatments: Vec::new(), recourse_norm_weight: 1e-6, quadratic: None }
    }
}

impl PrivatizeOptions {
    pub fn treat(mut self, block: usize, t: BlockTreatment) -> Self {
        self.treatments.push((block, t));
        self
    }
}

/// Output of [`privatize`]: the deterministic counterpart in rule variables.
#[derive(Debug, Clone)]
pub struct Privatized {
    pub program: ConicProgram,
    pub layout: RuleLayout,
    /// Box corners used by the Vertex method, `2^k × k`.
    pub vertices: Option<DMatrix<f64>>,
    pub sample_size: Option<usize>,
    /// Per-row budgets used by the Individual method.
    pub eta_bar: Vec<f64>,
    /// Constant part of the expected objective not carried by the program.
    pub objective_offset: f64,
    cost: DVector<f64>,
    quadratic: Option<DMatrix<f64>>,
    cov: DMatrix<f64>,
}

impl Privatized {
    /// Rule from a solved point, after a least-norm correction onto the
    /// equality rows so the query structure and split equalities hold to
    /// rounding error rather than solver tolerance.
    pub fn rule(&self, sol: &Solution) -> DecisionRule {
        self.layout.extract(polish_equalities(&self.program, &sol.x).as_slice())
    }

    /// Solves the counterpart; anything but an optimal status is an error.
    pub fn solve(&self, settings: &SolverSettings) -> Result<(DecisionRule, Solution)> {
        let sol = solve(&self.program, settings)?;
        if !sol.is_optimal() {
            return Err(Error::Infeasible(sol.status));
        }
        Ok((self.rule(&sol), sol))
    }

    /// `E[cᵀx(ζ)]` plus the quadratic term, without the tie-break penalty.
    pub fn expected_objective(&self, rule: &DecisionRule) -> f64 {
        let lin = self.cost.dot(&rule.xbar);
        match &self.quadratic {
            Some(m) => lin + trace_term(&(m * &rule.x), &self.cov),
            None => lin,
        }
    }
}

/// `E‖x̄ + Xζ‖² = ‖x̄‖² + Tr(XΣXᵀ)` for zero-mean `ζ` with covariance `Σ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticReduction {
    pub nominal: f64,
    pub trace: f64,
}

impl QuadraticReduction {
    pub fn total(&self) -> f64 {
        self.nominal + self.trace
    }
}

pub fn reduce_quadratic_objective(rule: &DecisionRule, cov: &DMatrix<f64>) -> Result<QuadraticReduction> {
    if cov.shape() != (rule.k(), rule.k()) {
        return Err(Error::dim(format!("covariance is {:?}, rule has k = {}", cov.shape(), rule.k())));
    }
    Ok(QuadraticReduction { nominal: rule.xbar.norm_squared(), trace: trace_term(&rule.x, cov) })
}

fn trace_term(x: &DMatrix<f64>, cov: &DMatrix<f64>) -> f64 {
    (x * cov * x.transpose()).trace()
}

/// Nominal and recourse systems of equality rows `b − A(x̄ + Xζ) = 0`:
/// `b − Ax̄ = 0` and `AX = 0`.
pub fn split_equalities(a: &DMatrix<f64>, b: &DVector<f64>, layout: &RuleLayout) -> (Vec<Affine>, Vec<Affine>) {
    let mut nominal = Vec::with_capacity(a.nrows());
    let mut recourse = Vec::with_capacity(a.nrows() * layout.k);
    for r in 0..a.nrows() {
        let row: Vec<f64> = a.row(r).iter().copied().collect();
        nominal.push(Affine::constant(b[r]) - layout.nominal(&row));
        recourse.extend(layout.noise_coefficients(&row));
    }
    (nominal, recourse)
}

/// Rows of an Individual-method block: `bᵢ − Aᵢx̄ ≥ z‖Fᵀ[AX]ᵢᵀ‖`.
///
/// Returns `(kind, rows)` blocks: a plain nonnegative row when the noise term
/// is constant, two rows when `k = 1`, a second-order cone otherwise.
pub fn reformulate_individual_soc(
    a_row: &[f64],
    b: f64,
    layout: &RuleLayout,
    factor: &DMatrix<f64>,
    z: f64,
) -> Vec<(ConeKind, Vec<Affine>)> {
    let nominal = Affine::constant(b) - layout.nominal(a_row);
    let g = layout.noise_coefficients(a_row);
    let k = g.len();
    // Fᵀg
    let fg: Vec<Affine> = (0..k)
        .map(|c| {
            (0..k)
                .filter(|&j| factor[(j, c)] != 0.0)
                .fold(Affine::default(), |acc, j| acc + g[j].clone().scaled(factor[(j, c)]))
        })
        .collect();
    if fg.iter().all(Affine::is_constant) {
        let sd = fg.iter().map(|e| e.constant * e.constant).sum::<f64>().sqrt();
        return vec![(ConeKind::NonNeg, vec![nominal.plus_const(-z * sd)])];
    }
    if k == 1 {
        let t = fg[0].clone().scaled(z);
        return vec![(ConeKind::NonNeg, vec![nominal.clone() - t.clone(), nominal + t])];
    }
    let mut rows = vec![nominal];
    rows.extend(fg.into_iter().map(|e| e.scaled(z)));
    vec![(ConeKind::SecondOrder, rows)]
}

pub fn privatize(
    program: &ConicProgram,
    noise: &NoiseSpec,
    query: &QueryConstraint,
    chance: &ChanceSpec,
    seed: u64,
) -> Result<Privatized> {
    privatize_with(program, noise, query, chance, seed, &PrivatizeOptions::default())
}

pub fn privatize_with(
    program: &ConicProgram,
    noise: &NoiseSpec,
    query: &QueryConstraint,
    chance: &ChanceSpec,
    seed: u64,
    opts: &PrivatizeOptions,
) -> Result<Privatized> {
    program.check()?;
    let (n, k) = (program.n(), noise.dim);
    query.check(n, k)?;
    if !(opts.recourse_norm_weight >= 0.0 && opts.recourse_norm_weight.is_finite()) {
        return Err(Error::arg("recourse norm weight must be finite and nonnegative"));
    }

    let blocks: Vec<_> = program.cones.iter_offsets().map(|(off, b)| (off, *b)).collect();
    let mut treat: Vec<BlockTreatment> = blocks
        .iter()
        .map(|(_, b)| if b.kind == ConeKind::Zero { BlockTreatment::Split } else { BlockTreatment::Chance })
        .collect();
    for &(bi, t) in &opts.treatments {
        if bi >= treat.len() {
            return Err(Error::dim(format!("treatment for block {bi}, program has {} blocks", treat.len())));
        }
        treat[bi] = t;
    }
    for (bi, (_, b)) in blocks.iter().enumerate() {
        match (b.kind, treat[bi]) {
            (ConeKind::Zero, BlockTreatment::Chance) => {
                return Err(Error::arg(format!("equality block {bi} must be split or nominal")))
            }
            (kind, BlockTreatment::Split) if kind != ConeKind::Zero => {
                return Err(Error::arg(format!("only equality blocks can be split, block {bi} is {kind}")))
            }
            _ => {}
        }
    }

    let a = &program.a;
    let row = |r: usize| -> Vec<f64> { a.row(r).iter().copied().collect() };

    // Rows of X that enter some enforced row; the rest carry no information.
    let mut used = vec![false; n];
    for (bi, &(off, b)) in blocks.iter().enumerate() {
        if treat[bi] == BlockTreatment::Nominal {
            continue;
        }
        for r in off..off + b.dim {
            for (l, u) in used.iter_mut().enumerate() {
                *u |= a[(r, l)] != 0.0;
            }
        }
    }

    let mut pins: Vec<Option<f64>> = vec![None; n * k];
    let mut multi = Vec::new();
    for e in apply_query_constraint(query, n, k)? {
        if let [((i, j), c)] = e.terms[..] {
            let v = e.rhs / c;
            match pins[i * k + j] {
                Some(old) if (old - v).abs() > 1e-12 * (1.0 + v.abs()) => {
                    return Err(Error::ConflictingConstraints(format!("X[{i}][{j}] pinned to both {old} and {v}")))
                }
                _ => pins[i * k + j] = Some(v),
            }
        } else {
            for &((i, _), _) in &e.terms {
                used[i] = true;
            }
            multi.push(e);
        }
    }

    let mut bld = ConicBuilder::new();
    let xbar: Vec<usize> = (0..n).map(|i| bld.add_var(format!("xbar[{i}]"))).collect();
    for (i, &col) in xbar.iter().enumerate() {
        bld.set_cost(col, program.c[i]);
    }
    let mut entries = Vec::with_capacity(n * k);
    let mut xvars = Vec::new();
    for i in 0..n {
        for j in 0..k {
            entries.push(match pins[i * k + j] {
                Some(v) => Entry::Const(v),
                None if used[i] => {
                    let col = bld.add_var(format!("X[{i}][{j}]"));
                    xvars.push(col);
                    Entry::Var(col)
                }
                None => Entry::Const(0.0),
            });
        }
    }
    let layout = RuleLayout { n, k, xbar, x: entries };

    let cov = noise.covariance();
    let factor = noise.factor();

    let chance_lin_rows: usize = blocks
        .iter()
        .zip(&treat)
        .filter(|((_, b), t)| b.kind == ConeKind::NonNeg && **t == BlockTreatment::Chance)
        .map(|((_, b), _)| b.dim)
        .sum();

    let mut vertices = None;
    let mut sample_size = None;
    let mut z_rows = Vec::new();
    let mut eta_bar = Vec::new();
    match chance {
        ChanceSpec::Vertex { eta, beta, samples } => {
            let s = vertex_sample_size(*eta, k, *beta)?;
            let s = match samples {
                Some(0) => return Err(Error::arg("vertex sample count must be positive")),
                Some(s) => *s,
                None => s,
            };
            if k > super::vertex::MAX_VERTEX_DIM {
                // fail before drawing S × k samples
                hyperrectangle_vertices(&DMatrix::zeros(1, k))?;
            }
            let mut r = rng::stream(seed, rng::VERTEX_STREAM);
            let draws = noise.draw_many(&mut r, s);
            vertices = Some(hyperrectangle_vertices(&draws)?);
            sample_size = Some(s);
        }
        ChanceSpec::Individual { eta_bar: eb, safety } => {
            let kind = safety.unwrap_or(match noise.family {
                NoiseFamily::Laplace => SafetyKind::Chebyshev,
                NoiseFamily::Gaussian => SafetyKind::GaussianExact,
            });
            if kind == SafetyKind::GaussianExact && noise.family != NoiseFamily::Gaussian {
                return Err(Error::arg("the exact Gaussian safety factor needs Gaussian noise"));
            }
            eta_bar = match eb {
                EtaBar::Uniform(eta) => {
                    if !(*eta > 0.0 && *eta < 1.0) {
                        return Err(Error::arg(format!("η must lie in (0, 1), got {eta}")));
                    }
                    vec![eta / chance_lin_rows.max(1) as f64; chance_lin_rows]
                }
                EtaBar::Each(e) => vec![*e; chance_lin_rows],
                EtaBar::PerRow(v) => {
                    if v.len() != chance_lin_rows {
                        return Err(Error::dim(format!(
                            "{} per-row budgets for {chance_lin_rows} chance-constrained rows",
                            v.len()
                        )));
                    }
                    v.clone()
                }
            };
            z_rows = eta_bar.iter().map(|&e| safety_factor(e, kind)).collect::<Result<_>>()?;
        }
    }

    let mut recourse_sys: Vec<Affine> = Vec::new();
    let mut lin_row = 0;
    for (bi, &(off, blk)) in blocks.iter().enumerate() {
        let rows = off..off + blk.dim;
        match treat[bi] {
            BlockTreatment::Nominal => {
                let exprs = rows.map(|r| Affine::constant(program.b[r]) - layout.nominal(&row(r))).collect();
                bld.constrain(blk.kind, exprs);
            }
            BlockTreatment::Split => {
                let sub_a = a.rows(off, blk.dim).into_owned();
                let sub_b = program.b.rows(off, blk.dim).into_owned();
                let (nominal, recourse) = split_equalities(&sub_a, &sub_b, &layout);
                bld.constrain(ConeKind::Zero, nominal);
                recourse_sys.extend(recourse);
            }
            BlockTreatment::Chance => match &vertices {
                Some(v) => {
                    let per_vertex: Vec<Vec<Affine>> = (0..v.nrows())
                        .into_par_iter()
                        .map(|vi| {
                            let zeta: Vec<f64> = v.row(vi).iter().copied().collect();
                            rows.clone().map(|r| Affine::constant(program.b[r]) - layout.at(&row(r), &zeta)).collect()
                        })
                        .collect();
                    for exprs in per_vertex {
                        bld.constrain(blk.kind, exprs);
                    }
                }
                None => {
                    if blk.kind == ConeKind::NonNeg {
                        for r in rows {
                            for (kind, exprs) in
                                reformulate_individual_soc(&row(r), program.b[r], &layout, &factor, z_rows[lin_row])
                            {
                                bld.constrain(kind, exprs);
                            }
                            lin_row += 1;
                        }
                    } else {
                        let deterministic = rows.clone().all(|r| {
                            layout.noise_coefficients(&row(r)).iter().all(|g| g.is_constant() && g.constant == 0.0)
                        });
                        if !deterministic {
                            return Err(Error::arg(format!(
                                "the Individual method handles linear rows only; block {bi} is {} with noise-dependent rows",
                                blk.kind
                            )));
                        }
                        let exprs = rows.map(|r| Affine::constant(program.b[r]) - layout.nominal(&row(r))).collect();
                        bld.constrain(blk.kind, exprs);
                    }
                }
            },
        }
    }

    for e in multi {
        let mut aff = Affine::constant(-e.rhs);
        for ((i, j), c) in e.terms {
            match layout.entry(i, j) {
                Entry::Var(col) => aff.terms.push((col, c)),
                Entry::Const(v) => aff.constant += c * v,
            }
        }
        recourse_sys.push(aff);
    }
    let recourse_sys = check_recourse_system(recourse_sys)?;
    bld.constrain(ConeKind::Zero, recourse_sys);

    let mut objective_offset = 0.0;
    if let Some(m) = &opts.quadratic {
        if m.ncols() != n {
            return Err(Error::dim(format!("quadratic map has {} columns, program has n = {n}", m.ncols())));
        }
        // entries of MXF
        let mut ents = Vec::with_capacity(m.nrows() * k);
        for r in 0..m.nrows() {
            for c in 0..k {
                let mut e = Affine::default();
                for i in (0..n).filter(|&i| m[(r, i)] != 0.0) {
                    for j in 0..k {
                        let w = m[(r, i)] * factor[(j, c)];
                        if w == 0.0 {
                            continue;
                        }
                        match layout.entry(i, j) {
                            Entry::Var(col) => e.terms.push((col, w)),
                            Entry::Const(v) => e.constant += w * v,
                        }
                    }
                }
                ents.push(e);
            }
        }
        if ents.iter().all(Affine::is_constant) {
            objective_offset = ents.iter().map(|e| e.constant * e.constant).sum();
        } else {
            let u = bld.add_var("quad_trace");
            bld.set_cost(u, 1.0);
            let mut rows = vec![Affine::var(u), Affine::constant(0.5)];
            rows.extend(ents);
            bld.rsoc(rows);
        }
    }

    if opts.recourse_norm_weight > 0.0 && !xvars.is_empty() {
        let t = bld.add_var("recourse_norm");
        bld.set_cost(t, opts.recourse_norm_weight);
        let mut rows = vec![Affine::var(t)];
        rows.extend(xvars.iter().map(|&c| Affine::var(c)));
        bld.soc(rows);
    }

    Ok(Privatized {
        program: bld.build(),
        layout,
        vertices,
        sample_size,
        eta_bar,
        objective_offset,
        cost: program.c.clone(),
        quadratic: opts.quadratic.clone(),
        cov,
    })
}

fn polish_equalities(p: &ConicProgram, x: &DVector<f64>) -> DVector<f64> {
    let rows: Vec<usize> = p
        .cones
        .iter_offsets()
        .filter(|(_, b)| b.kind == ConeKind::Zero)
        .flat_map(|(off, b)| off..off + b.dim)
        .collect();
    if rows.is_empty() {
        return x.clone();
    }
    let m = p.a.select_rows(&rows);
    let r = DVector::from_iterator(rows.len(), rows.iter().map(|&i| p.b[i])) - &m * x;
    match m.svd(true, true).solve(&r, 1e-12) {
        Ok(dx) => x + dx,
        Err(_) => x.clone(),
    }
}

/// Drops vacuous rows of the recourse equality system and rejects it when it
/// has no solution.
fn check_recourse_system(rows: Vec<Affine>) -> Result<Vec<Affine>> {
    const TOL: f64 = 1e-9;
    let mut kept = Vec::with_capacity(rows.len());
    for e in rows {
        if e.is_constant() {
            if e.constant.abs() > TOL {
                return Err(Error::ConflictingConstraints(format!("recourse equality reduces to {} = 0", e.constant)));
            }
        } else {
            kept.push(e);
        }
    }
    if kept.is_empty() {
        return Ok(kept);
    }
    let mut cols: Vec<usize> = kept.iter().flat_map(|e| e.terms.iter().map(|t| t.0)).collect();
    cols.sort_unstable();
    cols.dedup();
    let mut aug = DMatrix::zeros(kept.len(), cols.len() + 1);
    for (r, e) in kept.iter().enumerate() {
        for &(c, v) in &e.terms {
            let pos = cols.binary_search(&c).expect("column collected above");
            aug[(r, pos)] += v;
        }
        aug[(r, cols.len())] = -e.constant;
    }
    let coef = aug.columns(0, cols.len()).into_owned();
    if rank(&coef) < rank(&aug) {
        return Err(Error::ConflictingConstraints(
            "the query structure on X contradicts the recourse part of the equality rows".into(),
        ));
    }
    Ok(kept)
}

fn rank(m: &DMatrix<f64>) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let top = sv.max();
    if top == 0.0 {
        return 0;
    }
    let tol = 1e-9 * top * m.nrows().max(m.ncols()) as f64;
    sv.iter().filter(|&&s| s > tol).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::build_simple_lp;
    use crate::dp::sample_noise;

    fn settings() -> SolverSettings {
        SolverSettings::default()
    }

    #[test]
    fn simple_lp_vertex_offsets_from_lower_bound() {
        let p = build_simple_lp(1.0, 10.0, 30.0).unwrap();
        let noise = NoiseSpec::laplace(1, 1.0).unwrap();
        let pv = privatize(&p, &noise, &QueryConstraint::sum(1), &ChanceSpec::vertex(0.05, 0.01), 4).unwrap();
        assert_eq!(pv.sample_size, Some(178));
        let v = pv.vertices.clone().unwrap();
        let (lo, hi) = (v[(0, 0)], v[(1, 0)]);
        assert!(lo < 0.0 && hi > 0.0);
        let (rule, _) = pv.solve(&settings()).unwrap();
        assert_eq!(rule.x[(0, 0)], 1.0);
        assert!((rule.xbar[0] - (10.0 - lo)).abs() < 1e-6, "{} vs {}", rule.xbar[0], 10.0 - lo);
        assert!(rule.xbar[0] > 10.0 && rule.xbar[0] < 30.0);
    }

    #[test]
    fn zero_noise_recovers_deterministic_optimum() {
        let p = build_simple_lp(1.0, 10.0, 30.0).unwrap();
        let noise = NoiseSpec::laplace(1, 0.0).unwrap();
        let pv = privatize(&p, &noise, &QueryConstraint::sum(1), &ChanceSpec::vertex(0.05, 0.01), 1).unwrap();
        let (rule, _) = pv.solve(&settings()).unwrap();
        assert!((rule.xbar[0] - 10.0).abs() < 1e-6);
        assert!((pv.expected_objective(&rule) - 10.0).abs() < 1e-6);
    }

    fn two_var_equality() -> ConicProgram {
        // min x0 + x1  s.t.  x0 + x1 = 5, x ≥ 0
        let mut b = ConicBuilder::new();
        let x = b.add_vars("x", 2);
        b.set_cost(x[0], 1.0);
        b.set_cost(x[1], 1.0);
        b.eq(Affine::var(x[0]) + Affine::var(x[1]) - Affine::constant(5.0));
        b.constrain(ConeKind::NonNeg, vec![Affine::var(x[0]), Affine::var(x[1])]);
        b.build()
    }

    #[test]
    fn sum_query_conflicts_with_balance() {
        let noise = NoiseSpec::laplace(1, 1.0).unwrap();
        let err = privatize(&two_var_equality(), &noise, &QueryConstraint::sum(2), &ChanceSpec::vertex(0.1, 0.1), 0)
            .unwrap_err();
        assert!(matches!(err, Error::ConflictingConstraints(_)), "{err}");
    }

    #[test]
    fn identity_query_conflicts_with_equality_row() {
        let noise = NoiseSpec::laplace(2, 1.0).unwrap();
        let err =
            privatize(&two_var_equality(), &noise, &QueryConstraint::identity(2), &ChanceSpec::vertex(0.1, 0.1), 0)
                .unwrap_err();
        assert!(matches!(err, Error::ConflictingConstraints(_)), "{err}");
    }

    #[test]
    fn split_equalities_hold_for_every_draw() {
        let noise = NoiseSpec::laplace(1, 0.5).unwrap();
        let q = QueryConstraint::WeightedSum { weights: vec![1.0, 2.0] };
        let pv = privatize(&two_var_equality(), &noise, &q, &ChanceSpec::vertex(0.1, 0.1), 3).unwrap();
        let (rule, _) = pv.solve(&settings()).unwrap();
        assert!(rule.query_residual(&q) < 1e-9);
        let draws = sample_noise(&noise, 9, 10_000).unwrap();
        for s in 0..draws.nrows() {
            let x = rule.eval(&draws.row(s).transpose());
            assert!((x[0] + x[1] - 5.0).abs() < 1e-8);
        }
    }

    #[test]
    fn individual_gaussian_row_tightening() {
        // min x  s.t.  x ≥ 2, Identity query, Gaussian σ = 0.5
        let mut b = ConicBuilder::new();
        let x = b.add_var("x");
        b.set_cost(x, 1.0);
        b.nonneg(Affine::var(x) - Affine::constant(2.0));
        let p = b.build();
        let noise = NoiseSpec::gaussian(1, 0.5).unwrap();
        let pv = privatize(&p, &noise, &QueryConstraint::identity(1), &ChanceSpec::individual(EtaBar::Each(0.05)), 0)
            .unwrap();
        let (rule, _) = pv.solve(&settings()).unwrap();
        let z = safety_factor(0.05, SafetyKind::GaussianExact).unwrap();
        assert!((rule.xbar[0] - (2.0 + z * 0.5)).abs() < 1e-6);
    }

    #[test]
    fn individual_rejects_exact_factor_for_laplace() {
        let p = build_simple_lp(1.0, 0.0, 1.0).unwrap();
        let noise = NoiseSpec::laplace(1, 1.0).unwrap();
        let c = ChanceSpec::Individual { eta_bar: EtaBar::Uniform(0.1), safety: Some(SafetyKind::GaussianExact) };
        assert!(privatize(&p, &noise, &QueryConstraint::sum(1), &c, 0).is_err());
    }

    #[test]
    fn uniform_budget_split() {
        let p = build_simple_lp(1.0, 0.0, 10.0).unwrap();
        let noise = NoiseSpec::laplace(1, 0.1).unwrap();
        let pv =
            privatize(&p, &noise, &QueryConstraint::sum(1), &ChanceSpec::individual(EtaBar::Uniform(0.1)), 0).unwrap();
        assert_eq!(pv.eta_bar, vec![0.05, 0.05]);
    }

    #[test]
    fn quadratic_reduction_identity() {
        let rule = DecisionRule::new(DVector::from_vec(vec![1.0, 2.0]), DMatrix::identity(2, 2));
        let cov = DMatrix::identity(2, 2) * 0.25;
        let r = reduce_quadratic_objective(&rule, &cov).unwrap();
        assert_eq!(r.nominal, 5.0);
        assert!((r.trace - 0.5).abs() < 1e-15);
        let zero = DecisionRule::constant(DVector::from_vec(vec![3.0]), 1);
        assert_eq!(reduce_quadratic_objective(&zero, &DMatrix::identity(1, 1)).unwrap().total(), 9.0);
    }

    #[test]
    fn quadratic_reduction_matches_monte_carlo() {
        let xbar = DVector::from_vec(vec![0.3, -1.0, 0.5]);
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.2, -0.5, 0.7, 0.1, -1.3]);
        let rule = DecisionRule::new(xbar, x);
        let noise = NoiseSpec::gaussian(2, 0.8).unwrap();
        let exact = reduce_quadratic_objective(&rule, &noise.covariance()).unwrap().total();
        let draws = sample_noise(&noise, 11, 1_000_000).unwrap();
        let vals: Vec<f64> = (0..draws.nrows()).map(|s| rule.eval(&draws.row(s).transpose()).norm_squared()).collect();
        let (mean, se) = crate::util::mean_se(&vals);
        assert!((mean - exact).abs() < 3.0 * se, "{mean} vs {exact} (se {se})");
    }

    #[test]
    fn free_recourse_trace_goes_into_program() {
        // min t  s.t. t ≥ ‖x‖² (nominal), x ≥ 1 chance, recourse free (FixedRecourse without pins)
        let mut b = ConicBuilder::new();
        let x = b.add_var("x");
        let t = b.add_var("t");
        b.set_cost(t, 1.0);
        b.rsoc(vec![Affine::var(t), Affine::constant(0.5), Affine::var(x)]);
        b.nonneg(Affine::var(x) - Affine::constant(1.0));
        let p = b.build();
        let noise = NoiseSpec::gaussian(1, 0.1).unwrap();
        let mut m = DMatrix::zeros(1, 2);
        m[(0, 0)] = 1.0;
        let opts = PrivatizeOptions { quadratic: Some(m), ..Default::default() }.treat(0, BlockTreatment::Nominal);
        let q = QueryConstraint::FixedRecourse { k: 1, pins: vec![] };
        let pv = privatize_with(&p, &noise, &q, &ChanceSpec::vertex(0.1, 0.1), 0, &opts).unwrap();
        let (rule, sol) = pv.solve(&settings()).unwrap();
        // recourse only raises the cost here, so it goes to zero
        assert!(rule.x[(0, 0)].abs() < 1e-4);
        assert!((pv.expected_objective(&rule) - sol.objective).abs() < 1e-4);
    }
}
