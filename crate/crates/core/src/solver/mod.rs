//! Homogeneous self-dual interior-point method with Nesterov–Todd scaling and
//! Mehrotra predictor-corrector steps.

mod cone;
mod kkt;
mod report;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::conic::{rotate_rsoc, ConeKind, ConicProgram};
use crate::error::{Error, Result};
use cone::{Blk, Kind, Scaling};
use kkt::Kkt;

pub use report::{kkt_report, KktReport};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSettings {
    pub tol: f64,
    /// Accepted for the best iterate when the iteration stalls or diverges
    /// before reaching `tol`.
    pub reduced_tol: f64,
    pub max_iter: usize,
    /// Tolerance on normalised infeasibility certificates.
    pub infeasibility_threshold: f64,
    pub equilibrate: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self { tol: 1e-8, reduced_tol: 1e-6, max_iter: 200, infeasibility_threshold: 1e-8, equilibrate: true }
    }
}

impl SolverSettings {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn check(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::arg(format!("solver tol must lie in (0, 1), got {}", self.tol)));
        }
        if !(self.reduced_tol >= self.tol) {
            return Err(Error::arg("reduced_tol must be at least tol"));
        }
        if self.max_iter == 0 {
            return Err(Error::arg("max_iter must be at least 1"));
        }
        if !(self.infeasibility_threshold > 0.0) {
            return Err(Error::arg("infeasibility_threshold must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    MaxIter,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    #[serde(with = "vec_serde")]
    pub x: DVector<f64>,
    /// Dual multipliers, one per row; `y ∈ K*` and `Aᵀy + c = 0` at optimality.
    #[serde(with = "vec_serde")]
    pub y: DVector<f64>,
    /// Primal slack `b − Ax`.
    #[serde(with = "vec_serde")]
    pub s: DVector<f64>,
    pub status: Status,
    pub objective: f64,
    pub residuals: Residuals,
    /// Normalised residual of the infeasibility certificate, when one was found.
    pub certificate: Option<f64>,
    pub iterations: usize,
}

impl Solution {
    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }

    /// Returns the solution, or `Error::Infeasible` for any other status.
    pub fn into_optimal(self) -> Result<Self> {
        if self.is_optimal() {
            Ok(self)
        } else {
            Err(Error::Infeasible(self.status))
        }
    }
}

mod vec_serde {
    use nalgebra::DVector;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &DVector<f64>, s: S) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DVector<f64>, D::Error> {
        Ok(DVector::from_vec(Vec::<f64>::deserialize(d)?))
    }
}

/// Ruiz scaling with one factor per second-order block so cones are preserved.
struct Equilibration {
    d: DVector<f64>,
    e: DVector<f64>,
}

impl Equilibration {
    fn compute(p: &ConicProgram, enabled: bool) -> Self {
        let (m, n) = (p.m(), p.n());
        let mut d = DVector::from_element(m, 1.0);
        let mut e = DVector::from_element(n, 1.0);
        if !enabled || m == 0 || n == 0 {
            return Self { d, e };
        }
        let mut a = p.a.clone();
        for _ in 0..25 {
            let mut rn: Vec<f64> = (0..m).map(|i| a.row(i).amax()).collect();
            for (off, blk) in p.cones.iter_offsets() {
                if matches!(blk.kind, ConeKind::SecondOrder | ConeKind::RotatedSecondOrder) {
                    let mx = rn[off..off + blk.dim].iter().copied().fold(0.0, f64::max);
                    rn[off..off + blk.dim].iter_mut().for_each(|v| *v = mx);
                }
            }
            let cn: Vec<f64> = (0..n).map(|j| a.column(j).amax()).collect();
            let mut done = true;
            for i in 0..m {
                if rn[i] > 0.0 {
                    let f = 1.0 / rn[i].sqrt();
                    done &= (f - 1.0).abs() < 1e-3;
                    d[i] = (d[i] * f).clamp(1e-4, 1e4);
                }
            }
            for j in 0..n {
                if cn[j] > 0.0 {
                    let f = 1.0 / cn[j].sqrt();
                    done &= (f - 1.0).abs() < 1e-3;
                    e[j] = (e[j] * f).clamp(1e-4, 1e4);
                }
            }
            a = p.a.clone();
            for i in 0..m {
                a.row_mut(i).scale_mut(d[i]);
            }
            for j in 0..n {
                a.column_mut(j).scale_mut(e[j]);
            }
            if done {
                break;
            }
        }
        Self { d, e }
    }
}

/// Problem in solver form: `Ax = b` (equality rows) and `Gx + s = h`, `s ∈ K'`.
struct Split {
    a: DMatrix<f64>,
    b: Vec<f64>,
    g: DMatrix<f64>,
    h: Vec<f64>,
    c: Vec<f64>,
    blks: Vec<Blk>,
    /// Original row index of each kept equality row.
    eq_rows: Vec<usize>,
    /// Original row offset and dim of each cone block, and whether it was rotated.
    cone_map: Vec<(usize, usize, usize, bool)>,
}

impl Split {
    fn new(p: &ConicProgram, eq: &Equilibration) -> Self {
        let n = p.n();
        let mut as_ = p.a.clone();
        for i in 0..p.m() {
            as_.row_mut(i).scale_mut(eq.d[i]);
        }
        for j in 0..n {
            as_.column_mut(j).scale_mut(eq.e[j]);
        }
        let bs: Vec<f64> = (0..p.m()).map(|i| p.b[i] * eq.d[i]).collect();
        let c: Vec<f64> = (0..n).map(|j| p.c[j] * eq.e[j]).collect();

        let mut eq_rows = Vec::new();
        let mut g_rows: Vec<Vec<f64>> = Vec::new();
        let mut h = Vec::new();
        let mut blks = Vec::new();
        let mut cone_map = Vec::new();
        for (off, blk) in p.cones.iter_offsets() {
            let rows = off..off + blk.dim;
            match blk.kind {
                ConeKind::Zero => eq_rows.extend(rows),
                ConeKind::NonNeg | ConeKind::SecondOrder | ConeKind::RotatedSecondOrder => {
                    let goff = h.len();
                    let mut block: Vec<Vec<f64>> = rows.clone().map(|i| as_.row(i).iter().copied().collect()).collect();
                    let mut hb: Vec<f64> = rows.clone().map(|i| bs[i]).collect();
                    let rotated = blk.kind == ConeKind::RotatedSecondOrder;
                    if rotated {
                        let r = std::f64::consts::FRAC_1_SQRT_2;
                        let (r0, r1) = (block[0].clone(), block[1].clone());
                        for j in 0..n {
                            block[0][j] = r * (r0[j] + r1[j]);
                            block[1][j] = r * (r0[j] - r1[j]);
                        }
                        hb = rotate_rsoc(&hb);
                    }
                    g_rows.extend(block);
                    h.extend(hb);
                    let kind = if blk.kind == ConeKind::NonNeg { Kind::Lin } else { Kind::Soc };
                    blks.push(Blk { kind, off: goff, dim: blk.dim });
                    cone_map.push((off, goff, blk.dim, rotated));
                }
            }
        }
        let eq_rows = independent_rows(&as_, &bs, eq_rows);
        let a = DMatrix::from_fn(eq_rows.len(), n, |r, j| as_[(eq_rows[r], j)]);
        let b = eq_rows.iter().map(|&i| bs[i]).collect();
        let g = DMatrix::from_fn(g_rows.len(), n, |r, j| g_rows[r][j]);
        Self { a, b, g, h, c, blks, eq_rows, cone_map }
    }

    /// Maps solver-space `(y, z)` and `s` back to per-row vectors of the scaled program.
    fn unsplit(&self, m: usize, y: &[f64], z: &[f64]) -> DVector<f64> {
        let mut out = DVector::zeros(m);
        for (r, &i) in self.eq_rows.iter().enumerate() {
            out[i] = y[r];
        }
        for &(off, goff, dim, rotated) in &self.cone_map {
            let seg = &z[goff..goff + dim];
            let seg = if rotated { rotate_rsoc(seg) } else { seg.to_vec() };
            for (k, v) in seg.into_iter().enumerate() {
                out[off + k] = v;
            }
        }
        out
    }
}

/// Drops equality rows that are linear combinations of earlier ones with a
/// consistent right-hand side. Inconsistent dependent rows are kept so the
/// solver can certify infeasibility.
fn independent_rows(a: &DMatrix<f64>, b: &[f64], rows: Vec<usize>) -> Vec<usize> {
    if rows.len() <= 1 {
        return rows;
    }
    let n = a.ncols();
    // orthonormal basis of kept rows, augmented with the right-hand side
    let mut basis: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut kept = Vec::new();
    for &i in &rows {
        let mut v: Vec<f64> = a.row(i).iter().copied().collect();
        let mut rhs = b[i];
        let n0 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        for (q, qb) in &basis {
            let t: f64 = v.iter().zip(q).map(|(x, y)| x * y).sum();
            for j in 0..n {
                v[j] -= t * q[j];
            }
            rhs -= t * qb;
        }
        let nr = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nr > 1e-9 * n0.max(1e-300) {
            basis.push((v.iter().map(|x| x / nr).collect(), rhs / nr));
            kept.push(i);
        } else if rhs.abs() > 1e-9 * (1.0 + b[i].abs()) {
            kept.push(i);
        }
    }
    kept
}

/// `(dx, dy, dz, ds, dτ, dκ)`.
type Step = (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>, f64, f64);

fn dotv(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn matvec(m: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    (m * DVector::from_column_slice(v)).as_slice().to_vec()
}

fn matvec_t(m: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    m.tr_mul(&DVector::from_column_slice(v)).as_slice().to_vec()
}

#[derive(Clone)]
struct Iterate {
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    s: Vec<f64>,
    tau: f64,
    kappa: f64,
}

/// Unscaled quantities of the current iterate, in original row order.
struct Recovered {
    x: DVector<f64>,
    y: DVector<f64>,
    s: DVector<f64>,
}

pub fn solve(program: &ConicProgram, settings: &SolverSettings) -> Result<Solution> {
    program.check()?;
    settings.check()?;
    let (m, n) = (program.m(), program.n());
    let eq = Equilibration::compute(program, settings.equilibrate);
    let sp = Split::new(program, &eq);
    let blks = sp.blks.clone();
    let mg = sp.h.len();
    let deg = cone::degree(&blks) as f64;

    let bnorm = program.b.norm();
    let cnorm = program.c.norm();

    let recover = |it: &Iterate, scale: f64| -> Recovered {
        let x = DVector::from_iterator(n, (0..n).map(|j| it.x[j] * eq.e[j] * scale));
        let yv = sp.unsplit(m, &it.y, &it.z);
        let y = DVector::from_iterator(m, (0..m).map(|i| yv[i] * eq.d[i] * scale));
        let sv = sp.unsplit(m, &vec![0.0; it.y.len()], &it.s);
        let s = DVector::from_iterator(m, (0..m).map(|i| sv[i] / eq.d[i] * scale));
        Recovered { x, y, s }
    };

    // initial point
    let w0 = Scaling::identity(&blks);
    let k0 = Kkt::factor(&sp.a, &sp.g, &w0)?;
    let (x, _, zp) = k0.solve(&vec![0.0; n], &sp.b, &sp.h)?;
    let mut s: Vec<f64> = zp.iter().map(|v| -v).collect();
    cone::shift_interior(&blks, &mut s);
    let neg_c: Vec<f64> = sp.c.iter().map(|v| -v).collect();
    let (_, y, mut z) = k0.solve(&neg_c, &vec![0.0; sp.b.len()], &vec![0.0; mg])?;
    cone::shift_interior(&blks, &mut z);
    drop(k0);
    let mut it = Iterate { x, y, z, s, tau: 1.0, kappa: 1.0 };

    let mut status = Status::MaxIter;
    let mut certificate = None;
    let mut residuals = Residuals::default();
    let mut iterations = 0;
    let mut stalls = 0;
    let mut best: Option<(f64, Iterate, Residuals)> = None;

    for k in 0..=settings.max_iter {
        iterations = k;
        // residuals of the embedding (solver space)
        let atz = matvec_t(&sp.a, &it.y);
        let gtz = matvec_t(&sp.g, &it.z);
        let f1: Vec<f64> = (0..n).map(|j| atz[j] + gtz[j] + sp.c[j] * it.tau).collect();
        let ax = matvec(&sp.a, &it.x);
        let f2: Vec<f64> = (0..sp.b.len()).map(|i| -ax[i] + sp.b[i] * it.tau).collect();
        let gx = matvec(&sp.g, &it.x);
        let f3: Vec<f64> = (0..mg).map(|i| -gx[i] + sp.h[i] * it.tau - it.s[i]).collect();
        let cx = dotv(&sp.c, &it.x);
        let by = dotv(&sp.b, &it.y) + dotv(&sp.h, &it.z);
        let f4 = -cx - by - it.kappa;

        // convergence tests on the unscaled program
        let rec = recover(&it, 1.0 / it.tau);
        residuals = unscaled_residuals(program, &rec, bnorm, cnorm);
        if residuals.primal <= settings.tol && residuals.dual <= settings.tol && residuals.gap <= settings.tol {
            status = Status::Optimal;
            break;
        }
        let worst = residuals.primal.max(residuals.dual).max(residuals.gap);
        match &best {
            Some((b, _, _)) if *b <= worst => {
                // diverging away from an almost converged point
                if *b <= settings.reduced_tol && worst > 1e3 * b.max(settings.tol) {
                    break;
                }
            }
            _ => best = Some((worst, it.clone(), residuals)),
        }
        let raw = recover(&it, 1.0);
        let bty = program.b.dot(&raw.y);
        let ctx = program.c.dot(&raw.x);
        if bty < 0.0 && it.tau < it.kappa {
            let r = (program.a.tr_mul(&raw.y)).norm() / -bty;
            if r <= settings.infeasibility_threshold {
                status = Status::PrimalInfeasible;
                certificate = Some(r);
                break;
            }
        }
        if ctx < 0.0 && it.tau < it.kappa {
            let r = (&program.a * &raw.x + &raw.s).norm() / -ctx;
            if r <= settings.infeasibility_threshold {
                status = Status::DualInfeasible;
                certificate = Some(r);
                break;
            }
        }
        if k == settings.max_iter || stalls >= 3 {
            break;
        }

        let mu = (dotv(&it.s, &it.z) + it.tau * it.kappa) / (deg + 1.0);
        let w = match Scaling::nesterov_todd(&blks, &it.s, &it.z) {
            Some(w) => w,
            None => break,
        };
        let lam = w.w(&it.z);
        let kkt = match Kkt::factor(&sp.a, &sp.g, &w) {
            Ok(k) => k,
            Err(e) if k == 0 => return Err(e),
            Err(_) => break,
        };
        let (x2, y2, z2) = kkt.solve(&neg_c, &sp.b, &sp.h)?;
        let qu2 = dotv(&sp.c, &x2) + dotv(&sp.b, &y2) + dotv(&sp.h, &z2);

        let direction = |sigma: f64, ds: &[f64], dk: f64| -> Result<Step> {
            let f = 1.0 - sigma;
            let r1: Vec<f64> = f1.iter().map(|v| -f * v).collect();
            let r2: Vec<f64> = f2.iter().map(|v| f * v).collect();
            let lds = cone::jdiv(&blks, &lam, ds);
            let wlds = w.w(&lds);
            let r3: Vec<f64> = (0..mg).map(|i| f * f3[i] - wlds[i]).collect();
            let (x1, y1, z1) = kkt.solve(&r1, &r2, &r3)?;
            let qu1 = dotv(&sp.c, &x1) + dotv(&sp.b, &y1) + dotv(&sp.h, &z1);
            let dtau = (-f * f4 + qu1 + dk / it.tau) / (it.kappa / it.tau - qu2);
            let mut dx = x1;
            axpy(dtau, &x2, &mut dx);
            let mut dy = y1;
            axpy(dtau, &y2, &mut dy);
            let mut dz = z1;
            axpy(dtau, &z2, &mut dz);
            // from the linearised cone equation rather than the complementarity
            // one: keeps primal residuals exact when W is badly conditioned
            let gdx = matvec(&sp.g, &dx);
            let dsv: Vec<f64> = (0..mg).map(|i| f * f3[i] - gdx[i] + sp.h[i] * dtau).collect();
            let dkap = (dk - it.kappa * dtau) / it.tau;
            Ok((dx, dy, dz, dsv, dtau, dkap))
        };

        let step_len = |dz: &[f64], ds: &[f64], dtau: f64, dkap: f64| -> f64 {
            let mut a = cone::max_step(&blks, &it.s, ds).min(cone::max_step(&blks, &it.z, dz));
            if dtau < 0.0 {
                a = a.min(-it.tau / dtau);
            }
            if dkap < 0.0 {
                a = a.min(-it.kappa / dkap);
            }
            a
        };

        // predictor
        let lam2 = cone::jprod(&blks, &lam, &lam);
        let ds_aff: Vec<f64> = lam2.iter().map(|v| -v).collect();
        let dk_aff = -it.tau * it.kappa;
        let (_, _, dz_a, ds_a, dtau_a, dkap_a) = direction(0.0, &ds_aff, dk_aff)?;
        let alpha_aff = step_len(&dz_a, &ds_a, dtau_a, dkap_a).min(1.0);
        let sigma = (1.0 - alpha_aff).powi(3).clamp(0.0, 1.0);

        // corrector
        let e = cone::unit(&blks, mg);
        let corr = cone::jprod(&blks, &w.winv(&ds_a), &w.w(&dz_a));
        let ds_c: Vec<f64> = (0..mg).map(|i| -lam2[i] - corr[i] + sigma * mu * e[i]).collect();
        let dk_c = -it.tau * it.kappa - dtau_a * dkap_a + sigma * mu;
        let (dx, dy, dz, dsv, dtau, dkap) = direction(sigma, &ds_c, dk_c)?;
        let alpha = (0.99 * step_len(&dz, &dsv, dtau, dkap)).min(1.0);
        if !(alpha > 1e-10) {
            stalls += 1;
            continue;
        }
        axpy(alpha, &dx, &mut it.x);
        axpy(alpha, &dy, &mut it.y);
        axpy(alpha, &dz, &mut it.z);
        axpy(alpha, &dsv, &mut it.s);
        it.tau += alpha * dtau;
        it.kappa += alpha * dkap;
        if !(it.tau > 0.0 && it.kappa > 0.0) || it.x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalBreakdown("iterate left the cone".into()));
        }
    }

    if status == Status::MaxIter {
        if let Some((b, bit, bres)) = best {
            if b <= settings.reduced_tol {
                status = Status::Optimal;
                it = bit;
                residuals = bres;
            }
        }
    }

    let (x, y, s, objective) = match status {
        Status::PrimalInfeasible => {
            let raw = recover(&it, 1.0);
            let by = -program.b.dot(&raw.y);
            (raw.x / it.tau, raw.y / by, raw.s / it.tau, f64::INFINITY)
        }
        Status::DualInfeasible => {
            let raw = recover(&it, 1.0);
            let cx = -program.c.dot(&raw.x);
            let x = raw.x / cx;
            let s = raw.s / cx;
            (x, raw.y, s, f64::NEG_INFINITY)
        }
        _ => {
            let rec = recover(&it, 1.0 / it.tau);
            let obj = program.c.dot(&rec.x);
            (rec.x, rec.y, rec.s, obj)
        }
    };
    Ok(Solution { x, y, s, status, objective, residuals, certificate, iterations })
}

fn unscaled_residuals(p: &ConicProgram, r: &Recovered, bnorm: f64, cnorm: f64) -> Residuals {
    let pres = (&p.b - &p.a * &r.x - &r.s).norm() / (1.0 + bnorm);
    let dres = (p.a.tr_mul(&r.y) + &p.c).norm() / (1.0 + cnorm);
    let cx = p.c.dot(&r.x);
    let by = p.b.dot(&r.y);
    let gap = (cx + by).abs() / (1.0 + cx.abs() + by.abs());
    Residuals { primal: pres, dual: dres, gap }
}
