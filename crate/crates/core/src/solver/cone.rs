//! Cone arithmetic inside the interior-point loop: Jordan products, Nesterov–Todd
//! scalings and step lengths. Rotated cones never reach this layer.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Kind {
    Lin,
    Soc,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Blk {
    pub kind: Kind,
    pub off: usize,
    pub dim: usize,
}

impl Blk {
    fn range(&self) -> std::ops::Range<usize> {
        self.off..self.off + self.dim
    }
}

#[derive(Debug, Clone)]
enum BlkScaling {
    /// `W = diag(w)`.
    Lin(Vec<f64>),
    /// `W = η [[a, qᵀ], [q, I + qqᵀ/(1+a)]]` with `a² − ‖q‖² = 1`.
    Soc { eta: f64, a: f64, q: Vec<f64> },
}

#[derive(Debug, Clone)]
pub(crate) struct Scaling {
    blocks: Vec<(Blk, BlkScaling)>,
}

pub(crate) fn degree(blks: &[Blk]) -> usize {
    blks.iter()
        .map(|b| match b.kind {
            Kind::Lin => b.dim,
            Kind::Soc => 1,
        })
        .sum()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `x₀² − ‖x₁‖²`.
fn soc_res(x: &[f64]) -> f64 {
    x[0] * x[0] - dot(&x[1..], &x[1..])
}

impl Scaling {
    pub fn identity(blks: &[Blk]) -> Self {
        let blocks = blks
            .iter()
            .map(|b| {
                let s = match b.kind {
                    Kind::Lin => BlkScaling::Lin(vec![1.0; b.dim]),
                    Kind::Soc => BlkScaling::Soc { eta: 1.0, a: 1.0, q: vec![0.0; b.dim - 1] },
                };
                (*b, s)
            })
            .collect();
        Self { blocks }
    }

    /// NT scaling point for interior `s`, `z`: `W z = W⁻¹ s`.
    pub fn nesterov_todd(blks: &[Blk], s: &[f64], z: &[f64]) -> Option<Self> {
        let mut blocks = Vec::with_capacity(blks.len());
        for b in blks {
            let (sb, zb) = (&s[b.range()], &z[b.range()]);
            let sc = match b.kind {
                Kind::Lin => {
                    let w: Vec<f64> = sb.iter().zip(zb).map(|(s, z)| (s / z).sqrt()).collect();
                    if w.iter().any(|v| !v.is_finite() || *v <= 0.0) {
                        return None;
                    }
                    BlkScaling::Lin(w)
                }
                Kind::Soc if b.dim == 1 => {
                    let w = (sb[0] / zb[0]).sqrt();
                    if !w.is_finite() || w <= 0.0 {
                        return None;
                    }
                    BlkScaling::Soc { eta: w, a: 1.0, q: Vec::new() }
                }
                Kind::Soc => {
                    let (sr, zr) = (soc_res(sb), soc_res(zb));
                    if !(sr > 0.0 && zr > 0.0) {
                        return None;
                    }
                    let (sn, zn) = (sr.sqrt(), zr.sqrt());
                    let sbar: Vec<f64> = sb.iter().map(|v| v / sn).collect();
                    let zbar: Vec<f64> = zb.iter().map(|v| v / zn).collect();
                    let gamma = ((1.0 + dot(&sbar, &zbar)) / 2.0).sqrt();
                    let q: Vec<f64> = sbar[1..].iter().zip(&zbar[1..]).map(|(s, z)| (s - z) / (2.0 * gamma)).collect();
                    let eta = (sr / zr).sqrt().sqrt();
                    let a = (1.0 + dot(&q, &q)).sqrt();
                    if !eta.is_finite() || !a.is_finite() {
                        return None;
                    }
                    BlkScaling::Soc { eta, a, q }
                }
            };
            blocks.push((*b, sc));
        }
        Some(Self { blocks })
    }

    pub fn apply(&self, v: &[f64], out: &mut [f64], inverse: bool) {
        for (b, sc) in &self.blocks {
            let (vb, ob) = (&v[b.range()], &mut out[b.range()]);
            match sc {
                BlkScaling::Lin(w) => {
                    for i in 0..b.dim {
                        ob[i] = if inverse { vb[i] / w[i] } else { vb[i] * w[i] };
                    }
                }
                BlkScaling::Soc { eta, a, q } => {
                    let (f, sgn) = if inverse { (1.0 / eta, -1.0) } else { (*eta, 1.0) };
                    let qv = dot(q, &vb[1..]);
                    ob[0] = f * (a * vb[0] + sgn * qv);
                    let c = sgn * vb[0] + qv / (1.0 + a);
                    for i in 1..b.dim {
                        ob[i] = f * (vb[i] + c * q[i - 1]);
                    }
                }
            }
        }
    }

    pub fn w(&self, v: &[f64]) -> Vec<f64> {
        let mut o = vec![0.0; v.len()];
        self.apply(v, &mut o, false);
        o
    }

    pub fn winv(&self, v: &[f64]) -> Vec<f64> {
        let mut o = vec![0.0; v.len()];
        self.apply(v, &mut o, true);
        o
    }
}

/// Jordan product `u ∘ v`.
pub(crate) fn jprod(blks: &[Blk], u: &[f64], v: &[f64]) -> Vec<f64> {
    let mut o = vec![0.0; u.len()];
    for b in blks {
        let r = b.range();
        let (ub, vb) = (&u[r.clone()], &v[r.clone()]);
        let ob = &mut o[r];
        match b.kind {
            Kind::Lin => {
                for i in 0..b.dim {
                    ob[i] = ub[i] * vb[i];
                }
            }
            Kind::Soc => {
                ob[0] = dot(ub, vb);
                for i in 1..b.dim {
                    ob[i] = ub[0] * vb[i] + vb[0] * ub[i];
                }
            }
        }
    }
    o
}

/// Solves `λ ∘ w = v` for `w`.
pub(crate) fn jdiv(blks: &[Blk], lam: &[f64], v: &[f64]) -> Vec<f64> {
    let mut o = vec![0.0; lam.len()];
    for b in blks {
        let r = b.range();
        let (lb, vb) = (&lam[r.clone()], &v[r.clone()]);
        let ob = &mut o[r];
        match b.kind {
            Kind::Lin => {
                for i in 0..b.dim {
                    ob[i] = vb[i] / lb[i];
                }
            }
            Kind::Soc => {
                let rho = soc_res(lb);
                let w0 = (lb[0] * vb[0] - dot(&lb[1..], &vb[1..])) / rho;
                ob[0] = w0;
                for i in 1..b.dim {
                    ob[i] = (vb[i] - w0 * lb[i]) / lb[0];
                }
            }
        }
    }
    o
}

/// Identity element `e` of the product cone.
pub(crate) fn unit(blks: &[Blk], m: usize) -> Vec<f64> {
    let mut e = vec![0.0; m];
    for b in blks {
        match b.kind {
            Kind::Lin => e[b.range()].iter_mut().for_each(|v| *v = 1.0),
            Kind::Soc => e[b.off] = 1.0,
        }
    }
    e
}

/// Smallest "eigenvalue" over blocks: `min xᵢ` or `x₀ − ‖x₁‖`.
pub(crate) fn min_eig(blks: &[Blk], x: &[f64]) -> f64 {
    let mut m = f64::INFINITY;
    for b in blks {
        let xb = &x[b.range()];
        let e = match b.kind {
            Kind::Lin => xb.iter().copied().fold(f64::INFINITY, f64::min),
            Kind::Soc => xb[0] - dot(&xb[1..], &xb[1..]).sqrt(),
        };
        m = m.min(e);
    }
    m
}

/// Moves `x` into the interior by `(1 + t)e` when it is not already strictly inside.
pub(crate) fn shift_interior(blks: &[Blk], x: &mut [f64]) {
    let t = -min_eig(blks, x);
    if t >= -1e-8 {
        let e = unit(blks, x.len());
        for (xi, ei) in x.iter_mut().zip(e) {
            *xi += (1.0 + t.max(0.0)) * ei;
        }
    }
}

/// Largest `α` with `x + αd` in the cone, for `x` interior. Unbounded steps return `+∞`.
pub(crate) fn max_step(blks: &[Blk], x: &[f64], d: &[f64]) -> f64 {
    let mut alpha = f64::INFINITY;
    for b in blks {
        let (xb, db) = (&x[b.range()], &d[b.range()]);
        let a = match b.kind {
            Kind::Lin => lin_step(xb, db),
            Kind::Soc if b.dim == 1 => lin_step(xb, db),
            Kind::Soc => soc_step(xb, db),
        };
        alpha = alpha.min(a);
    }
    alpha
}

fn lin_step(x: &[f64], d: &[f64]) -> f64 {
    x.iter().zip(d).filter(|(_, &di)| di < 0.0).map(|(&xi, &di)| -xi / di).fold(f64::INFINITY, f64::min)
}

fn soc_step(x: &[f64], d: &[f64]) -> f64 {
    let qa = soc_res(d);
    let qb = 2.0 * (x[0] * d[0] - dot(&x[1..], &d[1..]));
    let qc = soc_res(x).max(0.0);
    let mut alpha = if d[0] < 0.0 { -x[0] / d[0] } else { f64::INFINITY };
    let root = if qa.abs() <= 1e-300 {
        if qb < 0.0 {
            -qc / qb
        } else {
            f64::INFINITY
        }
    } else {
        let disc = qb * qb - 4.0 * qa * qc;
        if disc < 0.0 {
            f64::INFINITY
        } else {
            let sq = disc.sqrt();
            let t = -0.5 * (qb + qb.signum() * sq);
            let (r1, r2) = if t != 0.0 { (t / qa, qc / t) } else { (0.0, 0.0) };
            [r1, r2].into_iter().filter(|r| *r > 0.0).fold(f64::INFINITY, f64::min)
        }
    };
    alpha = alpha.min(root);
    alpha
}

#[cfg(test)]
mod tests {
    use super::*;

    fn soc(off: usize, dim: usize) -> Blk {
        Blk { kind: Kind::Soc, off, dim }
    }

    #[test]
    fn nt_scaling_maps_z_and_s_to_same_point() {
        let blks = [Blk { kind: Kind::Lin, off: 0, dim: 2 }, soc(2, 3), soc(5, 4)];
        let s = [1.0, 3.0, 2.0, 0.5, -1.2, 3.0, 1.0, 0.2, -0.7];
        let z = [2.0, 0.1, 1.5, -0.3, 0.4, 1.0, -0.2, 0.3, 0.1];
        let w = Scaling::nesterov_todd(&blks, &s, &z).unwrap();
        let a = w.w(&z);
        let b = w.winv(&s);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12, "{a:?} vs {b:?}");
        }
        let back = w.winv(&w.w(&s));
        for (x, y) in back.iter().zip(&s) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn jordan_division_inverts_product() {
        let blks = [soc(0, 4), Blk { kind: Kind::Lin, off: 4, dim: 1 }];
        let lam = [2.0, 0.3, -0.5, 0.9, 4.0];
        let v = [0.1, 1.0, -2.0, 0.5, 3.0];
        let w = jdiv(&blks, &lam, &v);
        let back = jprod(&blks, &lam, &w);
        for (x, y) in back.iter().zip(&v) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn soc_step_hits_boundary() {
        let blks = [soc(0, 3)];
        let x = [2.0, 0.0, 0.0];
        let d = [-1.0, 1.0, 0.0];
        let a = max_step(&blks, &x, &d);
        // boundary when 2 − α = α
        assert!((a - 1.0).abs() < 1e-12);
        assert_eq!(max_step(&blks, &x, &[1.0, 0.5, 0.0]), f64::INFINITY);
    }

    #[test]
    fn shift_enters_interior() {
        let blks = [soc(0, 3), Blk { kind: Kind::Lin, off: 3, dim: 2 }];
        let mut x = [0.0, 3.0, 4.0, -1.0, 2.0];
        shift_interior(&blks, &mut x);
        assert!(min_eig(&blks, &x) > 0.0);
    }
}
