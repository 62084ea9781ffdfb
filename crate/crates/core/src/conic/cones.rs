use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConeKind {
    /// `{0}`: equality rows.
    Zero,
    NonNeg,
    /// `v₁ ≥ ‖v₂..‖`.
    SecondOrder,
    /// `2 v₁ v₂ ≥ ‖v₃..‖²`, `v₁, v₂ ≥ 0`.
    RotatedSecondOrder,
}

impl fmt::Display for ConeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ConeKind::Zero => "Zero",
            ConeKind::NonNeg => "NonNeg",
            ConeKind::SecondOrder => "SecondOrder",
            ConeKind::RotatedSecondOrder => "RotatedSecondOrder",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConeBlock {
    pub kind: ConeKind,
    pub dim: usize,
}

impl ConeBlock {
    pub fn new(kind: ConeKind, dim: usize) -> Self {
        Self { kind, dim }
    }

    pub fn min_dim(&self) -> usize {
        match self.kind {
            ConeKind::RotatedSecondOrder => 2,
            _ => 1,
        }
    }
}

/// Ordered product of cone blocks. Row positions are fixed at construction.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConeSpec {
    pub blocks: Vec<ConeBlock>,
}

impl ConeSpec {
    pub fn new(blocks: Vec<ConeBlock>) -> Self {
        Self { blocks }
    }

    pub fn single(kind: ConeKind, dim: usize) -> Self {
        Self::new(vec![ConeBlock::new(kind, dim)])
    }

    pub fn push(&mut self, kind: ConeKind, dim: usize) {
        self.blocks.push(ConeBlock::new(kind, dim));
    }

    pub fn total_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.dim).sum()
    }

    /// Iterates `(row_offset, block)`.
    pub fn iter_offsets(&self) -> impl Iterator<Item = (usize, &ConeBlock)> {
        self.blocks.iter().scan(0usize, |off, b| {
            let start = *off;
            *off += b.dim;
            Some((start, b))
        })
    }

    /// Barrier degree: one per nonnegative row, one per (rotated) second-order block.
    pub fn degree(&self) -> usize {
        self.blocks
            .iter()
            .map(|b| match b.kind {
                ConeKind::Zero => 0,
                ConeKind::NonNeg => b.dim,
                ConeKind::SecondOrder | ConeKind::RotatedSecondOrder => 1,
            })
            .sum()
    }
}

/// Tests `v ∈ K` block by block with an absolute tolerance.
pub fn cone_membership(v: &[f64], cones: &ConeSpec, tol: f64) -> Result<bool> {
    if v.len() != cones.total_dim() {
        return Err(Error::dim(format!("vector length {} but cone dimension {}", v.len(), cones.total_dim())));
    }
    Ok(cones.iter_offsets().all(|(off, b)| block_contains(b.kind, &v[off..off + b.dim], tol)))
}

pub(crate) fn block_contains(kind: ConeKind, v: &[f64], tol: f64) -> bool {
    if v.iter().any(|x| !x.is_finite()) {
        return false;
    }
    match kind {
        ConeKind::Zero => v.iter().all(|x| x.abs() <= tol),
        ConeKind::NonNeg => v.iter().all(|&x| x >= -tol),
        ConeKind::SecondOrder => v[0] >= norm(&v[1..]) - tol,
        ConeKind::RotatedSecondOrder => {
            let tail: f64 = v[2..].iter().map(|x| x * x).sum();
            v[0] >= -tol && v[1] >= -tol && 2.0 * v[0] * v[1] >= tail - tol
        }
    }
}

/// Euclidean distance from `v` to the block cone.
pub(crate) fn block_distance(kind: ConeKind, v: &[f64]) -> f64 {
    match kind {
        ConeKind::Zero => norm(v),
        ConeKind::NonNeg => v.iter().map(|x| x.min(0.0).powi(2)).sum::<f64>().sqrt(),
        ConeKind::SecondOrder => {
            let p = project_soc(v);
            dist(v, &p)
        }
        ConeKind::RotatedSecondOrder => {
            let u = rotate_rsoc(v);
            let p = project_soc(&u);
            dist(&u, &p)
        }
    }
}

/// Distance from `v` to the dual block cone. All four kinds are self-dual
/// except `Zero`, whose dual is the whole space.
pub(crate) fn dual_block_distance(kind: ConeKind, v: &[f64]) -> f64 {
    match kind {
        ConeKind::Zero => 0.0,
        other => block_distance(other, v),
    }
}

/// Orthogonal involution taking a rotated cone onto the standard second-order cone.
pub(crate) fn rotate_rsoc(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    u[0] = r * (v[0] + v[1]);
    u[1] = r * (v[0] - v[1]);
    u
}

pub(crate) fn project_soc(v: &[f64]) -> Vec<f64> {
    let t = v[0];
    let nx = norm(&v[1..]);
    if nx <= t {
        return v.to_vec();
    }
    if nx <= -t {
        return vec![0.0; v.len()];
    }
    let a = 0.5 * (t + nx);
    let mut p = Vec::with_capacity(v.len());
    p.push(a);
    p.extend(v[1..].iter().map(|x| a * x / nx));
    p
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}
