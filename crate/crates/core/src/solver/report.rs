use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::Solution;
use crate::conic::{block_distance, dual_block_distance, ConicProgram};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
    pub complementarity: f64,
}

impl KktReport {
    pub fn max(&self) -> f64 {
        self.primal.max(self.dual).max(self.gap).max(self.complementarity)
    }
}

/// Residuals of `(x, y)` recomputed from the program alone:
///
/// * primal: distance of `b − Ax` to `K`, over `1 + ‖b‖`
/// * dual: `‖Aᵀy + c‖` plus the distance of `y` to `K*`, over `1 + ‖c‖`
/// * gap: `|cᵀx + bᵀy|` relative to the objectives
/// * complementarity: `|(b − Ax)ᵀy|` relative to the objectives
pub fn kkt_report(program: &ConicProgram, sol: &Solution) -> Result<KktReport> {
    kkt_residuals(program, &sol.x, &sol.y)
}

pub fn kkt_residuals(program: &ConicProgram, x: &DVector<f64>, y: &DVector<f64>) -> Result<KktReport> {
    if y.len() != program.m() {
        return Err(Error::dim(format!("y has length {}, program has m = {}", y.len(), program.m())));
    }
    let s = program.slack(x)?;
    let mut pdist = 0.0;
    let mut ddist = 0.0;
    for (off, blk) in program.cones.iter_offsets() {
        let r = off..off + blk.dim;
        pdist += block_distance(blk.kind, &s.as_slice()[r.clone()]).powi(2);
        ddist += dual_block_distance(blk.kind, &y.as_slice()[r]).powi(2);
    }
    let cx = program.c.dot(x);
    let by = program.b.dot(y);
    let denom = 1.0 + cx.abs() + by.abs();
    let dres = (program.a.tr_mul(y) + &program.c).norm();
    Ok(KktReport {
        primal: pdist.sqrt() / (1.0 + program.b.norm()),
        dual: (dres + ddist.sqrt()) / (1.0 + program.c.norm()),
        gap: (cx + by).abs() / denom,
        complementarity: s.dot(y).abs() / denom,
    })
}
