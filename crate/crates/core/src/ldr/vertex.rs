use nalgebra::DMatrix;

use crate::dp::ceil_tol;
use crate::error::{Error, Result};

pub const MAX_VERTEX_DIM: usize = 20;

/// Samples for the hyperrectangle to cover `1 − η` of the noise mass with
/// confidence `1 − β`: `⌈(1/η)·(e/(e−1))·(2k − 1 + ln(1/β))⌉`.
pub fn vertex_sample_size(eta: f64, k: usize, beta: f64) -> Result<usize> {
    if !(eta > 0.0 && eta < 1.0 && beta > 0.0 && beta < 1.0) {
        return Err(Error::arg(format!("η and β must lie in (0, 1), got η = {eta}, β = {beta}")));
    }
    if k == 0 {
        return Err(Error::arg("noise dimension must be at least 1"));
    }
    let e = std::f64::consts::E;
    Ok(ceil_tol((1.0 / eta) * (e / (e - 1.0)) * (2.0 * k as f64 - 1.0 + (1.0 / beta).ln())))
}

/// Corners of the per-coordinate min/max box of `samples` (`S × k`).
///
/// Row `v` takes the maximum in coordinate `j` when bit `k − 1 − j` of `v` is
/// set, so the first coordinate varies slowest.
pub fn hyperrectangle_vertices(samples: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (s, k) = samples.shape();
    if s == 0 {
        return Err(Error::arg("at least one sample is needed to build the box"));
    }
    if k > MAX_VERTEX_DIM {
        return Err(Error::arg(format!(
            "noise dimension {k} gives 2^{k} vertices; use the Individual method above k = {MAX_VERTEX_DIM}"
        )));
    }
    let lo: Vec<f64> = (0..k).map(|j| samples.column(j).min()).collect();
    let hi: Vec<f64> = (0..k).map(|j| samples.column(j).max()).collect();
    let count = 1usize << k;
    Ok(DMatrix::from_fn(count, k, |v, j| if v >> (k - 1 - j) & 1 == 1 { hi[j] } else { lo[j] }))
}
