use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::{Distribution, Open01, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rng::{stream, Rng};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NoiseFamily {
    Laplace,
    Gaussian,
}

/// Zero-mean noise with i.i.d. coordinates. `scale` is the Laplace scale `s`
/// or the Gaussian standard deviation `σ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub family: NoiseFamily,
    pub dim: usize,
    pub scale: f64,
}

impl NoiseSpec {
    pub fn new(family: NoiseFamily, dim: usize, scale: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::arg("noise dimension must be at least 1"));
        }
        if !(scale >= 0.0 && scale.is_finite()) {
            return Err(Error::arg(format!("noise scale must be finite and nonnegative, got {scale}")));
        }
        Ok(Self { family, dim, scale })
    }

    pub fn laplace(dim: usize, scale: f64) -> Result<Self> {
        Self::new(NoiseFamily::Laplace, dim, scale)
    }

    pub fn gaussian(dim: usize, sigma: f64) -> Result<Self> {
        Self::new(NoiseFamily::Gaussian, dim, sigma)
    }

    /// Per-coordinate variance: `2s²` or `σ²`.
    pub fn variance(&self) -> f64 {
        match self.family {
            NoiseFamily::Laplace => 2.0 * self.scale * self.scale,
            NoiseFamily::Gaussian => self.scale * self.scale,
        }
    }

    /// Per-coordinate standard deviation.
    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        DMatrix::identity(self.dim, self.dim) * self.variance()
    }

    /// `F` with `FFᵀ = Σ`.
    pub fn factor(&self) -> DMatrix<f64> {
        DMatrix::identity(self.dim, self.dim) * self.std_dev()
    }

    pub fn draw(&self, rng: &mut Rng) -> DVector<f64> {
        DVector::from_fn(self.dim, |_, _| self.draw_scalar(rng))
    }

    fn draw_scalar(&self, rng: &mut Rng) -> f64 {
        match self.family {
            NoiseFamily::Laplace => {
                // inverse CDF on u ∈ (−½, ½)
                let u: f64 = rng.sample::<f64, _>(Open01) - 0.5;
                -self.scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
            }
            NoiseFamily::Gaussian => {
                let z: f64 = StandardNormal.sample(rng);
                self.scale * z
            }
        }
    }

    pub fn draw_many(&self, rng: &mut Rng, count: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(count, self.dim);
        for i in 0..count {
            for j in 0..self.dim {
                m[(i, j)] = self.draw_scalar(rng);
            }
        }
        m
    }

    /// Laplace density of one coordinate centred at `mu`.
    pub fn laplace_density(x: f64, mu: f64, scale: f64) -> f64 {
        (-(x - mu).abs() / scale).exp() / (2.0 * scale)
    }
}

/// `count × k` matrix of i.i.d. draws from stream 0 of `seed`.
pub fn sample_noise(spec: &NoiseSpec, seed: u64, count: usize) -> Result<DMatrix<f64>> {
    if count == 0 {
        return Err(Error::arg("sample count must be at least 1"));
    }
    Ok(spec.draw_many(&mut stream(seed, 0), count))
}

/// Rows per generator stream in [`monte_carlo_noise`].
pub const MC_CHUNK: usize = 1024;

/// `count × k` evaluation draws. Chunk `c` of [`MC_CHUNK`] rows comes from
/// stream `c + 1` of `seed`, so the result does not depend on thread count and
/// never overlaps the primary draw of [`sample_noise`].
pub fn monte_carlo_noise(spec: &NoiseSpec, seed: u64, count: usize) -> Result<DMatrix<f64>> {
    if count == 0 {
        return Err(Error::arg("sample count must be at least 1"));
    }
    let chunks: Vec<DMatrix<f64>> = (0..count.div_ceil(MC_CHUNK))
        .into_par_iter()
        .map(|c| {
            let rows = MC_CHUNK.min(count - c * MC_CHUNK);
            spec.draw_many(&mut stream(seed, c as u64 + 1), rows)
        })
        .collect();
    let mut out = DMatrix::zeros(count, spec.dim);
    for (c, m) in chunks.into_iter().enumerate() {
        out.rows_mut(c * MC_CHUNK, m.nrows()).copy_from(&m);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn within_3se(samples: &[f64], expect: f64) -> bool {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let se = (var / n).sqrt();
        (mean - expect).abs() <= 3.0 * se
    }

    #[test]
    fn monte_carlo_draws_are_chunked_streams() {
        let spec = NoiseSpec::laplace(2, 1.0).unwrap();
        let m = monte_carlo_noise(&spec, 3, 2 * MC_CHUNK + 5).unwrap();
        let second = spec.draw_many(&mut stream(3, 2), MC_CHUNK);
        assert_eq!(m.rows(MC_CHUNK, MC_CHUNK).into_owned(), second);
        assert_ne!(m.row(0), sample_noise(&spec, 3, 1).unwrap().row(0));
    }

    #[test]
    fn laplace_variance() {
        let spec = NoiseSpec::laplace(1, 1.0).unwrap();
        let m = sample_noise(&spec, 11, 1_000_000).unwrap();
        let sq: Vec<f64> = m.iter().map(|v| v * v).collect();
        assert!(within_3se(&sq, 2.0));
        assert!(within_3se(m.as_slice(), 0.0));
    }

    #[test]
    fn gaussian_covariance() {
        let spec = NoiseSpec::gaussian(3, 2.0).unwrap();
        let m = sample_noise(&spec, 5, 1_000_000).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let prods: Vec<f64> = (0..m.nrows()).map(|r| m[(r, i)] * m[(r, j)]).collect();
                let expect = if i == j { 4.0 } else { 0.0 };
                assert!(within_3se(&prods, expect), "entry ({i},{j})");
            }
        }
    }

    #[test]
    fn reproducible() {
        let spec = NoiseSpec::laplace(4, 0.3).unwrap();
        assert_eq!(sample_noise(&spec, 9, 50).unwrap(), sample_noise(&spec, 9, 50).unwrap());
        assert_ne!(sample_noise(&spec, 9, 50).unwrap(), sample_noise(&spec, 10, 50).unwrap());
    }

    #[test]
    fn factor_reproduces_covariance() {
        for spec in [NoiseSpec::laplace(3, 1.7).unwrap(), NoiseSpec::gaussian(2, 0.4).unwrap()] {
            let f = spec.factor();
            let d = &f * f.transpose() - spec.covariance();
            assert!(d.amax() <= 1e-12);
        }
    }

    #[test]
    fn zero_scale_is_deterministic_zero() {
        let spec = NoiseSpec::laplace(2, 0.0).unwrap();
        assert!(sample_noise(&spec, 1, 10).unwrap().iter().all(|v| *v == 0.0));
    }
}
