use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::query::QueryConstraint;
use crate::conic::Affine;
use crate::dp::{sample_noise, NoiseSpec};
use crate::error::{Error, Result};

/// `x(ζ) = x̄ + Xζ`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionRule {
    pub xbar: DVector<f64>,
    pub x: DMatrix<f64>,
}

impl DecisionRule {
    pub fn new(xbar: DVector<f64>, x: DMatrix<f64>) -> Self {
        Self { xbar, x }
    }

    /// Rule without recourse, e.g. a deterministic optimum.
    pub fn constant(xbar: DVector<f64>, k: usize) -> Self {
        let n = xbar.len();
        Self { xbar, x: DMatrix::zeros(n, k) }
    }

    pub fn n(&self) -> usize {
        self.xbar.len()
    }

    pub fn k(&self) -> usize {
        self.x.ncols()
    }

    pub fn eval(&self, zeta: &DVector<f64>) -> DVector<f64> {
        &self.xbar + &self.x * zeta
    }

    /// Largest violation of the query structure on `X`.
    pub fn query_residual(&self, q: &QueryConstraint) -> f64 {
        match q {
            QueryConstraint::Identity { support } => {
                let mut r: f64 = 0.0;
                for (row, &i) in support.iter().enumerate() {
                    for j in 0..self.k() {
                        let t = if row == j { 1.0 } else { 0.0 };
                        r = r.max((self.x[(i, j)] - t).abs());
                    }
                }
                r
            }
            QueryConstraint::Sum { support } => (support.iter().map(|&i| self.x[(i, 0)]).sum::<f64>() - 1.0).abs(),
            QueryConstraint::WeightedSum { weights } => {
                (weights.iter().enumerate().map(|(i, w)| w * self.x[(i, 0)]).sum::<f64>() - 1.0).abs()
            }
            QueryConstraint::FixedRecourse { pins, .. } => {
                pins.iter().map(|&(i, j, v)| (self.x[(i, j)] - v).abs()).fold(0.0, f64::max)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Entry {
    Var(usize),
    Const(f64),
}

/// Where each rule coefficient lives in a transformed program: `x̄ᵢ` is always
/// a column, `Xᵢⱼ` is a column or a constant fixed by the query structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleLayout {
    pub n: usize,
    pub k: usize,
    pub xbar: Vec<usize>,
    /// Row-major `n × k`.
    pub x: Vec<Entry>,
}

impl RuleLayout {
    pub fn entry(&self, i: usize, j: usize) -> Entry {
        self.x[i * self.k + j]
    }

    pub fn extract(&self, v: &[f64]) -> DecisionRule {
        let xbar = DVector::from_iterator(self.n, self.xbar.iter().map(|&c| v[c]));
        let x = DMatrix::from_fn(self.n, self.k, |i, j| match self.entry(i, j) {
            Entry::Var(c) => v[c],
            Entry::Const(val) => val,
        });
        DecisionRule { xbar, x }
    }

    /// `aᵀx̄` as an expression in the transformed variables.
    pub fn nominal(&self, a: &[f64]) -> Affine {
        let mut e = Affine::default();
        for (i, &ai) in a.iter().enumerate() {
            if ai != 0.0 {
                e.terms.push((self.xbar[i], ai));
            }
        }
        e
    }

    /// Coefficient of `ζⱼ` in `aᵀ(x̄ + Xζ)`: `Σᵢ aᵢXᵢⱼ` for each `j`.
    pub fn noise_coefficients(&self, a: &[f64]) -> Vec<Affine> {
        (0..self.k)
            .map(|j| {
                let mut e = Affine::default();
                for (i, &ai) in a.iter().enumerate() {
                    if ai == 0.0 {
                        continue;
                    }
                    match self.entry(i, j) {
                        Entry::Var(c) => e.terms.push((c, ai)),
                        Entry::Const(v) => e.constant += ai * v,
                    }
                }
                e
            })
            .collect()
    }

    /// `aᵀ(x̄ + Xζ)` at a fixed noise value.
    pub fn at(&self, a: &[f64], zeta: &[f64]) -> Affine {
        let mut e = self.nominal(a);
        for (j, g) in self.noise_coefficients(a).into_iter().enumerate() {
            if zeta[j] != 0.0 {
                e = e + g.scaled(zeta[j]);
            }
        }
        e
    }

    pub fn num_free_recourse(&self) -> usize {
        self.x.iter().filter(|e| matches!(e, Entry::Var(_))).count()
    }
}

/// A released query value split into its nominal part and the raw noise
/// increment, which depends on the seed only.
#[derive(Debug, Clone, PartialEq)]
pub struct Release {
    pub nominal: DVector<f64>,
    pub increment: DVector<f64>,
    pub released: DVector<f64>,
}

/// `q(x̄) + ζ̂` for Identity/Sum/WeightedSum, `x̄ + Xζ̂` for fixed recourse, with
/// `ζ̂` the first row of `sample_noise(noise, seed, 1)`.
pub fn release_query(rule: &DecisionRule, query: &QueryConstraint, noise: &NoiseSpec, seed: u64) -> Result<Release> {
    if noise.dim != rule.k() {
        return Err(Error::dim(format!("noise dim {} but rule has k = {}", noise.dim, rule.k())));
    }
    query.check(rule.n(), rule.k())?;
    let zeta = sample_noise(noise, seed, 1)?.row(0).transpose();
    let nominal = query.value(&rule.xbar);
    let increment = match query {
        QueryConstraint::FixedRecourse { .. } => &rule.x * &zeta,
        _ => zeta,
    };
    let released = &nominal + &increment;
    Ok(Release { nominal, increment, released })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout() -> RuleLayout {
        // n = 2, k = 1: x̄ in columns 0, 1; X₀ free in column 2, X₁ = 0.5
        RuleLayout { n: 2, k: 1, xbar: vec![0, 1], x: vec![Entry::Var(2), Entry::Const(0.5)] }
    }

    #[test]
    fn affine_at_noise() {
        let l = layout();
        let e = l.at(&[2.0, 4.0], &[3.0]);
        // 2x̄₀ + 4x̄₁ + 3(2X₀ + 4·0.5)
        let v = [1.0, 1.0, 1.0];
        assert_eq!(e.eval(&v), 2.0 + 4.0 + 3.0 * (2.0 + 2.0));
    }

    #[test]
    fn extract_rule() {
        let r = layout().extract(&[1.0, 2.0, 0.25]);
        assert_eq!(r.xbar.as_slice(), &[1.0, 2.0]);
        assert_eq!(r.x.as_slice(), &[0.25, 0.5]);
        assert_eq!(r.query_residual(&QueryConstraint::sum(2)), 0.25);
    }

    #[test]
    fn release_increment_is_raw_draw() {
        let noise = NoiseSpec::laplace(1, 2.0).unwrap();
        let q = QueryConstraint::WeightedSum { weights: vec![1.0, 3.0] };
        let a = DecisionRule::new(DVector::from_vec(vec![1.0, 2.0]), DMatrix::from_vec(2, 1, vec![0.25, 0.25]));
        let b = DecisionRule::new(DVector::from_vec(vec![7.0, -1.0]), DMatrix::from_vec(2, 1, vec![1.0, 0.0]));
        let ra = release_query(&a, &q, &noise, 3).unwrap();
        let rb = release_query(&b, &q, &noise, 3).unwrap();
        assert_eq!(ra.increment, rb.increment);
        assert_eq!(ra.increment[0], sample_noise(&noise, 3, 1).unwrap()[(0, 0)]);
        assert_eq!(ra.nominal[0], 7.0);
    }
}
