use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The released query and the structure it imposes on the recourse matrix `X`
/// so that the released noise does not depend on the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum QueryConstraint {
    /// Releases `x[support]`; `X[support, :] = I`, other rows free.
    Identity { support: Vec<usize> },
    /// Releases `Σ x[support]`; `Σ_{i ∈ support} Xᵢ = 1` with scalar noise.
    Sum { support: Vec<usize> },
    /// Releases `wᵀx`; `wᵀX = 1` with scalar noise.
    WeightedSum { weights: Vec<f64> },
    /// Pins listed entries `X[i][j] = v`; releases the whole rule `x̄ + Xζ`.
    FixedRecourse { k: usize, pins: Vec<(usize, usize, f64)> },
}

/// `Σ coef·X[i][j] = rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct RecourseEquality {
    pub terms: Vec<((usize, usize), f64)>,
    pub rhs: f64,
}

impl QueryConstraint {
    pub fn identity(n: usize) -> Self {
        QueryConstraint::Identity { support: (0..n).collect() }
    }

    pub fn sum(n: usize) -> Self {
        QueryConstraint::Sum { support: (0..n).collect() }
    }

    /// Noise dimension implied by the query, when it fixes one.
    pub fn noise_dim(&self) -> usize {
        match self {
            QueryConstraint::Identity { support } => support.len(),
            QueryConstraint::Sum { .. } | QueryConstraint::WeightedSum { .. } => 1,
            QueryConstraint::FixedRecourse { k, .. } => *k,
        }
    }

    pub fn check(&self, n: usize, k: usize) -> Result<()> {
        if self.noise_dim() != k {
            return Err(Error::dim(format!("query implies noise dimension {} but noise has {k}", self.noise_dim())));
        }
        let in_range = |s: &[usize]| s.iter().all(|&i| i < n);
        match self {
            QueryConstraint::Identity { support } | QueryConstraint::Sum { support } => {
                if support.is_empty() || !in_range(support) {
                    return Err(Error::dim(format!("query support must be a nonempty subset of 0..{n}")));
                }
                let mut s = support.clone();
                s.sort_unstable();
                s.dedup();
                if s.len() != support.len() {
                    return Err(Error::arg("query support has repeated indices"));
                }
            }
            QueryConstraint::WeightedSum { weights } => {
                if weights.len() != n {
                    return Err(Error::dim(format!("weights have length {}, program has n = {n}", weights.len())));
                }
                if weights.iter().all(|w| *w == 0.0) {
                    return Err(Error::arg("weighted-sum query needs a nonzero weight"));
                }
            }
            QueryConstraint::FixedRecourse { pins, .. } => {
                if pins.iter().any(|&(i, j, _)| i >= n || j >= k) {
                    return Err(Error::dim("pinned recourse entry out of range"));
                }
            }
        }
        Ok(())
    }

    /// Nominal query value `q(x)`.
    pub fn value(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            QueryConstraint::Identity { support } => {
                DVector::from_iterator(support.len(), support.iter().map(|&i| x[i]))
            }
            QueryConstraint::Sum { support } => DVector::from_element(1, support.iter().map(|&i| x[i]).sum()),
            QueryConstraint::WeightedSum { weights } => {
                DVector::from_element(1, weights.iter().zip(x.iter()).map(|(w, v)| w * v).sum())
            }
            QueryConstraint::FixedRecourse { .. } => x.clone(),
        }
    }
}

/// Linear equalities on `vec(X)` encoding the query structure.
pub fn apply_query_constraint(q: &QueryConstraint, n: usize, k: usize) -> Result<Vec<RecourseEquality>> {
    q.check(n, k)?;
    Ok(match q {
        QueryConstraint::Identity { support } => {
            let mut out = Vec::with_capacity(support.len() * k);
            for (r, &i) in support.iter().enumerate() {
                for j in 0..k {
                    out.push(RecourseEquality { terms: vec![((i, j), 1.0)], rhs: if r == j { 1.0 } else { 0.0 } });
                }
            }
            out
        }
        QueryConstraint::Sum { support } => {
            vec![RecourseEquality { terms: support.iter().map(|&i| ((i, 0), 1.0)).collect(), rhs: 1.0 }]
        }
        QueryConstraint::WeightedSum { weights } => vec![RecourseEquality {
            terms: weights.iter().enumerate().filter(|(_, w)| **w != 0.0).map(|(i, &w)| ((i, 0), w)).collect(),
            rhs: 1.0,
        }],
        QueryConstraint::FixedRecourse { pins, .. } => {
            pins.iter().map(|&(i, j, v)| RecourseEquality { terms: vec![((i, j), 1.0)], rhs: v }).collect()
        }
    })
}
