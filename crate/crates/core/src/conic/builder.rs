use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};

use super::{ConeKind, ConeSpec, ConicProgram};

/// Sparse affine expression `constant + Σ coefᵢ·x[varᵢ]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Affine {
    pub constant: f64,
    pub terms: Vec<(usize, f64)>,
}

impl Affine {
    pub fn constant(c: f64) -> Self {
        Self { constant: c, terms: Vec::new() }
    }

    pub fn var(j: usize) -> Self {
        Self::term(j, 1.0)
    }

    pub fn term(j: usize, coef: f64) -> Self {
        Self { constant: 0.0, terms: vec![(j, coef)] }
    }

    pub fn plus_term(mut self, j: usize, coef: f64) -> Self {
        self.terms.push((j, coef));
        self
    }

    pub fn plus_const(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn scaled(mut self, k: f64) -> Self {
        self.constant *= k;
        for t in &mut self.terms {
            t.1 *= k;
        }
        self
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(j, a)| a * x[j]).sum::<f64>()
    }

    /// True when every coefficient is zero (after merging duplicates).
    pub fn is_constant(&self) -> bool {
        let mut t = self.terms.clone();
        t.sort_by_key(|p| p.0);
        let mut i = 0;
        while i < t.len() {
            let j = t[i].0;
            let mut s = 0.0;
            while i < t.len() && t[i].0 == j {
                s += t[i].1;
                i += 1;
            }
            if s != 0.0 {
                return false;
            }
        }
        true
    }
}

impl Add for Affine {
    type Output = Affine;
    fn add(mut self, rhs: Affine) -> Affine {
        self.constant += rhs.constant;
        self.terms.extend(rhs.terms);
        self
    }
}

impl Sub for Affine {
    type Output = Affine;
    fn sub(self, rhs: Affine) -> Affine {
        self + rhs.scaled(-1.0)
    }
}

impl Neg for Affine {
    type Output = Affine;
    fn neg(self) -> Affine {
        self.scaled(-1.0)
    }
}

impl Mul<f64> for Affine {
    type Output = Affine;
    fn mul(self, k: f64) -> Affine {
        self.scaled(k)
    }
}

/// Incremental assembly of a conic program from affine rows.
///
/// A block `[e₁, …, e_d] ∈ K` with `eᵣ = constᵣ + coefᵣᵀx` becomes rows with
/// `Aᵣ = −coefᵣ` and `bᵣ = constᵣ`, so that `b − Ax` reproduces the expressions.
#[derive(Debug, Clone, Default)]
pub struct ConicBuilder {
    names: Vec<String>,
    cost: Vec<f64>,
    rows: Vec<Affine>,
    cones: ConeSpec,
}

impl ConicBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Starts from an existing program, keeping its rows, cones, cost and names.
    pub fn from_program(p: &ConicProgram) -> Self {
        let n = p.n();
        let names = p.variable_names.clone().unwrap_or_else(|| (0..n).map(|j| format!("x[{j}]")).collect());
        let rows = (0..p.m())
            .map(|i| {
                let terms = (0..n).filter(|&j| p.a[(i, j)] != 0.0).map(|j| (j, -p.a[(i, j)])).collect();
                Affine { constant: p.b[i], terms }
            })
            .collect();
        Self { names, cost: p.c.as_slice().to_vec(), rows, cones: p.cones.clone() }
    }

    pub fn add_var(&mut self, name: impl Into<String>) -> usize {
        self.names.push(name.into());
        self.cost.push(0.0);
        self.names.len() - 1
    }

    pub fn add_vars(&mut self, prefix: &str, count: usize) -> Vec<usize> {
        (0..count).map(|i| self.add_var(format!("{prefix}[{i}]"))).collect()
    }

    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn set_cost(&mut self, j: usize, c: f64) {
        self.cost[j] = c;
    }

    pub fn add_cost(&mut self, j: usize, c: f64) {
        self.cost[j] += c;
    }

    pub fn constrain(&mut self, kind: ConeKind, rows: Vec<Affine>) {
        if rows.is_empty() {
            return;
        }
        self.cones.push(kind, rows.len());
        self.rows.extend(rows);
    }

    pub fn eq(&mut self, e: Affine) {
        self.constrain(ConeKind::Zero, vec![e]);
    }

    /// `e ≥ 0`.
    pub fn nonneg(&mut self, e: Affine) {
        self.constrain(ConeKind::NonNeg, vec![e]);
    }

    pub fn soc(&mut self, rows: Vec<Affine>) {
        self.constrain(ConeKind::SecondOrder, rows);
    }

    pub fn rsoc(&mut self, rows: Vec<Affine>) {
        self.constrain(ConeKind::RotatedSecondOrder, rows);
    }

    pub fn build(self) -> ConicProgram {
        let (m, n) = (self.rows.len(), self.names.len());
        let mut a = DMatrix::zeros(m, n);
        let mut b = DVector::zeros(m);
        for (i, r) in self.rows.iter().enumerate() {
            b[i] = r.constant;
            for &(j, coef) in &r.terms {
                a[(i, j)] -= coef;
            }
        }
        ConicProgram::new(a, b, DVector::from_vec(self.cost), self.cones).with_names(self.names)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_reproduce_expressions() {
        let mut bld = ConicBuilder::new();
        let x = bld.add_var("x");
        let y = bld.add_var("y");
        bld.nonneg(Affine::var(x) - Affine::constant(1.0));
        bld.soc(vec![Affine::var(y), Affine::term(x, 2.0).plus_const(3.0)]);
        bld.set_cost(y, 1.0);
        let p = bld.build();
        assert!(p.validate().is_empty());
        let pt = DVector::from_vec(vec![2.0, 10.0]);
        let s = p.slack(&pt).unwrap();
        assert_eq!(s.as_slice(), &[1.0, 10.0, 7.0]);
        assert_eq!(p.variable_names.as_ref().unwrap(), &["x", "y"]);
    }

    #[test]
    fn from_program_roundtrip() {
        let p = super::super::build_simple_lp(2.0, -1.0, 3.0).unwrap();
        let q = ConicBuilder::from_program(&p).build();
        assert_eq!(p, q);
    }

    #[test]
    fn constant_detection_merges_terms() {
        let e = Affine::var(0) - Affine::var(0);
        assert!(e.is_constant());
        assert!(!Affine::var(1).is_constant());
    }
}
