//! Standard-form conic programs: `min cᵀx` subject to `b − Ax ∈ K`.

mod builder;
mod cones;

use std::fmt;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use builder::{Affine, ConicBuilder};
pub(crate) use cones::{block_distance, dual_block_distance, rotate_rsoc};
pub use cones::{cone_membership, ConeBlock, ConeKind, ConeSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct ConicProgram {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
    pub cones: ConeSpec,
    pub variable_names: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    BLength { len: usize, m: usize },
    CLength { len: usize, n: usize },
    ConeDims { total: usize, m: usize },
    BlockDim { index: usize, kind: ConeKind, dim: usize },
    NonFinite { field: &'static str, index: usize },
    Names { len: usize, n: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::BLength { len, m } => write!(f, "b length ≠ m ({len} vs {m})"),
            Violation::CLength { len, n } => write!(f, "c length ≠ n ({len} vs {n})"),
            Violation::ConeDims { total, m } => write!(f, "cone dims ≠ m ({total} vs {m})"),
            Violation::BlockDim { index, kind, dim } => {
                write!(f, "cone block {index} ({kind}) has invalid dim {dim}")
            }
            Violation::NonFinite { field, index } => {
                write!(f, "non-finite entry in {field} at {index}")
            }
            Violation::Names { len, n } => write!(f, "variable_names length ≠ n ({len} vs {n})"),
        }
    }
}

impl ConicProgram {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, c: DVector<f64>, cones: ConeSpec) -> Self {
        Self { a, b, c, cones, variable_names: None }
    }

    pub fn with_names(mut self, names: Vec<String>) -> Self {
        self.variable_names = Some(names);
        self
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    pub fn validate(&self) -> Vec<Violation> {
        let (m, n) = (self.m(), self.n());
        let mut out = Vec::new();
        if self.b.len() != m {
            out.push(Violation::BLength { len: self.b.len(), m });
        }
        if self.c.len() != n {
            out.push(Violation::CLength { len: self.c.len(), n });
        }
        let total = self.cones.total_dim();
        if total != m {
            out.push(Violation::ConeDims { total, m });
        }
        for (index, blk) in self.cones.blocks.iter().enumerate() {
            if blk.dim < blk.min_dim() {
                out.push(Violation::BlockDim { index, kind: blk.kind, dim: blk.dim });
            }
        }
        let fields: [(&'static str, &[f64]); 3] =
            [("A", self.a.as_slice()), ("b", self.b.as_slice()), ("c", self.c.as_slice())];
        for (field, vals) in fields {
            if let Some(index) = vals.iter().position(|v| !v.is_finite()) {
                out.push(Violation::NonFinite { field, index });
            }
        }
        if let Some(names) = &self.variable_names {
            if names.len() != n {
                out.push(Violation::Names { len: names.len(), n });
            }
        }
        out
    }

    pub fn check(&self) -> Result<()> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(v))
        }
    }

    /// `b − Ax`.
    pub fn slack(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.a.ncols() {
            return Err(Error::dim(format!("x has length {}, program has n = {}", x.len(), self.a.ncols())));
        }
        Ok(&self.b - &self.a * x)
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        self.c.dot(x)
    }

    pub fn is_feasible(&self, x: &DVector<f64>, tol: f64) -> Result<bool> {
        let s = self.slack(x)?;
        cone_membership(s.as_slice(), &self.cones, tol)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ProgramFile::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: ProgramFile = serde_json::from_str(s)?;
        f.try_into()
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

/// `min c·x` subject to `lower ≤ x ≤ upper` as two nonnegative rows.
pub fn build_simple_lp(c: f64, lower: f64, upper: f64) -> Result<ConicProgram> {
    if !(lower < upper) {
        return Err(Error::arg(format!("lower bound {lower} must be below upper bound {upper}")));
    }
    let a = DMatrix::from_row_slice(2, 1, &[-1.0, 1.0]);
    let b = DVector::from_vec(vec![-lower, upper]);
    Ok(ConicProgram::new(a, b, DVector::from_element(1, c), ConeSpec::single(ConeKind::NonNeg, 2))
        .with_names(vec!["x".into()]))
}

#[derive(Serialize, Deserialize)]
struct ProgramFile {
    m: usize,
    n: usize,
    #[serde(rename = "A")]
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    cones: Vec<ConeBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    variable_names: Option<Vec<String>>,
}

impl From<&ConicProgram> for ProgramFile {
    fn from(p: &ConicProgram) -> Self {
        let (m, n) = (p.a.nrows(), p.a.ncols());
        let mut a = Vec::with_capacity(m * n);
        for i in 0..m {
            a.extend(p.a.row(i).iter());
        }
        Self {
            m,
            n,
            a,
            b: p.b.as_slice().to_vec(),
            c: p.c.as_slice().to_vec(),
            cones: p.cones.blocks.clone(),
            variable_names: p.variable_names.clone(),
        }
    }
}

impl TryFrom<ProgramFile> for ConicProgram {
    type Error = Error;

    fn try_from(f: ProgramFile) -> Result<Self> {
        if f.a.len() != f.m * f.n {
            return Err(Error::dim(format!("A has {} entries, expected m·n = {}", f.a.len(), f.m * f.n)));
        }
        Ok(Self {
            a: DMatrix::from_row_slice(f.m, f.n, &f.a),
            b: DVector::from_vec(f.b),
            c: DVector::from_vec(f.c),
            cones: ConeSpec::new(f.cones),
            variable_names: f.variable_names,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ident2() -> ConicProgram {
        ConicProgram::new(
            DMatrix::identity(2, 2),
            DVector::from_vec(vec![1.0, 1.0]),
            DVector::from_vec(vec![1.0, 1.0]),
            ConeSpec::single(ConeKind::NonNeg, 2),
        )
    }

    #[test]
    fn validate_ok() {
        assert!(ident2().validate().is_empty());
    }

    #[test]
    fn validate_b_length() {
        let mut p = ident2();
        p.b = DVector::from_vec(vec![1.0, 1.0, 1.0]);
        let v = p.validate();
        assert!(v.iter().any(|v| matches!(v, Violation::BLength { .. })), "{v:?}");
        assert!(v.iter().any(|v| v.to_string().starts_with("b length ≠ m")));
    }

    #[test]
    fn validate_cone_dims() {
        let mut p = ident2();
        p.cones = ConeSpec::single(ConeKind::NonNeg, 1);
        let v = p.validate();
        assert_eq!(v, vec![Violation::ConeDims { total: 1, m: 2 }]);
        assert!(v[0].to_string().starts_with("cone dims ≠ m"));
    }

    #[test]
    fn validate_flags_bad_blocks_and_nan() {
        let mut p = ident2();
        p.cones = ConeSpec::single(ConeKind::RotatedSecondOrder, 1);
        p.cones.push(ConeKind::NonNeg, 1);
        p.c[1] = f64::NAN;
        let v = p.validate();
        assert!(v.iter().any(|v| matches!(v, Violation::BlockDim { .. })));
        assert!(v.iter().any(|v| matches!(v, Violation::NonFinite { field: "c", .. })));
        assert_eq!(p.validate(), v);
    }

    #[test]
    fn slack_examples() {
        let mut p = ident2();
        p.b = DVector::from_vec(vec![2.0, 3.0]);
        let s = p.slack(&DVector::from_vec(vec![1.0, 1.0])).unwrap();
        assert_eq!(s.as_slice(), &[1.0, 2.0]);
        assert_eq!(p.slack(&DVector::zeros(2)).unwrap(), p.b);
        assert!(p.slack(&DVector::zeros(3)).is_err());

        let q = ConicProgram::new(
            DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
            DVector::from_element(1, 5.0),
            DVector::zeros(2),
            ConeSpec::single(ConeKind::Zero, 1),
        );
        assert_eq!(q.slack(&DVector::from_vec(vec![2.0, 3.0])).unwrap()[0], 0.0);
    }

    #[test]
    fn simple_lp_shape() {
        let p = build_simple_lp(1.0, 1.0, 2.0).unwrap();
        assert!(p.validate().is_empty());
        assert!(p.is_feasible(&DVector::from_element(1, 1.5), 0.0).unwrap());
        assert!(!p.is_feasible(&DVector::from_element(1, 0.5), 0.0).unwrap());
        assert!(build_simple_lp(1.0, 2.0, 2.0).is_err());
    }

    #[test]
    fn json_roundtrip_is_exact() {
        let mut p = ident2();
        p.a[(0, 1)] = 0.1 + 0.2;
        p.b[0] = std::f64::consts::PI;
        p.c[1] = -1e-300;
        let p = p.with_names(vec!["u".into(), "v".into()]);
        let q = ConicProgram::from_json(&p.to_json().unwrap()).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn json_layout_is_row_major() {
        let p = ConicProgram::new(
            DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]),
            DVector::zeros(2),
            DVector::zeros(2),
            ConeSpec::single(ConeKind::SecondOrder, 2),
        );
        let v: serde_json::Value = serde_json::from_str(&p.to_json().unwrap()).unwrap();
        assert_eq!(v["A"], serde_json::json!([1.0, 2.0, 3.0, 4.0]));
        assert_eq!(v["cones"][0]["kind"], "SecondOrder");
    }
}
