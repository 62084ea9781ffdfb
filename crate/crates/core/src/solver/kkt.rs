use nalgebra::{DMatrix, DVector, LU};

use super::cone::Scaling;
use crate::error::{Error, Result};

const REG: f64 = 1e-9;
const REFINE_STEPS: usize = 3;

/// Factorised reduced system for
///
/// ```text
/// [ 0  Aᵀ  Gᵀ  ] [dx]   [r1]
/// [ A  0   0   ] [dy] = [r2]
/// [ G  0  −W²  ] [dz]   [r3]
/// ```
///
/// after eliminating `dz = W⁻²(G dx − r3)`.
pub(crate) struct Kkt<'a> {
    a: &'a DMatrix<f64>,
    g: &'a DMatrix<f64>,
    w: &'a Scaling,
    /// `W⁻¹G`.
    wg: DMatrix<f64>,
    /// Unregularised `[H Aᵀ; A 0]`.
    k0: DMatrix<f64>,
    lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl<'a> Kkt<'a> {
    pub fn factor(a: &'a DMatrix<f64>, g: &'a DMatrix<f64>, w: &'a Scaling) -> Result<Self> {
        let n = g.ncols();
        let p = a.nrows();
        let mut wg = DMatrix::zeros(g.nrows(), n);
        let mut col = vec![0.0; g.nrows()];
        for j in 0..n {
            w.apply(g.column(j).as_slice(), &mut col, true);
            wg.column_mut(j).copy_from_slice(&col);
        }
        let h = wg.tr_mul(&wg);
        let mut k0 = DMatrix::zeros(n + p, n + p);
        k0.view_mut((0, 0), (n, n)).copy_from(&h);
        k0.view_mut((n, 0), (p, n)).copy_from(a);
        k0.view_mut((0, n), (n, p)).copy_from(&a.transpose());
        let mut kr = k0.clone();
        for i in 0..n {
            kr[(i, i)] += REG;
        }
        for i in n..n + p {
            kr[(i, i)] -= REG;
        }
        let lu = kr.lu();
        if !lu.is_invertible() {
            return Err(Error::NumericalBreakdown("singular KKT system after regularization".into()));
        }
        Ok(Self { a, g, w, wg, k0, lu })
    }

    pub fn solve(&self, r1: &[f64], r2: &[f64], r3: &[f64]) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let n = self.g.ncols();
        let p = self.a.nrows();
        let wr3 = DVector::from_vec(self.w.winv(r3));
        let top = DVector::from_column_slice(r1) + self.wg.tr_mul(&wr3);
        let mut rhs = DVector::zeros(n + p);
        rhs.rows_mut(0, n).copy_from(&top);
        rhs.rows_mut(n, p).copy_from_slice(r2);

        let mut sol =
            self.lu.solve(&rhs).ok_or_else(|| Error::NumericalBreakdown("KKT back-substitution failed".into()))?;
        let scale = 1.0 + rhs.amax();
        for _ in 0..REFINE_STEPS {
            let res = &rhs - &self.k0 * &sol;
            if res.amax() <= 1e-14 * scale {
                break;
            }
            match self.lu.solve(&res) {
                Some(corr) => sol += corr,
                None => break,
            }
        }
        if sol.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalBreakdown("non-finite KKT solution".into()));
        }

        let dx = sol.rows(0, n).into_owned();
        let dy = sol.rows(n, p).iter().copied().collect();
        let t = &self.wg * &dx - wr3;
        let dz = self.w.winv(t.as_slice());
        Ok((dx.as_slice().to_vec(), dy, dz))
    }
}
