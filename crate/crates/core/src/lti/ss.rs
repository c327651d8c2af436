use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, block_diag, hstack, vstack};

/// Dense continuous-time realization `(A, B, C, D)`.
///
/// A zero-state system (`n = 0`) is a static gain equal to `D`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    d: DMatrix<f64>,
}

/// Row-major serialized realization with explicit dimensions (so that `n = 0`
/// systems keep their input/output counts).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSpaceData {
    pub states: usize,
    pub inputs: usize,
    pub outputs: usize,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
    pub d: Vec<Vec<f64>>,
}

pub(crate) fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

pub(crate) fn matrix_from_rows(
    name: &str,
    rows: &[Vec<f64>],
    nrows: usize,
    ncols: usize,
) -> Result<DMatrix<f64>> {
    if nrows == 0 || ncols == 0 {
        if rows.iter().any(|r| !r.is_empty()) && rows.len() != nrows {
            return Err(Error::InvalidProblem(format!(
                "matrix `{name}` must be {nrows}x{ncols}"
            )));
        }
        return Ok(DMatrix::zeros(nrows, ncols));
    }
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::InvalidProblem(format!(
            "matrix `{name}` must be {nrows}x{ncols} (row-major nested arrays)"
        )));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidProblem(format!(
            "matrix `{name}` has non-finite entries"
        )));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

impl StateSpace {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, d: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "A is {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.nrows() != n || c.ncols() != n || d.nrows() != c.nrows() || d.ncols() != b.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "A {}x{}, B {}x{}, C {}x{}, D {}x{}",
                n,
                n,
                b.nrows(),
                b.ncols(),
                c.nrows(),
                c.ncols(),
                d.nrows(),
                d.ncols()
            )));
        }
        Ok(Self { a, b, c, d })
    }

    pub fn static_gain(d: DMatrix<f64>) -> Self {
        let (p, m) = d.shape();
        Self {
            a: DMatrix::zeros(0, 0),
            b: DMatrix::zeros(0, m),
            c: DMatrix::zeros(p, 0),
            d,
        }
    }

    pub fn zero(outputs: usize, inputs: usize) -> Self {
        Self::static_gain(DMatrix::zeros(outputs, inputs))
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }
    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }
    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }
    pub fn d(&self) -> &DMatrix<f64> {
        &self.d
    }

    pub fn into_parts(self) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        (self.a, self.b, self.c, self.d)
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }
    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }
    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }

    pub fn to_data(&self) -> StateSpaceData {
        StateSpaceData {
            states: self.n(),
            inputs: self.inputs(),
            outputs: self.outputs(),
            a: rows_of(&self.a),
            b: rows_of(&self.b),
            c: rows_of(&self.c),
            d: rows_of(&self.d),
        }
    }

    pub fn from_data(data: &StateSpaceData) -> Result<Self> {
        let (n, m, p) = (data.states, data.inputs, data.outputs);
        Self::new(
            matrix_from_rows("a", &data.a, n, n)?,
            matrix_from_rows("b", &data.b, n, m)?,
            matrix_from_rows("c", &data.c, p, n)?,
            matrix_from_rows("d", &data.d, p, m)?,
        )
    }

    /// `G(s) = C (sI - A)^{-1} B + D` at an arbitrary complex point.
    pub fn eval(&self, s: Complex64) -> Result<DMatrix<Complex64>> {
        let d = linalg::to_complex(&self.d);
        let n = self.n();
        if n == 0 {
            return Ok(d);
        }
        let mut m = self.a.map(|v| Complex64::new(-v, 0.0));
        for i in 0..n {
            m[(i, i)] += s;
        }
        let lu = m.lu();
        let u = lu.u();
        let diag: Vec<f64> = (0..n).map(|i| u[(i, i)].norm()).collect();
        let umax = diag.iter().cloned().fold(0.0, f64::max);
        let umin = diag.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(umin > 1e-14 * umax.max(1e-300)) {
            return Err(Error::SingularResolvent { omega: s.im });
        }
        let x = lu
            .solve(&linalg::to_complex(&self.b))
            .ok_or(Error::SingularResolvent { omega: s.im })?;
        Ok(linalg::to_complex(&self.c) * x + d)
    }

    pub fn freq_response(&self, omega: f64) -> Result<DMatrix<Complex64>> {
        self.eval(Complex64::new(0.0, omega))
    }

    pub fn poles(&self) -> Vec<Complex64> {
        linalg::eigenvalues(&self.a)
    }

    /// `next ∘ self`: the output of `self` drives `next`.
    pub fn series(&self, next: &StateSpace) -> Result<StateSpace> {
        if self.outputs() != next.inputs() {
            return Err(Error::DimensionMismatch(format!(
                "series: {} outputs feed {} inputs",
                self.outputs(),
                next.inputs()
            )));
        }
        let (n1, n2) = (self.n(), next.n());
        let mut a = block_diag(&self.a, &next.a);
        a.view_mut((n1, 0), (n2, n1))
            .copy_from(&(&next.b * &self.c));
        let b = vstack(&self.b, &(&next.b * &self.d));
        let c = hstack(&(&next.d * &self.c), &next.c);
        let d = &next.d * &self.d;
        StateSpace::new(a, b, c, d)
    }

    /// Sum of two systems with shared inputs and outputs.
    pub fn parallel(&self, other: &StateSpace) -> Result<StateSpace> {
        if self.inputs() != other.inputs() || self.outputs() != other.outputs() {
            return Err(Error::DimensionMismatch("parallel: shapes differ".into()));
        }
        StateSpace::new(
            block_diag(&self.a, &other.a),
            vstack(&self.b, &other.b),
            hstack(&self.c, &other.c),
            &self.d + &other.d,
        )
    }

    pub fn negate(&self) -> StateSpace {
        self.scale(-1.0)
    }

    /// Output scaling `alpha * G`.
    pub fn scale(&self, alpha: f64) -> StateSpace {
        StateSpace {
            a: self.a.clone(),
            b: self.b.clone(),
            c: &self.c * alpha,
            d: &self.d * alpha,
        }
    }

    /// Stacks outputs: `[G1; G2]` driven by the same input.
    pub fn vertcat(&self, other: &StateSpace) -> Result<StateSpace> {
        if self.inputs() != other.inputs() {
            return Err(Error::DimensionMismatch(
                "vertcat: input counts differ".into(),
            ));
        }
        StateSpace::new(
            block_diag(&self.a, &other.a),
            vstack(&self.b, &other.b),
            block_diag(&self.c, &other.c),
            vstack(&self.d, &other.d),
        )
    }

    /// Stacks inputs: `[G1 G2]` with summed outputs.
    pub fn horzcat(&self, other: &StateSpace) -> Result<StateSpace> {
        if self.outputs() != other.outputs() {
            return Err(Error::DimensionMismatch(
                "horzcat: output counts differ".into(),
            ));
        }
        StateSpace::new(
            block_diag(&self.a, &other.a),
            block_diag(&self.b, &other.b),
            hstack(&self.c, &other.c),
            hstack(&self.d, &other.d),
        )
    }

    /// `L G R` for constant output/input maps.
    pub fn transform(&self, l: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<StateSpace> {
        if l.ncols() != self.outputs() || r.nrows() != self.inputs() {
            return Err(Error::DimensionMismatch(
                "transform: selector shapes".into(),
            ));
        }
        StateSpace::new(self.a.clone(), &self.b * r, l * &self.c, l * &self.d * r)
    }

    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Result<StateSpace> {
        let l = DMatrix::from_fn(rows.len(), self.outputs(), |i, j| {
            (rows[i] == j) as u8 as f64
        });
        let r = DMatrix::from_fn(self.inputs(), cols.len(), |i, j| {
            (cols[j] == i) as u8 as f64
        });
        self.transform(&l, &r)
    }

    /// Inverse system of a square system with invertible feedthrough.
    pub fn inverse(&self) -> Result<StateSpace> {
        if self.inputs() != self.outputs() {
            return Err(Error::DimensionMismatch(
                "inverse of a non-square system".into(),
            ));
        }
        let dinv = linalg::guarded_inverse(&self.d, 1e-12).ok_or_else(|| {
            Error::DegenerateFraction("feedthrough is singular, inverse is improper".into())
        })?;
        let a = &self.a - &self.b * &dinv * &self.c;
        let b = &self.b * &dinv;
        let c = -(&dinv * &self.c);
        StateSpace::new(a, b, c, dinv)
    }

    pub fn similarity(&self, t: &DMatrix<f64>, tinv: &DMatrix<f64>) -> StateSpace {
        StateSpace {
            a: tinv * &self.a * t,
            b: tinv * &self.b,
            c: &self.c * t,
            d: self.d.clone(),
        }
    }

    /// Removes uncontrollable and unobservable modes by orthogonal projection onto
    /// the Krylov subspaces; the transfer function is unchanged.
    pub fn minimal(&self, tol: f64) -> StateSpace {
        if self.n() == 0 {
            return self.clone();
        }
        let v = linalg::krylov_basis(&self.a, &self.b, tol);
        let vt = v.transpose();
        let ctrl = StateSpace {
            a: &vt * &self.a * &v,
            b: &vt * &self.b,
            c: &self.c * &v,
            d: self.d.clone(),
        };
        if ctrl.n() == 0 {
            return ctrl;
        }
        let w = linalg::krylov_basis(&ctrl.a.transpose(), &ctrl.c.transpose(), tol);
        let wt = w.transpose();
        StateSpace {
            a: &wt * &ctrl.a * &w,
            b: &wt * &ctrl.b,
            c: &ctrl.c * &w,
            d: ctrl.d,
        }
    }

    /// Balanced similarity transform (equal, diagonal Gramians). Returns `None`
    /// when the realization is unstable or not minimal.
    pub fn balanced(&self) -> Option<StateSpace> {
        let n = self.n();
        if n == 0 {
            return Some(self.clone());
        }
        let p = linalg::solve_lyapunov(&self.a, &(&self.b * self.b.transpose()))?;
        let q = linalg::solve_lyapunov(&self.a.transpose(), &(self.c.transpose() * &self.c))?;
        let lp = linalg::sym(&p).cholesky()?.l();
        let lq = linalg::sym(&q).cholesky()?.l();
        let svd = (lq.transpose() * &lp).svd(true, true);
        let u = svd.u?;
        let vt = svd.v_t?;
        let s = svd.singular_values;
        if s.iter().any(|v| !(*v > 0.0)) {
            return None;
        }
        let s_isqrt = DMatrix::from_diagonal(&s.map(|v| 1.0 / v.sqrt()));
        let t = &lp * vt.transpose() * &s_isqrt;
        let tinv = &s_isqrt * u.transpose() * lq.transpose();
        Some(self.similarity(&t, &tinv))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::tf::{tf_to_ss, RationalTF};

    fn first_order(pole: f64) -> StateSpace {
        tf_to_ss(&RationalTF::new(vec![1.0], vec![1.0, pole]).unwrap()).unwrap()
    }

    #[test]
    fn static_system_response_is_d() {
        let d = DMatrix::from_row_slice(2, 1, &[1.5, -2.0]);
        let g = StateSpace::static_gain(d.clone());
        let r = g.freq_response(17.0).unwrap();
        assert_eq!(r[(0, 0)].re, 1.5);
        assert_eq!(r[(1, 0)].re, -2.0);
    }

    #[test]
    fn lag_response() {
        let g = first_order(1.0);
        assert!((g.freq_response(0.0).unwrap()[(0, 0)] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        let r = g.freq_response(1.0).unwrap()[(0, 0)];
        assert!((r - Complex64::new(0.5, -0.5)).norm() < 1e-15);
    }

    #[test]
    fn singular_resolvent_on_imaginary_pole() {
        let g = StateSpace::new(
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -4.0, 0.0]),
            DMatrix::from_row_slice(2, 1, &[0.0, 1.0]),
            DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
            DMatrix::zeros(1, 1),
        )
        .unwrap();
        assert!(matches!(
            g.freq_response(2.0),
            Err(Error::SingularResolvent { .. })
        ));
    }

    #[test]
    fn series_of_static_gains() {
        let k1 = StateSpace::static_gain(DMatrix::from_element(1, 1, 3.0));
        let k2 = StateSpace::static_gain(DMatrix::from_element(1, 1, -2.0));
        assert_eq!(k1.series(&k2).unwrap().d()[(0, 0)], -6.0);
    }

    #[test]
    fn series_dc_gain_is_product() {
        let g = first_order(1.0).series(&first_order(2.0)).unwrap();
        assert_eq!(g.n(), 2);
        assert!((g.freq_response(0.0).unwrap()[(0, 0)].re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn sum_with_negation_vanishes() {
        let g = first_order(3.0);
        let z = g.parallel(&g.negate()).unwrap();
        for w in [0.0, 0.3, 7.0] {
            assert!(z.freq_response(w).unwrap()[(0, 0)].norm() < 1e-15);
        }
    }

    #[test]
    fn dimension_mismatch_detected() {
        let g = first_order(1.0);
        let two = StateSpace::static_gain(DMatrix::zeros(1, 2));
        assert!(matches!(g.series(&two), Err(Error::DimensionMismatch(_))));
        assert!(matches!(g.parallel(&two), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn minimal_removes_duplicate_mode() {
        let g = first_order(2.0);
        let doubled = g.scale(0.5).parallel(&g.scale(0.5)).unwrap();
        assert_eq!(doubled.n(), 2);
        let m = doubled.minimal(1e-9);
        assert_eq!(m.n(), 1);
        let r = m.freq_response(1.3).unwrap()[(0, 0)];
        assert!((r - g.freq_response(1.3).unwrap()[(0, 0)]).norm() < 1e-14);
    }

    #[test]
    fn balanced_preserves_response() {
        let g = first_order(1.0)
            .series(&first_order(30.0))
            .unwrap()
            .scale(7.0);
        let b = g.balanced().unwrap();
        for w in [0.0, 1.0, 100.0] {
            let d = b.freq_response(w).unwrap()[(0, 0)] - g.freq_response(w).unwrap()[(0, 0)];
            assert!(d.norm() < 1e-12);
        }
    }

    #[test]
    fn data_round_trip_keeps_static_dims() {
        let g = StateSpace::zero(1, 2);
        let back = StateSpace::from_data(&g.to_data()).unwrap();
        assert_eq!(back.inputs(), 2);
        assert_eq!(back.outputs(), 1);
    }
}
