use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::poly::Poly;
use super::ss::StateSpace;
use crate::error::{Error, Result};

/// Roots `r1`, `r2` are treated as a common factor when `|r1 - r2| <= CANCEL_TOL (1 + |r1|)`.
pub const CANCEL_TOL: f64 = 1e-7;

/// SISO rational transfer function `num(s) / den(s)` with a monic denominator.
///
/// Improper fractions are representable; only [`tf_to_ss`] requires properness.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalTF {
    num: Poly,
    den: Poly,
}

/// Coefficient form used in problem files: descending powers of `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfCoeffs {
    pub num: Vec<f64>,
    pub den: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TfOp {
    Add,
    Mul,
    /// `1 / a`; the second operand is ignored.
    Inv,
    /// Negative feedback `a / (1 + a b)`.
    Feedback,
}

pub fn tf_arith(a: &RationalTF, b: &RationalTF, op: TfOp) -> Result<RationalTF> {
    match op {
        TfOp::Add => Ok(a.add(b)),
        TfOp::Mul => Ok(a.mul(b)),
        TfOp::Inv => a.inv(),
        TfOp::Feedback => a.feedback(b),
    }
}

impl RationalTF {
    pub fn new(num: impl Into<Vec<f64>>, den: impl Into<Vec<f64>>) -> Result<Self> {
        Self::from_polys(Poly::new(num), Poly::new(den))
    }

    pub fn from_polys(num: Poly, den: Poly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::DegenerateFraction("zero denominator".into()));
        }
        if num
            .coeffs()
            .iter()
            .chain(den.coeffs())
            .any(|c| !c.is_finite())
        {
            return Err(Error::DegenerateFraction("non-finite coefficient".into()));
        }
        let lead = den.leading();
        Ok(Self {
            num: num.scale(1.0 / lead),
            den: den.scale(1.0 / lead),
        })
    }

    pub fn from_coeffs(c: &TfCoeffs) -> Result<Self> {
        Self::new(c.num.clone(), c.den.clone())
    }

    pub fn to_coeffs(&self) -> TfCoeffs {
        TfCoeffs {
            num: self.num.coeffs().to_vec(),
            den: self.den.coeffs().to_vec(),
        }
    }

    pub fn constant(k: f64) -> Self {
        Self {
            num: Poly::constant(k),
            den: Poly::constant(1.0),
        }
    }

    /// `prod (s - z_i) / prod (s - p_i)` scaled by `gain`, real roots only.
    pub fn zpk(zeros: &[f64], poles: &[f64], gain: f64) -> Self {
        let z: Vec<Complex64> = zeros.iter().map(|r| Complex64::new(*r, 0.0)).collect();
        let p: Vec<Complex64> = poles.iter().map(|r| Complex64::new(*r, 0.0)).collect();
        Self {
            num: Poly::from_roots(&z, gain),
            den: Poly::from_roots(&p, 1.0),
        }
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_proper(&self) -> bool {
        self.num.is_zero() || self.num.degree() <= self.den.degree()
    }

    /// `deg den - deg num`; negative for improper fractions.
    pub fn relative_degree(&self) -> isize {
        if self.num.is_zero() {
            return isize::MAX;
        }
        self.den.degree() as isize - self.num.degree() as isize
    }

    pub fn poles(&self) -> Vec<Complex64> {
        self.den.roots()
    }

    pub fn zeros(&self) -> Vec<Complex64> {
        self.num.roots()
    }

    /// True iff every pole has real part below `-margin`.
    pub fn is_stable(&self, margin: f64) -> bool {
        self.poles().iter().all(|p| p.re < -margin)
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        self.num.eval(s) / self.den.eval(s)
    }

    pub fn freq(&self, omega: f64) -> Complex64 {
        self.eval(Complex64::new(0.0, omega))
    }

    pub fn scale(&self, k: f64) -> Self {
        Self {
            num: self.num.scale(k),
            den: self.den.clone(),
        }
    }

    pub fn neg(&self) -> Self {
        self.scale(-1.0)
    }

    pub fn add(&self, other: &RationalTF) -> Self {
        let num = self.num.mul(&other.den).add(&other.num.mul(&self.den));
        Self::normalized(num, self.den.mul(&other.den))
    }

    pub fn sub(&self, other: &RationalTF) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &RationalTF) -> Self {
        Self::normalized(self.num.mul(&other.num), self.den.mul(&other.den))
    }

    pub fn inv(&self) -> Result<Self> {
        if self.num.is_zero() {
            return Err(Error::DegenerateFraction(
                "inverse of the zero transfer".into(),
            ));
        }
        Ok(Self::normalized(self.den.clone(), self.num.clone()))
    }

    /// Negative feedback interconnection `self / (1 + self * k)`.
    pub fn feedback(&self, k: &RationalTF) -> Result<Self> {
        let num = self.num.mul(&k.den);
        let den = self.den.mul(&k.den).add(&self.num.mul(&k.num));
        if den.is_zero() {
            return Err(Error::DegenerateFraction(
                "1 + G K vanishes identically".into(),
            ));
        }
        Ok(Self::normalized(num, den))
    }

    fn normalized(num: Poly, den: Poly) -> Self {
        let lead = den.leading();
        let tf = Self {
            num: num.scale(1.0 / lead),
            den: den.scale(1.0 / lead),
        };
        tf.cancel_common_factors(CANCEL_TOL)
    }

    /// Removes numerator/denominator root pairs closer than `tol (1 + |r|)`.
    pub fn cancel_common_factors(&self, tol: f64) -> Self {
        if self.num.is_zero() {
            return Self::constant(0.0);
        }
        if self.num.degree() == 0 || self.den.degree() == 0 {
            return self.clone();
        }
        let zeros = self.num.roots();
        let mut poles = self.den.roots();
        let mut kept_zeros = Vec::with_capacity(zeros.len());
        let mut cancelled = false;
        for z in zeros {
            let best = poles
                .iter()
                .enumerate()
                .map(|(i, p)| (i, (z - p).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1));
            match best {
                Some((i, d)) if d <= tol * (1.0 + z.norm()) => {
                    poles.remove(i);
                    cancelled = true;
                }
                _ => kept_zeros.push(z),
            }
        }
        if !cancelled {
            return self.clone();
        }
        Self {
            num: Poly::from_roots(&kept_zeros, self.num.leading()),
            den: Poly::from_roots(&poles, 1.0),
        }
    }
}

/// Controllable-canonical realization of a proper transfer function.
pub fn tf_to_ss(tf: &RationalTF) -> Result<StateSpace> {
    if !tf.is_proper() {
        return Err(Error::ImproperTransfer {
            num: tf.num.degree(),
            den: tf.den.degree(),
        });
    }
    let n = tf.den.degree();
    let den = tf.den.coeffs();
    let mut num = vec![0.0; n + 1];
    let nc = tf.num.coeffs();
    num[n + 1 - nc.len()..].copy_from_slice(nc);
    let d0 = num[0];
    let mut a = DMatrix::zeros(n, n);
    let mut b = DMatrix::zeros(n, 1);
    let mut c = DMatrix::zeros(1, n);
    for j in 0..n {
        a[(0, j)] = -den[j + 1];
        c[(0, j)] = num[j + 1] - d0 * den[j + 1];
    }
    for i in 1..n {
        a[(i, i - 1)] = 1.0;
    }
    if n > 0 {
        b[(0, 0)] = 1.0;
    }
    StateSpace::new(a, b, c, DMatrix::from_element(1, 1, d0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + b.norm())
    }

    #[test]
    fn unity_feedback_of_unity_is_half() {
        let one = RationalTF::constant(1.0);
        let t = tf_arith(&one, &one, TfOp::Feedback).unwrap();
        assert_eq!(t.num().degree(), 0);
        assert_eq!(t.den().degree(), 0);
        assert!((t.freq(0.0).re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn lag_times_its_inverse_cancels() {
        let lag = RationalTF::new(vec![1.0], vec![1.0, 1.0]).unwrap();
        let lead = RationalTF::new(vec![1.0, 1.0], vec![1.0]).unwrap();
        let one = tf_arith(&lag, &lead, TfOp::Mul).unwrap();
        assert_eq!(one.den().degree(), 0);
        assert!((one.freq(3.0).re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn input_sensitivity_of_example_loop_at_dc() {
        let g = RationalTF::zpk(&[-25.0, -15.0, -5.0], &[-40.0, -10.0, -3.0], 1.0);
        let c = RationalTF::new(vec![15.0, 25.0], vec![1.0]).unwrap();
        let cg = c.mul(&g);
        let si = RationalTF::constant(1.0).feedback(&cg).unwrap();
        // C(0) G(0) = 25 * (25*15*5)/(40*10*3) = 25 * 1.5625
        let want = 1.0 / (1.0 + 25.0 * 1.5625);
        assert!((si.freq(0.0).re - want).abs() < 1e-12);
        assert!((want - 0.024961).abs() < 1e-6);
    }

    #[test]
    fn realization_of_constant_and_lag() {
        let k = tf_to_ss(&RationalTF::constant(5.0)).unwrap();
        assert_eq!(k.n(), 0);
        assert_eq!(k.d()[(0, 0)], 5.0);
        let lag = tf_to_ss(&RationalTF::new(vec![1.0], vec![1.0, 1.0]).unwrap()).unwrap();
        assert_eq!(lag.a()[(0, 0)], -1.0);
        assert_eq!(lag.b()[(0, 0)], 1.0);
        assert_eq!(lag.c()[(0, 0)], 1.0);
        assert_eq!(lag.d()[(0, 0)], 0.0);
    }

    #[test]
    fn biproper_realization_long_division() {
        let tf = RationalTF::new(vec![1.0, 2.0], vec![1.0, 1.0]).unwrap();
        let ss = tf_to_ss(&tf).unwrap();
        assert_eq!(ss.d()[(0, 0)], 1.0);
        let dc = ss.freq_response(0.0).unwrap()[(0, 0)];
        assert!(close(dc, Complex64::new(2.0, 0.0), 1e-14));
    }

    #[test]
    fn improper_transfer_is_rejected() {
        let c = RationalTF::new(vec![15.0, 25.0], vec![1.0]).unwrap();
        assert!(matches!(
            tf_to_ss(&c),
            Err(Error::ImproperTransfer { num: 1, den: 0 })
        ));
        assert_eq!(c.relative_degree(), -1);
    }

    #[test]
    fn realization_matches_rational_evaluation() {
        let tf = RationalTF::new(
            vec![0.92, 43.25, 1911.0, 5976.0, 1.75e4],
            vec![1.0, 13.19, 3966.0, 2605.0, 3.90e4],
        )
        .unwrap();
        let ss = tf_to_ss(&tf).unwrap();
        for k in 0..60 {
            let w = 10f64.powf(-3.0 + 7.0 * k as f64 / 59.0);
            let got = ss.freq_response(w).unwrap()[(0, 0)];
            assert!(close(got, tf.freq(w), 1e-8), "w = {w}");
        }
    }

    #[test]
    fn zero_denominator_is_degenerate() {
        assert!(matches!(
            RationalTF::new(vec![1.0], vec![0.0]),
            Err(Error::DegenerateFraction(_))
        ));
        assert!(RationalTF::constant(0.0).inv().is_err());
    }
}
