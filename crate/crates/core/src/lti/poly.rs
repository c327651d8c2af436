use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::linalg;

/// Real polynomial with coefficients in descending powers of `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(coeffs: impl Into<Vec<f64>>) -> Self {
        let mut coeffs: Vec<f64> = coeffs.into();
        let first = coeffs
            .iter()
            .position(|c| *c != 0.0)
            .unwrap_or(coeffs.len());
        coeffs.drain(..first);
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Self { coeffs }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == 0.0
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn leading(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .fold(Complex64::new(0.0, 0.0), |acc, c| acc * s + c)
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * k).collect::<Vec<_>>())
    }

    pub fn add(&self, other: &Poly) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = vec![0.0; n];
        for (i, c) in self.coeffs.iter().rev().enumerate() {
            out[n - 1 - i] += c;
        }
        for (i, c) in other.coeffs.iter().rev().enumerate() {
            out[n - 1 - i] += c;
        }
        Self::new(out)
    }

    pub fn sub(&self, other: &Poly) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn mul(&self, other: &Poly) -> Self {
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    /// Polynomial `lead * prod (s - r)`; imaginary round-off is discarded.
    pub fn from_roots(roots: &[Complex64], lead: f64) -> Self {
        let mut c = vec![Complex64::new(1.0, 0.0)];
        for r in roots {
            let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
            for (i, v) in c.iter().enumerate() {
                next[i] += v;
                next[i + 1] -= v * r;
            }
            c = next;
        }
        Self::new(c.iter().map(|v| v.re * lead).collect::<Vec<_>>())
    }

    /// Roots from the companion matrix, each polished by a few Newton steps.
    pub fn roots(&self) -> Vec<Complex64> {
        let deg = self.degree();
        if deg == 0 {
            return Vec::new();
        }
        let lead = self.leading();
        let mut comp = DMatrix::zeros(deg, deg);
        for j in 0..deg {
            comp[(0, j)] = -self.coeffs[j + 1] / lead;
        }
        for i in 1..deg {
            comp[(i, i - 1)] = 1.0;
        }
        let dp = self.derivative();
        linalg::eigenvalues(&comp)
            .into_iter()
            .map(|mut r| {
                for _ in 0..3 {
                    let f = self.eval(r);
                    let df = dp.eval(r);
                    if df.norm() == 0.0 {
                        break;
                    }
                    let cand = r - f / df;
                    if self.eval(cand).norm() < f.norm() {
                        r = cand;
                    } else {
                        break;
                    }
                }
                r
            })
            .collect()
    }

    pub fn derivative(&self) -> Self {
        let deg = self.degree();
        if deg == 0 {
            return Self::zero();
        }
        Self::new(
            self.coeffs[..deg]
                .iter()
                .enumerate()
                .map(|(i, c)| c * (deg - i) as f64)
                .collect::<Vec<_>>(),
        )
    }
}
