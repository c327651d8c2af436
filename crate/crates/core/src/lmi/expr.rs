use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Matrix-valued affine function `F(x) = F0 + sum_k x_k F_k`.
///
/// Products are only defined when one factor is constant, which is exactly
/// what fixing one side of a bilinear form gives.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMat {
    constant: DMatrix<f64>,
    terms: BTreeMap<usize, DMatrix<f64>>,
}

fn prune(terms: &mut BTreeMap<usize, DMatrix<f64>>) {
    terms.retain(|_, m| m.iter().any(|v| *v != 0.0));
}

impl AffineMat {
    pub fn constant(m: DMatrix<f64>) -> Self {
        Self {
            constant: m,
            terms: BTreeMap::new(),
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::constant(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Self::constant(DMatrix::identity(n, n))
    }

    pub fn from_parts(constant: DMatrix<f64>, mut terms: BTreeMap<usize, DMatrix<f64>>) -> Self {
        assert!(terms.values().all(|m| m.shape() == constant.shape()));
        prune(&mut terms);
        Self { constant, terms }
    }

    pub fn into_parts(self) -> (DMatrix<f64>, BTreeMap<usize, DMatrix<f64>>) {
        (self.constant, self.terms)
    }

    pub fn rows(&self) -> usize {
        self.constant.nrows()
    }

    pub fn cols(&self) -> usize {
        self.constant.ncols()
    }

    pub fn constant_part(&self) -> &DMatrix<f64> {
        &self.constant
    }

    pub fn terms(&self) -> &BTreeMap<usize, DMatrix<f64>> {
        &self.terms
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, x: &[f64]) -> DMatrix<f64> {
        let mut m = self.constant.clone();
        for (k, c) in &self.terms {
            m += c * x[*k];
        }
        m
    }

    fn map(&self, f: impl Fn(&DMatrix<f64>) -> DMatrix<f64>) -> Self {
        let mut terms: BTreeMap<usize, DMatrix<f64>> =
            self.terms.iter().map(|(k, m)| (*k, f(m))).collect();
        prune(&mut terms);
        Self {
            constant: f(&self.constant),
            terms,
        }
    }

    pub fn transpose(&self) -> Self {
        self.map(|m| m.transpose())
    }

    pub fn scale(&self, a: f64) -> Self {
        self.map(|m| m * a)
    }

    pub fn neg(&self) -> Self {
        self.scale(-1.0)
    }

    pub fn add(&self, other: &AffineMat) -> Self {
        assert_eq!(
            (self.rows(), self.cols()),
            (other.rows(), other.cols()),
            "affine sum shape mismatch"
        );
        let mut terms = self.terms.clone();
        for (k, m) in &other.terms {
            terms
                .entry(*k)
                .and_modify(|t| *t += m)
                .or_insert_with(|| m.clone());
        }
        prune(&mut terms);
        Self {
            constant: &self.constant + &other.constant,
            terms,
        }
    }

    pub fn sub(&self, other: &AffineMat) -> Self {
        self.add(&other.neg())
    }

    /// `L * self`.
    pub fn lmul(&self, l: &DMatrix<f64>) -> Self {
        self.map(|m| l * m)
    }

    /// `self * R`.
    pub fn rmul(&self, r: &DMatrix<f64>) -> Self {
        self.map(|m| m * r)
    }

    /// `self * other`, defined when either factor is constant.
    pub fn mul(&self, other: &AffineMat) -> Result<Self> {
        if self.cols() != other.rows() {
            return Err(Error::DimensionMismatch(format!(
                "affine product {}x{} * {}x{}",
                self.rows(),
                self.cols(),
                other.rows(),
                other.cols()
            )));
        }
        if other.is_constant() {
            Ok(self.rmul(&other.constant))
        } else if self.is_constant() {
            Ok(other.lmul(&self.constant))
        } else {
            Err(Error::DimensionMismatch(
                "product of two non-constant affine expressions is not affine".into(),
            ))
        }
    }

    /// `self + selfᵀ`.
    pub fn he(&self) -> Self {
        self.add(&self.transpose())
    }

    /// Assembles a block matrix; every row of `grid` has the same number of blocks.
    pub fn blocks(grid: &[Vec<&AffineMat>]) -> Self {
        let row_h: Vec<usize> = grid.iter().map(|r| r[0].rows()).collect();
        let col_w: Vec<usize> = grid[0].iter().map(|b| b.cols()).collect();
        let (h, w) = (row_h.iter().sum(), col_w.iter().sum());
        let mut constant = DMatrix::zeros(h, w);
        let mut terms: BTreeMap<usize, DMatrix<f64>> = BTreeMap::new();
        let mut r0 = 0;
        for (bi, row) in grid.iter().enumerate() {
            assert_eq!(row.len(), col_w.len(), "ragged block grid");
            let mut c0 = 0;
            for (bj, blk) in row.iter().enumerate() {
                assert_eq!(
                    (blk.rows(), blk.cols()),
                    (row_h[bi], col_w[bj]),
                    "block ({bi}, {bj}) has the wrong shape"
                );
                constant
                    .view_mut((r0, c0), (blk.rows(), blk.cols()))
                    .copy_from(&blk.constant);
                for (k, m) in &blk.terms {
                    terms
                        .entry(*k)
                        .or_insert_with(|| DMatrix::zeros(h, w))
                        .view_mut((r0, c0), (m.nrows(), m.ncols()))
                        .copy_from(m);
                }
                c0 += col_w[bj];
            }
            r0 += row_h[bi];
        }
        Self { constant, terms }
    }
}
