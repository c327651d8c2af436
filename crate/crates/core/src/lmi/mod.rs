//! Affine matrix expressions over a flat decision vector, and the matrix
//! inequalities built from them.

mod analysis;
mod expr;
mod synthesis;

pub use analysis::{brl_analysis_lmi, mingain_analysis_lmi};
pub use expr::AffineMat;
pub use synthesis::{
    build_coupling_lmi, build_m_lmi, build_n_bmi_fixed_slack, build_n_bmi_fixed_vars, m_block,
    n_block, transformed_closed_loop, FilterExpr, FilterVarIds, FilterVars, SlackExpr, SlackVarIds,
    SlackVars, TransformedClosedLoop,
};

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::linalg;

/// Default strictness margin for `≺ 0` / `≻ 0`, relative to the constant term.
pub const STRICT_EPS: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Symmetric,
    Full,
    Scalar,
}

/// Handle to a variable declared in a [`VarSpace`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(usize);

#[derive(Debug, Clone, PartialEq)]
pub struct VarInfo {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub kind: VarKind,
    /// First flat index of this variable.
    pub offset: usize,
    /// Number of flat parameters.
    pub len: usize,
}

/// Named matrix variables laid out in a flat real vector.
///
/// Symmetric variables store their upper triangle only, row by row.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VarSpace {
    vars: Vec<VarInfo>,
    dim: usize,
}

impl VarSpace {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, name: &str, rows: usize, cols: usize, kind: VarKind) -> VarId {
        let len = match kind {
            VarKind::Symmetric => rows * (rows + 1) / 2,
            VarKind::Full => rows * cols,
            VarKind::Scalar => 1,
        };
        self.vars.push(VarInfo {
            name: name.to_string(),
            rows,
            cols,
            kind,
            offset: self.dim,
            len,
        });
        self.dim += len;
        VarId(self.vars.len() - 1)
    }

    pub fn symmetric(&mut self, name: &str, n: usize) -> VarId {
        self.push(name, n, n, VarKind::Symmetric)
    }

    pub fn full(&mut self, name: &str, rows: usize, cols: usize) -> VarId {
        self.push(name, rows, cols, VarKind::Full)
    }

    pub fn scalar(&mut self, name: &str) -> VarId {
        self.push(name, 1, 1, VarKind::Scalar)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn info(&self, id: VarId) -> &VarInfo {
        &self.vars[id.0]
    }

    pub fn vars(&self) -> impl Iterator<Item = (VarId, &VarInfo)> {
        self.vars.iter().enumerate().map(|(i, v)| (VarId(i), v))
    }

    pub fn find(&self, name: &str) -> Option<VarId> {
        self.vars.iter().position(|v| v.name == name).map(VarId)
    }

    /// `(flat index, row, col)` for every stored parameter of `id`.
    fn params(&self, id: VarId) -> Vec<(usize, usize, usize)> {
        let v = &self.vars[id.0];
        let mut out = Vec::with_capacity(v.len);
        match v.kind {
            VarKind::Symmetric => {
                let mut k = v.offset;
                for i in 0..v.rows {
                    for j in i..v.rows {
                        out.push((k, i, j));
                        k += 1;
                    }
                }
            }
            VarKind::Full => {
                for i in 0..v.rows {
                    for j in 0..v.cols {
                        out.push((v.offset + i * v.cols + j, i, j));
                    }
                }
            }
            VarKind::Scalar => out.push((v.offset, 0, 0)),
        }
        out
    }

    /// The variable as an affine expression of the flat vector.
    pub fn expr(&self, id: VarId) -> AffineMat {
        let v = &self.vars[id.0];
        let mut terms = BTreeMap::new();
        for (k, i, j) in self.params(id) {
            let mut e = DMatrix::zeros(v.rows, v.cols);
            e[(i, j)] = 1.0;
            if v.kind == VarKind::Symmetric {
                e[(j, i)] = 1.0;
            }
            terms.insert(k, e);
        }
        AffineMat::from_parts(DMatrix::zeros(v.rows, v.cols), terms)
    }

    /// Value of `id` at `x`; symmetric variables are symmetrized.
    pub fn value(&self, id: VarId, x: &[f64]) -> DMatrix<f64> {
        let v = &self.vars[id.0];
        let mut m = DMatrix::zeros(v.rows, v.cols);
        for (k, i, j) in self.params(id) {
            m[(i, j)] = x[k];
            if v.kind == VarKind::Symmetric {
                m[(j, i)] = x[k];
            }
        }
        if v.kind == VarKind::Symmetric {
            linalg::sym(&m)
        } else {
            m
        }
    }

    pub fn scalar_value(&self, id: VarId, x: &[f64]) -> f64 {
        x[self.vars[id.0].offset]
    }

    /// Writes `value` into the slots of `id` in `x` (upper triangle for symmetric).
    pub fn set(&self, id: VarId, value: &DMatrix<f64>, x: &mut [f64]) {
        let v = &self.vars[id.0];
        assert_eq!(
            value.shape(),
            (v.rows, v.cols),
            "value shape for `{}`",
            v.name
        );
        for (k, i, j) in self.params(id) {
            x[k] = if v.kind == VarKind::Symmetric {
                0.5 * (value[(i, j)] + value[(j, i)])
            } else {
                value[(i, j)]
            };
        }
    }
}

/// Direction of a matrix inequality.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    /// `F(x) ≺ 0` (or `⪯ 0` when not strict).
    Negative,
    /// `F(x) ≻ 0` (or `⪰ 0` when not strict).
    Positive,
}

impl Sense {
    pub fn sign(self) -> f64 {
        match self {
            Sense::Negative => -1.0,
            Sense::Positive => 1.0,
        }
    }
}

/// `F(x) = F0 + sum_k x_k F_k` with a sense and strictness margin.
///
/// The block holds when `sign * F(x) - margin * I ⪰ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LmiBlock {
    pub name: String,
    pub constant: DMatrix<f64>,
    pub coeffs: BTreeMap<usize, DMatrix<f64>>,
    pub sense: Sense,
    pub strict: bool,
    pub margin: f64,
}

impl LmiBlock {
    /// Symmetrizes `f` and attaches the default margin (`STRICT_EPS` scaled by
    /// the constant term) when `strict`.
    pub fn new(name: impl Into<String>, f: AffineMat, sense: Sense, strict: bool) -> Self {
        assert_eq!(f.rows(), f.cols(), "LMI blocks are square");
        let (constant, terms) = f.into_parts();
        let constant = linalg::sym(&constant);
        let coeffs = terms
            .into_iter()
            .map(|(k, m)| (k, linalg::sym(&m)))
            .collect();
        let margin = if strict {
            STRICT_EPS * linalg::max_abs(&constant).max(1.0)
        } else {
            0.0
        };
        Self {
            name: name.into(),
            constant,
            coeffs,
            sense,
            strict,
            margin,
        }
    }

    pub fn with_margin(mut self, margin: f64) -> Self {
        self.margin = margin;
        self
    }

    pub fn size(&self) -> usize {
        self.constant.nrows()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.coeffs.keys().next_back().copied()
    }

    /// `F(x)`.
    pub fn eval(&self, x: &[f64]) -> DMatrix<f64> {
        let mut m = self.constant.clone();
        for (k, c) in &self.coeffs {
            if x[*k] != 0.0 {
                m += c * x[*k];
            }
        }
        m
    }

    /// Smallest eigenvalue of `sign * F(x) - margin * I`; nonnegative iff the block holds.
    pub fn slack(&self, x: &[f64]) -> f64 {
        if self.size() == 0 {
            return f64::INFINITY;
        }
        linalg::min_eig_sym(&(self.eval(x) * self.sense.sign())) - self.margin
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_round_trip() {
        let mut vs = VarSpace::new();
        let a = vs.scalar("t");
        let x = vs.symmetric("X", 3);
        let b = vs.full("B", 2, 3);
        assert_eq!(vs.dim(), 1 + 6 + 6);
        let xv = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 5.0, 3.0, 5.0, 6.0]);
        let bv = DMatrix::from_fn(2, 3, |i, j| (i * 3 + j) as f64 - 2.0);
        let mut flat = vec![0.0; vs.dim()];
        vs.set(x, &xv, &mut flat);
        vs.set(b, &bv, &mut flat);
        flat[vs.info(a).offset] = 7.0;
        assert_eq!(vs.value(x, &flat), xv);
        assert_eq!(vs.value(b, &flat), bv);
        assert_eq!(vs.scalar_value(a, &flat), 7.0);
        assert_eq!(vs.expr(x).eval(&flat), xv);
        assert_eq!(vs.expr(b).eval(&flat), bv);
        assert_eq!(vs.find("B"), Some(b));
    }

    #[test]
    fn block_slack_sign() {
        let mut vs = VarSpace::new();
        let t = vs.scalar("t");
        let f = vs
            .expr(t)
            .scale(1.0)
            .add(&AffineMat::constant(DMatrix::from_element(1, 1, -1.0)));
        let blk = LmiBlock::new("t > 1", f, Sense::Positive, false);
        assert!(blk.slack(&[2.0]) > 0.0);
        assert!(blk.slack(&[0.5]) < 0.0);
    }
}
