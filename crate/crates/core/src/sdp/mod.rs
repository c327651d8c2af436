//! Small dense semidefinite-programming solver for problems built from [`LmiBlock`]s.

mod barrier;
mod pdip;

pub use barrier::{feasibility_phase1, solve as solve_barrier, BarrierSolver};
pub use pdip::{solve, PrimalDualSolver};

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use crate::lmi::{LmiBlock, Sense, VarId, VarSpace};

/// Minimize `objective · x` subject to every block.
#[derive(Debug, Clone, PartialEq)]
pub struct LmiProblem {
    pub vars: VarSpace,
    pub objective: Vec<f64>,
    pub blocks: Vec<LmiBlock>,
    /// Optional starting point; used directly when strictly feasible.
    pub initial: Option<Vec<f64>>,
}

impl LmiProblem {
    pub fn new(vars: VarSpace) -> Self {
        let d = vars.dim();
        Self {
            vars,
            objective: vec![0.0; d],
            blocks: Vec::new(),
            initial: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.vars.dim()
    }

    pub fn push(&mut self, block: LmiBlock) {
        if let Some(k) = block.max_index() {
            assert!(
                k < self.dim(),
                "block `{}` references variable {k}",
                block.name
            );
        }
        self.blocks.push(block);
    }

    /// Adds `coef` times the (scalar) variable `id` to the objective.
    pub fn minimize_scalar(&mut self, id: VarId, coef: f64) {
        let off = self.vars.info(id).offset;
        self.objective[off] += coef;
    }

    /// Smallest block slack at `x`, in each block's own units.
    pub fn min_slack(&self, x: &[f64]) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.slack(x))
            .fold(f64::INFINITY, f64::min)
    }

    /// Writes the problem as sparse triplets, one entry per line:
    ///
    /// ```text
    /// <block> <row> <col> <var> <coefficient>
    /// ```
    ///
    /// Blocks are numbered from 1, rows and columns are 1-based and only the
    /// upper triangle is listed. `var = 0` is the constant term and `var = k`
    /// the k-th flat variable. Block 0 carries the objective at row = col = 1.
    /// Lines starting with `#` describe the dimensions, sense and margin of
    /// each block.
    pub fn dump_string(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "# lmi problem: {} variables, {} blocks",
            self.dim(),
            self.blocks.len()
        )
        .unwrap();
        for (i, b) in self.blocks.iter().enumerate() {
            let sense = match b.sense {
                Sense::Negative => "neg",
                Sense::Positive => "pos",
            };
            writeln!(
                out,
                "# block {} size {} sense {} margin {:e} name {}",
                i + 1,
                b.size(),
                sense,
                b.margin,
                b.name
            )
            .unwrap();
        }
        for (k, c) in self.objective.iter().enumerate() {
            if *c != 0.0 {
                writeln!(out, "0 1 1 {} {:e}", k + 1, c).unwrap();
            }
        }
        for (i, b) in self.blocks.iter().enumerate() {
            let mut emit = |var: usize, m: &nalgebra::DMatrix<f64>| {
                for c in 0..m.ncols() {
                    for r in 0..=c {
                        let v = m[(r, c)];
                        if v != 0.0 {
                            writeln!(out, "{} {} {} {} {:e}", i + 1, r + 1, c + 1, var, v).unwrap();
                        }
                    }
                }
            };
            emit(0, &b.constant);
            for (k, m) in &b.coeffs {
                emit(k + 1, m);
            }
        }
        out
    }

    pub fn dump(&self, path: &Path) -> io::Result<()> {
        std::fs::write(path, self.dump_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    MaxIterations,
    NumericalFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Stop when the barrier gap bound `m / t` is below `gap_tol * (1 + |objective|)`.
    pub gap_tol: f64,
    /// Accepted violation of a (normalized) block at the returned point.
    pub feas_tol: f64,
    /// Maximum number of barrier-parameter updates per phase.
    pub max_iter: usize,
    /// Maximum Newton steps per centering.
    pub max_newton: usize,
    pub armijo: f64,
    pub backtrack: f64,
    /// Factor by which the barrier weight `1/t` shrinks per outer iteration.
    pub barrier_factor: f64,
    /// Optional box `|x_k| < bound`, enforced by extra log barriers.
    pub variable_bound: Option<f64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            gap_tol: 1e-8,
            feas_tol: 1e-8,
            max_iter: 200,
            max_newton: 80,
            armijo: 0.01,
            backtrack: 0.5,
            barrier_factor: 0.2,
            variable_bound: None,
        }
    }
}

/// One outer (barrier-update) iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterRecord {
    /// 1 for the feasibility phase, 2 for the optimization phase.
    pub phase: u8,
    pub t: f64,
    pub newton_steps: usize,
    pub objective: f64,
    pub decrement: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution {
    pub status: SdpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    /// Smallest eigenvalue of each normalized block at `x` (≥ 0 when satisfied).
    pub block_margins: Vec<f64>,
    pub iterations: usize,
    pub newton_steps: usize,
    pub log: Vec<IterRecord>,
    pub message: String,
}

impl SdpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SdpStatus::Optimal
    }

    pub fn min_margin(&self) -> f64 {
        self.block_margins
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Interface for swapping in another SDP backend.
pub trait SdpSolver {
    fn solve(&self, prob: &LmiProblem) -> SdpSolution;
}
