//! Infeasible-start primal-dual path following (HKM direction, Mehrotra
//! predictor-corrector).
//!
//! With normalized blocks `G_j(x) = A_j0 + Σ x_k A_jk ⪰ 0` the pair is
//!
//! ```text
//! min c·x  s.t. S_j = G_j(x) ⪰ 0
//! max -Σ <A_j0, Z_j>  s.t. Σ_j <A_jk, Z_j> = c_k, Z_j ⪰ 0
//! ```

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::barrier::{make_coef, Coef, Inner, NormBlock};
use super::{IterRecord, LmiProblem, SdpSolution, SdpSolver, SdpStatus, SolverOptions};
use crate::linalg;

/// Fraction of the distance to the cone boundary taken per step.
const STEP_FRACTION: f64 = 0.98;
/// Dual objective over `‖Aᵀ Z‖` beyond which the primal is declared infeasible.
const INFEASIBILITY_RATIO: f64 = 1e8;
const DIVERGENCE: f64 = 1e15;
/// A stalled run still counts as solved when its relative gap is below `gap_tol` times this.
const ACCEPTABLE_GAP_FACTOR: f64 = 1e3;
/// Iterations without a 10% gap improvement before giving up.
const STALL_LIMIT: usize = 5;

/// Default backend: primal-dual interior point.
#[derive(Debug, Clone, Default)]
pub struct PrimalDualSolver {
    pub options: SolverOptions,
}

impl SdpSolver for PrimalDualSolver {
    fn solve(&self, prob: &LmiProblem) -> SdpSolution {
        solve(prob, &self.options)
    }
}

struct State {
    x: Vec<f64>,
    s: Vec<DMatrix<f64>>,
    z: Vec<DMatrix<f64>>,
}

struct Factors {
    /// `L⁻¹` with `S = L Lᵀ`.
    linv: Vec<DMatrix<f64>>,
    /// `R` with `Z = R Rᵀ`.
    rz: Vec<DMatrix<f64>>,
    sinv: Vec<DMatrix<f64>>,
}

struct Direction {
    dx: DVector<f64>,
    ds: Vec<DMatrix<f64>>,
    dz: Vec<DMatrix<f64>>,
}

fn box_blocks(inner: &Inner) -> Vec<NormBlock> {
    let Some(r) = inner.bound else {
        return Vec::new();
    };
    let one = DMatrix::from_element(1, 1, 1.0);
    (0..inner.dim)
        .flat_map(|k| {
            [1.0, -1.0].map(|sign| NormBlock {
                g0: one.clone(),
                coefs: vec![make_coef(k, DMatrix::from_element(1, 1, sign / r))],
            })
        })
        .collect()
}

fn coef_dot(c: &Coef, h: &DMatrix<f64>) -> f64 {
    match &c.sparse {
        Some(nz) => nz
            .iter()
            .map(|&(i, j, v)| {
                if i == j {
                    v * h[(i, i)]
                } else {
                    v * (h[(i, j)] + h[(j, i)])
                }
            })
            .sum(),
        None => c.dense.dot(h),
    }
}

fn add_coef(acc: &mut DMatrix<f64>, c: &Coef, v: f64) {
    match &c.sparse {
        Some(nz) => {
            for &(i, j, m) in nz {
                acc[(i, j)] += v * m;
                if i != j {
                    acc[(j, i)] += v * m;
                }
            }
        }
        None => *acc += &c.dense * v,
    }
}

fn frob_dot(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.dot(b)
}

/// Largest `α` with `M + α Δ ⪰ 0`, given `M⁻¹ᐟ²`-like factor `linv` (`M = L Lᵀ`).
fn max_step(linv: &DMatrix<f64>, delta: &DMatrix<f64>) -> f64 {
    let w = linv * delta * linv.transpose();
    let lmin = linalg::min_eig_sym(&linalg::sym(&w));
    if lmin >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lmin
    }
}

struct Problem<'a> {
    inner: &'a Inner,
    blocks: Vec<&'a NormBlock>,
    dim: usize,
    c: DVector<f64>,
    total: usize,
}

impl<'a> Problem<'a> {
    fn eval(&self, j: usize, x: &[f64]) -> DMatrix<f64> {
        self.inner.eval_block(self.blocks[j], x)
    }

    fn primal_residual(&self, st: &State) -> Vec<DMatrix<f64>> {
        (0..self.blocks.len())
            .map(|j| &st.s[j] - self.eval(j, &st.x))
            .collect()
    }

    fn dual_image(&self, z: &[DMatrix<f64>]) -> DVector<f64> {
        let mut v = DVector::zeros(self.dim);
        for (b, zj) in self.blocks.iter().zip(z) {
            for c in &b.coefs {
                v[c.var] += coef_dot(c, zj);
            }
        }
        v
    }

    fn factor(&self, st: &State) -> Option<Factors> {
        let mut linv = Vec::with_capacity(self.blocks.len());
        let mut rz = Vec::with_capacity(self.blocks.len());
        let mut sinv = Vec::with_capacity(self.blocks.len());
        for j in 0..self.blocks.len() {
            let n = st.s[j].nrows();
            let l = Cholesky::<f64, Dyn>::new(linalg::sym(&st.s[j]))?.l();
            let li = l.solve_lower_triangular(&DMatrix::identity(n, n))?;
            sinv.push(li.tr_mul(&li));
            linv.push(li);
            rz.push(Cholesky::<f64, Dyn>::new(linalg::sym(&st.z[j]))?.l());
        }
        Some(Factors { linv, rz, sinv })
    }

    /// Schur complement `M_kl = Σ_j tr(A_jk Z_j A_jl S_j⁻¹)`.
    fn schur(&self, f: &Factors) -> DMatrix<f64> {
        let d = self.dim;
        let mut m = DMatrix::zeros(d, d);
        for (j, b) in self.blocks.iter().enumerate() {
            let n = b.g0.nrows();
            if n == 1 {
                let w = f.linv[j][(0, 0)] * f.rz[j][(0, 0)];
                let w2 = w * w;
                for ca in &b.coefs {
                    for cb in &b.coefs {
                        m[(ca.var, cb.var)] += ca.dense[(0, 0)] * cb.dense[(0, 0)] * w2;
                    }
                }
                continue;
            }
            let li = &f.linv[j];
            let r = &f.rz[j];
            let nk = b.coefs.len();
            let mut v = DMatrix::zeros(n * n, nk);
            for (col, c) in b.coefs.iter().enumerate() {
                let w = match &c.sparse {
                    Some(nz) => {
                        let mut w = DMatrix::zeros(n, n);
                        for &(p, q, val) in nz {
                            w.ger(val, &li.column(p), &r.row(q).transpose(), 1.0);
                            if p != q {
                                w.ger(val, &li.column(q), &r.row(p).transpose(), 1.0);
                            }
                        }
                        w
                    }
                    None => li * &c.dense * r,
                };
                v.column_mut(col).copy_from_slice(w.as_slice());
            }
            let h = v.tr_mul(&v);
            for (a, ca) in b.coefs.iter().enumerate() {
                for (bb, cb) in b.coefs.iter().enumerate() {
                    m[(ca.var, cb.var)] += h[(a, bb)];
                }
            }
        }
        m
    }

    /// Solves for the direction with complementarity right-hand sides `rc`.
    fn direction(
        &self,
        st: &State,
        f: &Factors,
        chol: &Cholesky<f64, Dyn>,
        rp: &[DMatrix<f64>],
        rd: &DVector<f64>,
        rc: &[DMatrix<f64>],
    ) -> Direction {
        let mut h = -rd;
        let mut hmats = Vec::with_capacity(self.blocks.len());
        for (j, b) in self.blocks.iter().enumerate() {
            let hj = linalg::sym(&((&rc[j] + &st.z[j] * &rp[j]) * &f.sinv[j]));
            for c in &b.coefs {
                h[c.var] += coef_dot(c, &hj);
            }
            hmats.push(hj);
        }
        let dx = chol.solve(&h);
        let mut ds = Vec::with_capacity(self.blocks.len());
        let mut dz = Vec::with_capacity(self.blocks.len());
        for (j, b) in self.blocks.iter().enumerate() {
            let mut dsj = -&rp[j];
            for c in &b.coefs {
                let v = dx[c.var];
                if v != 0.0 {
                    add_coef(&mut dsj, c, v);
                }
            }
            let dzj = linalg::sym(&((&rc[j] - &st.z[j] * &dsj) * &f.sinv[j]));
            ds.push(dsj);
            dz.push(dzj);
        }
        Direction { dx, ds, dz }
    }

    fn step_lengths(&self, f: &Factors, dir: &Direction) -> (f64, f64) {
        let mut ap = f64::INFINITY;
        let mut ad = f64::INFINITY;
        for j in 0..self.blocks.len() {
            ap = ap.min(max_step(&f.linv[j], &dir.ds[j]));
            let rinv = f.rz[j]
                .solve_lower_triangular(&DMatrix::identity(f.rz[j].nrows(), f.rz[j].nrows()))
                .unwrap_or_else(|| DMatrix::zeros(0, 0));
            if rinv.nrows() > 0 {
                ad = ad.min(max_step(&rinv, &dir.dz[j]));
            }
        }
        (ap, ad)
    }
}

fn regularized_cholesky(m: &DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    let scale = m
        .diagonal()
        .iter()
        .fold(0.0_f64, |a, v| a.max(v.abs()))
        .max(1e-300);
    let mut delta = 0.0;
    for _ in 0..10 {
        let mut mr = m.clone();
        for i in 0..mr.nrows() {
            mr[(i, i)] += delta;
        }
        if let Some(ch) = Cholesky::new(mr) {
            return Some(ch);
        }
        delta = if delta == 0.0 {
            1e-14 * scale
        } else {
            delta * 100.0
        };
    }
    None
}

/// Minimizes `objective · x` over the blocks of `prob`.
pub fn solve(prob: &LmiProblem, opts: &SolverOptions) -> SdpSolution {
    let inner = Inner::from_problem(prob, opts);
    let boxes = box_blocks(&inner);
    let d = prob.dim();
    let n_user = inner.blocks.len();
    let blocks: Vec<&NormBlock> = inner.blocks.iter().chain(boxes.iter()).collect();
    let pb = Problem {
        inner: &inner,
        total: blocks.iter().map(|b| b.g0.nrows()).sum(),
        blocks,
        dim: d,
        c: DVector::from_column_slice(&inner.c),
    };
    let finish =
        |status: SdpStatus, x: Vec<f64>, iterations: usize, log: Vec<IterRecord>, msg: &str| {
            let block_margins = (0..n_user)
                .map(|j| linalg::min_eig_sym(&pb.eval(j, &x)))
                .collect();
            SdpSolution {
                status,
                objective: inner.objective(&x),
                block_margins,
                x,
                iterations,
                newton_steps: iterations,
                log,
                message: msg.to_string(),
            }
        };

    let mut x0 = match &prob.initial {
        Some(v) if v.len() == d => v.clone(),
        _ => vec![0.0; d],
    };
    if let Some(r) = inner.bound {
        for v in &mut x0 {
            *v = v.clamp(-0.5 * r, 0.5 * r);
        }
    }
    if d == 0 || pb.blocks.is_empty() {
        let ok = (0..n_user).all(|j| linalg::min_eig_sym(&pb.eval(j, &x0)) >= -opts.feas_tol);
        let status = if ok {
            SdpStatus::Optimal
        } else {
            SdpStatus::Infeasible
        };
        return finish(status, x0, 0, Vec::new(), "no variables or no constraints");
    }
    let feasibility_only = inner.c.iter().all(|v| *v == 0.0);
    if feasibility_only && (0..pb.blocks.len()).all(|j| linalg::min_eig_sym(&pb.eval(j, &x0)) > 0.0)
    {
        return finish(
            SdpStatus::Optimal,
            x0,
            0,
            Vec::new(),
            "starting point is strictly feasible",
        );
    }

    // starting cones
    let c_abs = |k: usize| inner.c[k].abs();
    let mut s = Vec::new();
    let mut z = Vec::new();
    for b in &pb.blocks {
        let n = b.g0.nrows();
        let rn = (n as f64).sqrt();
        let mut xi = 10.0_f64.max(rn);
        let mut eta = 10.0_f64.max(rn).max(b.g0.norm() / rn);
        for c in &b.coefs {
            let an = c.dense.norm();
            xi = xi.max(rn * (1.0 + c_abs(c.var)) / (1.0 + an));
            eta = eta.max(an / rn);
        }
        s.push(DMatrix::identity(n, n) * eta);
        z.push(DMatrix::identity(n, n) * xi);
    }
    let mut st = State { x: x0, s, z };
    let c_norm = pb.c.norm();
    let g0_norm = pb.blocks.iter().map(|b| b.g0.norm()).fold(0.0, f64::max);
    let mut log = Vec::new();
    let mut stalled = 0;
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut no_progress = 0;
    let give_up =
        |best: Option<(Vec<f64>, f64)>, x: Vec<f64>, it: usize, log: Vec<IterRecord>, why: &str| {
            match best {
                Some((bx, g)) if g <= ACCEPTABLE_GAP_FACTOR * opts.gap_tol => finish(
                    SdpStatus::Optimal,
                    bx,
                    it,
                    log,
                    &format!("{why}; best iterate has relative gap {g:.2e}"),
                ),
                Some((bx, _)) => finish(SdpStatus::MaxIterations, bx, it, log, why),
                None => finish(SdpStatus::NumericalFailure, x, it, log, why),
            }
        };

    for it in 0..opts.max_iter.max(1) {
        let rp = pb.primal_residual(&st);
        let rd = &pb.c - pb.dual_image(&st.z);
        let gap: f64 = (0..pb.blocks.len())
            .map(|j| frob_dot(&st.s[j], &st.z[j]))
            .sum();
        let mu = gap / pb.total as f64;
        let pobj = pb.c.dot(&DVector::from_column_slice(&st.x));
        let dobj: f64 = -(0..pb.blocks.len())
            .map(|j| frob_dot(&pb.blocks[j].g0, &st.z[j]))
            .sum::<f64>();
        let pinf = rp.iter().map(|m| m.norm()).fold(0.0, f64::max) / (1.0 + g0_norm);
        let dinf = rd.norm() / (1.0 + c_norm);
        let rel_gap = gap / (1.0 + pobj.abs() + dobj.abs());
        log.push(IterRecord {
            phase: 2,
            t: 1.0 / mu.max(1e-300),
            newton_steps: 1,
            objective: pobj,
            decrement: rel_gap,
        });

        let primal_ok = pinf <= opts.feas_tol
            && (0..n_user).all(|j| linalg::min_eig_sym(&pb.eval(j, &st.x)) > 0.0);
        if feasibility_only && primal_ok {
            return finish(
                SdpStatus::Optimal,
                st.x,
                it,
                log,
                "strictly feasible point found",
            );
        }
        if rel_gap <= opts.gap_tol && dinf <= opts.feas_tol && primal_ok {
            return finish(SdpStatus::Optimal, st.x, it, log, "gap tolerance reached");
        }
        if primal_ok && dinf <= opts.feas_tol.sqrt() {
            match &best {
                Some((_, g)) if rel_gap >= 0.9 * g => no_progress += 1,
                _ => no_progress = 0,
            }
            if best.as_ref().map_or(true, |(_, g)| rel_gap < *g) {
                best = Some((st.x.clone(), rel_gap));
            }
            if no_progress >= STALL_LIMIT {
                return give_up(best, st.x, it, log, "progress stalled");
            }
        }
        let aty = (&pb.c - &rd).norm();
        if dobj > 0.0 && dobj > INFEASIBILITY_RATIO * aty.max(1e-300) && pinf > opts.feas_tol {
            return finish(
                SdpStatus::Infeasible,
                st.x,
                it,
                log,
                "dual ray certifies primal infeasibility",
            );
        }
        if st.x.iter().any(|v| !(v.abs() < DIVERGENCE)) {
            return finish(
                SdpStatus::NumericalFailure,
                st.x,
                it,
                log,
                "iterates diverge; the problem looks unbounded",
            );
        }

        let Some(f) = pb.factor(&st) else {
            return give_up(best, st.x, it, log, "lost positive definiteness");
        };
        let m = pb.schur(&f);
        let Some(chol) = regularized_cholesky(&m) else {
            return give_up(best, st.x, it, log, "Schur complement is singular");
        };

        // predictor
        let rc_aff: Vec<DMatrix<f64>> = (0..pb.blocks.len())
            .map(|j| -(&st.z[j] * &st.s[j]))
            .collect();
        let aff = pb.direction(&st, &f, &chol, &rp, &rd, &rc_aff);
        let (ap, ad) = pb.step_lengths(&f, &aff);
        let (ap, ad) = (ap.min(1.0), ad.min(1.0));
        let gap_aff: f64 = (0..pb.blocks.len())
            .map(|j| frob_dot(&(&st.s[j] + &aff.ds[j] * ap), &(&st.z[j] + &aff.dz[j] * ad)))
            .sum();
        let sigma = (gap_aff / gap).clamp(0.0, 1.0).powi(3);

        // corrector
        let rc: Vec<DMatrix<f64>> = (0..pb.blocks.len())
            .map(|j| {
                let n = st.s[j].nrows();
                DMatrix::identity(n, n) * (sigma * mu)
                    - &st.z[j] * &st.s[j]
                    - &aff.dz[j] * &aff.ds[j]
            })
            .collect();
        let dir = pb.direction(&st, &f, &chol, &rp, &rd, &rc);
        let (ap, ad) = pb.step_lengths(&f, &dir);
        let ap = (STEP_FRACTION * ap).min(1.0);
        let ad = (STEP_FRACTION * ad).min(1.0);
        if ap < 1e-10 && ad < 1e-10 {
            stalled += 1;
            if stalled >= 3 {
                return give_up(best, st.x, it, log, "steps stalled");
            }
        } else {
            stalled = 0;
        }
        for k in 0..d {
            st.x[k] += ap * dir.dx[k];
        }
        for j in 0..pb.blocks.len() {
            st.s[j] += &dir.ds[j] * ap;
            st.z[j] += &dir.dz[j] * ad;
        }
    }
    give_up(best, st.x, opts.max_iter, log, "iteration limit")
}
