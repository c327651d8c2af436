use nalgebra::{DMatrix, DVector};

use super::{IterRecord, LmiProblem, SdpSolution, SdpSolver, SdpStatus, SolverOptions};
use crate::linalg;

/// Newton-decrement threshold (`λ²/2`) that ends a centering step.
const CENTER_TOL: f64 = 1e-9;
/// Iterates beyond this magnitude are reported as a numerical failure (unbounded problem).
const DIVERGENCE: f64 = 1e15;
/// Phase-I box radius relative to the start point when no variable bound is set.
const PHASE1_RADIUS: f64 = 1e12;

/// The embedded primal barrier solver.
#[derive(Debug, Clone, Default)]
pub struct BarrierSolver {
    pub options: SolverOptions,
}

impl SdpSolver for BarrierSolver {
    fn solve(&self, prob: &LmiProblem) -> SdpSolution {
        solve(prob, &self.options)
    }
}

pub(super) struct Coef {
    pub(super) var: usize,
    pub(super) dense: DMatrix<f64>,
    /// Upper-triangle nonzeros, used when there are few of them.
    pub(super) sparse: Option<Vec<(usize, usize, f64)>>,
}

/// `G(x) = (sign F(x) - margin I) / scale`, required to be `⪰ 0`.
pub(super) struct NormBlock {
    pub(super) g0: DMatrix<f64>,
    pub(super) coefs: Vec<Coef>,
}

pub(super) struct Inner {
    pub(super) dim: usize,
    pub(super) c: Vec<f64>,
    pub(super) blocks: Vec<NormBlock>,
    pub(super) bound: Option<f64>,
    /// Variables `0..bounded` carry the box barrier.
    bounded: usize,
}

pub(super) fn make_coef(var: usize, m: DMatrix<f64>) -> Coef {
    let s = m.nrows();
    let mut nz = Vec::new();
    for j in 0..s {
        for i in 0..=j {
            if m[(i, j)] != 0.0 {
                nz.push((i, j, m[(i, j)]));
            }
        }
    }
    let sparse = (nz.len() <= s).then_some(nz);
    Coef {
        var,
        dense: m,
        sparse,
    }
}

impl Inner {
    pub(super) fn from_problem(prob: &LmiProblem, opts: &SolverOptions) -> Self {
        let blocks = prob
            .blocks
            .iter()
            .filter(|b| b.size() > 0)
            .map(|b| {
                let sign = b.sense.sign();
                let mut scale = linalg::max_abs(&b.constant);
                if !(scale > 0.0) {
                    scale = b.coeffs.values().map(linalg::max_abs).fold(0.0, f64::max);
                }
                if !(scale > 0.0) {
                    scale = 1.0;
                }
                let s = b.size();
                let g0 = (&b.constant * sign - DMatrix::identity(s, s) * b.margin) / scale;
                let coefs = b
                    .coeffs
                    .iter()
                    .map(|(k, m)| make_coef(*k, m * (sign / scale)))
                    .collect();
                NormBlock { g0, coefs }
            })
            .collect();
        Self {
            dim: prob.dim(),
            c: prob.objective.clone(),
            blocks,
            bound: opts.variable_bound,
            bounded: prob.dim(),
        }
    }

    /// Phase-I problem over `(x, s)`: minimize `-s` s.t. `G_i(x) - s I ⪰ 0` and
    /// `s ≤ 1`. Without the cap, a direction that raises every block at once
    /// leaves the Hessian singular in `s` and the first Newton step runs off.
    /// Without a user box, `radius` bounds the variables so the barrier has a center
    /// when the feasible set is unbounded.
    fn phase1(&self, radius: f64) -> Self {
        let d = self.dim;
        let mut blocks: Vec<NormBlock> = self
            .blocks
            .iter()
            .map(|b| {
                let n = b.g0.nrows();
                let mut coefs: Vec<Coef> = b
                    .coefs
                    .iter()
                    .map(|c| Coef {
                        var: c.var,
                        dense: c.dense.clone(),
                        sparse: c.sparse.clone(),
                    })
                    .collect();
                coefs.push(make_coef(d, -DMatrix::identity(n, n)));
                NormBlock {
                    g0: b.g0.clone(),
                    coefs,
                }
            })
            .collect();
        blocks.push(NormBlock {
            g0: DMatrix::identity(1, 1),
            coefs: vec![make_coef(d, -DMatrix::identity(1, 1))],
        });
        let mut c = vec![0.0; d + 1];
        c[d] = -1.0;
        Self {
            dim: d + 1,
            c,
            blocks,
            bound: self.bound.or(Some(radius)),
            bounded: d,
        }
    }

    fn barrier_weight(&self) -> f64 {
        let sizes: usize = self.blocks.iter().map(|b| b.g0.nrows()).sum();
        let boxed = if self.bound.is_some() {
            2 * self.bounded
        } else {
            0
        };
        (sizes + boxed) as f64
    }

    pub(super) fn eval_block(&self, b: &NormBlock, x: &[f64]) -> DMatrix<f64> {
        let mut g = b.g0.clone();
        for c in &b.coefs {
            let v = x[c.var];
            if v == 0.0 {
                continue;
            }
            match &c.sparse {
                Some(nz) => {
                    for &(i, j, m) in nz {
                        g[(i, j)] += v * m;
                        if i != j {
                            g[(j, i)] += v * m;
                        }
                    }
                }
                None => g += &c.dense * v,
            }
        }
        g
    }

    pub(super) fn objective(&self, x: &[f64]) -> f64 {
        self.c.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Barrier part `-Σ log det G_i - Σ log(R² - x_k²)`, or `None` outside the domain.
    fn barrier(&self, x: &[f64]) -> Option<f64> {
        let mut val = 0.0;
        for b in &self.blocks {
            let g = self.eval_block(b, x);
            let l = g.cholesky()?.l();
            val -= 2.0 * l.diagonal().iter().map(|v| v.ln()).sum::<f64>();
        }
        if let Some(r) = self.bound {
            for &v in &x[..self.bounded] {
                let gap = r * r - v * v;
                if !(gap > 0.0) {
                    return None;
                }
                val -= gap.ln();
            }
        }
        val.is_finite().then_some(val)
    }

    pub(super) fn min_eigs(&self, x: &[f64]) -> Vec<f64> {
        self.blocks
            .iter()
            .map(|b| linalg::min_eig_sym(&self.eval_block(b, x)))
            .collect()
    }

    /// Gradient and Hessian of the barrier part.
    fn derivatives(&self, x: &[f64]) -> Option<(DVector<f64>, DMatrix<f64>)> {
        let d = self.dim;
        let mut grad = DVector::zeros(d);
        let mut hess = DMatrix::zeros(d, d);
        for b in &self.blocks {
            let s = b.g0.nrows();
            let g = self.eval_block(b, x);
            let l = g.cholesky()?.l();
            let linv = l.solve_lower_triangular(&DMatrix::identity(s, s))?;
            let nk = b.coefs.len();
            let svec_len = s * (s + 1) / 2;
            let mut v = DMatrix::zeros(svec_len, nk);
            for (col, c) in b.coefs.iter().enumerate() {
                let w = match &c.sparse {
                    Some(nz) => {
                        let mut w = DMatrix::zeros(s, s);
                        for &(i, j, m) in nz {
                            let ai = linv.column(i);
                            let aj = linv.column(j);
                            w.ger(m, &ai, &aj, 1.0);
                            if i != j {
                                w.ger(m, &aj, &ai, 1.0);
                            }
                        }
                        w
                    }
                    None => &linv * &c.dense * linv.transpose(),
                };
                grad[c.var] -= w.trace();
                let mut r = 0;
                for q in 0..s {
                    for p in 0..=q {
                        v[(r, col)] = if p == q {
                            w[(p, q)]
                        } else {
                            std::f64::consts::SQRT_2 * 0.5 * (w[(p, q)] + w[(q, p)])
                        };
                        r += 1;
                    }
                }
            }
            let h = v.tr_mul(&v);
            for (a, ca) in b.coefs.iter().enumerate() {
                for (bb, cb) in b.coefs.iter().enumerate() {
                    hess[(ca.var, cb.var)] += h[(a, bb)];
                }
            }
        }
        if let Some(r) = self.bound {
            for k in 0..self.bounded {
                let (lo, hi) = (r + x[k], r - x[k]);
                grad[k] += 1.0 / hi - 1.0 / lo;
                hess[(k, k)] += 1.0 / (hi * hi) + 1.0 / (lo * lo);
            }
        }
        if grad.iter().chain(hess.iter()).any(|v: &f64| !v.is_finite()) {
            return None;
        }
        Some((grad, hess))
    }
}

/// Solves `H dx = rhs` with increasing diagonal regularization on failure.
fn regularized_solve(h: &DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    let scale = h
        .diagonal()
        .iter()
        .fold(0.0_f64, |m, v| m.max(v.abs()))
        .max(1e-300);
    let mut delta = 0.0;
    for _ in 0..12 {
        let mut hr = h.clone();
        for i in 0..hr.nrows() {
            hr[(i, i)] += delta;
        }
        if let Some(ch) = hr.cholesky() {
            let dx = ch.solve(rhs);
            if dx.iter().all(|v| v.is_finite()) {
                return Some(dx);
            }
        }
        delta = if delta == 0.0 {
            1e-14 * scale
        } else {
            delta * 100.0
        };
    }
    None
}

enum Center {
    Done { steps: usize, decrement: f64 },
    Failed(String),
}

/// Damped Newton on `t c·x + barrier(x)`; `stop` may end the loop early.
fn center(
    inner: &Inner,
    t: f64,
    x: &mut Vec<f64>,
    opts: &SolverOptions,
    mut stop: impl FnMut(&[f64]) -> bool,
) -> Center {
    let c = DVector::from_column_slice(&inner.c);
    let mut decrement = f64::INFINITY;
    let mut b0 = match inner.barrier(x) {
        Some(v) => v,
        None => return Center::Failed("iterate left the feasible domain".into()),
    };
    for step in 0..opts.max_newton {
        let Some((gb, h)) = inner.derivatives(x) else {
            return Center::Failed("non-finite barrier derivatives".into());
        };
        let g = &c * t + gb;
        let Some(dx) = regularized_solve(&h, &(-&g)) else {
            return Center::Failed("Newton system could not be solved".into());
        };
        let slope = g.dot(&dx);
        decrement = -slope;
        if !(decrement.is_finite()) {
            return Center::Failed("non-finite Newton decrement".into());
        }
        if decrement / 2.0 <= CENTER_TOL || slope >= 0.0 {
            return Center::Done {
                steps: step,
                decrement,
            };
        }
        let cdx = c.dot(&dx);
        let mut alpha = 1.0;
        let mut accepted = false;
        let mut trial = x.clone();
        while alpha > 1e-12 {
            for k in 0..x.len() {
                trial[k] = x[k] + alpha * dx[k];
            }
            if let Some(b1) = inner.barrier(&trial) {
                // difference computed without forming t c·x, which may be huge
                let change = t * alpha * cdx + (b1 - b0);
                if change <= opts.armijo * alpha * slope {
                    b0 = b1;
                    accepted = true;
                    break;
                }
            }
            alpha *= opts.backtrack;
        }
        if !accepted {
            return Center::Done {
                steps: step,
                decrement,
            };
        }
        std::mem::swap(x, &mut trial);
        if x.iter().any(|v| v.abs() > DIVERGENCE) {
            return Center::Failed("iterates diverge; the problem looks unbounded".into());
        }
        if stop(x) {
            return Center::Done {
                steps: step + 1,
                decrement,
            };
        }
    }
    Center::Done {
        steps: opts.max_newton,
        decrement,
    }
}

/// Barrier weight `t` that best balances the objective against the barrier gradient at `x`.
fn initial_t(inner: &Inner, x: &[f64]) -> f64 {
    let Some((g, h)) = inner.derivatives(x) else {
        return 1.0;
    };
    let c = DVector::from_column_slice(&inner.c);
    let (Some(hc), Some(hg)) = (regularized_solve(&h, &c), regularized_solve(&h, &g)) else {
        return 1.0;
    };
    let num = -c.dot(&hg);
    let den = c.dot(&hc);
    let t = if den > 0.0 { num / den } else { 1.0 };
    if t.is_finite() && t > 0.0 {
        t.clamp(1e-6, 1e8)
    } else {
        1.0
    }
}

struct Phase1 {
    feasible: bool,
    x: Vec<f64>,
    iterations: usize,
    newton: usize,
    failure: Option<String>,
}

fn run_phase1(
    inner: &Inner,
    start: &[f64],
    opts: &SolverOptions,
    log: &mut Vec<IterRecord>,
) -> Phase1 {
    let d = inner.dim;
    let mut x0 = start.to_vec();
    if let Some(r) = inner.bound {
        for v in &mut x0 {
            *v = v.clamp(-0.5 * r, 0.5 * r);
        }
    }
    let worst = inner
        .min_eigs(&x0)
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    if worst > 0.0 || inner.blocks.is_empty() {
        return Phase1 {
            feasible: true,
            x: x0,
            iterations: 0,
            newton: 0,
            failure: None,
        };
    }
    let radius = PHASE1_RADIUS * x0.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
    let p1 = inner.phase1(radius);
    let mut xs = x0;
    xs.push(worst - 1.0);
    let m = p1.barrier_weight();
    let mut t = initial_t(&p1, &xs);
    let mut newton = 0;
    for it in 0..opts.max_iter {
        let res = center(&p1, t, &mut xs, opts, |z| z[d] > 0.0);
        let (steps, decrement) = match res {
            Center::Done { steps, decrement } => (steps, decrement),
            Center::Failed(msg) => {
                return Phase1 {
                    feasible: false,
                    x: xs[..d].to_vec(),
                    iterations: it,
                    newton,
                    failure: Some(msg),
                }
            }
        };
        newton += steps;
        let s = xs[d];
        log.push(IterRecord {
            phase: 1,
            t,
            newton_steps: steps,
            objective: s,
            decrement,
        });
        if s > 0.0 {
            return Phase1 {
                feasible: true,
                x: xs[..d].to_vec(),
                iterations: it + 1,
                newton,
                failure: None,
            };
        }
        let gap = m / t;
        if s + gap < 0.0 || gap < opts.gap_tol * (1.0 + s.abs()) {
            return Phase1 {
                feasible: false,
                x: xs[..d].to_vec(),
                iterations: it + 1,
                newton,
                failure: None,
            };
        }
        t /= opts.barrier_factor;
    }
    Phase1 {
        feasible: false,
        x: xs[..d].to_vec(),
        iterations: opts.max_iter,
        newton,
        failure: Some("phase I hit the iteration limit".into()),
    }
}

fn finish(
    inner: &Inner,
    status: SdpStatus,
    x: Vec<f64>,
    iterations: usize,
    newton_steps: usize,
    log: Vec<IterRecord>,
    message: impl Into<String>,
) -> SdpSolution {
    SdpSolution {
        status,
        objective: inner.objective(&x),
        block_margins: inner.min_eigs(&x),
        x,
        iterations,
        newton_steps,
        log,
        message: message.into(),
    }
}

/// Finds a strictly feasible point by maximizing the smallest shifted eigenvalue.
///
/// A negative verdict is confirmed by a primal-dual feasibility solve: on badly
/// scaled problems the barrier path can stall far from the analytic center,
/// where its duality bound no longer proves infeasibility.
pub fn feasibility_phase1(prob: &LmiProblem, opts: &SolverOptions) -> (bool, Vec<f64>) {
    let inner = Inner::from_problem(prob, opts);
    let start = prob
        .initial
        .clone()
        .unwrap_or_else(|| vec![0.0; prob.dim()]);
    let mut log = Vec::new();
    let p = run_phase1(&inner, &start, opts, &mut log);
    if p.feasible {
        return (true, p.x);
    }
    let mut feas = prob.clone();
    feas.objective = vec![0.0; prob.dim()];
    let sol = super::pdip::solve(&feas, opts);
    if sol.x.len() == prob.dim() && prob.min_slack(&sol.x) > 0.0 {
        (true, sol.x)
    } else {
        (false, p.x)
    }
}

/// Minimizes `objective · x` over the blocks of `prob`.
pub fn solve(prob: &LmiProblem, opts: &SolverOptions) -> SdpSolution {
    let inner = Inner::from_problem(prob, opts);
    let d = prob.dim();
    let mut log = Vec::new();
    let start = prob.initial.clone().unwrap_or_else(|| vec![0.0; d]);

    if d == 0 {
        let ok = inner.min_eigs(&[]).iter().all(|v| *v >= -opts.feas_tol);
        let status = if ok {
            SdpStatus::Optimal
        } else {
            SdpStatus::Infeasible
        };
        return finish(&inner, status, Vec::new(), 0, 0, log, "no variables");
    }

    let p1 = run_phase1(&inner, &start, opts, &mut log);
    let mut iterations = p1.iterations;
    let mut newton = p1.newton;
    if let Some(msg) = p1.failure {
        let status = if msg.contains("iteration limit") {
            SdpStatus::MaxIterations
        } else {
            SdpStatus::NumericalFailure
        };
        return finish(&inner, status, p1.x, iterations, newton, log, msg);
    }
    if !p1.feasible {
        return finish(
            &inner,
            SdpStatus::Infeasible,
            p1.x,
            iterations,
            newton,
            log,
            "phase I: no strictly feasible point",
        );
    }
    let mut x = p1.x;
    if inner.c.iter().all(|v| *v == 0.0) {
        return finish(
            &inner,
            SdpStatus::Optimal,
            x,
            iterations,
            newton,
            log,
            "feasibility problem",
        );
    }

    let m = inner.barrier_weight();
    let mut t = initial_t(&inner, &x);
    for _ in 0..opts.max_iter {
        match center(&inner, t, &mut x, opts, |_| false) {
            Center::Done { steps, decrement } => {
                newton += steps;
                iterations += 1;
                let obj = inner.objective(&x);
                log.push(IterRecord {
                    phase: 2,
                    t,
                    newton_steps: steps,
                    objective: obj,
                    decrement,
                });
                if m / t < opts.gap_tol * (1.0 + obj.abs()) {
                    let worst = inner.min_eigs(&x).into_iter().fold(f64::INFINITY, f64::min);
                    let status = if worst >= -opts.feas_tol {
                        SdpStatus::Optimal
                    } else {
                        SdpStatus::NumericalFailure
                    };
                    return finish(
                        &inner,
                        status,
                        x,
                        iterations,
                        newton,
                        log,
                        "gap tolerance reached",
                    );
                }
            }
            Center::Failed(msg) => {
                return finish(
                    &inner,
                    SdpStatus::NumericalFailure,
                    x,
                    iterations,
                    newton,
                    log,
                    msg,
                );
            }
        }
        t /= opts.barrier_factor;
    }
    finish(
        &inner,
        SdpStatus::MaxIterations,
        x,
        iterations,
        newton,
        log,
        "iteration limit",
    )
}
