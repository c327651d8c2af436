//! Mixed H-/H∞ residual-filter synthesis by alternating convex steps.

mod cov;
mod proof;
mod verify;

pub use cov::{
    balanced_completion, closed_loop_lyapunov, complete, complete_and_extract, congruence_factors,
    extract_with, forward_cov, reverse_cov, MatrixCompletion, TransformedFilterVars,
    COMPLETION_TOL, RECOVERY_TOL,
};
pub use proof::{proof_check, ProofCheck};
pub use verify::{post_scale_update, verify, verify_with_tol, Sweep, Verification};

use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::lmi::{
    build_coupling_lmi, build_m_lmi, m_block, n_block, AffineMat, FilterVarIds, FilterVars,
    LmiBlock, Sense, SlackVarIds, SlackVars, VarId, VarSpace, STRICT_EPS,
};
use crate::lti::{StateSpace, DEFAULT_NORM_TOL};
use crate::plant::{
    check_hminus_feasibility, select_channel, FeasibilityDiagnostic, GeneralizedPlant,
};
use crate::sdp::{LmiProblem, PrimalDualSolver, SdpSolution, SdpSolver, SdpStatus, SolverOptions};

/// Box bound on every decision variable during synthesis.
pub const SYNTH_VARIABLE_BOUND: f64 = 1e6;
/// Halvings of the slack `𝒳` tried when the first filter step is infeasible.
pub const STEP1_HALVINGS: i32 = 12;
/// Default of [`SynthesisConfig::report_tol`].
pub const REPORT_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisConfig {
    /// Fixed H∞ level on the disturbance channel.
    pub gamma0: f64,
    /// Stop once `|ν²_k - ν²_{k-1}| <= mu`.
    pub mu: f64,
    pub max_outer_iters: usize,
    pub disturbance_channel: String,
    pub fault_channel: String,
    /// One Lyapunov pair for both channels. When off, the H- constraint gets its
    /// own `(X1, Y1)` and coupling block while `(An, Bn, Cn, Dn)` stay shared;
    /// the filter comes from the H∞ pair and only the measured `ν` is meaningful.
    pub shared_lyapunov: bool,
    /// Keep the (constant) H∞ block in the slack step as well.
    pub slack_step_with_m: bool,
    pub solver: SolverOptions,
    /// Relative tolerance of the a-posteriori H∞ / H- computations.
    pub norm_tol: f64,
    /// Relative gap between certified and measured `ν` beyond which the measured one is reported.
    pub report_tol: f64,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        Self {
            gamma0: 1.0,
            mu: 1e-4,
            max_outer_iters: 30,
            disturbance_channel: "d".into(),
            fault_channel: "f".into(),
            shared_lyapunov: true,
            slack_step_with_m: false,
            solver: SolverOptions {
                variable_bound: Some(SYNTH_VARIABLE_BOUND),
                ..SolverOptions::default()
            },
            norm_tol: DEFAULT_NORM_TOL,
            report_tol: REPORT_TOL,
        }
    }
}

impl SynthesisConfig {
    pub fn with_gamma0(gamma0: f64) -> Self {
        Self {
            gamma0,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthesisStatus {
    Converged,
    MaxIterations,
}

/// One convex half-step of the alternation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfStep {
    pub iteration: usize,
    /// 1: filter variables, 2: slacks.
    pub step: u8,
    pub nu2: f64,
    pub solver_iterations: usize,
    pub newton_steps: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct SynthesisResult {
    pub filter: StateSpace,
    pub status: SynthesisStatus,
    pub iterations: usize,
    pub gamma0: f64,
    /// `ν` proven by the final feasible point.
    pub nu_certified: f64,
    /// `‖T_εf‖-` of the reconstructed filter.
    pub nu_measured: f64,
    /// Certified value, or the measured one when they disagree beyond `report_tol`.
    pub nu_reported: f64,
    pub hinf_measured: f64,
    pub verification: Verification,
    pub history: Vec<HalfStep>,
    pub vars: FilterVars,
    /// Separate H- pair when `shared_lyapunov` is off.
    pub fault_vars: Option<FilterVars>,
    pub slacks: SlackVars,
    pub completion: MatrixCompletion,
    /// Smallest distance from singularity of the M, N and coupling blocks at the final point.
    pub certificate_margin: f64,
    /// Settings and tolerances the result was computed with.
    pub config: SynthesisConfig,
}

impl SynthesisResult {
    /// `ν / γ₀` from the certificate.
    pub fn j_certified(&self) -> f64 {
        self.nu_certified / self.gamma0
    }

    /// Measured `‖T_εf‖- / ‖T_εd‖∞`.
    pub fn j_measured(&self) -> f64 {
        self.verification.ratio
    }

    /// Values of `ν²` after every slack step.
    pub fn nu2_trace(&self) -> Vec<f64> {
        self.history
            .iter()
            .filter(|h| h.step == 2)
            .map(|h| h.nu2)
            .collect()
    }
}

/// Variable layout of the filter step.
pub struct FilterStep {
    pub problem: LmiProblem,
    pub ids: FilterVarIds,
    pub fault_ids: Option<FilterVarIds>,
    pub nu2: VarId,
}

/// Channel-restricted plants with a common strictness margin for `N`.
struct Channels {
    full: GeneralizedPlant,
    dist: GeneralizedPlant,
    fault: GeneralizedPlant,
    n_margin: f64,
}

impl Channels {
    fn new(p: &GeneralizedPlant, cfg: &SynthesisConfig) -> Result<Self> {
        let dist = select_channel(p, &p.input_selector(&cfg.disturbance_channel)?)?;
        let fault = select_channel(p, &p.input_selector(&cfg.fault_channel)?)?;
        let m = fault.matrices();
        let scale = [&m.a, &m.b1, &m.b2, &m.c1, &m.c2, &m.d11, &m.d12, &m.d21]
            .iter()
            .map(|x| linalg::max_abs(x))
            .fold(1.0, f64::max);
        Ok(Self {
            full: p.clone(),
            dist,
            fault,
            n_margin: STRICT_EPS * scale,
        })
    }
}

fn nu2_expr(vars: &VarSpace, id: VarId) -> AffineMat {
    vars.expr(id)
}

fn n_lmi(f: AffineMat, margin: f64) -> LmiBlock {
    LmiBlock::new("N", f, Sense::Negative, true).with_margin(margin)
}

/// Filter step: maximize `ν²` over the filter variables for fixed slacks.
pub fn build_filter_step(
    p: &GeneralizedPlant,
    cfg: &SynthesisConfig,
    slacks: &SlackVars,
) -> Result<FilterStep> {
    let ch = Channels::new(p, cfg)?;
    filter_step(&ch, cfg, slacks)
}

fn filter_step(ch: &Channels, cfg: &SynthesisConfig, slacks: &SlackVars) -> Result<FilterStep> {
    let p = &ch.full;
    let mut vars = VarSpace::new();
    let ids = FilterVarIds::declare(&mut vars, p.n(), p.m_u(), p.p_y(), "");
    // a separate Lyapunov pair for N; the filter variables stay shared
    let fault_ids = (!cfg.shared_lyapunov).then(|| FilterVarIds {
        x1: vars.symmetric("X1f", p.n()),
        y1: vars.symmetric("Y1f", p.n()),
        ..ids
    });
    let nu2 = vars.scalar("nu2");
    let f = ids.expr(&vars);
    let ff = fault_ids
        .as_ref()
        .map(|i| i.expr(&vars))
        .unwrap_or_else(|| f.clone());
    let nu = nu2_expr(&vars, nu2);
    let m = build_m_lmi(&ch.dist, &f, cfg.gamma0)?;
    let n = n_lmi(n_block(&ch.fault, &ff, &slacks.expr(), &nu)?, ch.n_margin);
    let mut problem = LmiProblem::new(vars);
    problem.push(m);
    problem.push(n);
    problem.push(build_coupling_lmi(&f.x1, &f.y1));
    if fault_ids.is_some() {
        let mut c = build_coupling_lmi(&ff.x1, &ff.y1);
        c.name = "coupling (fault)".into();
        problem.push(c);
    }
    problem.minimize_scalar(nu2, -1.0);
    Ok(FilterStep {
        problem,
        ids,
        fault_ids,
        nu2,
    })
}

fn slack_step(
    ch: &Channels,
    cfg: &SynthesisConfig,
    vars_m: &FilterVars,
    vars_n: &FilterVars,
) -> Result<(LmiProblem, SlackVarIds, VarId)> {
    let p = &ch.fault;
    let mut space = VarSpace::new();
    let ids = SlackVarIds::declare(&mut space, p.p_z(), p.m_w(), p.n());
    let nu2 = space.scalar("nu2");
    let s = ids.expr(&space);
    let nu = nu2_expr(&space, nu2);
    let n = n_lmi(n_block(p, &vars_n.expr(), &s, &nu)?, ch.n_margin);
    let mut problem = LmiProblem::new(space);
    problem.push(n);
    if cfg.slack_step_with_m {
        problem.push(LmiBlock::new(
            "M",
            m_block(&ch.dist, &vars_m.expr(), cfg.gamma0)?,
            Sense::Negative,
            true,
        ));
    }
    problem.minimize_scalar(nu2, -1.0);
    Ok((problem, ids, nu2))
}

/// Every block strictly definite with at least half of its margin.
fn certified(blocks: &[LmiBlock], x: &[f64]) -> bool {
    blocks.iter().all(|b| b.slack(x) > -0.5 * b.margin)
}

fn accepted(prob: &LmiProblem, sol: &SdpSolution) -> bool {
    matches!(sol.status, SdpStatus::Optimal | SdpStatus::MaxIterations)
        && sol.x.len() == prob.dim()
        && certified(&prob.blocks, &sol.x)
}

fn record(iteration: usize, step: u8, nu2: f64, sol: &SdpSolution, start: Instant) -> HalfStep {
    HalfStep {
        iteration,
        step,
        nu2,
        solver_iterations: sol.iterations,
        newton_steps: sol.newton_steps,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Runs the alternation with the built-in primal-dual solver.
pub fn synthesize(p: &GeneralizedPlant, cfg: &SynthesisConfig) -> Result<SynthesisResult> {
    let solver = PrimalDualSolver {
        options: cfg.solver.clone(),
    };
    synthesize_with(p, cfg, &solver)
}

/// Runs the alternation with any [`SdpSolver`].
///
/// Each iteration maximizes `ν²` first over the filter variables (slacks
/// fixed, with the H∞, H- and coupling constraints) and then over the slacks
/// (filter variables fixed). `ν²` never decreases from one half-step to the
/// next because each starts from the previous optimum.
pub fn synthesize_with(
    p: &GeneralizedPlant,
    cfg: &SynthesisConfig,
    solver: &dyn SdpSolver,
) -> Result<SynthesisResult> {
    if !(cfg.gamma0 > 0.0 && cfg.gamma0.is_finite()) {
        return Err(Error::InvalidProblem(format!(
            "gamma0 must be positive, got {}",
            cfg.gamma0
        )));
    }
    if let FeasibilityDiagnostic::StructurallyZero { message } =
        check_hminus_feasibility(p, &cfg.fault_channel)?
    {
        return Err(Error::InfeasibleAtStep1(message));
    }
    let ch = Channels::new(p, cfg)?;
    let mut slacks = SlackVars::initial(ch.fault.p_z(), ch.fault.m_w(), ch.fault.n());
    let mut history = Vec::new();
    let mut x_prev: Option<Vec<f64>> = None;
    let mut last_nu2: Option<f64> = None;
    let mut status = SynthesisStatus::MaxIterations;
    let mut result_vars = None;
    let mut iterations = 0;

    for k in 0..cfg.max_outer_iters.max(1) {
        iterations = k + 1;
        // step 1
        let start = Instant::now();
        let mut step = filter_step(&ch, cfg, &slacks)?;
        if let (Some(x), Some(nu2)) = (&x_prev, last_nu2) {
            let mut x = x.clone();
            let off = step.problem.vars.info(step.nu2).offset;
            x[off] = nu2;
            step.problem.initial = Some(x);
        }
        let mut sol = solver.solve(&step.problem);
        if k == 0 {
            // 𝒳 scaled to the fault feedthrough, then halved: 2 Re T_εf - 𝒳² ≥ ν²
            // can only hold when 𝒳 is of the order of the attainable fault gain
            let base = slacks.x.clone();
            let mut scales = std::iter::once(retry_scale(&ch.fault))
                .chain((1..=STEP1_HALVINGS).map(|h| 0.5_f64.powi(h)))
                .filter(|&s| s != 1.0);
            while !(accepted(&step.problem, &sol) && sol_nu2(&step, &sol) > 0.0) {
                let Some(scale) = scales.next() else { break };
                slacks.x = &base * scale;
                step = filter_step(&ch, cfg, &slacks)?;
                sol = solver.solve(&step.problem);
            }
        }
        if !accepted(&step.problem, &sol) || !(sol_nu2(&step, &sol) > 0.0) {
            if k == 0 {
                return Err(Error::InfeasibleAtStep1(format!(
                    "no filter reaches gamma0 = {} with a positive minimum gain ({:?}: {})",
                    cfg.gamma0, sol.status, sol.message
                )));
            }
            // keep the previous certified point
            break;
        }
        let mut x1 = sol.x.clone();
        let mut nu2_1 = sol_nu2(&step, &sol);
        // the previous point stays feasible; keep it if the solver came back lower
        if let (Some(prev), Some(init)) = (last_nu2, step.problem.initial.as_ref()) {
            if nu2_1 < prev && certified(&step.problem.blocks, init) {
                x1 = init.clone();
                nu2_1 = prev;
            }
        }
        history.push(record(k, 1, nu2_1, &sol, start));
        let vars = step.ids.value(&step.problem.vars, &x1);
        let fault_vars = step
            .fault_ids
            .as_ref()
            .map(|i| i.value(&step.problem.vars, &x1));

        // step 2
        let start = Instant::now();
        let vn = fault_vars.as_ref().unwrap_or(&vars);
        let (mut prob2, ids2, nu2_id) = slack_step(&ch, cfg, &vars, vn)?;
        let mut x0 = vec![0.0; prob2.dim()];
        ids2.set(&prob2.vars, &slacks, &mut x0);
        prob2
            .vars
            .set(nu2_id, &DMatrix::from_element(1, 1, nu2_1), &mut x0);
        prob2.initial = Some(x0);
        let sol2 = solver.solve(&prob2);
        let nu2_2 = if accepted(&prob2, &sol2) {
            let v = prob2.vars.scalar_value(nu2_id, &sol2.x);
            if v >= nu2_1 {
                slacks = ids2.value(&prob2.vars, &sol2.x);
                v
            } else {
                nu2_1
            }
        } else {
            nu2_1
        };
        history.push(record(k, 2, nu2_2, &sol2, start));

        let mut x = x1;
        step.problem
            .vars
            .set(step.nu2, &DMatrix::from_element(1, 1, nu2_2), &mut x);
        x_prev = Some(x);
        result_vars = Some((vars, fault_vars, nu2_2));
        let done = last_nu2.is_some_and(|prev| (nu2_2 - prev).abs() <= cfg.mu);
        last_nu2 = Some(nu2_2);
        if done {
            status = SynthesisStatus::Converged;
            break;
        }
    }

    let (vars, fault_vars, nu2) = result_vars.expect("first iteration either succeeds or returns");
    let x_final = x_prev.expect("set together with result_vars");
    let cert = filter_step(&ch, cfg, &slacks)?;
    let blocks = &cert.problem.blocks;
    if !certified(blocks, &x_final) {
        let detail: Vec<String> = blocks
            .iter()
            .map(|b| {
                format!(
                    "{} slack {:.3e} (margin {:.1e})",
                    b.name,
                    b.slack(&x_final),
                    b.margin
                )
            })
            .collect();
        return Err(Error::Solver(format!(
            "the final point does not satisfy the synthesis inequalities: {}",
            detail.join(", ")
        )));
    }
    let margin = blocks
        .iter()
        .map(|b| b.slack(&x_final) + b.margin)
        .fold(f64::INFINITY, f64::min);
    let (t, completion) = complete_and_extract(&vars, &ch.full)?;
    let filter = reverse_cov(&t, ch.full.d22())?;
    let verification = verify_with_tol(
        &ch.full,
        &filter,
        &cfg.fault_channel,
        &cfg.disturbance_channel,
        cfg.norm_tol,
    )?;
    let nu_certified = nu2.sqrt();
    let nu_measured = verification.hminus_fault;
    let nu_reported =
        if (nu_measured - nu_certified).abs() > cfg.report_tol * nu_certified.max(1e-12) {
            nu_measured
        } else {
            nu_certified
        };
    Ok(SynthesisResult {
        filter,
        status,
        iterations,
        gamma0: cfg.gamma0,
        nu_certified,
        nu_measured,
        nu_reported,
        hinf_measured: verification.hinf_disturbance,
        verification,
        history,
        vars,
        fault_vars,
        slacks,
        completion,
        certificate_margin: margin,
        config: cfg.clone(),
    })
}

/// `σ̲([D11; D21])` of the fault channel, or 1 when that path has no feedthrough.
fn retry_scale(fault: &GeneralizedPlant) -> f64 {
    let d = linalg::vstack(fault.d11(), fault.d21());
    let s = linalg::sigma_min_gain_real(&d);
    if s > STRICT_EPS {
        s
    } else {
        1.0
    }
}

fn sol_nu2(step: &FilterStep, sol: &SdpSolution) -> f64 {
    if sol.x.len() != step.problem.dim() {
        return f64::NAN;
    }
    step.problem.vars.scalar_value(step.nu2, &sol.x)
}
