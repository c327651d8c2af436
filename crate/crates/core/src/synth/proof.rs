use nalgebra::DMatrix;

use super::cov::{
    balanced_completion, closed_loop_lyapunov, congruence_factors, extract_with, reverse_cov,
};
use super::{MatrixCompletion, SynthesisConfig, SynthesisResult};
use crate::error::Result;
use crate::linalg;
use crate::lmi::{transformed_closed_loop, FilterVars};
use crate::lti::StateSpace;
use crate::plant::{close_loop, select_channel, GeneralizedPlant};

/// Numerical cross-check of the congruence chain behind the synthesis
/// inequalities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProofCheck {
    /// Largest relative residual of `X_cl Π1 = Π2`, `Π2ᵀ A_cl Π1 = Ã`,
    /// `Π2ᵀ B_cl = B̃`, `C_cl Π1 = C̃` and `D_cl = D̃` over both channels, for
    /// the completion the filter was built with.
    pub identity_residual: f64,
    /// Largest eigenvalue of the diagonally scaled bounded-real matrix at `γ₀`
    /// (negative when the Lyapunov matrix certifies the H∞ bound).
    pub bounded_real: f64,
    /// Same for the minimum-gain matrix at the certified `ν`.
    pub minimum_gain: f64,
    /// Smallest eigenvalue of the diagonally scaled Lyapunov matrix.
    pub lyapunov_min: f64,
}

impl ProofCheck {
    pub fn holds(&self, identity_tol: f64) -> bool {
        self.identity_residual <= identity_tol
            && self.bounded_real < 0.0
            && self.minimum_gain < 0.0
            && self.lyapunov_min > 0.0
    }
}

fn rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}

/// `D M D` with `D = diag(|M_ii|^-½)`; same inertia, better scaled.
fn scaled(m: &DMatrix<f64>) -> DMatrix<f64> {
    let d: Vec<f64> = (0..m.nrows())
        .map(|i| {
            let v = m[(i, i)].abs();
            if v > 0.0 {
                1.0 / v.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    linalg::sym(&DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
        m[(i, j)] * d[i] * d[j]
    }))
}

fn filter_for(
    p: &GeneralizedPlant,
    vars: &FilterVars,
    comp: &MatrixCompletion,
) -> Result<StateSpace> {
    reverse_cov(&extract_with(vars, p, comp)?, p.d22())
}

fn identity_residual(
    ch: &GeneralizedPlant,
    vars: &FilterVars,
    comp: &MatrixCompletion,
    q: &StateSpace,
) -> Result<f64> {
    let cl = close_loop(ch, q)?;
    let t = transformed_closed_loop(ch, &vars.expr())?;
    let (pi1, pi2) = congruence_factors(vars, comp);
    let x = closed_loop_lyapunov(vars, comp)?;
    let res = [
        rel(&(&x * &pi1), &pi2),
        rel(&(pi2.transpose() * cl.a() * &pi1), &t.a.eval(&[])),
        rel(&(pi2.transpose() * cl.b()), &t.b.eval(&[])),
        rel(&(cl.c() * &pi1), &t.c.eval(&[])),
        rel(cl.d(), &t.d.eval(&[])),
    ];
    Ok(res.into_iter().fold(0.0, f64::max))
}

fn he(m: &DMatrix<f64>) -> DMatrix<f64> {
    m + m.transpose()
}

fn bounded_real(t: &StateSpace, x: &DMatrix<f64>, gamma: f64) -> DMatrix<f64> {
    let (a, b, c, d) = (t.a(), t.b(), t.c(), t.d());
    let (m, p) = (b.ncols(), c.nrows());
    linalg::blocks(&[
        vec![&he(&(x * a)), &(x * b), &c.transpose()],
        vec![
            &(b.transpose() * x),
            &(-DMatrix::identity(m, m) * (gamma * gamma)),
            &d.transpose(),
        ],
        vec![c, d, &-DMatrix::identity(p, p)],
    ])
}

fn minimum_gain(t: &StateSpace, x: &DMatrix<f64>, nu: f64) -> DMatrix<f64> {
    let (a, b, c, d) = (t.a(), t.b(), t.c(), t.d());
    let (n, m) = (a.nrows(), b.ncols());
    linalg::blocks(&[
        vec![
            &(he(&(x * a)) - c.transpose() * c),
            &(x * b - c.transpose() * d),
            &DMatrix::zeros(n, m),
        ],
        vec![
            &(b.transpose() * x - d.transpose() * c),
            &(-(d.transpose() * d)),
            &(DMatrix::identity(m, m) * nu),
        ],
        vec![
            &DMatrix::zeros(m, n),
            &(DMatrix::identity(m, m) * nu),
            &-DMatrix::identity(m, m),
        ],
    ])
}

/// Rebuilds the closed loop from the synthesis variables and evaluates the
/// analysis inequalities with the Lyapunov matrix implied by the completion.
///
/// The identities are checked for the completion stored in `result`; the
/// eigenvalue tests use [`balanced_completion`], which realizes the same
/// filter up to a similarity with a much better scaled `X_cl`.
pub fn proof_check(
    p: &GeneralizedPlant,
    cfg: &SynthesisConfig,
    result: &SynthesisResult,
) -> Result<ProofCheck> {
    let dist = select_channel(p, &p.input_selector(&cfg.disturbance_channel)?)?;
    let fault = select_channel(p, &p.input_selector(&cfg.fault_channel)?)?;
    let vars = &result.vars;
    let identity = identity_residual(&dist, vars, &result.completion, &result.filter)?.max(
        identity_residual(&fault, vars, &result.completion, &result.filter)?,
    );

    let comp = balanced_completion(vars)?;
    let q = filter_for(p, vars, &comp)?;
    let x = closed_loop_lyapunov(vars, &comp)?;
    let t_d = close_loop(&dist, &q)?;
    let t_f = close_loop(&fault, &q)?;
    Ok(ProofCheck {
        identity_residual: identity,
        bounded_real: linalg::max_eig_sym(&scaled(&bounded_real(&t_d, &x, cfg.gamma0))),
        minimum_gain: linalg::max_eig_sym(&scaled(&minimum_gain(&t_f, &x, result.nu_certified))),
        lyapunov_min: linalg::min_eig_sym(&scaled(&x)),
    })
}
