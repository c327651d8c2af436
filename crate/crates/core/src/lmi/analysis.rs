use nalgebra::DMatrix;

use super::{AffineMat, LmiBlock, Sense, VarSpace};
use crate::lti::StateSpace;
use crate::sdp::LmiProblem;

/// Bounded-real-lemma feasibility problem: feasible iff `‖G‖∞ < γ` (up to the margin).
///
/// Variables: `X` (symmetric, n×n). Blocks: `X ≻ 0` and
/// `[XA + AᵀX, XB, Cᵀ; *, -γ²I, Dᵀ; *, *, -I] ≺ 0`.
pub fn brl_analysis_lmi(sys: &StateSpace, gamma: f64) -> LmiProblem {
    let (n, m, p) = (sys.n(), sys.inputs(), sys.outputs());
    let mut vars = VarSpace::new();
    let xid = vars.symmetric("X", n);
    let x = vars.expr(xid);
    let a = sys.a();
    let k11 = x.rmul(a).he();
    let k12 = x.rmul(sys.b());
    let k13 = AffineMat::constant(sys.c().transpose());
    let k22 = AffineMat::constant(DMatrix::identity(m, m) * -(gamma * gamma));
    let k23 = AffineMat::constant(sys.d().transpose());
    let k33 = AffineMat::constant(-DMatrix::identity(p, p));
    let big = AffineMat::blocks(&[
        vec![&k11, &k12, &k13],
        vec![&k12.transpose(), &k22, &k23],
        vec![&k13.transpose(), &k23.transpose(), &k33],
    ]);
    let mut prob = LmiProblem::new(vars);
    if n > 0 {
        prob.push(LmiBlock::new("X > 0", x, Sense::Positive, true));
    }
    prob.push(LmiBlock::new("bounded real", big, Sense::Negative, true));
    prob
}

/// Minimum-gain-lemma feasibility problem: feasibility is sufficient for `‖G‖− ≥ ν`.
///
/// Variables: `X` (symmetric, n×n). Blocks: `X ⪰ 0` and
/// `[XA + AᵀX - CᵀC, XB - CᵀD, 0; *, -DᵀD, νI; *, *, -I] ≺ 0`.
pub fn mingain_analysis_lmi(sys: &StateSpace, nu: f64) -> LmiProblem {
    let (n, m) = (sys.n(), sys.inputs());
    let mut vars = VarSpace::new();
    let xid = vars.symmetric("X", n);
    let x = vars.expr(xid);
    let (a, b, c, d) = (sys.a(), sys.b(), sys.c(), sys.d());
    let k11 = x.rmul(a).he().sub(&AffineMat::constant(c.transpose() * c));
    let k12 = x.rmul(b).sub(&AffineMat::constant(c.transpose() * d));
    let k13 = AffineMat::zeros(n, m);
    let k22 = AffineMat::constant(-(d.transpose() * d));
    let k23 = AffineMat::constant(DMatrix::identity(m, m) * nu);
    let k33 = AffineMat::constant(-DMatrix::identity(m, m));
    let big = AffineMat::blocks(&[
        vec![&k11, &k12, &k13],
        vec![&k12.transpose(), &k22, &k23],
        vec![&k13.transpose(), &k23.transpose(), &k33],
    ]);
    let mut prob = LmiProblem::new(vars);
    if n > 0 {
        prob.push(LmiBlock::new("X >= 0", x, Sense::Positive, false));
    }
    prob.push(LmiBlock::new("minimum gain", big, Sense::Negative, true));
    prob
}
