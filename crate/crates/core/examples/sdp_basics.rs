//! The embedded SDP solvers on small problems: eigenvalue bounds, a correlation
//! bound, feasibility and the sparse dump format.

use fdisynth::lmi::{AffineMat, LmiBlock, Sense, VarSpace};
use fdisynth::sdp::{self, feasibility_phase1, LmiProblem, SolverOptions};
use nalgebra::{dmatrix, DMatrix};

fn main() {
    let opts = SolverOptions::default();

    // λmax(M) = min t s.t. tI - M ⪰ 0
    let m = dmatrix![2.0, 1.0, 0.0; 1.0, 3.0, 1.0; 0.0, 1.0, 1.0];
    let mut vars = VarSpace::new();
    let t = vars.scalar("t");
    let f = AffineMat::from_parts(
        -m.clone(),
        [(vars.info(t).offset, DMatrix::identity(3, 3))].into(),
    );
    let mut prob = LmiProblem::new(vars);
    prob.push(LmiBlock::new("tI - M", f, Sense::Positive, false));
    prob.minimize_scalar(t, 1.0);
    let pd = sdp::solve(&prob, &opts);
    let barrier = sdp::solve_barrier(&prob, &opts);
    let exact = m.symmetric_eigen().eigenvalues.max();
    println!(
        "lambda_max: exact {exact:.9}, primal-dual {:.9} ({} iterations), barrier {:.9}",
        pd.objective, pd.iterations, barrier.objective
    );

    // largest correlation x in [[1, x], [x, 1]] ⪰ 0
    let mut vars = VarSpace::new();
    let x = vars.scalar("x");
    let off = dmatrix![0.0, 1.0; 1.0, 0.0];
    let f = AffineMat::from_parts(DMatrix::identity(2, 2), [(vars.info(x).offset, off)].into());
    let mut prob = LmiProblem::new(vars);
    prob.push(LmiBlock::new("correlation", f, Sense::Positive, false));
    prob.minimize_scalar(x, -1.0);
    let sol = sdp::solve(&prob, &opts);
    println!("correlation bound: x = {:.8} ({:?})", sol.x[0], sol.status);

    // x ≥ 1 and -x ≥ 0 contradict each other
    let mut vars = VarSpace::new();
    let x = vars.scalar("x");
    let e = vars.expr(x);
    let mut prob = LmiProblem::new(vars);
    prob.push(LmiBlock::new(
        "x >= 1",
        e.sub(&AffineMat::identity(1)),
        Sense::Positive,
        false,
    ));
    prob.push(LmiBlock::new("-x >= 0", e.neg(), Sense::Positive, false));
    let (ok, _) = feasibility_phase1(&prob, &opts);
    println!("x >= 1 and x <= 0 feasible: {ok}");
    println!("{}", prob.dump_string());
}
