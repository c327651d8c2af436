//! The embedded SDP solvers on problems with known answers.

mod common;

use common::{random_matrix, random_stable, rng};
use fdisynth::lmi::{brl_analysis_lmi, AffineMat, LmiBlock, Sense, VarSpace};
use fdisynth::lti::StateSpace;
use fdisynth::sdp::{self, feasibility_phase1, LmiProblem, SdpStatus, SolverOptions};
use nalgebra::{dmatrix, DMatrix};
use rand::Rng;

fn lambda_max_problem(m: &DMatrix<f64>) -> LmiProblem {
    let k = m.nrows();
    let mut vars = VarSpace::new();
    let t = vars.scalar("t");
    let f = AffineMat::from_parts(
        -m.clone(),
        [(vars.info(t).offset, DMatrix::identity(k, k))].into(),
    );
    let mut prob = LmiProblem::new(vars);
    prob.push(LmiBlock::new("tI - M", f, Sense::Positive, false));
    prob.minimize_scalar(t, 1.0);
    prob
}

fn feasible(prob: &LmiProblem) -> bool {
    feasibility_phase1(prob, &SolverOptions::default()).0
}

#[test]
fn lambda_max_on_random_symmetric_matrices() {
    let mut r = rng(21);
    let opts = SolverOptions::default();
    for _ in 0..30 {
        let k = r.gen_range(1..=20);
        let g = random_matrix(&mut r, k, k) * 3.0;
        let m = (&g + g.transpose()) * 0.5;
        let exact = m.clone().symmetric_eigen().eigenvalues.max();
        let prob = lambda_max_problem(&m);
        for sol in [sdp::solve(&prob, &opts), sdp::solve_barrier(&prob, &opts)] {
            assert_eq!(sol.status, SdpStatus::Optimal, "{}", sol.message);
            assert!(
                (sol.objective - exact).abs() <= 1e-6 * (1.0 + exact.abs()),
                "{} vs {exact}",
                sol.objective
            );
        }
    }
}

#[test]
fn scalar_lyapunov_inequality() {
    for (a, expect) in [(-1.0, true), (1.0, false)] {
        let mut vars = VarSpace::new();
        let pid = vars.scalar("P");
        let p = vars.expr(pid);
        let mut prob = LmiProblem::new(vars);
        prob.push(LmiBlock::new("P > 0", p.clone(), Sense::Positive, true));
        prob.push(LmiBlock::new(
            "2aP < 0",
            p.scale(2.0 * a),
            Sense::Negative,
            true,
        ));
        assert_eq!(feasible(&prob), expect, "a = {a}");
    }
}

#[test]
fn correlation_bound_is_one() {
    let mut vars = VarSpace::new();
    let x = vars.scalar("x");
    let f = AffineMat::from_parts(
        DMatrix::identity(2, 2),
        [(vars.info(x).offset, dmatrix![0.0, 1.0; 1.0, 0.0])].into(),
    );
    let mut prob = LmiProblem::new(vars);
    prob.push(LmiBlock::new("correlation", f, Sense::Positive, false));
    prob.minimize_scalar(x, -1.0);
    let opts = SolverOptions::default();
    for sol in [sdp::solve(&prob, &opts), sdp::solve_barrier(&prob, &opts)] {
        assert!((sol.x[0] - 1.0).abs() <= 1e-6, "x = {}", sol.x[0]);
    }
}

#[test]
fn phase_one_cases() {
    let (ok, x) = feasibility_phase1(&LmiProblem::new(VarSpace::new()), &SolverOptions::default());
    assert!(ok && x.is_empty());

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
    assert!(!feasible(&prob));

    let lag = StateSpace::new(dmatrix![-1.0], dmatrix![1.0], dmatrix![1.0], dmatrix![0.0]).unwrap();
    let brl = brl_analysis_lmi(&lag, 2.0);
    let (ok, x) = feasibility_phase1(&brl, &SolverOptions::default());
    assert!(ok);
    assert!(brl.min_slack(&x) > 0.0);
    assert!(!feasible(&brl_analysis_lmi(&lag, 0.9)));
}

#[test]
fn bounded_real_feasibility_is_monotone_in_gamma() {
    let mut r = rng(22);
    for _ in 0..5 {
        let sys = random_stable(&mut r, 3, 2, 2);
        let verdicts: Vec<bool> = (1..=30)
            .map(|k| feasible(&brl_analysis_lmi(&sys, 0.25 * k as f64)))
            .collect();
        let first = verdicts
            .iter()
            .position(|&v| v)
            .expect("large gamma is feasible");
        assert!(verdicts[first..].iter().all(|&v| v), "{verdicts:?}");
    }
}

#[test]
fn iterate_logs_are_reproducible() {
    let mut r = rng(23);
    let m = random_matrix(&mut r, 10, 10);
    let prob = lambda_max_problem(&(&m + m.transpose()));
    let opts = SolverOptions::default();
    let bits = |s: &sdp::SdpSolution| -> Vec<u64> {
        s.log
            .iter()
            .flat_map(|l| {
                [
                    l.t.to_bits(),
                    l.objective.to_bits(),
                    l.decrement.to_bits(),
                    l.newton_steps as u64,
                ]
            })
            .chain(s.x.iter().map(|v| v.to_bits()))
            .collect()
    };
    assert_eq!(
        bits(&sdp::solve(&prob, &opts)),
        bits(&sdp::solve(&prob, &opts))
    );
    assert_eq!(
        bits(&sdp::solve_barrier(&prob, &opts)),
        bits(&sdp::solve_barrier(&prob, &opts))
    );
}
