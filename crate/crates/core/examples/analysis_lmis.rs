//! Bounded-real and minimum-gain LMIs as analysis tools, checked against the
//! frequency-domain norms.

use fdisynth::lmi::{brl_analysis_lmi, mingain_analysis_lmi};
use fdisynth::lti::norms::hminus_index;
use fdisynth::lti::{hinf_norm, StateSpace, DEFAULT_NORM_TOL};
use fdisynth::sdp::{feasibility_phase1, SolverOptions};
use nalgebra::dmatrix;

fn feasible(prob: &fdisynth::sdp::LmiProblem) -> bool {
    feasibility_phase1(prob, &SolverOptions::default()).0
}

/// Smallest `γ` for which the bounded-real LMI is feasible, by bisection.
fn brl_level(sys: &StateSpace) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    while !feasible(&brl_analysis_lmi(sys, hi)) {
        hi *= 2.0;
    }
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if feasible(&brl_analysis_lmi(sys, mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

fn main() -> fdisynth::Result<()> {
    let g = StateSpace::new(
        dmatrix![-1.0, 2.0; 0.0, -3.0],
        dmatrix![1.0; 1.0],
        dmatrix![1.0, 0.0],
        dmatrix![0.5],
    )?;
    println!("1/(s+1) with gamma = 2 feasible: {}", {
        let lag = StateSpace::new(dmatrix![-1.0], dmatrix![1.0], dmatrix![1.0], dmatrix![0.0])?;
        feasible(&brl_analysis_lmi(&lag, 2.0))
    });
    println!(
        "||G||_inf (Hamiltonian) = {:.6}",
        hinf_norm(&g, DEFAULT_NORM_TOL)?
    );
    println!("||G||_inf (LMI boundary) = {:.6}", brl_level(&g));

    let hm = hminus_index(&g, DEFAULT_NORM_TOL)?;
    println!("||G||_- (sweep) = {hm:.6}");
    for nu in [0.1, 0.2, 0.3, 0.4, 0.5] {
        println!(
            "  min-gain LMI at nu = {nu}: feasible = {}",
            feasible(&mingain_analysis_lmi(&g, nu))
        );
    }
    Ok(())
}
