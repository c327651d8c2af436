//! H∞ norm, H- index and singular-value sweeps of a MIMO system.

use fdisynth::lti::norms::{
    hinf_norm_with_peak, hminus_index_with_location, sigma_max_curve, sigma_min_curve,
};
use fdisynth::lti::{FrequencyGrid, StateSpace, DEFAULT_NORM_TOL};
use nalgebra::{dmatrix, DMatrix};

fn main() -> fdisynth::Result<()> {
    // lightly damped 2x2 system with a full-rank feedthrough
    let sys = StateSpace::new(
        dmatrix![-0.2, 5.0, 0.0; -5.0, -0.2, 0.0; 0.0, 0.0, -1.0],
        dmatrix![1.0, 0.0; 0.0, 0.0; 0.0, 1.0],
        dmatrix![0.0, 1.0, 0.0; 0.0, 0.0, 2.0],
        DMatrix::identity(2, 2) * 0.5,
    )?;
    let (hinf, w_peak) = hinf_norm_with_peak(&sys, DEFAULT_NORM_TOL)?;
    let (hminus, w_min) = hminus_index_with_location(&sys, DEFAULT_NORM_TOL)?;
    println!("||G||_inf = {hinf:.6} at w = {w_peak:.4}");
    println!("||G||_-   = {hminus:.6} at w = {w_min:.4}");

    let grid = FrequencyGrid::log_spaced(1e-2, 1e2, 9, false)?;
    let smax = sigma_max_curve(&sys, grid.points())?;
    let smin = sigma_min_curve(&sys, grid.points())?;
    println!("{:>10} {:>10} {:>10}", "w", "sigma_max", "sigma_min");
    for ((w, a), b) in grid.points().iter().zip(&smax).zip(&smin) {
        println!("{w:>10.4} {a:>10.5} {b:>10.5}");
    }

    // norms scale with the system
    let doubled = sys.scale(2.0);
    println!(
        "scaled by 2: ||2G||_inf = {:.6}, ||2G||_- = {:.6}",
        hinf_norm_with_peak(&doubled, DEFAULT_NORM_TOL)?.0,
        hminus_index_with_location(&doubled, DEFAULT_NORM_TOL)?.0
    );
    Ok(())
}
