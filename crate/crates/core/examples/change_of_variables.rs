//! The filter substitution that makes the closed loop affine, and its inverse.

use fdisynth::lti::StateSpace;
use fdisynth::synth::{forward_cov, reverse_cov};
use nalgebra::dmatrix;

fn main() -> fdisynth::Result<()> {
    let q = StateSpace::new(
        dmatrix![-1.0, 0.4; 0.0, -3.0],
        dmatrix![1.0, 0.0; 0.5, 2.0],
        dmatrix![1.0, -1.0],
        dmatrix![0.7, 0.2],
    )?;
    let d22 = dmatrix![0.5; -0.25];
    let t = forward_cov(&q, &d22)?;
    println!("Dc2 = {}", t.dc2);
    let back = reverse_cov(&t, &d22)?;
    let err = [
        (back.a() - q.a()).amax(),
        (back.b() - q.b()).amax(),
        (back.c() - q.c()).amax(),
        (back.d() - q.d()).amax(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    println!("round trip error {err:.2e}");

    // I + Dc2 D22 singular: no filter corresponds to these variables
    let mut bad = t.clone();
    bad.dc2 = dmatrix![-2.0, 0.0];
    println!("singular case: {:?}", reverse_cov(&bad, &d22).err());
    Ok(())
}
