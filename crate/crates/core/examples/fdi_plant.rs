//! Build the generalized plant of a feedback loop with shaped disturbance and
//! fault inputs, and close it with a trial filter.

use fdisynth::lti::norms::hminus_index;
use fdisynth::lti::{hinf_norm, RationalTF, StateSpace, DEFAULT_NORM_TOL};
use fdisynth::plant::{check_hminus_feasibility, close_loop, select_channel, FdiLoop};
use nalgebra::dmatrix;

fn main() -> fdisynth::Result<()> {
    let l = FdiLoop {
        g: RationalTF::zpk(&[-25.0, -15.0, -5.0], &[-40.0, -10.0, -3.0], 1.0),
        c: RationalTF::new([15.0, 25.0], [1.0])?,
        gd: RationalTF::new(
            [1.0, 62.8, 1392.0, 14300.0, 48700.0],
            [1.0, 332.0, 2724.0, 81000.0, 122000.0],
        )?,
        gf: RationalTF::new(
            [0.92, 43.25, 1911.0, 5976.0, 17500.0],
            [1.0, 13.19, 3966.0, 2605.0, 39000.0],
        )?,
    };
    let p = l.plant()?;
    println!(
        "n = {}, inputs w = {}, filter outputs = {}, residuals = {}, measurements = {}",
        p.n(),
        p.m_w(),
        p.m_u(),
        p.p_z(),
        p.p_y()
    );
    for ch in p.w_channels() {
        println!(
            "  channel `{}` = w[{}..{}]",
            ch.name,
            ch.start,
            ch.start + ch.width
        );
    }
    println!("D21 = {}", p.d21());
    println!(
        "fault channel gate: {:?}",
        check_hminus_feasibility(&p, "f")?
    );

    // a static filter that only looks at the control signal
    let q = StateSpace::static_gain(dmatrix![0.0, -1.0]);
    let t_d = close_loop(&select_channel(&p, &p.input_selector("d")?)?, &q)?;
    let t_f = close_loop(&select_channel(&p, &p.input_selector("f")?)?, &q)?;
    println!(
        "static filter: ||T_ed||_inf = {:.4}, ||T_ef||_- = {:.4}",
        hinf_norm(&t_d, DEFAULT_NORM_TOL)?,
        hminus_index(&t_f, DEFAULT_NORM_TOL)?
    );

    // a strictly proper fault weight makes H- synthesis impossible
    let mut weak = l.clone();
    weak.gf = RationalTF::new([1.0], [1.0, 2.0])?;
    println!(
        "strictly proper G_f gate: {:?}",
        check_hminus_feasibility(&weak.plant()?, "f")?
    );
    Ok(())
}
