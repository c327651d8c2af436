//! Rational transfer functions: arithmetic, feedback, cancellation and realization.

use fdisynth::lti::{tf_arith, tf_to_ss, RationalTF, TfOp};
use num_complex::Complex64;

fn main() -> fdisynth::Result<()> {
    // G(s) = (s+25)(s+15)(s+5) / ((s+40)(s+10)(s+3)), C(s) = 15s + 25
    let g = RationalTF::zpk(&[-25.0, -15.0, -5.0], &[-40.0, -10.0, -3.0], 1.0);
    let c = RationalTF::new([15.0, 25.0], [1.0])?;
    println!(
        "G(0) = {:.6}, C proper: {}",
        g.eval(Complex64::new(0.0, 0.0)).re,
        c.is_proper()
    );

    // input sensitivity S_I = 1 / (1 + C G)
    let loop_gain = tf_arith(&c, &g, TfOp::Mul)?;
    let s_i = RationalTF::constant(1.0).feedback(&loop_gain)?;
    println!("S_I(0) = {:.6}", s_i.eval(Complex64::new(0.0, 0.0)).re);
    println!("closed-loop poles:");
    for p in s_i.poles() {
        println!("  {:.4} {:+.4}j", p.re, p.im);
    }

    // exact cancellation: (s+1)/(s+2) * (s+2)/(s+1) = 1
    let a = RationalTF::new([1.0, 1.0], [1.0, 2.0])?;
    let b = RationalTF::new([1.0, 2.0], [1.0, 1.0])?;
    let one = a.mul(&b);
    println!(
        "cancelled product has denominator degree {}",
        one.den().degree()
    );

    // S_I C is proper even though C is not
    let si_c = s_i.mul(&c);
    let ss = tf_to_ss(&si_c)?;
    println!(
        "S_I C realized with {} states, D = {:.4}",
        ss.n(),
        ss.d()[(0, 0)]
    );
    for w in [0.1, 1.0, 10.0] {
        let r = si_c.freq(w);
        let s = ss.freq_response(w)?[(0, 0)];
        println!(
            "  w = {w:>5}: |tf| = {:.6}, |ss| = {:.6}",
            r.norm(),
            s.norm()
        );
    }
    Ok(())
}
