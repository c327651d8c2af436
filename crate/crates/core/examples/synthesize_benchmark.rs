//! Full mixed H-/H∞ synthesis on the bundled loop (`paper_sec5.json`):
//! alternation history, certificates, a-posteriori check and frequency sweep.

use fdisynth::cli::ProblemFile;
use fdisynth::synth::{proof_check, synthesize, SynthesisConfig};

fn main() -> fdisynth::Result<()> {
    let loaded = ProblemFile::from_json(include_str!("paper_sec5.json"))?.load()?;
    let p = &loaded.plant;
    let cfg = SynthesisConfig::with_gamma0(1.0);
    let r = synthesize(p, &cfg)?;

    println!(
        "{:>4} {:>4} {:>12} {:>6} {:>8}",
        "iter", "step", "nu^2", "sdp", "seconds"
    );
    for h in &r.history {
        println!(
            "{:>4} {:>4} {:>12.8} {:>6} {:>8.3}",
            h.iteration, h.step, h.nu2, h.solver_iterations, h.seconds
        );
    }
    println!("status {:?} after {} iterations", r.status, r.iterations);
    println!(
        "certified: nu = {:.5}, gamma0 = {}, J = {:.5}",
        r.nu_certified,
        r.gamma0,
        r.j_certified()
    );
    println!(
        "measured:  ||T_ef||_- = {:.5} at w = {:.3}, ||T_ed||_inf = {:.5} at w = {:.3}",
        r.verification.hminus_fault,
        r.verification.hminus_omega,
        r.verification.hinf_disturbance,
        r.verification.hinf_peak_omega
    );
    println!(
        "filter order {}, certificate margin {:.2e}",
        r.filter.n(),
        r.certificate_margin
    );

    let check = proof_check(p, &cfg, &r)?;
    println!(
        "closed-loop certificates: identity residual {:.1e}, BRL max eig {:.1e}, min-gain max eig {:.1e}, holds: {}",
        check.identity_residual,
        check.bounded_real,
        check.minimum_gain,
        check.holds(1e-6)
    );

    let sweep = r.verification.sweep(
        &r.verification.grid(),
        r.gamma0,
        r.nu_reported,
        loaded.weights.as_ref(),
    )?;
    let ud = sweep
        .unweighted_disturbance
        .as_ref()
        .expect("loop problems carry weights");
    let uf = sweep
        .unweighted_fault
        .as_ref()
        .expect("loop problems carry weights");
    println!(
        "{:>10} {:>10} {:>12} {:>10} {:>10}",
        "w", "|T_ed|", "gamma/|G_d|", "|T_ef|", "nu/|G_f|"
    );
    for i in (0..sweep.omega.len()).step_by(80) {
        println!(
            "{:>10.4} {:>10.5} {:>12.5} {:>10.5} {:>10.5}",
            sweep.omega[i], ud[i], sweep.bound_disturbance[i], uf[i], sweep.bound_fault[i]
        );
    }
    Ok(())
}
