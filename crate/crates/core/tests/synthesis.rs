//! Change of variables, filter recovery and the synthesis driver.

mod common;

use common::{random_matrix, random_stable, rel_diff, rng, benchmark_plant, ss_diff};
use fdisynth::lmi::{transformed_closed_loop, FilterVars};
use fdisynth::lti::StateSpace;
use fdisynth::plant::{close_loop, Channel, GeneralizedPlant, PlantMatrices};
use fdisynth::synth::{
    closed_loop_lyapunov, complete_and_extract, congruence_factors, forward_cov, reverse_cov,
    synthesize, verify, SynthesisConfig,
};
use fdisynth::Error;
use nalgebra::{dmatrix, DMatrix};
use rand::Rng;

fn spd(r: &mut impl Rng, n: usize) -> DMatrix<f64> {
    let g = random_matrix(r, n, n);
    &g * g.transpose() + DMatrix::identity(n, n) * 0.5
}

fn plant_with_d22(r: &mut impl Rng) -> GeneralizedPlant {
    let n = r.gen_range(1..=4);
    let (mw, mu, pz, py) = (
        r.gen_range(1..=2),
        r.gen_range(1..=2),
        r.gen_range(1..=2),
        r.gen_range(1..=2),
    );
    let g = random_stable(r, n, mw + mu, pz + py);
    let m = PlantMatrices {
        a: g.a().clone(),
        b1: g.b().columns(0, mw).into(),
        b2: g.b().columns(mw, mu).into(),
        c1: g.c().rows(0, pz).into(),
        c2: g.c().rows(pz, py).into(),
        d11: g.d().view((0, 0), (pz, mw)).into(),
        d12: g.d().view((0, mw), (pz, mu)).into(),
        d21: g.d().view((pz, 0), (py, mw)).into(),
        d22: random_matrix(r, py, mu) * 0.4,
    };
    GeneralizedPlant::new(m, vec![Channel::new("w", 0, mw)], vec![]).unwrap()
}

#[test]
fn change_of_variables_round_trip_with_feedthrough() {
    let q = StateSpace::new(
        dmatrix![-1.0, 0.4; 0.0, -3.0],
        dmatrix![1.0, 0.0; 0.5, 2.0],
        dmatrix![1.0, -1.0],
        dmatrix![0.7, 0.2],
    )
    .unwrap();
    let d22 = dmatrix![0.5; -0.25];
    let t = forward_cov(&q, &d22).unwrap();
    // Dc2 = Dc (1 - D22 Dc)^-1 with D22 Dc = 0.35 - 0.05
    assert!(rel_diff(&t.dc2, &(dmatrix![0.7, 0.2] / 0.7)) < 1e-14);
    assert!(ss_diff(&reverse_cov(&t, &d22).unwrap(), &q) < 1e-13);

    let mut bad = t;
    bad.dc2 = dmatrix![-2.0, 0.0];
    assert!(matches!(
        reverse_cov(&bad, &d22),
        Err(Error::SingularRecovery)
    ));
}

#[test]
fn recovered_filter_reproduces_the_transformed_closed_loop() {
    let mut r = rng(31);
    for _ in 0..20 {
        let p = plant_with_d22(&mut r);
        let (n, mu, py) = (p.n(), p.m_u(), p.p_y());
        let y1 = spd(&mut r, n);
        let x1 = y1.clone().try_inverse().unwrap() + spd(&mut r, n);
        let vars = FilterVars {
            x1,
            y1,
            an: random_matrix(&mut r, n, n),
            bn: random_matrix(&mut r, n, py),
            cn: random_matrix(&mut r, mu, n),
            dn: random_matrix(&mut r, mu, py) * 0.3,
        };
        let (t, comp) = complete_and_extract(&vars, &p).unwrap();
        assert_eq!(t.dc2, vars.dn);
        let Ok(q) = reverse_cov(&t, p.d22()) else {
            continue;
        };
        let cl = close_loop(&p, &q).unwrap();
        let want = transformed_closed_loop(&p, &vars.expr()).unwrap();
        let (pi1, pi2) = congruence_factors(&vars, &comp);
        let tol = 1e-8;
        assert!(rel_diff(&(pi2.transpose() * cl.a() * &pi1), &want.a.eval(&[])) < tol);
        assert!(rel_diff(&(pi2.transpose() * cl.b()), &want.b.eval(&[])) < tol);
        assert!(rel_diff(&(cl.c() * &pi1), &want.c.eval(&[])) < tol);
        assert!(rel_diff(cl.d(), &want.d.eval(&[])) < tol);
        let xcl = closed_loop_lyapunov(&vars, &comp).unwrap();
        assert!(rel_diff(&(xcl * &pi1), &pi2) < tol);
    }
}

fn small_plant(gf_scale: f64, d11_d: f64, d12: f64) -> GeneralizedPlant {
    let m = PlantMatrices {
        a: dmatrix![-1.0, 0.5; 0.0, -2.0],
        b1: dmatrix![1.0, 0.3 * gf_scale; 0.2, gf_scale],
        b2: DMatrix::zeros(2, 1),
        c1: DMatrix::zeros(1, 2),
        c2: dmatrix![1.0, 1.0],
        d11: dmatrix![d11_d, if d12 == 0.0 { 1.0 } else { 0.0 }],
        d12: dmatrix![d12],
        d21: dmatrix![0.3, gf_scale],
        d22: DMatrix::zeros(1, 1),
    };
    GeneralizedPlant::new(
        m,
        vec![Channel::new("d", 0, 1), Channel::new("f", 1, 1)],
        vec![],
    )
    .unwrap()
}

#[test]
fn infeasible_disturbance_level_is_reported_at_step_one() {
    // no filter can act on the residual, and the disturbance feedthrough exceeds gamma0
    let p = small_plant(1.0, 2.0, 0.0);
    let err = synthesize(&p, &SynthesisConfig::with_gamma0(1.0)).unwrap_err();
    assert!(matches!(err, Error::InfeasibleAtStep1(_)), "{err}");
}

#[test]
fn zero_filter_has_zero_minimum_gain() {
    let p = benchmark_plant();
    let v = verify(&p, &StateSpace::zero(p.m_u(), p.p_y()), "f", "d").unwrap();
    assert_eq!(v.hminus_fault, 0.0);
}

#[test]
fn doubling_the_fault_weight_doubles_nu() {
    let cfg = SynthesisConfig::with_gamma0(1.0);
    let one = synthesize(&small_plant(1.0, 0.0, 1.0), &cfg).unwrap();
    let two = synthesize(&small_plant(2.0, 0.0, 1.0), &cfg).unwrap();
    let ratio = two.nu_measured / one.nu_measured;
    assert!(
        (ratio - 2.0).abs() < 0.02,
        "{} vs {}",
        two.nu_measured,
        one.nu_measured
    );
    for r in [&one, &two] {
        assert!(r.verification.hinf_disturbance <= cfg.gamma0 * (1.0 + 1e-3));
        assert!(r.nu_measured >= r.nu_certified * (1.0 - 1e-3));
    }
}
