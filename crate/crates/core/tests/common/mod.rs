#![allow(dead_code)]

pub mod oracle;

use fdisynth::cli::ProblemFile;
use fdisynth::linalg;
use fdisynth::lti::StateSpace;
use fdisynth::plant::{Channel, GeneralizedPlant, PlantMatrices};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const BENCHMARK_JSON: &str = include_str!("../../examples/paper_sec5.json");

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
}

/// Random Hurwitz matrix with spectral abscissa in [-1.1, -0.1].
pub fn random_hurwitz(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
    let mut a = random_matrix(rng, n, n) * 2.0;
    if n > 0 {
        let shift = linalg::spectral_abscissa(&a) + rng.gen_range(0.1..1.1);
        for i in 0..n {
            a[(i, i)] -= shift;
        }
    }
    a
}

pub fn random_stable(rng: &mut impl Rng, n: usize, inputs: usize, outputs: usize) -> StateSpace {
    StateSpace::new(
        random_hurwitz(rng, n),
        random_matrix(rng, n, inputs),
        random_matrix(rng, outputs, n),
        random_matrix(rng, outputs, inputs),
    )
    .unwrap()
}

/// Filter-design plant `w = [d; f]`, residual `z = u`, measurement `y = C2 x + D21 w`.
pub fn random_fdi_plant(rng: &mut impl Rng, n: usize, p_y: usize) -> GeneralizedPlant {
    let mut d21 = random_matrix(rng, p_y, 2);
    // keep the fault visible at high frequency
    d21[(0, 1)] = rng.gen_range(0.5..1.5);
    let m = PlantMatrices {
        a: random_hurwitz(rng, n),
        b1: random_matrix(rng, n, 2),
        b2: DMatrix::zeros(n, 1),
        c1: DMatrix::zeros(1, n),
        c2: random_matrix(rng, p_y, n),
        d11: DMatrix::zeros(1, 2),
        d12: DMatrix::identity(1, 1),
        d21,
        d22: DMatrix::zeros(p_y, 1),
    };
    GeneralizedPlant::new(
        m,
        vec![Channel::new("d", 0, 1), Channel::new("f", 1, 1)],
        vec![],
    )
    .unwrap()
}

pub fn benchmark_plant() -> GeneralizedPlant {
    ProblemFile::from_json(BENCHMARK_JSON)
        .unwrap()
        .load()
        .unwrap()
        .plant
}

pub fn rel_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    (a - b).amax() / b.amax().max(1.0)
}

pub fn ss_diff(a: &StateSpace, b: &StateSpace) -> f64 {
    [
        rel_diff(a.a(), b.a()),
        rel_diff(a.b(), b.b()),
        rel_diff(a.c(), b.c()),
        rel_diff(a.d(), b.d()),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}
