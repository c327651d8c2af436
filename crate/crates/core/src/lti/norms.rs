//! H-infinity norm, H- index and stability tests.

use nalgebra::DMatrix;

use super::freq::FrequencyGrid;
use super::ss::StateSpace;
use crate::error::{Error, Result};
use crate::linalg;

/// Eigenvalues must satisfy `Re(lambda) < -STABILITY_MARGIN` to count as stable.
pub const STABILITY_MARGIN: f64 = 1e-9;

/// Default relative tolerance of [`hinf_norm`] and [`hminus_index`].
pub const DEFAULT_NORM_TOL: f64 = 1e-6;

/// Relative slack when confirming a Hamiltonian crossing by evaluation.
const CROSSING_TOL: f64 = 1e-9;

const GOLDEN: f64 = 0.618_033_988_749_894_8;

pub fn is_hurwitz(sys: &StateSpace) -> bool {
    sys.n() == 0 || linalg::spectral_abscissa(sys.a()) < -STABILITY_MARGIN
}

fn require_stable(sys: &StateSpace) -> Result<()> {
    if is_hurwitz(sys) {
        Ok(())
    } else {
        Err(Error::UnstableSystem {
            max_real_part: linalg::spectral_abscissa(sys.a()),
        })
    }
}

pub fn sigma_max_at(sys: &StateSpace, omega: f64) -> Result<f64> {
    Ok(linalg::sigma_max(&sys.freq_response(omega)?))
}

pub fn sigma_min_at(sys: &StateSpace, omega: f64) -> Result<f64> {
    Ok(linalg::sigma_min_gain(&sys.freq_response(omega)?))
}

pub fn sigma_max_curve(sys: &StateSpace, grid: &[f64]) -> Result<Vec<f64>> {
    grid.iter().map(|w| sigma_max_at(sys, *w)).collect()
}

pub fn sigma_min_curve(sys: &StateSpace, grid: &[f64]) -> Result<Vec<f64>> {
    grid.iter().map(|w| sigma_min_at(sys, *w)).collect()
}

/// Golden-section search for a minimum of `f` on `[a, b]` (log-spaced when `a > 0`).
fn golden_min(
    mut f: impl FnMut(f64) -> Result<f64>,
    a: f64,
    b: f64,
    width_tol: f64,
) -> Result<(f64, f64)> {
    let log = a > 0.0;
    let (map, unmap): (fn(f64) -> f64, fn(f64) -> f64) = if log {
        (f64::ln, f64::exp)
    } else {
        (|x| x, |x| x)
    };
    let (mut lo, mut hi) = (map(a), map(b));
    let mut x1 = hi - GOLDEN * (hi - lo);
    let mut x2 = lo + GOLDEN * (hi - lo);
    let mut f1 = f(unmap(x1))?;
    let mut f2 = f(unmap(x2))?;
    for _ in 0..200 {
        let width = if log {
            hi - lo
        } else {
            (hi - lo) / b.max(1e-300)
        };
        if width < width_tol {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - GOLDEN * (hi - lo);
            f1 = f(unmap(x1))?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + GOLDEN * (hi - lo);
            f2 = f(unmap(x2))?;
        }
    }
    Ok(if f1 <= f2 {
        (unmap(x1), f1)
    } else {
        (unmap(x2), f2)
    })
}

/// Frequencies of the imaginary-axis eigenvalues of the Hamiltonian associated
/// with level `gamma`; `None` when `gamma <= sigma_max(D)`.
fn hamiltonian_crossings(sys: &StateSpace, gamma: f64) -> Option<Vec<f64>> {
    let (a, b, c, d) = (sys.a(), sys.b(), sys.c(), sys.d());
    let n = sys.n();
    let m = sys.inputs();
    let p = sys.outputs();
    let r = DMatrix::<f64>::identity(m, m) * (gamma * gamma) - d.transpose() * d;
    let rinv = r.clone().cholesky()?.inverse();
    let ae = a + b * &rinv * d.transpose() * c;
    let q = c.transpose() * (DMatrix::<f64>::identity(p, p) + d * &rinv * d.transpose()) * c;
    let mut h = DMatrix::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(&ae);
    h.view_mut((0, n), (n, n))
        .copy_from(&(b * &rinv * b.transpose()));
    h.view_mut((n, 0), (n, n)).copy_from(&(-q));
    h.view_mut((n, n), (n, n)).copy_from(&(-ae.transpose()));
    let scale = linalg::max_abs(a).max(1e-12);
    let mut freqs: Vec<f64> = linalg::eigenvalues(&h)
        .iter()
        .filter(|l| l.re.is_finite() && l.re.abs() <= 1e-7 * (l.im.abs() + scale))
        .map(|l| l.im.abs())
        .collect();
    freqs.sort_by(f64::total_cmp);
    freqs.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * (1.0 + y.abs()));
    Some(freqs)
}

/// H-infinity norm and a peak frequency.
///
/// Bisection on the level using the Hamiltonian imaginary-axis test, seeded by a
/// grid sweep. The returned value is an evaluated `sigma_max(G(jw))` at the
/// located peak, so it is exact up to round-off for the reported frequency.
pub fn hinf_norm_with_peak(sys: &StateSpace, tol: f64) -> Result<(f64, f64)> {
    require_stable(sys)?;
    let dmax = linalg::sigma_max_real(sys.d());
    if sys.n() == 0 {
        return Ok((dmax, f64::INFINITY));
    }
    let grid = FrequencyGrid::covering(sys);
    let mut best = (dmax, f64::INFINITY);
    for &w in grid.points() {
        let v = sigma_max_at(sys, w)?;
        if v > best.0 {
            best = (v, w);
        }
    }
    if best.0 == 0.0 {
        return Ok((0.0, 0.0));
    }
    let consider = |best: &mut (f64, f64), w: f64| -> Result<()> {
        let v = sigma_max_at(sys, w)?;
        if v > best.0 {
            *best = (v, w);
        }
        Ok(())
    };
    // A level counts as crossed only when an evaluated point reaches it, so
    // spurious near-axis eigenvalues cannot raise the estimate.
    let crossed = |best: &mut (f64, f64), level: f64| -> Result<bool> {
        let Some(f) = hamiltonian_crossings(sys, level) else {
            return Ok(false);
        };
        for w in &f {
            consider(best, *w)?;
        }
        for pair in f.windows(2) {
            consider(best, 0.5 * (pair[0] + pair[1]))?;
        }
        Ok(best.0 >= level * (1.0 - CROSSING_TOL))
    };
    let mut hi = best.0 * 2.0;
    for _ in 0..60 {
        if !crossed(&mut best, hi)? {
            break;
        }
        hi = best.0 * 2.0;
    }
    for _ in 0..200 {
        let lo = best.0;
        if hi - lo <= tol * lo {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if !crossed(&mut best, mid)? {
            hi = mid;
        }
    }
    // local polish of the evaluated peak
    if best.1.is_finite() {
        let w0 = best.1;
        let (a, b) = if w0 > 0.0 {
            (w0 / 1.02, w0 * 1.02)
        } else {
            (0.0, 1e-6)
        };
        let (w, negv) = golden_min(|w| Ok(-sigma_max_at(sys, w)?), a, b, 1e-11)?;
        if -negv > best.0 {
            best = (-negv, w);
        }
    }
    Ok(best)
}

pub fn hinf_norm(sys: &StateSpace, tol: f64) -> Result<f64> {
    Ok(hinf_norm_with_peak(sys, tol)?.0)
}

/// H- index and the frequency of the infimum (`inf` when attained as `w -> inf`).
///
/// Grid sweep with golden-section refinement around the smallest local minima,
/// plus the `w -> inf` limit `sigma_min(D)`.
pub fn hminus_index_with_location(sys: &StateSpace, tol: f64) -> Result<(f64, f64)> {
    require_stable(sys)?;
    let limit = linalg::sigma_min_gain_real(sys.d());
    if sys.n() == 0 || sys.outputs() < sys.inputs() {
        return Ok((limit, f64::INFINITY));
    }
    let grid = FrequencyGrid::covering(sys);
    let w = grid.points();
    let vals = sigma_min_curve(sys, w)?;
    let mut best = (limit, f64::INFINITY);
    let mut minima: Vec<usize> = (0..w.len())
        .filter(|&i| {
            let left = i == 0 || vals[i] <= vals[i - 1];
            let right = i + 1 == w.len() || vals[i] <= vals[i + 1];
            left && right
        })
        .collect();
    minima.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
    for (i, v) in vals.iter().enumerate() {
        if *v < best.0 {
            best = (*v, w[i]);
        }
    }
    for &i in minima.iter().take(5) {
        let a = if i == 0 { w[0] } else { w[i - 1] };
        let b = if i + 1 == w.len() {
            w[i] * 1.5
        } else {
            w[i + 1]
        };
        let (wm, v) = golden_min(
            |x| sigma_min_at(sys, x),
            a,
            b,
            (tol * 1e-4).clamp(1e-12, 1e-6),
        )?;
        if v < best.0 {
            best = (v, wm);
        }
    }
    Ok(best)
}

pub fn hminus_index(sys: &StateSpace, tol: f64) -> Result<f64> {
    Ok(hminus_index_with_location(sys, tol)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::tf::{tf_to_ss, RationalTF};

    fn ss(num: &[f64], den: &[f64]) -> StateSpace {
        tf_to_ss(&RationalTF::new(num.to_vec(), den.to_vec()).unwrap()).unwrap()
    }

    #[test]
    fn hurwitz_examples() {
        let a = |v: &[f64], n| {
            StateSpace::new(
                DMatrix::from_row_slice(n, n, v),
                DMatrix::zeros(n, 1),
                DMatrix::zeros(1, n),
                DMatrix::zeros(1, 1),
            )
            .unwrap()
        };
        assert!(is_hurwitz(&a(&[-1.0], 1)));
        assert!(!is_hurwitz(&a(&[0.0], 1)));
        assert!(is_hurwitz(&a(&[0.0, 1.0, -2.0, -3.0], 2)));
        assert!(is_hurwitz(&StateSpace::zero(1, 1)));
    }

    #[test]
    fn static_norms() {
        let d = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 0.5]);
        let g = StateSpace::static_gain(d);
        assert!((hinf_norm(&g, 1e-6).unwrap() - 3.0).abs() < 1e-12);
        assert!((hminus_index(&g, 1e-6).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn first_order_lag() {
        let g = ss(&[1.0], &[1.0, 1.0]);
        assert!((hinf_norm(&g, 1e-6).unwrap() - 1.0).abs() < 1e-6);
        assert_eq!(hminus_index(&g, 1e-6).unwrap(), 0.0);
    }

    #[test]
    fn lead_lag_norm_and_index() {
        let g = ss(&[1.0, 2.0], &[1.0, 1.0]);
        assert!((hinf_norm(&g, 1e-6).unwrap() - 2.0).abs() < 2e-6);
        assert!((hminus_index(&g, 1e-6).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn resonant_peak() {
        // 1/(s^2 + 0.02 s + 1): peak 1/(2 zeta sqrt(1-zeta^2)) with zeta = 0.01
        let g = ss(&[1.0], &[1.0, 0.02, 1.0]);
        let z: f64 = 0.01;
        let want = 1.0 / (2.0 * z * (1.0 - z * z).sqrt());
        let got = hinf_norm(&g, 1e-6).unwrap();
        assert!((got - want).abs() <= 1e-6 * want, "{got} vs {want}");
    }

    #[test]
    fn unstable_rejected() {
        let g = ss(&[1.0], &[1.0, -1.0]);
        assert!(matches!(
            hinf_norm(&g, 1e-6),
            Err(Error::UnstableSystem { .. })
        ));
        assert!(matches!(
            hminus_index(&g, 1e-6),
            Err(Error::UnstableSystem { .. })
        ));
    }
}
