use crate::error::{Error, Result};
use crate::lti::norms::{
    hinf_norm_with_peak, hminus_index_with_location, sigma_max_curve, sigma_min_curve,
};
use crate::lti::{is_hurwitz, FrequencyGrid, StateSpace, DEFAULT_NORM_TOL};
use crate::plant::{close_loop, select_channel, GeneralizedPlant, ShapingWeights, MINREAL_TOL};

/// Frequency-domain check of a filter in closed loop.
#[derive(Debug, Clone, PartialEq)]
pub struct Verification {
    /// `‖T_εd‖∞` of the (weighted) disturbance channel.
    pub hinf_disturbance: f64,
    pub hinf_peak_omega: f64,
    /// `‖T_εf‖-` of the (weighted) fault channel.
    pub hminus_fault: f64,
    pub hminus_omega: f64,
    /// `‖T_εf‖- / ‖T_εd‖∞`.
    pub ratio: f64,
    pub t_disturbance: StateSpace,
    pub t_fault: StateSpace,
}

/// Closes the loop on each channel and measures both norms.
pub fn verify(
    p: &GeneralizedPlant,
    q: &StateSpace,
    fault: &str,
    disturbance: &str,
) -> Result<Verification> {
    verify_with_tol(p, q, fault, disturbance, DEFAULT_NORM_TOL)
}

/// [`verify`] with an explicit relative tolerance for the two norm computations.
pub fn verify_with_tol(
    p: &GeneralizedPlant,
    q: &StateSpace,
    fault: &str,
    disturbance: &str,
    tol: f64,
) -> Result<Verification> {
    let t_d = close_loop(&select_channel(p, &p.input_selector(disturbance)?)?, q)?;
    let t_f = close_loop(&select_channel(p, &p.input_selector(fault)?)?, q)?;
    if !is_hurwitz(&t_d) || !is_hurwitz(&t_f) {
        return Err(Error::UnstableLoop);
    }
    let (hinf, w_peak) = hinf_norm_with_peak(&t_d, tol)?;
    let (hminus, w_min) = hminus_index_with_location(&t_f, tol)?;
    Ok(Verification {
        hinf_disturbance: hinf,
        hinf_peak_omega: w_peak,
        hminus_fault: hminus,
        hminus_omega: w_min,
        ratio: if hinf > 0.0 {
            hminus / hinf
        } else {
            f64::INFINITY
        },
        t_disturbance: t_d,
        t_fault: t_f,
    })
}

/// Singular-value curves over a grid, with the bounds they must respect.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub omega: Vec<f64>,
    /// `σ̄(T_εd(jω))` of the weighted channel.
    pub sigma_max_disturbance: Vec<f64>,
    /// `σ̲(T_εf(jω))` of the weighted channel.
    pub sigma_min_fault: Vec<f64>,
    /// `γ / |G_d(jω)|` (just `γ` without weights).
    pub bound_disturbance: Vec<f64>,
    /// `ν / |G_f(jω)|` (just `ν` without weights).
    pub bound_fault: Vec<f64>,
    /// Unweighted `|T_εd(jω)| = σ̄ / |G_d|`, when weights are known.
    pub unweighted_disturbance: Option<Vec<f64>>,
    pub unweighted_fault: Option<Vec<f64>>,
}

impl Verification {
    /// Grid covering the poles of both closed-loop channels.
    pub fn grid(&self) -> FrequencyGrid {
        let joint = self
            .t_disturbance
            .horzcat(&self.t_fault)
            .map(|s| s.minimal(MINREAL_TOL))
            .unwrap_or_else(|_| self.t_disturbance.clone());
        FrequencyGrid::covering(&joint)
    }

    pub fn sweep(
        &self,
        grid: &FrequencyGrid,
        gamma: f64,
        nu: f64,
        weights: Option<&ShapingWeights>,
    ) -> Result<Sweep> {
        let omega = grid.points().to_vec();
        let smax = sigma_max_curve(&self.t_disturbance, &omega)?;
        let smin = sigma_min_curve(&self.t_fault, &omega)?;
        let (bd, bf, ud, uf) = match weights {
            Some(w) => {
                let gd: Vec<f64> = omega
                    .iter()
                    .map(|&x| w.disturbance.freq(x).norm())
                    .collect();
                let gf: Vec<f64> = omega.iter().map(|&x| w.fault.freq(x).norm()).collect();
                (
                    gd.iter().map(|g| gamma / g).collect(),
                    gf.iter().map(|g| nu / g).collect(),
                    Some(smax.iter().zip(&gd).map(|(s, g)| s / g).collect()),
                    Some(smin.iter().zip(&gf).map(|(s, g)| s / g).collect()),
                )
            }
            None => (vec![gamma; omega.len()], vec![nu; omega.len()], None, None),
        };
        Ok(Sweep {
            omega,
            sigma_max_disturbance: smax,
            sigma_min_fault: smin,
            bound_disturbance: bd,
            bound_fault: bf,
            unweighted_disturbance: ud,
            unweighted_fault: uf,
        })
    }
}

/// Rescales a filter so that its disturbance channel is all-pass with gain `γ₀`:
/// `Q₂ = γ₀ T_εd⁻¹ Q₁`.
///
/// Needs a square, biproper disturbance channel with minimum-phase zeros; the
/// inverse is formed on a minimal realization. The product is left unreduced:
/// its cancellations are exact only in exact arithmetic, and truncating the
/// nearly uncontrollable modes costs more accuracy than the extra states.
pub fn post_scale_update(
    p: &GeneralizedPlant,
    q: &StateSpace,
    gamma0: f64,
    disturbance: &str,
) -> Result<StateSpace> {
    let t_d =
        close_loop(&select_channel(p, &p.input_selector(disturbance)?)?, q)?.minimal(MINREAL_TOL);
    if t_d.inputs() != t_d.outputs() || t_d.outputs() != q.outputs() {
        return Err(Error::ImproperScaling);
    }
    let scaling = match t_d.inverse() {
        Ok(inv) => inv.scale(gamma0),
        Err(_) => return Err(Error::ImproperScaling),
    };
    if !is_hurwitz(&scaling) {
        return Err(Error::UnstableScaling);
    }
    q.series(&scaling)
}
