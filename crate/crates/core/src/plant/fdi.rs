use nalgebra::DMatrix;

use super::{Channel, GeneralizedPlant, PlantMatrices};
use crate::error::{Error, Result};
use crate::lti::{tf_to_ss, RationalTF, StateSpace, STABILITY_MARGIN};

/// Relative tolerance of the Krylov rank tests used to drop uncontrollable or
/// unobservable states after block assembly.
pub const MINREAL_TOL: f64 = 1e-9;

/// Shaping filters on the disturbance and fault inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapingWeights {
    pub disturbance: RationalTF,
    pub fault: RationalTF,
}

/// The four SISO transfers of the feedback loop a residual filter is designed for.
#[derive(Debug, Clone, PartialEq)]
pub struct FdiLoop {
    pub g: RationalTF,
    pub c: RationalTF,
    pub gd: RationalTF,
    pub gf: RationalTF,
}

impl FdiLoop {
    pub fn weights(&self) -> ShapingWeights {
        ShapingWeights {
            disturbance: self.gd.clone(),
            fault: self.gf.clone(),
        }
    }

    pub fn plant(&self) -> Result<GeneralizedPlant> {
        build_fdi_plant(&self.g, &self.c, &self.gd, &self.gf)
    }
}

fn checked(name: &str, tf: RationalTF) -> Result<RationalTF> {
    if !tf.is_proper() {
        return Err(Error::ImproperEntry {
            entry: name.to_string(),
        });
    }
    if !tf.is_stable(STABILITY_MARGIN) {
        return Err(Error::UnstableEntry {
            entry: name.to_string(),
        });
    }
    Ok(tf)
}

/// Generalized plant of a feedback loop `u = -C y` with an actuator fault
/// filtered by `G_f` and an output disturbance filtered by `G_d`.
///
/// `w = [d; f]`, `z = u_filter` (the filter output is the residual) and
/// `y_filter = [y; u]`:
///
/// ```text
///   [ z ]   [ 0            0              1 ] [ d ]
///   [ y ] = [ S_O G_d      S_O G G_f      0 ] [ f ]
///   [ u ]   [ -S_I C G_d   -S_I C G G_f   0 ] [ u_filter ]
/// ```
///
/// Entries are formed as rational functions (so an improper `C` is fine as long
/// as every entry is proper), realized, assembled and reduced to a minimal,
/// balanced realization.
pub fn build_fdi_plant(
    g: &RationalTF,
    c: &RationalTF,
    gd: &RationalTF,
    gf: &RationalTF,
) -> Result<GeneralizedPlant> {
    let one = RationalTF::constant(1.0);
    let so = one.feedback(&g.mul(c))?;
    let si = one.feedback(&c.mul(g))?;
    let e_yd = checked("S_O G_d", so.mul(gd))?;
    let e_yf = checked("S_O G G_f", so.mul(g).mul(gf))?;
    let e_ud = checked("-S_I C G_d", si.mul(c).mul(gd).neg())?;
    let e_uf = checked("-S_I C G G_f", si.mul(c).mul(g).mul(gf).neg())?;

    let col_d = tf_to_ss(&e_yd)?.vertcat(&tf_to_ss(&e_ud)?)?;
    let col_f = tf_to_ss(&e_yf)?.vertcat(&tf_to_ss(&e_uf)?)?;
    let t = col_d.horzcat(&col_f)?.minimal(MINREAL_TOL);
    let t = t.balanced().unwrap_or(t);
    assemble(t)
}

/// Wraps `T: w -> y_filter` into a plant with `z = u_filter`.
fn assemble(t: StateSpace) -> Result<GeneralizedPlant> {
    let (n, mw, py) = (t.n(), t.inputs(), t.outputs());
    let (a, b, c, d) = t.into_parts();
    GeneralizedPlant::new(
        PlantMatrices {
            a,
            b1: b,
            b2: DMatrix::zeros(n, 1),
            c1: DMatrix::zeros(1, n),
            c2: c,
            d11: DMatrix::zeros(1, mw),
            d12: DMatrix::identity(1, 1),
            d21: d,
            d22: DMatrix::zeros(py, 1),
        },
        vec![Channel::new("d", 0, 1), Channel::new("f", 1, 1)],
        vec![Channel::new("residual", 0, 1)],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::check_hminus_feasibility;

    #[test]
    fn open_loop_passthrough() {
        let one = RationalTF::constant(1.0);
        let p = build_fdi_plant(&one, &RationalTF::constant(0.0), &one, &one).unwrap();
        assert_eq!(p.n(), 0);
        assert_eq!(
            p.d21(),
            &DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 0.0])
        );
        assert_eq!(p.d11(), &DMatrix::zeros(1, 2));
    }

    #[test]
    fn improper_entry_is_named() {
        let one = RationalTF::constant(1.0);
        let s = RationalTF::new(vec![1.0, 0.0], vec![1.0]).unwrap();
        // G = 1, C = 0, G_d = s: S_O G_d = s is improper.
        let err = build_fdi_plant(&one, &RationalTF::constant(0.0), &s, &one).unwrap_err();
        assert!(matches!(err, Error::ImproperEntry { ref entry } if entry == "S_O G_d"));
    }

    #[test]
    fn unstable_entry_is_named() {
        let one = RationalTF::constant(1.0);
        let unstable = RationalTF::new(vec![1.0], vec![1.0, -1.0]).unwrap();
        let err = build_fdi_plant(&one, &RationalTF::constant(0.0), &one, &unstable).unwrap_err();
        assert!(matches!(err, Error::UnstableEntry { ref entry } if entry == "S_O G G_f"));
    }

    #[test]
    fn strictly_proper_weights_fail_the_gate() {
        let one = RationalTF::constant(1.0);
        let lag = RationalTF::new(vec![1.0], vec![1.0, 1.0]).unwrap();
        let p = build_fdi_plant(&lag, &one, &lag, &lag).unwrap();
        assert!(!check_hminus_feasibility(&p, "f").unwrap().is_ok());
    }
}
