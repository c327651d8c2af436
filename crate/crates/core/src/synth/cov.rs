use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg;
use crate::lmi::FilterVars;
use crate::lti::StateSpace;
use crate::plant::{loop_inverse, GeneralizedPlant};

/// Relative singularity threshold for `I + Dc2 D22`.
pub const RECOVERY_TOL: f64 = 1e-10;
/// `I - X1 Y1` counts as singular when its smallest singular value is below
/// this multiple of `‖X1‖‖Y1‖`, the rounding level of the product.
pub const COMPLETION_TOL: f64 = 64.0 * f64::EPSILON;

/// Filter matrices after the change of variables that makes the closed loop
/// affine in the filter.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedFilterVars {
    pub ac2: DMatrix<f64>,
    pub bc2: DMatrix<f64>,
    pub cc2: DMatrix<f64>,
    pub dc2: DMatrix<f64>,
}

/// `X2`, `Y2` with `X2 Y2ᵀ = I - X1 Y1`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixCompletion {
    pub x2: DMatrix<f64>,
    pub y2: DMatrix<f64>,
}

/// `D̄ = (I - D22 Dc)⁻¹`; `Ac2 = Ac + Bc D̄ D22 Cc`, `Bc2 = Bc D̄`,
/// `Cc2 = (I + Dc D̄ D22) Cc`, `Dc2 = Dc D̄`.
pub fn forward_cov(q: &StateSpace, d22: &DMatrix<f64>) -> Result<TransformedFilterVars> {
    check_shapes(q.d(), d22)?;
    let dbar = loop_inverse(d22, q.d())?;
    let mu = q.outputs();
    let (ac, bc, cc, dc) = (q.a(), q.b(), q.c(), q.d());
    Ok(TransformedFilterVars {
        ac2: ac + bc * &dbar * d22 * cc,
        bc2: bc * &dbar,
        cc2: (DMatrix::identity(mu, mu) + dc * &dbar * d22) * cc,
        dc2: dc * &dbar,
    })
}

fn check_shapes(dc: &DMatrix<f64>, d22: &DMatrix<f64>) -> Result<()> {
    if d22.shape() != (dc.ncols(), dc.nrows()) {
        return Err(Error::DimensionMismatch(format!(
            "D22 is {}x{} but the filter feedthrough is {}x{}",
            d22.nrows(),
            d22.ncols(),
            dc.nrows(),
            dc.ncols()
        )));
    }
    Ok(())
}

/// Inverse of [`forward_cov`]; fails with [`Error::SingularRecovery`] when
/// `I + Dc2 D22` is singular.
pub fn reverse_cov(t: &TransformedFilterVars, d22: &DMatrix<f64>) -> Result<StateSpace> {
    check_shapes(&t.dc2, d22)?;
    let mu = t.dc2.nrows();
    let py = t.dc2.ncols();
    let left = DMatrix::identity(mu, mu) + &t.dc2 * d22;
    let scale = 1.0_f64.max(linalg::sigma_max_real(&t.dc2) * linalg::sigma_max_real(d22));
    if mu > 0 && !(linalg::sigma_min_gain_real(&left) > RECOVERY_TOL * scale) {
        return Err(Error::SingularRecovery);
    }
    let left_inv = left.try_inverse().ok_or(Error::SingularRecovery)?;
    let right_inv = (DMatrix::identity(py, py) + d22 * &t.dc2)
        .try_inverse()
        .ok_or(Error::SingularRecovery)?;
    let cc = &left_inv * &t.cc2;
    StateSpace::new(
        &t.ac2 - &t.bc2 * d22 * &cc,
        &t.bc2 * right_inv,
        cc,
        &left_inv * &t.dc2,
    )
}

/// Completion `Y2 = I`, `X2 = I - X1 Y1`.
pub fn complete(vars: &FilterVars) -> Result<MatrixCompletion> {
    let n = vars.x1.nrows();
    let x2 = DMatrix::identity(n, n) - &vars.x1 * &vars.y1;
    if n > 0 {
        let scale =
            1.0_f64.max(linalg::sigma_max_real(&vars.x1) * linalg::sigma_max_real(&vars.y1));
        if !(linalg::sigma_min_gain_real(&x2) > COMPLETION_TOL * scale) {
            return Err(Error::SingularCompletion);
        }
    }
    Ok(MatrixCompletion {
        x2,
        y2: DMatrix::identity(n, n),
    })
}

/// Completion from the SVD `I - X1 Y1 = U Σ Vᵀ`: `X2 = U Σ^½`, `Y2 = V Σ^½`.
///
/// Same filter up to a state similarity as [`complete`], with a better scaled
/// closed-loop Lyapunov matrix.
pub fn balanced_completion(vars: &FilterVars) -> Result<MatrixCompletion> {
    let n = vars.x1.nrows();
    complete(vars)?;
    let svd = (DMatrix::identity(n, n) - &vars.x1 * &vars.y1).svd(true, true);
    let (Some(u), Some(vt)) = (svd.u, svd.v_t) else {
        return Err(Error::SingularCompletion);
    };
    let root = DMatrix::from_diagonal(&svd.singular_values.map(f64::sqrt));
    Ok(MatrixCompletion {
        x2: u * &root,
        y2: vt.transpose() * root,
    })
}

/// Recovers the transformed filter matrices with the completion of [`complete`]:
///
/// ```text
/// [Ac2 Bc2; Cc2 Dc2] = [X2 X1 B2; 0 I]⁻¹ ([An Bn; Cn Dn] - [X1 A Y1 0; 0 0]) [Y2ᵀ 0; C2 Y1 I]⁻¹
/// ```
pub fn complete_and_extract(
    vars: &FilterVars,
    p: &GeneralizedPlant,
) -> Result<(TransformedFilterVars, MatrixCompletion)> {
    let comp = complete(vars)?;
    Ok((extract_with(vars, p, &comp)?, comp))
}

/// Filter recovery for a given completion.
pub fn extract_with(
    vars: &FilterVars,
    p: &GeneralizedPlant,
    comp: &MatrixCompletion,
) -> Result<TransformedFilterVars> {
    let (n, mu, py) = (p.n(), p.m_u(), p.p_y());
    let k = linalg::blocks(&[
        vec![&(&vars.an - &vars.x1 * p.a() * &vars.y1), &vars.bn],
        vec![&vars.cn, &vars.dn],
    ]);
    let left = linalg::blocks(&[
        vec![&comp.x2, &(&vars.x1 * p.b2())],
        vec![&DMatrix::zeros(mu, n), &DMatrix::identity(mu, mu)],
    ]);
    let right = linalg::blocks(&[
        vec![&comp.y2.transpose(), &DMatrix::zeros(n, py)],
        vec![&(p.c2() * &vars.y1), &DMatrix::identity(py, py)],
    ]);
    let lk = left.lu().solve(&k).ok_or(Error::SingularCompletion)?;
    // (lk) right⁻¹ = (right⁻ᵀ lkᵀ)ᵀ
    let m = right
        .transpose()
        .lu()
        .solve(&lk.transpose())
        .ok_or(Error::SingularCompletion)?
        .transpose();
    Ok(TransformedFilterVars {
        ac2: m.view((0, 0), (n, n)).into_owned(),
        bc2: m.view((0, n), (n, py)).into_owned(),
        cc2: m.view((n, 0), (mu, n)).into_owned(),
        dc2: m.view((n, n), (mu, py)).into_owned(),
    })
}

/// `Π1 = [Y1 I; Y2ᵀ 0]` and `Π2 = [I X1; 0 X2ᵀ]`, with `X_cl Π1 = Π2`.
pub fn congruence_factors(
    vars: &FilterVars,
    comp: &MatrixCompletion,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = vars.x1.nrows();
    let eye = DMatrix::identity(n, n);
    let zero = DMatrix::zeros(n, n);
    let pi1 = linalg::blocks(&[vec![&vars.y1, &eye], vec![&comp.y2.transpose(), &zero]]);
    let pi2 = linalg::blocks(&[vec![&eye, &vars.x1], vec![&zero, &comp.x2.transpose()]]);
    (pi1, pi2)
}

/// Closed-loop Lyapunov matrix `X_cl = Π2 Π1⁻¹`; for `Y2 = I` this is
/// `[X1, X2; X2ᵀ, Y1 X1 Y1 - Y1]`.
pub fn closed_loop_lyapunov(vars: &FilterVars, comp: &MatrixCompletion) -> Result<DMatrix<f64>> {
    let (pi1, pi2) = congruence_factors(vars, comp);
    let xt = pi1
        .transpose()
        .lu()
        .solve(&pi2.transpose())
        .ok_or(Error::SingularCompletion)?;
    Ok(linalg::sym(&xt.transpose()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, v)
    }

    #[test]
    fn zero_d22_is_identity() {
        let q = StateSpace::new(scalar(-1.0), scalar(2.0), scalar(3.0), scalar(4.0)).unwrap();
        let t = forward_cov(&q, &scalar(0.0)).unwrap();
        assert_eq!(
            (t.ac2[(0, 0)], t.bc2[(0, 0)], t.cc2[(0, 0)], t.dc2[(0, 0)]),
            (-1.0, 2.0, 3.0, 4.0)
        );
        assert_eq!(reverse_cov(&t, &scalar(0.0)).unwrap(), q);
    }

    #[test]
    fn scalar_substitution() {
        let q = StateSpace::new(scalar(-1.0), scalar(2.0), scalar(3.0), scalar(1.0)).unwrap();
        let t = forward_cov(&q, &scalar(0.5)).unwrap();
        assert_eq!(t.dc2[(0, 0)], 2.0);
        assert_eq!(t.bc2[(0, 0)], 4.0);
        assert_eq!(t.cc2[(0, 0)], 6.0);
        assert_eq!(t.ac2[(0, 0)], -1.0 + 2.0 * 3.0);
    }

    #[test]
    fn singular_recovery() {
        let t = TransformedFilterVars {
            ac2: DMatrix::zeros(0, 0),
            bc2: DMatrix::zeros(0, 1),
            cc2: DMatrix::zeros(1, 0),
            dc2: scalar(1.0),
        };
        assert!(matches!(
            reverse_cov(&t, &scalar(-1.0)),
            Err(Error::SingularRecovery)
        ));
    }

    #[test]
    fn completion_example() {
        let v = FilterVars {
            x1: DMatrix::identity(2, 2) * 2.0,
            y1: DMatrix::identity(2, 2),
            an: DMatrix::zeros(2, 2),
            bn: DMatrix::zeros(2, 1),
            cn: DMatrix::zeros(1, 2),
            dn: DMatrix::zeros(1, 1),
        };
        let c = complete(&v).unwrap();
        assert_eq!(c.x2, -DMatrix::identity(2, 2));
        let xcl = closed_loop_lyapunov(&v, &c).unwrap();
        // Y1 X1 Y1 - Y1 = I
        assert!(
            (&xcl
                - DMatrix::from_fn(4, 4, |i, j| match (i < 2, j < 2) {
                    (true, true) => 2.0 * (i == j) as u8 as f64,
                    (false, false) => (i == j) as u8 as f64,
                    _ => -((i % 2 == j % 2) as u8 as f64),
                }))
            .norm()
                < 1e-12
        );
        let b = balanced_completion(&v).unwrap();
        assert!((&b.x2 * b.y2.transpose() - &c.x2).norm() < 1e-12);
        let mut same = v.clone();
        same.x1 = DMatrix::identity(2, 2);
        assert!(matches!(complete(&same), Err(Error::SingularCompletion)));
    }
}
