use nalgebra::DMatrix;

use super::{AffineMat, LmiBlock, Sense, VarId, VarSpace};
use crate::error::{Error, Result};
use crate::plant::GeneralizedPlant;

/// Flat-vector handles of the transformed filter variables and Lyapunov pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterVarIds {
    pub x1: VarId,
    pub y1: VarId,
    pub an: VarId,
    pub bn: VarId,
    pub cn: VarId,
    pub dn: VarId,
}

/// Numeric values of `(X1, Y1, An, Bn, Cn, Dn)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterVars {
    pub x1: DMatrix<f64>,
    pub y1: DMatrix<f64>,
    pub an: DMatrix<f64>,
    pub bn: DMatrix<f64>,
    pub cn: DMatrix<f64>,
    pub dn: DMatrix<f64>,
}

/// `(X1, Y1, An, Bn, Cn, Dn)` as affine expressions (variables or constants).
#[derive(Debug, Clone, PartialEq)]
pub struct FilterExpr {
    pub x1: AffineMat,
    pub y1: AffineMat,
    pub an: AffineMat,
    pub bn: AffineMat,
    pub cn: AffineMat,
    pub dn: AffineMat,
}

impl FilterVarIds {
    /// Declares the variables for a plant with `n` states, `m_u` filter outputs
    /// and `p_y` measurements. `tag` is appended to every name.
    pub fn declare(vars: &mut VarSpace, n: usize, m_u: usize, p_y: usize, tag: &str) -> Self {
        Self {
            x1: vars.symmetric(&format!("X1{tag}"), n),
            y1: vars.symmetric(&format!("Y1{tag}"), n),
            an: vars.full(&format!("An{tag}"), n, n),
            bn: vars.full(&format!("Bn{tag}"), n, p_y),
            cn: vars.full(&format!("Cn{tag}"), m_u, n),
            dn: vars.full(&format!("Dn{tag}"), m_u, p_y),
        }
    }

    pub fn expr(&self, vars: &VarSpace) -> FilterExpr {
        FilterExpr {
            x1: vars.expr(self.x1),
            y1: vars.expr(self.y1),
            an: vars.expr(self.an),
            bn: vars.expr(self.bn),
            cn: vars.expr(self.cn),
            dn: vars.expr(self.dn),
        }
    }

    pub fn value(&self, vars: &VarSpace, x: &[f64]) -> FilterVars {
        FilterVars {
            x1: vars.value(self.x1, x),
            y1: vars.value(self.y1, x),
            an: vars.value(self.an, x),
            bn: vars.value(self.bn, x),
            cn: vars.value(self.cn, x),
            dn: vars.value(self.dn, x),
        }
    }

    pub fn set(&self, vars: &VarSpace, v: &FilterVars, x: &mut [f64]) {
        vars.set(self.x1, &v.x1, x);
        vars.set(self.y1, &v.y1, x);
        vars.set(self.an, &v.an, x);
        vars.set(self.bn, &v.bn, x);
        vars.set(self.cn, &v.cn, x);
        vars.set(self.dn, &v.dn, x);
    }
}

impl FilterVars {
    pub fn expr(&self) -> FilterExpr {
        FilterExpr {
            x1: AffineMat::constant(self.x1.clone()),
            y1: AffineMat::constant(self.y1.clone()),
            an: AffineMat::constant(self.an.clone()),
            bn: AffineMat::constant(self.bn.clone()),
            cn: AffineMat::constant(self.cn.clone()),
            dn: AffineMat::constant(self.dn.clone()),
        }
    }
}

/// Slack matrices `𝒳` (p_z×m_j), `𝒴` (p_z×n), `𝒵` (p_z×n).
#[derive(Debug, Clone, PartialEq)]
pub struct SlackVars {
    pub x: DMatrix<f64>,
    pub y: DMatrix<f64>,
    pub z: DMatrix<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlackVarIds {
    pub x: VarId,
    pub y: VarId,
    pub z: VarId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlackExpr {
    pub x: AffineMat,
    pub y: AffineMat,
    pub z: AffineMat,
}

impl SlackVars {
    /// The starting point `𝒳 = I, 𝒴 = 0, 𝒵 = 0`.
    pub fn initial(p_z: usize, m_j: usize, n: usize) -> Self {
        Self {
            x: DMatrix::identity(p_z, m_j),
            y: DMatrix::zeros(p_z, n),
            z: DMatrix::zeros(p_z, n),
        }
    }

    pub fn expr(&self) -> SlackExpr {
        SlackExpr {
            x: AffineMat::constant(self.x.clone()),
            y: AffineMat::constant(self.y.clone()),
            z: AffineMat::constant(self.z.clone()),
        }
    }
}

impl SlackVarIds {
    pub fn declare(vars: &mut VarSpace, p_z: usize, m_j: usize, n: usize) -> Self {
        Self {
            x: vars.full("SlackX", p_z, m_j),
            y: vars.full("SlackY", p_z, n),
            z: vars.full("SlackZ", p_z, n),
        }
    }

    pub fn expr(&self, vars: &VarSpace) -> SlackExpr {
        SlackExpr {
            x: vars.expr(self.x),
            y: vars.expr(self.y),
            z: vars.expr(self.z),
        }
    }

    pub fn value(&self, vars: &VarSpace, x: &[f64]) -> SlackVars {
        SlackVars {
            x: vars.value(self.x, x),
            y: vars.value(self.y, x),
            z: vars.value(self.z, x),
        }
    }

    pub fn set(&self, vars: &VarSpace, s: &SlackVars, x: &mut [f64]) {
        vars.set(self.x, &s.x, x);
        vars.set(self.y, &s.y, x);
        vars.set(self.z, &s.z, x);
    }
}

/// Closed-loop matrices after the congruence with the Lyapunov factors:
///
/// ```text
///   A~ = [A Y1 + B2 Cn,  A + B2 Dn C2;  An,  X1 A + Bn C2]
///   B~ = [B1 + B2 Dn D21;  X1 B1 + Bn D21]
///   C~ = [C1 Y1 + D12 Cn,  C1 + D12 Dn C2]
///   D~ = D11 + D12 Dn D21
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedClosedLoop {
    pub a: AffineMat,
    pub b: AffineMat,
    pub c: AffineMat,
    pub d: AffineMat,
}

fn check_filter_shapes(p: &GeneralizedPlant, f: &FilterExpr) -> Result<()> {
    let (n, mu, py) = (p.n(), p.m_u(), p.p_y());
    let want = [
        ("X1", &f.x1, (n, n)),
        ("Y1", &f.y1, (n, n)),
        ("An", &f.an, (n, n)),
        ("Bn", &f.bn, (n, py)),
        ("Cn", &f.cn, (mu, n)),
        ("Dn", &f.dn, (mu, py)),
    ];
    for (name, m, shape) in want {
        if (m.rows(), m.cols()) != shape {
            return Err(Error::DimensionMismatch(format!(
                "{name} is {}x{}, expected {}x{}",
                m.rows(),
                m.cols(),
                shape.0,
                shape.1
            )));
        }
    }
    Ok(())
}

pub fn transformed_closed_loop(
    p: &GeneralizedPlant,
    f: &FilterExpr,
) -> Result<TransformedClosedLoop> {
    check_filter_shapes(p, f)?;
    let (a, b1, b2) = (p.a(), p.b1(), p.b2());
    let (c1, c2) = (p.c1(), p.c2());
    let (d11, d12, d21) = (p.d11(), p.d12(), p.d21());
    let k = |m: &DMatrix<f64>| AffineMat::constant(m.clone());
    let a11 = f.y1.lmul(a).add(&f.cn.lmul(b2));
    let a12 = k(a).add(&f.dn.lmul(b2).rmul(c2));
    let a22 = f.x1.rmul(a).add(&f.bn.rmul(c2));
    let b_top = k(b1).add(&f.dn.lmul(b2).rmul(d21));
    let b_bot = f.x1.rmul(b1).add(&f.bn.rmul(d21));
    let c_left = f.y1.lmul(c1).add(&f.cn.lmul(d12));
    let c_right = k(c1).add(&f.dn.lmul(d12).rmul(c2));
    Ok(TransformedClosedLoop {
        a: AffineMat::blocks(&[vec![&a11, &a12], vec![&f.an, &a22]]),
        b: AffineMat::blocks(&[vec![&b_top], vec![&b_bot]]),
        c: AffineMat::blocks(&[vec![&c_left, &c_right]]),
        d: k(d11).add(&f.dn.lmul(d12).rmul(d21)),
    })
}

/// The 4×4 block matrix of the maximum-gain synthesis LMI (to be `≺ 0`).
pub fn m_block(p: &GeneralizedPlant, f: &FilterExpr, gamma: f64) -> Result<AffineMat> {
    let t = transformed_closed_loop(p, f)?;
    let (mj, pz) = (p.m_w(), p.p_z());
    let g = AffineMat::constant(DMatrix::identity(mj, mj) * -(gamma * gamma));
    let minus_i = AffineMat::constant(-DMatrix::identity(pz, pz));
    let he_a = t.a.he();
    let ct = t.c.transpose();
    let dt = t.d.transpose();
    Ok(AffineMat::blocks(&[
        vec![&he_a, &t.b, &ct],
        vec![&t.b.transpose(), &g, &dt],
        vec![&t.c, &t.d, &minus_i],
    ]))
}

fn scalar_identity(s: &AffineMat, m: usize) -> AffineMat {
    let eye = DMatrix::<f64>::identity(m, m);
    let (c, terms) = s.clone().into_parts();
    AffineMat::from_parts(
        &eye * c[(0, 0)],
        terms
            .into_iter()
            .map(|(k, v)| (k, &eye * v[(0, 0)]))
            .collect(),
    )
}

fn check_slack_shapes(p: &GeneralizedPlant, s: &SlackExpr) -> Result<()> {
    let (n, pz, mj) = (p.n(), p.p_z(), p.m_w());
    for (name, m, shape) in [
        ("X", &s.x, (pz, mj)),
        ("Y", &s.y, (pz, n)),
        ("Z", &s.z, (pz, n)),
    ] {
        if (m.rows(), m.cols()) != shape {
            return Err(Error::DimensionMismatch(format!(
                "slack {name} is {}x{}, expected {}x{}",
                m.rows(),
                m.cols(),
                shape.0,
                shape.1
            )));
        }
    }
    Ok(())
}

/// The 4×4 block matrix of the minimum-gain synthesis BMI (to be `≺ 0`).
///
/// Either the filter variables or the slacks must be constant; `nu2` is 1×1.
pub fn n_block(
    p: &GeneralizedPlant,
    f: &FilterExpr,
    s: &SlackExpr,
    nu2: &AffineMat,
) -> Result<AffineMat> {
    check_slack_shapes(p, s)?;
    let t = transformed_closed_loop(p, f)?;
    let (mj, pz) = (p.m_w(), p.p_z());
    // G = [𝒴 𝒵] pairs with C~ = [C1 Y1 + D12 Cn, C1 + D12 Dn C2].
    let g = AffineMat::blocks(&[vec![&s.y, &s.z]]);
    let ct = t.c.transpose();
    let n11 = t.a.he().sub(&ct.mul(&g)?.he());
    let n13 = t.b.sub(&ct.mul(&s.x)?).sub(&g.transpose().mul(&t.d)?);
    let n14 = g.transpose();
    let n33 = scalar_identity(nu2, mj).sub(&s.x.transpose().mul(&t.d)?.he());
    let n34 = s.x.transpose();
    let n44 = AffineMat::constant(-DMatrix::identity(pz, pz));
    Ok(AffineMat::blocks(&[
        vec![&n11, &n13, &n14],
        vec![&n13.transpose(), &n33, &n34],
        vec![&g, &s.x, &n44],
    ]))
}

pub fn build_m_lmi(p: &GeneralizedPlant, f: &FilterExpr, gamma: f64) -> Result<LmiBlock> {
    Ok(LmiBlock::new(
        "M",
        m_block(p, f, gamma)?,
        Sense::Negative,
        true,
    ))
}

/// N with fixed slacks: affine in the filter variables and `ν²`.
pub fn build_n_bmi_fixed_slack(
    p: &GeneralizedPlant,
    f: &FilterExpr,
    slack: &SlackVars,
    nu2: &AffineMat,
) -> Result<LmiBlock> {
    Ok(LmiBlock::new(
        "N",
        n_block(p, f, &slack.expr(), nu2)?,
        Sense::Negative,
        true,
    ))
}

/// N with fixed filter variables: affine in the slacks and `ν²`.
pub fn build_n_bmi_fixed_vars(
    p: &GeneralizedPlant,
    f: &FilterVars,
    slack: &SlackExpr,
    nu2: &AffineMat,
) -> Result<LmiBlock> {
    Ok(LmiBlock::new(
        "N",
        n_block(p, &f.expr(), slack, nu2)?,
        Sense::Negative,
        true,
    ))
}

/// `[X1 I; I Y1] ≻ 0`.
pub fn build_coupling_lmi(x1: &AffineMat, y1: &AffineMat) -> LmiBlock {
    let eye = AffineMat::identity(x1.rows());
    let f = AffineMat::blocks(&[vec![x1, &eye], vec![&eye, y1]]);
    LmiBlock::new("coupling", f, Sense::Positive, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::{Channel, PlantMatrices};

    fn plant(n: usize, mw: usize, pz: usize, py: usize, mu: usize) -> GeneralizedPlant {
        let f = |r: usize, c: usize, s: f64| {
            DMatrix::from_fn(r, c, |i, j| (((i * 7 + j * 3) as f64 + 1.0) * s).sin())
        };
        GeneralizedPlant::new(
            PlantMatrices {
                a: f(n, n, 0.3),
                b1: f(n, mw, 0.5),
                b2: f(n, mu, 0.7),
                c1: f(pz, n, 1.1),
                c2: f(py, n, 1.3),
                d11: f(pz, mw, 1.7),
                d12: f(pz, mu, 1.9),
                d21: f(py, mw, 2.3),
                d22: DMatrix::zeros(py, mu),
            },
            vec![Channel::new("f", 0, mw)],
            Vec::new(),
        )
        .unwrap()
    }

    fn zero_filter(n: usize, mu: usize, py: usize) -> FilterVars {
        FilterVars {
            x1: DMatrix::zeros(n, n),
            y1: DMatrix::zeros(n, n),
            an: DMatrix::zeros(n, n),
            bn: DMatrix::zeros(n, py),
            cn: DMatrix::zeros(mu, n),
            dn: DMatrix::zeros(mu, py),
        }
    }

    #[test]
    fn m_block_at_zero_vars() {
        let mut p = plant(2, 1, 1, 1, 1).matrices();
        p.a = DMatrix::zeros(2, 2);
        p.b1 = DMatrix::zeros(2, 1);
        let p = GeneralizedPlant::new(p, Vec::new(), Vec::new()).unwrap();
        let m = m_block(&p, &zero_filter(2, 1, 1).expr(), 3.0)
            .unwrap()
            .eval(&[]);
        assert!(m.view((0, 0), (4, 4)).iter().all(|v| *v == 0.0));
        assert_eq!(m[(4, 4)], -9.0);
        assert_eq!(m[(5, 5)], -1.0);
        assert_eq!(m[(4, 5)], p.d11()[(0, 0)]);
    }

    #[test]
    fn step0_slack_structure() {
        let p = plant(2, 1, 1, 2, 1);
        let f = zero_filter(2, 1, 2);
        let s = SlackVars::initial(1, 1, 2);
        let nb = n_block(&p, &f.expr(), &s.expr(), &AffineMat::zeros(1, 1))
            .unwrap()
            .eval(&[]);
        // rows: 4 (state), 1 (fault), 1 (z)
        assert!(nb.view((0, 5), (4, 1)).iter().all(|v| *v == 0.0));
        assert_eq!(nb[(4, 5)], 1.0);
        assert_eq!(nb[(5, 5)], -1.0);
    }

    #[test]
    fn bilinear_product_rejected() {
        let p = plant(1, 1, 1, 1, 1);
        let mut vs = VarSpace::new();
        let ids = FilterVarIds::declare(&mut vs, 1, 1, 1, "");
        let sids = SlackVarIds::declare(&mut vs, 1, 1, 1);
        let r = n_block(&p, &ids.expr(&vs), &sids.expr(&vs), &AffineMat::zeros(1, 1));
        assert!(r.is_err());
    }

    #[test]
    fn coupling_examples() {
        let two = AffineMat::constant(DMatrix::identity(2, 2) * 2.0);
        let one = AffineMat::identity(2);
        assert!(build_coupling_lmi(&two, &two).slack(&[]) > 0.0);
        assert!(build_coupling_lmi(&one, &one).slack(&[]) < 0.0);
        assert!(build_coupling_lmi(&two, &one).slack(&[]) > 0.0);
    }
}
