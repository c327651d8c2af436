//! Entry-by-entry transcription of the synthesis blocks, written without the
//! affine-expression layer so the builders can be checked against it.

use fdisynth::lmi::{FilterVars, SlackVars};
use fdisynth::plant::GeneralizedPlant;
use nalgebra::DMatrix;

/// Plant matrices restricted to input columns `cols`.
pub struct ChannelMatrices {
    pub a: DMatrix<f64>,
    pub b1: DMatrix<f64>,
    pub b2: DMatrix<f64>,
    pub c1: DMatrix<f64>,
    pub c2: DMatrix<f64>,
    pub d11: DMatrix<f64>,
    pub d12: DMatrix<f64>,
    pub d21: DMatrix<f64>,
}

impl ChannelMatrices {
    pub fn new(p: &GeneralizedPlant, cols: &[usize]) -> Self {
        Self {
            a: p.a().clone(),
            b1: p.b1().select_columns(cols),
            b2: p.b2().clone(),
            c1: p.c1().clone(),
            c2: p.c2().clone(),
            d11: p.d11().select_columns(cols),
            d12: p.d12().clone(),
            d21: p.d21().select_columns(cols),
        }
    }
}

fn assemble(b: [[&DMatrix<f64>; 4]; 4]) -> DMatrix<f64> {
    let rows: Vec<usize> = (0..4).map(|i| b[i][i].nrows()).collect();
    let total: usize = rows.iter().sum();
    let mut out = DMatrix::zeros(total, total);
    let mut r0 = 0;
    for i in 0..4 {
        let mut c0 = 0;
        for j in 0..4 {
            let blk = if j >= i {
                b[i][j].clone()
            } else {
                b[j][i].transpose()
            };
            assert_eq!(blk.shape(), (rows[i], rows[j]), "block ({i},{j})");
            out.view_mut((r0, c0), (rows[i], rows[j])).copy_from(&blk);
            c0 += rows[j];
        }
        r0 += rows[i];
    }
    out
}

pub fn m_oracle(c: &ChannelMatrices, v: &FilterVars, gamma: f64) -> DMatrix<f64> {
    let (a, b1, b2, c1, c2) = (&c.a, &c.b1, &c.b2, &c.c1, &c.c2);
    let (d11, d12, d21) = (&c.d11, &c.d12, &c.d21);
    let (x1, y1, an, bn, cn, dn) = (&v.x1, &v.y1, &v.an, &v.bn, &v.cn, &v.dn);
    let (mj, pz) = (b1.ncols(), c1.nrows());
    let m11 = a * y1 + y1 * a.transpose() + b2 * cn + cn.transpose() * b2.transpose();
    let m12 = a + an.transpose() + b2 * dn * c2;
    let m13 = b1 + b2 * dn * d21;
    let m14 = y1 * c1.transpose() + cn.transpose() * d12.transpose();
    let m22 = x1 * a + a.transpose() * x1 + bn * c2 + c2.transpose() * bn.transpose();
    let m23 = x1 * b1 + bn * d21;
    let m24 = c1.transpose() + c2.transpose() * dn.transpose() * d12.transpose();
    let m33 = DMatrix::identity(mj, mj) * -(gamma * gamma);
    let m34 = d11.transpose() + d21.transpose() * dn.transpose() * d12.transpose();
    let m44 = -DMatrix::identity(pz, pz);
    let z = DMatrix::zeros(0, 0);
    assemble([
        [&m11, &m12, &m13, &m14],
        [&z, &m22, &m23, &m24],
        [&z, &z, &m33, &m34],
        [&z, &z, &z, &m44],
    ])
}

pub fn n_oracle(c: &ChannelMatrices, v: &FilterVars, s: &SlackVars, nu2: f64) -> DMatrix<f64> {
    let (a, b1, b2, c1, c2) = (&c.a, &c.b1, &c.b2, &c.c1, &c.c2);
    let (d11, d12, d21) = (&c.d11, &c.d12, &c.d21);
    let (x1, y1, an, bn, cn, dn) = (&v.x1, &v.y1, &v.an, &v.bn, &v.cn, &v.dn);
    let (sx, sy, sz) = (&s.x, &s.y, &s.z);
    let (mj, pz) = (b1.ncols(), c1.nrows());
    let m11 = a * y1 + y1 * a.transpose() + b2 * cn + cn.transpose() * b2.transpose();
    let m12 = a + an.transpose() + b2 * dn * c2;
    let m13 = b1 + b2 * dn * d21;
    let m22 = x1 * a + a.transpose() * x1 + bn * c2 + c2.transpose() * bn.transpose();
    let m23 = x1 * b1 + bn * d21;
    let left = y1 * c1.transpose() + cn.transpose() * d12.transpose();
    let right = c1.transpose() + c2.transpose() * dn.transpose() * d12.transpose();
    let dt = d11 + d12 * dn * d21;
    let n11 = &m11 - &left * sy - sy.transpose() * (c1 * y1 + d12 * cn);
    let n12 = &m12 - &left * sz - sy.transpose() * (c1 + d12 * dn * c2);
    let n13 = &m13 - sy.transpose() * &dt - &left * sx;
    let n14 = sy.transpose();
    let n22 = &m22 - &right * sz - sz.transpose() * (c1 + d12 * dn * c2);
    let n23 = &m23 - sz.transpose() * &dt - &right * sx;
    let n24 = sz.transpose();
    let n33 = DMatrix::identity(mj, mj) * nu2 - sx.transpose() * &dt - dt.transpose() * sx;
    let n34 = sx.transpose();
    let n44 = -DMatrix::identity(pz, pz);
    let z = DMatrix::zeros(0, 0);
    assemble([
        [&n11, &n12, &n13, &n14],
        [&z, &n22, &n23, &n24],
        [&z, &z, &n33, &n34],
        [&z, &z, &z, &n44],
    ])
}
