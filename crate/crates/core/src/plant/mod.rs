//! Partitioned generalized plant, closed-loop LFT with a filter, and channel selection.

mod fdi;

pub use fdi::{build_fdi_plant, FdiLoop, ShapingWeights, MINREAL_TOL};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::lti::StateSpace;

/// Relative threshold on `sigma_min(I - D22 Dc)` below which a loop is ill-posed.
pub const WELL_POSED_TOL: f64 = 1e-10;

/// A named contiguous slice of an input or output axis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Channel {
    pub name: String,
    pub start: usize,
    pub width: usize,
}

impl Channel {
    pub fn new(name: impl Into<String>, start: usize, width: usize) -> Self {
        Self {
            name: name.into(),
            start,
            width,
        }
    }

    pub fn indices(&self) -> Vec<usize> {
        (self.start..self.start + self.width).collect()
    }
}

/// Generalized plant
///
/// ```text
///   dx = A x  + B1 w  + B2 u
///   z  = C1 x + D11 w + D12 u
///   y  = C2 x + D21 w + D22 u
/// ```
///
/// with labelled channel slices of `w` (e.g. disturbances `d` and faults `f`)
/// and of `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedPlant {
    a: DMatrix<f64>,
    b1: DMatrix<f64>,
    b2: DMatrix<f64>,
    c1: DMatrix<f64>,
    c2: DMatrix<f64>,
    d11: DMatrix<f64>,
    d12: DMatrix<f64>,
    d21: DMatrix<f64>,
    d22: DMatrix<f64>,
    w_channels: Vec<Channel>,
    z_channels: Vec<Channel>,
}

/// Matrices of a plant, in the order `A, B1, B2, C1, C2, D11, D12, D21, D22`.
#[derive(Debug, Clone)]
pub struct PlantMatrices {
    pub a: DMatrix<f64>,
    pub b1: DMatrix<f64>,
    pub b2: DMatrix<f64>,
    pub c1: DMatrix<f64>,
    pub c2: DMatrix<f64>,
    pub d11: DMatrix<f64>,
    pub d12: DMatrix<f64>,
    pub d21: DMatrix<f64>,
    pub d22: DMatrix<f64>,
}

fn check_partition(axis: &str, channels: &[Channel], len: usize) -> Result<()> {
    let mut sorted: Vec<&Channel> = channels.iter().collect();
    sorted.sort_by_key(|c| c.start);
    let mut next = 0;
    for ch in sorted {
        if ch.start != next || ch.width == 0 {
            return Err(Error::DimensionMismatch(format!(
                "{axis} channels must partition [0, {len}) without gaps or overlap (at `{}`)",
                ch.name
            )));
        }
        next += ch.width;
    }
    if next != len {
        return Err(Error::DimensionMismatch(format!(
            "{axis} channels cover [0, {next}) but the axis has width {len}"
        )));
    }
    let mut names: Vec<&str> = channels.iter().map(|c| c.name.as_str()).collect();
    names.sort_unstable();
    if names.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidProblem(format!(
            "duplicate {axis} channel label"
        )));
    }
    Ok(())
}

impl GeneralizedPlant {
    pub fn new(
        m: PlantMatrices,
        w_channels: Vec<Channel>,
        z_channels: Vec<Channel>,
    ) -> Result<Self> {
        let n = m.a.nrows();
        let (mw, mu) = (m.b1.ncols(), m.b2.ncols());
        let (pz, py) = (m.c1.nrows(), m.c2.nrows());
        let shapes = [
            ("A", m.a.shape(), (n, n)),
            ("B1", m.b1.shape(), (n, mw)),
            ("B2", m.b2.shape(), (n, mu)),
            ("C1", m.c1.shape(), (pz, n)),
            ("C2", m.c2.shape(), (py, n)),
            ("D11", m.d11.shape(), (pz, mw)),
            ("D12", m.d12.shape(), (pz, mu)),
            ("D21", m.d21.shape(), (py, mw)),
            ("D22", m.d22.shape(), (py, mu)),
        ];
        for (name, got, want) in shapes {
            if got != want {
                return Err(Error::DimensionMismatch(format!(
                    "{name} is {}x{}, expected {}x{}",
                    got.0, got.1, want.0, want.1
                )));
            }
        }
        let w_channels = if w_channels.is_empty() {
            vec![Channel::new("w", 0, mw)]
        } else {
            w_channels
        };
        let z_channels = if z_channels.is_empty() {
            vec![Channel::new("z", 0, pz)]
        } else {
            z_channels
        };
        if mw > 0 {
            check_partition("w", &w_channels, mw)?;
        }
        if pz > 0 {
            check_partition("z", &z_channels, pz)?;
        }
        Ok(Self {
            a: m.a,
            b1: m.b1,
            b2: m.b2,
            c1: m.c1,
            c2: m.c2,
            d11: m.d11,
            d12: m.d12,
            d21: m.d21,
            d22: m.d22,
            w_channels,
            z_channels,
        })
    }

    pub fn matrices(&self) -> PlantMatrices {
        PlantMatrices {
            a: self.a.clone(),
            b1: self.b1.clone(),
            b2: self.b2.clone(),
            c1: self.c1.clone(),
            c2: self.c2.clone(),
            d11: self.d11.clone(),
            d12: self.d12.clone(),
            d21: self.d21.clone(),
            d22: self.d22.clone(),
        }
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }
    pub fn b1(&self) -> &DMatrix<f64> {
        &self.b1
    }
    pub fn b2(&self) -> &DMatrix<f64> {
        &self.b2
    }
    pub fn c1(&self) -> &DMatrix<f64> {
        &self.c1
    }
    pub fn c2(&self) -> &DMatrix<f64> {
        &self.c2
    }
    pub fn d11(&self) -> &DMatrix<f64> {
        &self.d11
    }
    pub fn d12(&self) -> &DMatrix<f64> {
        &self.d12
    }
    pub fn d21(&self) -> &DMatrix<f64> {
        &self.d21
    }
    pub fn d22(&self) -> &DMatrix<f64> {
        &self.d22
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }
    /// Width of the generalized disturbance `w`.
    pub fn m_w(&self) -> usize {
        self.b1.ncols()
    }
    /// Width of the filter output `u`.
    pub fn m_u(&self) -> usize {
        self.b2.ncols()
    }
    /// Width of the performance output `z`.
    pub fn p_z(&self) -> usize {
        self.c1.nrows()
    }
    /// Width of the measurement `y`.
    pub fn p_y(&self) -> usize {
        self.c2.nrows()
    }

    pub fn w_channels(&self) -> &[Channel] {
        &self.w_channels
    }

    pub fn z_channels(&self) -> &[Channel] {
        &self.z_channels
    }

    pub fn channel(&self, name: &str) -> Result<&Channel> {
        self.w_channels
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| Error::UnknownChannel(name.to_string()))
    }

    /// Selector picking the `w` slice `name` and every `z` output.
    pub fn input_selector(&self, name: &str) -> Result<ChannelSelector> {
        let ch = self.channel(name)?;
        let r = DMatrix::from_fn(self.m_w(), ch.width, |i, j| {
            (i == ch.start + j) as u8 as f64
        });
        ChannelSelector::new(DMatrix::identity(self.p_z(), self.p_z()), r)
    }

    /// The open-loop plant as one system from `[w; u]` to `[z; y]`.
    pub fn open_loop(&self) -> StateSpace {
        StateSpace::new(
            self.a.clone(),
            linalg::hstack(&self.b1, &self.b2),
            linalg::vstack(&self.c1, &self.c2),
            linalg::blocks(&[vec![&self.d11, &self.d12], vec![&self.d21, &self.d22]]),
        )
        .expect("plant blocks are consistent")
    }
}

/// Output/input selection `T_j = L T R`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSelector {
    l: DMatrix<f64>,
    r: DMatrix<f64>,
}

impl ChannelSelector {
    pub fn new(l: DMatrix<f64>, r: DMatrix<f64>) -> Result<Self> {
        let rank = |m: &DMatrix<f64>| -> usize {
            if m.nrows() == 0 || m.ncols() == 0 {
                0
            } else {
                m.clone()
                    .svd(false, false)
                    .rank(1e-12 * linalg::max_abs(m).max(1e-300))
            }
        };
        if rank(&l) != l.nrows() {
            return Err(Error::DimensionMismatch("L must have full row rank".into()));
        }
        if rank(&r) != r.ncols() {
            return Err(Error::DimensionMismatch(
                "R must have full column rank".into(),
            ));
        }
        Ok(Self { l, r })
    }

    pub fn l(&self) -> &DMatrix<f64> {
        &self.l
    }
    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }
}

/// `B1 <- B1 R`, `C1 <- L C1`, `D11 <- L D11 R`, `D12 <- L D12`, `D21 <- D21 R`.
pub fn select_channel(p: &GeneralizedPlant, sel: &ChannelSelector) -> Result<GeneralizedPlant> {
    if sel.l.ncols() != p.p_z() || sel.r.nrows() != p.m_w() {
        return Err(Error::DimensionMismatch(format!(
            "selector L {}x{}, R {}x{} for p_z = {}, m_w = {}",
            sel.l.nrows(),
            sel.l.ncols(),
            sel.r.nrows(),
            sel.r.ncols(),
            p.p_z(),
            p.m_w()
        )));
    }
    let m = PlantMatrices {
        a: p.a.clone(),
        b1: &p.b1 * &sel.r,
        b2: p.b2.clone(),
        c1: &sel.l * &p.c1,
        c2: p.c2.clone(),
        d11: &sel.l * &p.d11 * &sel.r,
        d12: &sel.l * &p.d12,
        d21: &p.d21 * &sel.r,
        d22: p.d22.clone(),
    };
    GeneralizedPlant::new(m, Vec::new(), Vec::new())
}

/// `(I - D22 Dc)^{-1}` or [`Error::IllPosedLoop`].
pub fn loop_inverse(d22: &DMatrix<f64>, dc: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let py = d22.nrows();
    let m = DMatrix::<f64>::identity(py, py) - d22 * dc;
    if py == 0 {
        return Ok(m);
    }
    let scale = 1.0_f64.max(linalg::sigma_max_real(d22) * linalg::sigma_max_real(dc));
    let smin = linalg::sigma_min_gain_real(&m);
    if !(smin > WELL_POSED_TOL * scale) {
        return Err(Error::IllPosedLoop);
    }
    m.try_inverse().ok_or(Error::IllPosedLoop)
}

/// Lower LFT `T = F_l(P, Q)` from `w` to `z`, with closed-loop state `[x; x_c]`.
pub fn close_loop(p: &GeneralizedPlant, q: &StateSpace) -> Result<StateSpace> {
    if q.inputs() != p.p_y() || q.outputs() != p.m_u() {
        return Err(Error::DimensionMismatch(format!(
            "filter is {}x{} but the plant needs {}x{} (outputs x inputs)",
            q.outputs(),
            q.inputs(),
            p.m_u(),
            p.p_y()
        )));
    }
    let (ac, bc, cc, dc) = (q.a(), q.b(), q.c(), q.d());
    let dbar = loop_inverse(&p.d22, dc)?;
    let mu = p.m_u();
    let dcdbar = dc * &dbar;
    let pass = DMatrix::<f64>::identity(mu, mu) + &dcdbar * &p.d22;
    let a = linalg::blocks(&[
        vec![&(&p.a + &p.b2 * &dcdbar * &p.c2), &(&p.b2 * &pass * cc)],
        vec![&(bc * &dbar * &p.c2), &(ac + bc * &dbar * &p.d22 * cc)],
    ]);
    let b = linalg::vstack(&(&p.b1 + &p.b2 * &dcdbar * &p.d21), &(bc * &dbar * &p.d21));
    let c = linalg::hstack(&(&p.c1 + &p.d12 * &dcdbar * &p.c2), &(&p.d12 * &pass * cc));
    let d = &p.d11 + &p.d12 * &dcdbar * &p.d21;
    StateSpace::new(a, b, c, d)
}

/// Outcome of the structural H- feasibility gate for a fault channel.
#[derive(Debug, Clone, PartialEq)]
pub enum FeasibilityDiagnostic {
    Ok,
    /// No proper filter can give the fault channel a nonzero high-frequency gain.
    StructurallyZero {
        message: String,
    },
}

impl FeasibilityDiagnostic {
    pub fn is_ok(&self) -> bool {
        matches!(self, FeasibilityDiagnostic::Ok)
    }
}

/// Checks whether `D11,f + D12 Dc D21,f` can have full column rank for some `Dc`.
///
/// The rank is generic in `Dc`, so a handful of fixed dense trial matrices decide it.
pub fn check_hminus_feasibility(
    p: &GeneralizedPlant,
    fault_channel: &str,
) -> Result<FeasibilityDiagnostic> {
    let ch = p.channel(fault_channel)?.clone();
    let cols = ch.indices();
    let d11f = DMatrix::from_fn(p.p_z(), cols.len(), |i, j| p.d11[(i, cols[j])]);
    let d21f = DMatrix::from_fn(p.p_y(), cols.len(), |i, j| p.d21[(i, cols[j])]);
    if p.p_z() < ch.width {
        return Ok(FeasibilityDiagnostic::StructurallyZero {
            message: format!(
                "residual has {} outputs but fault channel `{}` has {} inputs; the minimum gain is zero",
                p.p_z(),
                ch.name,
                ch.width
            ),
        });
    }
    let scale = linalg::max_abs(&d11f)
        .max(linalg::max_abs(&p.d12) * linalg::max_abs(&d21f))
        .max(1e-300);
    let mut best = 0.0_f64;
    for k in 0..4 {
        let dc = if k == 0 {
            DMatrix::zeros(p.m_u(), p.p_y())
        } else {
            DMatrix::from_fn(p.m_u(), p.p_y(), |i, j| {
                (1.3 + 2.1 * k as f64 + 0.7 * i as f64 + 1.9 * j as f64).sin()
            })
        };
        let feed = &d11f + &p.d12 * dc * &d21f;
        best = best.max(linalg::sigma_min_gain_real(&feed));
    }
    if best > 1e-9 * scale {
        Ok(FeasibilityDiagnostic::Ok)
    } else {
        Ok(FeasibilityDiagnostic::StructurallyZero {
            message: format!(
                "fault channel `{}` is strictly proper for every proper filter: the feedthrough \
                 D11,f + D12 Dc D21,f has rank below {} for all Dc, so its minimum gain (H- index) \
                 is zero and the synthesis is infeasible; add a biproper or improper fault weight \
                 so that the fault reaches the residual at high frequency",
                ch.name, ch.width
            ),
        })
    }
}
