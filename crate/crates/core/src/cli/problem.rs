use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lti::ss::{matrix_from_rows, rows_of};
use crate::lti::{RationalTF, StateSpace, StateSpaceData, TfCoeffs};
use crate::plant::{Channel, FdiLoop, GeneralizedPlant, PlantMatrices, ShapingWeights};

pub const SCHEMA_VERSION: u32 = 1;

/// Problem description: a plant in one of two layouts plus synthesis settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub schema_version: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loop_transfers: Option<LoopTransfers>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generalized_plant: Option<PlantSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthesis: Option<SynthesisSection>,
}

/// SISO loop `G`, `C` with shaping filters `G_d`, `G_f`, as descending coefficients.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopTransfers {
    pub g: TfCoeffs,
    pub c: TfCoeffs,
    pub gd: TfCoeffs,
    pub gf: TfCoeffs,
}

/// Partitioned plant with explicit dimensions and row-major matrices.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSection {
    pub n: usize,
    pub m_w: usize,
    pub m_u: usize,
    pub p_z: usize,
    pub p_y: usize,
    pub a: Vec<Vec<f64>>,
    pub b1: Vec<Vec<f64>>,
    pub b2: Vec<Vec<f64>>,
    pub c1: Vec<Vec<f64>>,
    pub c2: Vec<Vec<f64>>,
    pub d11: Vec<Vec<f64>>,
    pub d12: Vec<Vec<f64>>,
    pub d21: Vec<Vec<f64>>,
    pub d22: Vec<Vec<f64>>,
    pub w_channels: Vec<Channel>,
    #[serde(default)]
    pub z_channels: Vec<Channel>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesisSection {
    pub gamma0: Option<f64>,
    pub mu: Option<f64>,
    pub max_outer_iters: Option<usize>,
    pub disturbance_channel: Option<String>,
    pub fault_channel: Option<String>,
    pub shared_lyapunov: Option<bool>,
    pub gap_tol: Option<f64>,
    pub feas_tol: Option<f64>,
    pub max_sdp_iters: Option<usize>,
    pub variable_bound: Option<f64>,
    pub norm_tol: Option<f64>,
}

/// Plant ready for analysis, with the shaping weights when the loop layout was used.
#[derive(Debug, Clone)]
pub struct LoadedProblem {
    pub plant: GeneralizedPlant,
    pub weights: Option<ShapingWeights>,
    pub synthesis: SynthesisSection,
}

impl PlantSection {
    pub fn from_plant(p: &GeneralizedPlant) -> Self {
        let m = p.matrices();
        Self {
            n: p.n(),
            m_w: p.m_w(),
            m_u: p.m_u(),
            p_z: p.p_z(),
            p_y: p.p_y(),
            a: rows_of(&m.a),
            b1: rows_of(&m.b1),
            b2: rows_of(&m.b2),
            c1: rows_of(&m.c1),
            c2: rows_of(&m.c2),
            d11: rows_of(&m.d11),
            d12: rows_of(&m.d12),
            d21: rows_of(&m.d21),
            d22: rows_of(&m.d22),
            w_channels: p.w_channels().to_vec(),
            z_channels: p.z_channels().to_vec(),
        }
    }

    pub fn to_plant(&self) -> Result<GeneralizedPlant> {
        let (n, mw, mu, pz, py) = (self.n, self.m_w, self.m_u, self.p_z, self.p_y);
        let m = PlantMatrices {
            a: matrix_from_rows("a", &self.a, n, n)?,
            b1: matrix_from_rows("b1", &self.b1, n, mw)?,
            b2: matrix_from_rows("b2", &self.b2, n, mu)?,
            c1: matrix_from_rows("c1", &self.c1, pz, n)?,
            c2: matrix_from_rows("c2", &self.c2, py, n)?,
            d11: matrix_from_rows("d11", &self.d11, pz, mw)?,
            d12: matrix_from_rows("d12", &self.d12, pz, mu)?,
            d21: matrix_from_rows("d21", &self.d21, py, mw)?,
            d22: matrix_from_rows("d22", &self.d22, py, mu)?,
        };
        GeneralizedPlant::new(m, self.w_channels.clone(), self.z_channels.clone())
    }
}

impl LoopTransfers {
    pub fn to_loop(&self) -> Result<FdiLoop> {
        let tf = |name: &str, c: &TfCoeffs| {
            RationalTF::from_coeffs(c)
                .map_err(|e| Error::InvalidProblem(format!("loop_transfers.{name}: {e}")))
        };
        Ok(FdiLoop {
            g: tf("g", &self.g)?,
            c: tf("c", &self.c)?,
            gd: tf("gd", &self.gd)?,
            gf: tf("gf", &self.gf)?,
        })
    }
}

impl ProblemFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidProblem(e.to_string()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidProblem(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Checks the layout rules and builds the plant.
    pub fn load(&self) -> Result<LoadedProblem> {
        match self.schema_version {
            None => {
                return Err(Error::InvalidProblem(
                    "missing field `schema_version`".into(),
                ))
            }
            Some(SCHEMA_VERSION) => {}
            Some(v) => {
                return Err(Error::InvalidProblem(format!(
                    "unsupported schema_version {v} (expected {SCHEMA_VERSION})"
                )))
            }
        }
        let (plant, weights) = match (&self.loop_transfers, &self.generalized_plant) {
            (Some(lt), None) => {
                let l = lt.to_loop()?;
                (l.plant()?, Some(l.weights()))
            }
            (None, Some(gp)) => (gp.to_plant()?, None),
            (Some(_), Some(_)) => {
                return Err(Error::InvalidProblem(
                    "give either `loop_transfers` or `generalized_plant`, not both".into(),
                ))
            }
            (None, None) => {
                return Err(Error::InvalidProblem(
                    "missing field `loop_transfers` (or `generalized_plant`)".into(),
                ))
            }
        };
        Ok(LoadedProblem {
            plant,
            weights,
            synthesis: self.synthesis.clone().unwrap_or_default(),
        })
    }
}

/// Filter realization file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterFile {
    pub schema_version: u32,
    pub filter: StateSpaceData,
}

impl FilterFile {
    pub fn new(q: &StateSpace) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            filter: q.to_data(),
        }
    }

    pub fn read(path: &Path) -> Result<StateSpace> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidProblem(format!("cannot read {}: {e}", path.display())))?;
        let f: FilterFile =
            serde_json::from_str(&text).map_err(|e| Error::InvalidProblem(e.to_string()))?;
        if f.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidProblem(format!(
                "unsupported filter schema_version {}",
                f.schema_version
            )));
        }
        StateSpace::from_data(&f.filter)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}
