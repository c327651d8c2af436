//! Dense state-space and SISO rational transfer-function algebra.

pub mod freq;
pub mod norms;
pub mod poly;
pub mod ss;
pub mod tf;

pub use freq::FrequencyGrid;
pub use norms::{hinf_norm, hminus_index, is_hurwitz, DEFAULT_NORM_TOL, STABILITY_MARGIN};
pub use poly::Poly;
pub use ss::{StateSpace, StateSpaceData};
pub use tf::{tf_arith, tf_to_ss, RationalTF, TfCoeffs, TfOp};
