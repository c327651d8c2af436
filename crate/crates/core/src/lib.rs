//! Fault-detection filter synthesis by direct shaping of the minimum singular
//! value of the fault channel and the maximum singular value of the
//! disturbance channel (H-/H-infinity), using sequential LMI programs solved by
//! an embedded semidefinite-programming solver.

pub mod cli;
pub mod error;
pub mod linalg;
pub mod lmi;
pub mod lti;
pub mod plant;
pub mod sdp;
pub mod synth;

pub use error::{Error, Result};
