use thiserror::Error;

/// Errors raised across the analysis, synthesis and file-handling layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("resolvent (jwI - A) is numerically singular at w = {omega}")]
    SingularResolvent { omega: f64 },

    #[error("system is not asymptotically stable (max Re(eig) = {max_real_part:e})")]
    UnstableSystem { max_real_part: f64 },

    #[error("degenerate fraction: {0}")]
    DegenerateFraction(String),

    #[error("transfer function is improper (numerator degree {num} > denominator degree {den})")]
    ImproperTransfer { num: usize, den: usize },

    #[error("feedback loop is ill-posed: I - D22*Dc is singular")]
    IllPosedLoop,

    #[error("generalized plant entry {entry} is improper")]
    ImproperEntry { entry: String },

    #[error("generalized plant entry {entry} is unstable")]
    UnstableEntry { entry: String },

    #[error("unknown channel label `{0}`")]
    UnknownChannel(String),

    #[error("filter recovery failed: I + Dc2*D22 is singular")]
    SingularRecovery,

    #[error("matrix completion failed: I - X1*Y1 is singular")]
    SingularCompletion,

    #[error("synthesis LMI is infeasible at step 1: {0}")]
    InfeasibleAtStep1(String),

    #[error("semidefinite program failed: {0}")]
    Solver(String),

    #[error("closed loop is unstable")]
    UnstableLoop,

    #[error("post-scaling transfer is improper")]
    ImproperScaling,

    #[error("post-scaling transfer is unstable (disturbance channel has right-half-plane zeros)")]
    UnstableScaling,

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
