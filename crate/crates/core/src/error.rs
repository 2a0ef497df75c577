use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: half-width {left} vs {right}")]
    GridMismatch { left: usize, right: usize },

    #[error("resolved half-width is not set on this grid")]
    ResolvedSetMissing,

    #[error("input has nonzero coefficients outside the resolved set (max magnitude {magnitude:e})")]
    SupportViolation { magnitude: f64 },

    #[error("invalid reduced model configuration: {0}")]
    InvalidConfig(String),

    #[error("negative time {0} passed to a time-dependent right-hand side")]
    NegativeTime(f64),

    #[error("invalid integrator settings: {0}")]
    InvalidSettings(String),

    #[error("step size underflow at t = {t} (h = {step:e})")]
    StepUnderflow { t: f64, step: f64 },

    #[error("non-finite state encountered at t = {t}")]
    NonFinite { t: f64 },

    #[error("trajectory never resolved or sampled too coarsely: resolved window is empty")]
    EmptyWindow,

    #[error("rank-deficient regressor matrix (condition number {condition:e})")]
    RankDeficient { condition: f64 },

    #[error("coefficient {index} changes sign across resolutions; scaling-law form is invalid")]
    SignChange { index: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid trajectory file {path:?}: {reason}")]
    InvalidTrajectory { path: PathBuf, reason: String },

    #[error("invalid manifest: {0}")]
    InvalidManifest(String),

    #[error("invalid table {path:?}: {reason}")]
    InvalidTable { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
