use thiserror::Error;

use crate::integrate::Outcome;
use crate::model::CumulantOrder;

#[derive(Debug, Error, Clone)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid cluster grid: {0}")]
    InvalidGrid(String),

    #[error("invalid initial state: {0}")]
    InvalidInitialState(String),

    #[error("fixed point iteration did not converge (last residual {residual:e})")]
    NoConvergence { residual: f64 },

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("no initial condition in the basin scan reached a stationary state: {0:?}")]
    BasinExhausted(Vec<(f64, Outcome)>),

    #[error("{order} run did not become stationary: {outcome:?}")]
    NotStationary { order: CumulantOrder, outcome: Outcome },

    #[error("x_sc = 0, normalized amplitude undefined")]
    UndefinedNormalization,

    #[error("boundary criterion never met for N in [{n_min}, {n_max}]")]
    BoundaryNotFound { n_min: f64, n_max: f64, trace: Vec<(f64, Option<[f64; 3]>)> },

    #[error("photon cutoff too small: top Fock population {population:e}")]
    Truncation { population: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unknown moment specification: {0}")]
    UnknownMoment(String),

    #[error("contract violation: {0}")]
    Contract(String),
}

pub type Result<T> = std::result::Result<T, Error>;
