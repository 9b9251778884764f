// Copyright 2026 fqnv Contributors
// SPDX-License-Identifier: Apache-2.0

use std::fmt;

/// Stage of the parameter-estimation pipeline that produced an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineStage {
    QubitDecay,
    Sampling,
    Separation,
    Ratio,
    Coupling,
    Gammas,
}

impl fmt::Display for PipelineStage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Self::QubitDecay => "qubit_decay",
            Self::Sampling => "sampling",
            Self::Separation => "separation",
            Self::Ratio => "ratio",
            Self::Coupling => "coupling",
            Self::Gammas => "gammas",
        };
        f.write_str(name)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid frequency grid: {0}")]
    InvalidGrid(String),

    #[error("detuning {delta} MHz outside perturbative range |delta| <= {limit} MHz")]
    PerturbationOutOfRange { delta: f64, limit: f64 },

    #[error("response has a pole on the real axis at {omega} MHz")]
    PoleAtRealAxis { omega: f64 },

    #[error("ensemble response diverges at {omega} MHz")]
    DivergentResponse { omega: f64 },

    #[error("expected {expected} resolved peaks, found {found}")]
    PeaksNotResolved { expected: usize, found: usize },

    #[error("steady state is not unique (second kernel vector residual {residual:.3e})")]
    NonUniqueSteadyState { residual: f64 },

    #[error("steady-state solver failed: {0}")]
    SolverFailure(String),

    #[error("at {omega} MHz: {source}")]
    AtFrequency { omega: f64, source: Box<Error> },

    #[error("fit window has no interior maximum")]
    NoInteriorPeak,

    #[error("fit window holds {found} points, need at least {needed}")]
    InsufficientData { found: usize, needed: usize },

    #[error("least squares did not converge after {iterations} iterations")]
    NotConverged { iterations: usize },

    #[error("fit produced a non-positive width {gamma}")]
    NonPositiveGamma { gamma: f64 },

    #[error("{stage} stage failed: {source}")]
    Pipeline { stage: PipelineStage, source: Box<Error> },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn at(omega: f64) -> impl FnOnce(Error) -> Error {
        move |e| Error::AtFrequency { omega, source: Box::new(e) }
    }

    pub(crate) fn stage(stage: PipelineStage) -> impl FnOnce(Error) -> Error {
        move |e| Error::Pipeline { stage, source: Box::new(e) }
    }

    /// The innermost error, with frequency and stage wrappers removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtFrequency { source, .. } | Error::Pipeline { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for malformed input, as opposed to a numerical failure.
    pub fn is_config(&self) -> bool {
        matches!(
            self.root(),
            Error::InvalidParameter(_)
                | Error::InvalidGrid(_)
                | Error::Config(_)
                | Error::Json(_)
                | Error::PerturbationOutOfRange { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
