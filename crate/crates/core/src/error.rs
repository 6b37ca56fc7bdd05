use thiserror::Error;

use crate::bisection::BracketFailure;
use crate::model::ConfigErrors;
use crate::scalar::Real;
use crate::sec4::ReducedSolution;
use crate::utility::DomainError;

#[derive(Debug, Clone, Error)]
pub enum SolveError<S: Real = f64> {
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigErrors),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Bracket(#[from] BracketFailure),
    #[error("{0}")]
    NotApplicable(String),
    #[error("continuation value after the high report at date {date} is below the utility floor")]
    InfeasibleContinuation { date: usize },
    #[error("reduced solution is not separating (w must fall and z must rise in the date-2 type)")]
    NonSeparating(Box<ReducedSolution<S>>),
    #[error("reduced solution is not interior (some utility is at or below the floor)")]
    NonInterior(Box<ReducedSolution<S>>),
    #[error("Newton iteration stalled after {iterations} steps (gradient norm {residual:e})")]
    NewtonFailed { iterations: usize, residual: f64 },
    #[error("full-program solve hit the iteration cap (stationarity {stationarity:e}, violation {violation:e})")]
    IterationCap { stationarity: f64, violation: f64 },
}
