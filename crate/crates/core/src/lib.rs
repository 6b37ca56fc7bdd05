//! Equilibrium and efficient consumption paths for competitive credit
//! contracts with an agent whose discount factor is private, random and
//! i.i.d. over time, and who may be more optimistic about future patience
//! than the firms lending to him.
//!
//! Everything is generic over the scalar type ([`Real`], implemented for
//! `f32` and `f64`); the aliases at the crate root fix `f64`.

pub mod bisection;
pub mod error;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod scalar;
pub mod sec3;
pub mod sec4;
pub mod utility;

pub use error::SolveError;
pub use scalar::Real;

pub type ModelConfig = model::ModelConfig<f64>;
pub type Income = model::Income<f64>;
pub type Policy = model::Policy<f64>;
pub type UtilitySpec = utility::UtilitySpec<f64>;
pub type DiscountRepresentation = model::DiscountRepresentation<f64>;
pub type PathSolution = sec3::PathSolution<f64>;
pub type WelfareReport = sec3::WelfareReport<f64>;
pub type ReducedSolution = sec4::ReducedSolution<f64>;
pub type EfficientSolution = sec4::EfficientSolution<f64>;
pub type FullSolution = oracle::FullSolution<f64>;
