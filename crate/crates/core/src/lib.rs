//! Numerical core for studying renormalized solutions of stochastic continuity equations.

pub mod commutator;
pub mod error;
pub mod field;
pub mod flow;
pub mod io;
pub mod parabolic;
pub mod presets;
pub mod zvonkin;
pub mod rng;
pub mod scalar;
pub mod stats;
pub mod weakform;

pub use error::{CoreError, Result};
pub use scalar::Scalar;

pub type Grid64 = field::Grid<f64>;
pub type ScalarField = field::GridScalar<f64>;
pub type VectorField = field::GridVector<f64>;
pub type TimeVectorField = field::TimeGridVector<f64>;
pub type Kernel = field::MollifierKernel<f64>;
