//! Stochastic flows from grid seeds, their Jacobians, inverses and push-forward densities.

pub mod brownian;
pub mod coeffs;
pub mod inverse;
pub mod moments;
pub mod pushforward;
pub mod sde;

pub use brownian::{sample_brownian, step_count, BrownianPath};
pub use coeffs::{PointCoeffs, SdeCoefficients, SplineTimeField};
pub use inverse::{displacement_of, invert_displacement, invert_flow, min_simplex_orientation, record_at, InverseMap};
pub use moments::{apriori_constant, ensemble_moment, MomentEstimate};
pub use pushforward::{density_path, pushforward_solution, pushforward_with, DensityStream};
pub use sde::{
    det, logdet_stochastic_exponential, simulate_flow, variational_jacobian, FlowEnsemble, FlowState, FlowStepper, Mat2,
    SdeConfig,
};
