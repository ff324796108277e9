//! Periodic grids, sampled fields, spectral calculus, mollification and norms.

pub mod fields;
pub mod grid;
pub mod interp;
pub mod mollifier;
pub mod norms;
pub mod spectral;

pub use fields::{locate_time, GridScalar, GridVector, TimeGridVector};
pub use grid::{build_grid, Grid, Point, SpectralPlan};
pub use interp::{PeriodicSpline, VectorSpline};
pub use mollifier::{convolve, epsilon_range, kernel_moment, mollifier, reference_bump, MollifierKernel};
pub use norms::{integrate_series, lp_norm, time_norm, Region};
pub use spectral::{
    divergence, gradient, hessian, jacobian, laplacian, partial, second_partial, spectral_derivative,
    spectral_energy, Spectrum,
};
