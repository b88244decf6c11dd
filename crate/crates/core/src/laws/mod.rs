//! Brownian paths, exponential functionals of Brownian motion with drift, and the
//! reciprocal-gamma law of their infinite-horizon limit.

mod brownian;
mod functional;
mod gamma_law;

pub use brownian::{sample_brownian, step_count, BrownianPath, Increments, SeedRecord};
pub use functional::{exp_functional, ExpFunctional, EXPONENT_CAP};
pub use gamma_law::{
    blowup_density, density, derive_params, law_scale, perpetuity_cdf, DensityForm, DerivedParams,
};
