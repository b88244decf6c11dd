//! Dirichlet Laplacian on an interval or rectangle: discretisation, eigenpairs,
//! the spectral heat semigroup and a numerical check of two-sided heat-kernel bounds.

mod domain;
mod eigen;
mod heat_kernel;
mod operator;
mod semigroup;

pub use domain::{sup_norm, DomainKind, DomainSpec, Grid, MIN_CELLS};
pub use eigen::{
    richardson, solve_eigenpairs, solve_eigenpairs_product, solve_eigenpairs_with, AxisModes,
    EigenData, EigenSolverConfig,
};
pub use heat_kernel::{heat_kernel_ratio_report, kernel_ratio, log_times, HeatKernelBoundReport};
pub use operator::{build_laplacian, AxisStencil, DiscreteOperator, Resolvent};
pub use semigroup::{apply_heat_semigroup, sup_norm_decay, truncation_bound, HeatOrbit};
