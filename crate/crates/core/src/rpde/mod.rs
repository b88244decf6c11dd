//! Pathwise integration of the transformed random PDE, a direct Euler–Maruyama
//! scheme for the original equation, and residual checks of both solution concepts.

mod residual;
mod scheme;
mod trajectory;

pub use residual::{continuum_test_functions, mild_residual, weak_form_residual, ResidualSeries};
pub use scheme::{step_rpde, DiffusionScheme, FieldState, RpdeStepper, SchemeConfig};
pub use trajectory::{
    reconstruct_u, simulate_rpde, simulate_spde_em, FieldKind, TrajectoryOutcome, TrajectoryResult,
};
