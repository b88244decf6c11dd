//! Lower solution and blowup time along a noise path, Monte Carlo estimation of the
//! blowup probability against its closed form, the zero-noise dichotomy, and
//! global-existence certificates.

mod bound;
mod certificate;
mod lower_solution;
mod model;
mod monte_carlo;

pub use bound::{
    analytic_blowup_bound, deterministic_dichotomy, dichotomy_from_mass, AnalyticBound, Dichotomy,
    DichotomyReport,
};
pub use certificate::{
    certificate_cond1, certificate_cond2_saturation, certificate_cond3_heat_kernel, cond3_rhs,
    CertificateKind, CertificateReport, Cond3Mode, EnvelopeSample, HeatKernelInputs, Verdict,
};
pub use lower_solution::{
    functional_coefficients, lower_solution_i, tau_from_path, BlowupOutcome, BlowupStatus,
    BlowupThreshold, LowerSolution, LowerValue,
};
pub use model::{ModelParams, Nonlinearity, ReactionVariant, TabulatedG};
pub(crate) use monte_carlo::run_pool;
pub use monte_carlo::{
    mc_blowup_probability, mc_hitting_times, streamed_hitting_time, truncation_allowance,
    McConfig, ProbabilityEstimate, MIN_PATHS,
};
