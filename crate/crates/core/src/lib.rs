//! Generalized L-moment estimation (GLME) for generalized extreme value models.
//!
//! The crate covers the full pipeline for block-maxima analysis:
//!
//! - [`gev`]: the GEV distribution in Hosking's sign convention (heavy upper
//!   tail when `xi < 0`), sampling and return levels.
//! - [`lmoments`]: sample and population L-moments, the covariance of sample
//!   L-moments and the generalized L-moment distance.
//! - [`penalties`]: penalty functions on the shape parameter.
//! - [`estimators`]: LME, MLE, penalized MLE and the penalized L-moment
//!   estimator, plus profile curves over `xi`.
//! - [`nonstationary`]: the regression-plus-Gumbel-transform fit for GEV
//!   models with covariate-dependent location and log-scale.
//! - [`simulation`]: Monte Carlo comparison of estimators of the return level.
//! - [`trend`]: the Mann–Kendall trend test.

pub mod error;
pub mod estimators;
pub mod gev;
pub mod lmoments;
pub mod nonstationary;
pub mod optimize;
pub mod penalties;
pub mod simulation;
pub mod trend;

pub use error::{GlmeError, Result};
pub use estimators::{
    fit_glme, fit_gmle, fit_lme, fit_mle, gev_nll, glme_objective, profile_xi, FitOptions, FitResult,
    Method, ProfileMethod, ProfilePoint,
};
pub use gev::{gev_cdf, gev_pdf, gev_quantile, gev_sample, return_level, GevParams, ReturnSpec};
pub use lmoments::{
    gev_population_lmoments, gld, gumbel_population_lmoments, lmoment_cov, sample_lmoments,
    sample_lmoments4, CovMatrix3, CovMethod, CovSource, LMomentTriple,
};
pub use nonstationary::{
    fit_ns_glme, fit_ns_lme, gumbel_transform, ns_gld, ns_return_level, robust_location_fit,
    scale_regression, Design, LocationFit, NsFitResult, NsModel, NsOptions,
};
pub use penalties::{
    build_beta_adaptive, neg_log_penalty, AdaptiveHyper, BetaAdaptive, Penalty, PenaltySpec,
};
pub use simulation::{
    grid_cells, metrics, run_cell, run_grid, Metrics, Scenario, SimCell, SimMethod, SimReport,
};
pub use trend::{mann_kendall, MannKendall};

/// Below this magnitude of `xi` the GEV formulas switch to their Gumbel limits.
pub const XI_EPS: f64 = 1e-6;

/// Objective value used for hard exclusions (outside support, invalid
/// parameters). Finite so that derivative-free optimizers can still order it.
pub const SENTINEL: f64 = 1e300;
