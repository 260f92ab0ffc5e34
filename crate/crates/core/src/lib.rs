//! Third-order quadrature correlations of the damped nondegenerate
//! parametric oscillator, simulated in the positive-P representation and in
//! stochastic electrodynamics (SED), with the matching leading-order
//! analytic predictions.

pub mod analytic;
pub mod error;
pub mod estimators;
pub mod models;
pub mod params;
pub mod sde;

pub use error::{Error, Result};
pub use estimators::{
    external_moment_estimate, quadrature, run_intracavity_experiment, triple_central_moment, EnsembleConfig,
    EnsembleResult, MeanEstimate, MomentEstimate,
};
pub use models::{PhaseSpaceModel, PositivePModel, SedModel, Theory};
pub use params::{
    validate_params, HomodyneParams, PhaseAngles, PhasePoint, SystemParams, TimeGrid, ValidationReport, Warning,
};
pub use sde::{integrate_path, IntegratorConfig, Scheme, Trajectory};
