use thiserror::Error;

/// Errors shared across the toolkit.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum CfsError {
    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("dispersion model {model} has no data at {wavelength_um} um (valid {min_um}..{max_um} um)")]
    DispersionRangeExceeded {
        model: String,
        wavelength_um: f64,
        min_um: f64,
        max_um: f64,
    },

    #[error("DOPO violates its internal stability condition: e^(C xi) sqrt(R_o (1-L_o)) = {value} >= 1")]
    InternallyUnstablePlant { value: f64 },

    #[error("configuration is not symmetric around the carrier: {0}")]
    AsymmetricConfiguration(String),

    #[error("controller or propagation response vanished at omega = {omega}")]
    SingularController { omega: f64 },

    #[error("|1 - loop gain| = {denom} below threshold at omega = {omega}; evaluation is marginally unstable")]
    MarginallyUnstableEvaluation { omega: f64, denom: f64 },

    #[error("trace segment {index} subtends {angle} rad about the reference point; densify the sampling")]
    RefinementRequired { index: usize, angle: f64 },

    #[error("trace sample {index} lies on the reference point (distance {distance})")]
    PointOnCurve { index: usize, distance: f64 },

    #[error("refinement budget of {budget} samples exceeded ({used} used)")]
    RefinementBudgetExceeded { budget: usize, used: usize },

    #[error("bisection failed to converge within {max_iter} iterations")]
    BudgetExceeded { max_iter: usize },

    #[error("unsupported configuration: {0}")]
    UnsupportedConfiguration(String),

    #[error("invalid dispersion data: {0}")]
    DispersionData(String),
}

pub type Result<T> = std::result::Result<T, CfsError>;
