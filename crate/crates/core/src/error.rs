use thiserror::Error;

/// Errors raised by the geometric and numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("structure constants violate the Jacobi identity (residual {residual:.3e})")]
    JacobiViolation { residual: f64 },

    #[error(
        "structure constants are not antisymmetric at c^{i}_{{{j}{k}}} (deviation {deviation:.3e})"
    )]
    AntisymmetryViolation {
        i: usize,
        j: usize,
        k: usize,
        deviation: f64,
    },

    #[error("form is not contact (|theta ^ dtheta| = {volume:.3e})")]
    NotContact { volume: f64 },

    #[error("frame normalization failed (residual {residual:.3e})")]
    NormalizationFailed { residual: f64 },

    #[error("invalid parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },

    #[error("flow kind {kind} requires field {field}")]
    MissingField {
        kind: &'static str,
        field: &'static str,
    },

    #[error("state left its domain: {field} = {value}")]
    DomainViolation { field: &'static str, value: f64 },

    #[error("norm constant calibration is ambiguous (residuals {residual_k1:.3e} / {residual_k2:.3e})")]
    CalibrationAmbiguous { residual_k1: f64, residual_k2: f64 },

    #[error("initial state violates the normalization constraint (value {value})")]
    ConstraintViolated { value: f64 },

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("invalid integrator options: {0}")]
    InvalidOptions(String),

    #[error("solution blows up at t = {time}")]
    BlowUpAt { time: f64 },

    #[error("integrator failure: {0}")]
    IntegratorFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;
