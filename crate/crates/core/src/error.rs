use thiserror::Error;

/// Partial state of an adaptive integration that failed to reach tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureDiagnostics {
    pub estimate: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
    pub subdivisions: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("mechanical susceptibility is singular at nu = {nu} rad/s (undamped resonance)")]
    SingularResponse { nu: f64 },

    #[error("optimal squeezing angle is undefined without optomechanical coupling")]
    UndefinedAngle,

    #[error("force PSD is infinite: the readout carries no force information (zero coupling)")]
    InfinitePsd,

    #[error("no finite minimizer: {0}")]
    NoFiniteMinimizer(&'static str),

    #[error("PSD sample {index} is not positive ({value})")]
    NonPositivePsd { index: usize, value: f64 },

    #[error(
        "quadrature did not converge: estimate {:.6e} +/- {:.3e} after {} evaluations on {} panels",
        .0.estimate, .0.error_estimate, .0.evaluations, .0.subdivisions
    )]
    QuadratureNonConvergence(QuadratureDiagnostics),

    #[error("integrand is not finite at {at}")]
    NonFiniteIntegrand { at: f64 },

    #[error("simulation spec invalid: {0}")]
    InvalidSimulation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite",
        })
    }
}

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<()> {
    check_finite(name, value)?;
    if value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be > 0",
        })
    }
}

pub(crate) fn check_non_negative(name: &'static str, value: f64) -> Result<()> {
    check_finite(name, value)?;
    if value >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be >= 0",
        })
    }
}
