use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("mode {index} out of range for a {dim}x{dim} matrix")]
    ModeOutOfRange { index: usize, dim: usize },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("matrix is not symplectic (max deviation {deviation:e})")]
    NotSymplectic { deviation: f64 },

    #[error("non-physical covariance matrix{}: min eigenvalue of sigma + i/2 Omega is {min_eigenvalue:e}", time_suffix(*.time))]
    NonPhysical {
        time: Option<f64>,
        min_eigenvalue: f64,
    },

    #[error("drift matrix is not Hurwitz stable (max eigenvalue real part {max_real_part:e}); no steady state exists")]
    NotHurwitz { max_real_part: f64 },

    #[error("Lyapunov solve residual {residual:e} exceeds tolerance {tolerance:e}")]
    IllConditioned { residual: f64, tolerance: f64 },

    #[error("singular matrix in {context}")]
    Singular { context: &'static str },

    #[error("state is numerically pure (|2 det(sigma)^2 - 1/8| = {denominator:e}); single-mode QFI formula does not apply")]
    PureStateSingularity { denominator: f64 },

    #[error("quadrature did not converge: estimated error {achieved:e} > requested {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("Fock cutoff {cutoff} too small: population leakage {leakage:e}")]
    FockTruncation { cutoff: usize, leakage: f64 },

    #[error("config error{}: {message}", line_suffix(*.line))]
    Config {
        line: Option<usize>,
        message: String,
    },

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn time_suffix(time: Option<f64>) -> String {
    time.map(|t| format!(" at t = {t:e} s")).unwrap_or_default()
}

fn line_suffix(line: Option<usize>) -> String {
    line.map(|l| format!(" (line {l})")).unwrap_or_default()
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(line: Option<usize>, message: impl Into<String>) -> Self {
        Error::Config {
            line,
            message: message.into(),
        }
    }

    /// True for failures caused by the physics (instability, non-physical
    /// states, singular matrices) rather than input or IO problems.
    pub fn is_physics(&self) -> bool {
        matches!(
            self,
            Error::NonPhysical { .. }
                | Error::NotHurwitz { .. }
                | Error::Singular { .. }
                | Error::IllConditioned { .. }
                | Error::PureStateSingularity { .. }
                | Error::NotSymplectic { .. }
                | Error::Quadrature { .. }
                | Error::FockTruncation { .. }
        )
    }
}
