use std::path::PathBuf;

use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument or model lies outside the domain where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A density-matrix invariant was breached during or after time integration.
    #[error("integration invariant breached at t = {time}: {what} (magnitude {magnitude:.3e})")]
    Integration {
        time: f64,
        what: String,
        magnitude: f64,
    },

    #[error("K_nu(x) failed to converge for nu = {nu}, x = {x}: achieved relative estimate {estimate:.3e}")]
    Bessel {
        nu: Complex64,
        x: f64,
        estimate: f64,
    },

    #[error("adaptive quadrature did not converge: error estimate {estimate:.3e} (target {target:.3e}) at {location}")]
    Quadrature {
        estimate: f64,
        target: f64,
        location: String,
    },

    #[error("steady state not reached: residual {residual:.3e} after t = {time}")]
    NotConverged { residual: f64, time: f64 },

    #[error("config line {line}: key `{key}`: {msg}")]
    Config {
        line: usize,
        key: String,
        msg: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// The closed-form Wigner sum left an imaginary part above threshold.
    #[error("Wigner imaginary residue {residue:.3e} (relative) at r = {r}, p = {p}")]
    ImaginaryResidue { residue: f64, r: f64, p: f64 },

    #[error("at grid point r = {r}, p = {p}: {source}")]
    GridPoint {
        r: f64,
        p: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("scenario `{scenario}`: {source}")]
    Scenario {
        scenario: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Strips scenario and grid-point context.
    pub fn root(&self) -> &Error {
        match self {
            Error::Scenario { source, .. } | Error::GridPoint { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn is_config(&self) -> bool {
        matches!(self.root(), Error::Config { .. })
    }

    /// True for failures of a numerical invariant or convergence check.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self.root(),
            Error::Integration { .. }
                | Error::Bessel { .. }
                | Error::Quadrature { .. }
                | Error::NotConverged { .. }
                | Error::ImaginaryResidue { .. }
        )
    }
}
