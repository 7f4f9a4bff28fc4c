use thiserror::Error;

/// Errors raised by the simulation and analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    /// A physical or structural parameter is outside its allowed range.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// Operands live on different Hilbert spaces.
    #[error("space mismatch: {0}")]
    SpaceMismatch(String),

    /// Step halving did not settle the final state within the allowed refinements.
    #[error(
        "integration did not converge after {refinements} refinements \
         (last step-halving change {last_change:.3e}, tolerance {tol:.3e})"
    )]
    NonConvergence {
        refinements: usize,
        last_change: f64,
        tol: f64,
        /// Final states from the two finest step sizes, coarse first.
        iterates: Box<(Vec<crate::C64>, Vec<crate::C64>)>,
    },

    /// Fock truncation could not be made valid by growing the cutoff.
    #[error("Fock truncation violated: top-level population {population:.3e} at cutoff {cutoff}")]
    Truncation { cutoff: usize, population: f64 },

    /// A fit failed or produced a residual above its acceptance threshold.
    #[error("fit failed: {reason} (residual {residual:.3e})")]
    FitFailed { reason: String, residual: f64 },

    /// The fidelity landscape is flat, so no optimum can be located.
    #[error("flat landscape: fidelity spread {spread:.3e} below 1e-6")]
    FlatLandscape { spread: f64 },

    /// A derived quantity is undefined for the given inputs.
    #[error("undefined: {0}")]
    Undefined(String),

    /// Full dynamics exceeded the analytic bound by more than the allowed margin.
    #[error("bound violated for {channel}: simulated {simulated:.3e} > {margin} x bound {bound:.3e}")]
    BoundViolation {
        channel: String,
        bound: f64,
        simulated: f64,
        margin: f64,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors that stem from numerics rather than from bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. }
                | Error::Truncation { .. }
                | Error::FitFailed { .. }
                | Error::FlatLandscape { .. }
                | Error::BoundViolation { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
