use thiserror::Error;

/// Errors raised by model construction and numerical evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument fell outside the domain where the quantity is defined.
    #[error("domain error in {what}: {detail}")]
    Domain { what: &'static str, detail: String },

    /// A model or tax rule failed validation.
    #[error("invalid {what}: {detail}")]
    Invalid { what: &'static str, detail: String },

    /// Second derivative of a scale function requested without a Gaussian component.
    #[error("W'' is only supported when the Gaussian coefficient is positive")]
    UnsupportedSmoothness,

    /// A numerical routine could not reach the requested tolerance.
    #[error("{what}: requested tolerance {requested:e}, achieved {achieved:e}")]
    Accuracy {
        what: &'static str,
        requested: f64,
        achieved: f64,
    },

    /// The requested functional is infinite or cannot be bounded.
    #[error("divergent {what}: {detail}")]
    Divergent { what: &'static str, detail: String },
}

impl Error {
    pub(crate) fn domain(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            what,
            detail: detail.into(),
        }
    }

    pub(crate) fn invalid(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            detail: detail.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
