use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Terrain steps that cannot form a staircase (non-monotone, non-positive, mismatched).
    #[error("terrain construction: {0}")]
    Construction(String),

    /// A parameter is outside its admissible range.
    #[error("invalid {name}: {reason}")]
    Validation { name: &'static str, reason: String },

    /// Evaluation outside the domain of a barrier function (e.g. below the landing plane).
    #[error("domain error: {0}")]
    Domain(String),

    /// Time-to-go is at or below the guidance horizon guard.
    #[error("guidance horizon exhausted: t_go = {t_go} s")]
    GuidanceHorizon { t_go: f64 },

    #[error("propellant depleted at t = {t} s (m = {mass} kg)")]
    PropellantDepleted { t: f64, mass: f64 },

    #[error("non-finite state at t = {t} s")]
    NonFinite { t: f64 },

    /// Initial condition rejected (inside terrain, below the stop altitude, ...).
    #[error("invalid initial state: {0}")]
    InitialState(String),

    /// Paired differences have zero variance; the t statistic is undefined.
    #[error("degenerate paired test: {0}")]
    DegenerateTest(String),
}

impl Error {
    pub(crate) fn validation(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Validation {
            name,
            reason: reason.into(),
        }
    }
}
