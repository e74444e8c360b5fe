use thiserror::Error;

/// Errors surfaced by scenario construction and market clearing.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration (bad distribution bounds, zero entity counts, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// A numeric precondition was violated (non-positive noise power, zero frequency, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A link carries no capacity, so the task cannot be scheduled over it.
    #[error("infeasible link: {0}")]
    InfeasibleLink(String),

    /// A submarket has no participants at all.
    #[error("no market: {0}")]
    NoMarket(String),

    /// The market shape rules out the requested computation (e.g. a price
    /// scaling factor without any infotainment bidders).
    #[error("degenerate market: {0}")]
    DegenerateMarket(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for errors that indicate bad user input rather than a runtime failure.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}
