use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("frequency {re}{im:+}i lies outside the analyticity strip ({lower}, {upper})")]
    FrequencyOutOfStrip {
        re: f64,
        im: f64,
        lower: f64,
        upper: f64,
    },

    #[error("exponential moment condition fails: lambda_plus = {0} must exceed 1")]
    MomentConditionFailed(f64),

    #[error("option price {price} is outside the arbitrage bounds ({lower}, {upper})")]
    PriceOutOfBounds { price: f64, lower: f64, upper: f64 },

    #[error("implied volatility solver did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("damping R = {damping} outside admissible strip ({lower}, {upper})")]
    DampingOutOfStrip { damping: f64, lower: f64, upper: f64 },

    #[error("quadrature hit the subdivision cap: estimate {estimate:e}, error {error:e}")]
    QuadratureNoConvergence { estimate: f64, error: f64 },

    #[error("expansion undefined: 2L - 1 = {0} is not positive")]
    ExpansionOutsideDomain(f64),

    #[error("no asymptotic formula covers this case: {0}")]
    UncoveredCase(String),

    #[error("small-jump cutoff {0} must lie in (0, 1)")]
    InvalidCutoff(f64),

    #[error("config error: {0}")]
    Config(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}
