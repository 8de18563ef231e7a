use thiserror::Error;

/// Errors raised by the pricing toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("root not bracketed on [{lo}, {hi}]: f(lo)-target={f_lo}, f(hi)-target={f_hi}")]
    Bracket {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("statistic {0} is infinite on this distribution family")]
    DivergentStatistic(String),

    #[error("expected payment is infinite")]
    DivergentPayment,

    #[error("tangent undefined at v0 = {0}")]
    TangentUndefined(f64),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("linear program: {0}")]
    Lp(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
