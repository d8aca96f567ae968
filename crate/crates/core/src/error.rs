use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid channel specification: {0}")]
    InvalidChannel(String),

    #[error("integral did not converge ({what}): estimate {estimate:e}, error {abs_error:e} after {subdivisions} subdivisions")]
    NonIntegrable {
        what: String,
        estimate: f64,
        abs_error: f64,
        subdivisions: usize,
    },

    #[error("state outside cost-to-go table: t={t}, beta={beta} (table covers t<={t_max}, beta<={b_max})")]
    OutOfTable {
        t: usize,
        beta: f64,
        t_max: usize,
        b_max: f64,
    },

    #[error("moment table too short: need nu_{needed}, have {available}")]
    MissingMoments { needed: usize, available: usize },

    #[error("policy `{policy}` cannot run with horizon T={horizon}: {reason}")]
    UnsupportedHorizon {
        policy: String,
        horizon: usize,
        reason: String,
    },

    #[error("episode constraint violated by {policy}: {detail}")]
    ConstraintViolation { policy: String, detail: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("malformed table file: {0}")]
    TableFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
