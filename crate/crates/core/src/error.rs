use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular design: column {column} is (numerically) a linear combination of earlier columns")]
    SingularDesign { column: usize },

    #[error("singular Jacobian in stacked moment equations: {0}")]
    SingularJacobian(String),

    #[error("perfect or quasi-complete separation: coefficient norm {norm:.3} exceeds cap {cap}")]
    Separation { norm: f64, cap: f64 },

    #[error("labels contain a single class; logistic regression needs both 0 and 1")]
    SingleClass,

    #[error("degenerate arm: {0}")]
    DegenerateArm(String),

    #[error("extreme weight: fitted probability {value:e} at row {row} is outside [{floor:e}, 1 - {floor:e}]")]
    ExtremeWeight { row: usize, value: f64, floor: f64 },

    #[error("bootstrap unstable: estimator failed in {failed} of {total} replicates")]
    Instability { failed: usize, total: usize },

    #[error("simulation aborted: {failed} of {total} replicates failed (first failure: {first})")]
    TooManyFailures {
        failed: usize,
        total: usize,
        first: String,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Input problems (bad files, bad arguments) as opposed to numerical failures.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. } | Error::Io(_) | Error::Csv(_) | Error::Json(_) | Error::Domain(_)
        )
    }
}
