use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("metric is degenerate or not positive definite ({0})")]
    DegenerateMetric(String),
    #[error("slot mismatch: {0}")]
    SlotMismatch(String),
    #[error("J is not an almost-complex structure: |J^2 + 1| = {0:e}")]
    NotAlmostComplex(f64),
    #[error("form is not antisymmetric: defect {0:e}")]
    NotAntisymmetric(f64),
    #[error("unsupported dimension {0}")]
    WrongDimension(usize),
    #[error("endomorphism is not J-skew: defect {0:e}")]
    NotJSkew(f64),
    #[error("2-form is degenerate")]
    DegenerateForm,
    #[error("non-finite value encountered in {0}")]
    NonFinite(String),
    #[error("blow-up detected at step {step}, t = {time}: {what}")]
    BlowUpDetected { step: usize, time: f64, what: String },
    #[error("sign-convention self-check failed: {0}")]
    ConventionCheck(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
