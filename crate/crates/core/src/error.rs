use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EspaError {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("more boxes than samples (K = {k}, T = {t})")]
    TooManyBoxes { k: usize, t: usize },
    #[error("stratification failed: class {class} has {count} sample(s)")]
    StratificationFailed { class: usize, count: usize },
    #[error("AUC needs both classes present")]
    SingleClass,
    #[error("class {0} has no samples")]
    MissingClass(usize),
    #[error("objective became non-finite")]
    NonFinite,
    #[error("all {0} restarts aborted on non-finite objective")]
    AllRestartsFailed(usize),
}

pub type Result<T, E = EspaError> = core::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> EspaError {
    EspaError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn check_dim(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(EspaError::DimensionMismatch {
            what,
            expected,
            found,
        })
    }
}
