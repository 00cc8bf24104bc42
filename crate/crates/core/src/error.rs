use thiserror::Error;

use crate::model::Mode;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CsbError {
    #[error("probability {0} is outside [0, 1]")]
    InvalidProbability(f64),
    #[error("beta counts must be at least 1, got ({successes}, {failures})")]
    InvalidBetaCounts { successes: u64, failures: u64 },
    #[error("instance has no arms")]
    NoArms,
    #[error("{what} has {got} entries, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("{name} = {value} is out of range ({expected})")]
    OutOfRange {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },
    #[error("arm {arm} has negative allocation {value}")]
    NegativeAllocation { arm: usize, value: f64 },
    #[error("allocation total {total} exceeds budget {budget}")]
    Infeasible { total: f64, budget: f64 },
    #[error("{items} items exceed the exhaustive-search limit of {limit}")]
    TooManyItems { items: usize, limit: usize },
    #[error("scaled capacity {0} overflows the table index")]
    CapacityOverflow(f64),
    #[error("means tie at the top-{0} boundary, the divergence term is undefined")]
    TiedBoundary(usize),
    #[error("divergence d({p}, {q}) is infinite")]
    InfiniteDivergence { p: f64, q: f64 },
    #[error("{policy} cannot run on a {mode} instance")]
    ModeMismatch { policy: &'static str, mode: Mode },
}

pub type Result<T> = core::result::Result<T, CsbError>;

pub(crate) fn check_range(
    name: &'static str,
    value: f64,
    ok: bool,
    expected: &'static str,
) -> Result<()> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(CsbError::OutOfRange {
            name,
            value,
            expected,
        })
    }
}
