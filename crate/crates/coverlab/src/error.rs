//! Error taxonomy shared across the crate.
//!
//! The variants mirror the failure modes of the operations: bad caller
//! input, unmet preconditions, unsupported configurations, exhaustive
//! verification failures (with a witness), exceeded enumeration budgets,
//! and unrealizable samples handed to a consistency-based learner.

use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    /// Malformed or out-of-range caller input.
    #[error("input error: {0}")]
    Input(String),

    /// A declared precondition of an operation does not hold.
    #[error("precondition error: {0}")]
    Precondition(String),

    /// The operation is not defined for this configuration.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// An exhaustive structural check failed; the message names a witness.
    #[error("verification error: {0}")]
    Verification(String),

    /// An enumeration budget was exceeded; the message names the budget.
    #[error("resource error: {0}")]
    Resource(String),

    /// A consistency-based learner received a sample no class member fits.
    #[error("inconsistent sample: {0}")]
    Inconsistent(String),

    /// A derived object (discretization, padded sample, ...) could not be built.
    #[error("construction error: {0}")]
    Construction(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
