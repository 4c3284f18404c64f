use num::bigint::BigUint;
use thiserror::Error;

/// Errors surfaced by the library.
///
/// `not-found` outcomes of searches are values, not errors; these variants
/// cover violated preconditions and the two distinguished arithmetic events.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an argument was violated.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// An inversion hit a residue sharing a factor with the modulus. The
    /// factor is carried along: for composite moduli this is a factoring
    /// event rather than a plain failure.
    #[error("nontrivial gcd with modulus: {factor}")]
    NontrivialGcd { factor: BigUint },

    /// The factoring-from-logarithm reduction could not be inverted.
    #[error("reduction failure: {0}")]
    ReductionFailure(String),

    /// Malformed serialized input.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
