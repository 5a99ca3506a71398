use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the formula.
    #[error("domain error: {name} = {value} ({expected})")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    /// Arguments are individually valid but the closed form does not apply.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// An iterative routine failed to converge.
    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("invalid parameter: {0}")]
    Invalid(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Rejects NaN and infinities, and values not satisfying `ok`.
pub(crate) fn check(
    name: &'static str,
    value: f64,
    expected: &'static str,
    ok: impl FnOnce(f64) -> bool,
) -> Result<()> {
    if value.is_finite() && ok(value) {
        Ok(())
    } else {
        Err(Error::Domain {
            name,
            value,
            expected,
        })
    }
}
