//! Maximum-likelihood factor analysis (MLFA) for signal subspace estimation
//! under nonuniform (anisotropic) sensor noise.
//!
//! A sample covariance matrix is fitted with the low-rank-plus-diagonal model
//! `C = S·Sᴴ + Q`, where `S` is an `N×M` complex loadings matrix and
//! `Q = diag{σ₁²,…,σ_N²}` is the noise covariance, by minimizing the negative
//! log-likelihood `ln det C + tr(R̂ C⁻¹)`. Two solvers are provided:
//!
//! * [`faan::faan_solve`] — alternating minimization: a closed-form whitened
//!   principal-subspace update followed by cyclic coordinate updates of the
//!   noise standard deviations.
//! * [`ecme::ecme_solve`] — an expectation/conditional-maximization scheme
//!   whose loadings step minimizes the actual likelihood and whose noise step
//!   minimizes the expected complete-data likelihood in closed form.
//!
//! The estimated loadings feed subspace-based direction finding on a uniform
//! linear array ([`doa::root_music`]) with Cramér–Rao bounds ([`doa::crlb`])
//! for benchmarking.

pub mod doa;
pub mod ecme;
pub mod faan;
pub mod model;
pub mod numerics;
pub mod objective;

/// Errors shared across all modules.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// A precondition on user-supplied data was violated.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// A matrix required to be positive definite was not.
    #[error("matrix is not positive definite: smallest eigenvalue {smallest:.6e}")]
    NotPositiveDefinite { smallest: f64 },
    /// The polynomial degree is undefined because the leading coefficient vanishes.
    #[error("polynomial leading coefficient is zero; degree undefined")]
    ZeroLeadingCoefficient,
    /// Root selection could not find enough candidates inside the unit circle.
    /// Carries the angles (radians) recovered from the roots that were found.
    #[error("direction estimation failed: {found} of {needed} unit-circle roots found")]
    RootDeficit {
        needed: usize,
        found: usize,
        partial: Vec<f64>,
    },
    /// The Fisher information matrix is singular, so no finite bound exists.
    #[error("scenario is not identifiable: Fisher information matrix is singular")]
    UnidentifiableScenario,
    /// An internal consistency check failed; indicates a bug or severe
    /// numerical breakdown rather than bad input.
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
