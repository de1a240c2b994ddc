//! Differentially private continual counting over fully dynamic streams.
//!
//! The crate is organized around four layers:
//!
//! * [`vectors`] — integer sensitivity vectors, the structured sets they live
//!   in, and the decomposition of a set member into alternating parts;
//! * [`factor`] — factorizations `A = LR` of the lower-triangular all-ones
//!   matrix (square-root Toeplitz, `b`-ary trees with and without
//!   subtraction, and the naive identity factorization), their norms, and
//!   online noise evaluation;
//! * [`sens`] — exact, bounded, brute-force and empirical computation of the
//!   ℓp sensitivity of a right factor over those sets;
//! * [`mechanism`] and [`estimator`] — privacy calibration, the streaming
//!   mechanism itself, and the reductions from distinct-element, degree and
//!   triangle counting to continual counting.
//!
//! A narrative guide with runnable examples lives in `book/`; its code
//! blocks compile and run as part of `cargo test`.

pub mod comparison;
pub mod error;
pub mod estimator;
pub mod factor;
pub mod mechanism;
pub mod noise;
pub(crate) mod parallel;
pub mod sens;
pub mod vectors;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    //! Runs every code block in the guide as a doc-test.
    #[doc = include_str!("../../../book/src/sensitivity-vectors.md")]
    mod sensitivity_vectors {}
    #[doc = include_str!("../../../book/src/factorizations.md")]
    mod factorizations {}
    #[doc = include_str!("../../../book/src/sensitivity.md")]
    mod sensitivity {}
    #[doc = include_str!("../../../book/src/mechanisms.md")]
    mod mechanisms {}
    #[doc = include_str!("../../../book/src/estimators.md")]
    mod estimators {}
}
