//! Numerical laboratory for families of orthonormal polynomials whose
//! recursion coefficients grow without bound.
//!
//! The crate evaluates three-term recurrences in a streaming fashion,
//! decomposes consecutive polynomial pairs into modulus and unwound phase,
//! checks the closed-form kernel functions that govern the large-index
//! behaviour of that decomposition, computes their Fourier coefficients by
//! quadrature and by contour/residue decomposition, estimates the limits of
//! Christoffel-type ratios, and exposes the associated differential operators
//! acting on finite trigonometric sums.

pub mod chromatic;
pub mod conditions;
pub mod config;
pub mod family;
pub mod fourier;
pub mod kernels;
pub mod lemmas;
pub mod limits;
pub mod phase;
pub mod recurrence;
pub mod report;
pub mod sum;

pub use family::{corpus, CoefficientFamily, FamilyError, OffsetRule};
pub use recurrence::{EvalError, EvalTrace};
