//! Numerical laboratory for norm microstates of matrix tuples.
//!
//! The crate works with tuples of k×k Hermitian matrices playing the role of
//! approximate representations of C*-algebra generators. It provides:
//!
//! * noncommutative polynomials and their evaluation on matrix tuples
//!   ([`ncpoly`]),
//! * the three metrics used on tuple space (operator norm, normalized trace
//!   norm, unitary-orbit trace norm) together with seeded random matrix
//!   sources, an eigensolver, and a unitary-orbit distance optimizer
//!   ([`matrixcore`]),
//! * presentations of generator families and construction / testing /
//!   sampling of their norm-microstate spaces ([`microstates`]),
//! * finite-sample covering and packing estimators ([`covering`]),
//! * estimators for covering-growth exponents: topological free entropy
//!   dimension, topological orbit dimension, tracial orbit dimension, and
//!   orbit dimension capacity ([`dimension`]),
//! * matrix-model verification for MF-style presentations, including the
//!   exact two-projection norm oracle and a random-rotation free-product
//!   model builder ([`mfcheck`]).
//!
//! All randomness is seeded explicitly; identical inputs produce identical
//! outputs.

pub mod covering;
pub mod dimension;
pub mod matrixcore;
pub mod mfcheck;
pub mod microstates;
pub mod ncpoly;

pub use matrixcore::{HermitianMatrix, MatrixTuple, UnitaryMatrix};
pub use ncpoly::{NcPolynomial, PolyBattery, Word};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex<f64>;
