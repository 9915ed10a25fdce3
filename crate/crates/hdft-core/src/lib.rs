//! Symbolic and numeric toolkit for a three-torus with unit three-form flux
//! and its T-dual Heisenberg nilmanifold.
//!
//! The crate has three layers that check each other:
//!
//! * exact algebra: the twisted mode Lie algebra, a Fock-space oracle that
//!   multiplies vertex operators by raw commutator pushing, and truncated
//!   log-Laurent series over exact rationals;
//! * closed forms: complex dilogarithms (`special`), four- and five-point
//!   correlator formulas built from the Rogers function (`correlators`), and
//!   ideal tetrahedron volumes (`hyperbolic`);
//! * classical dynamics: periodic worldsheet evolution on both duality frames
//!   with an explicit map between them (`dynamics`), and ground-state
//!   sector counting (`ground`).
//!
//! Scalar policy: exact lanes run on `Rat` (an `i128` rational; every profile
//! keeps overflow checks on, so coefficient growth past `i128` aborts rather
//! than corrupting a result). Floating lanes are generic over `num_traits::Float`
//! with `f64` aliases exported here.

pub mod algebra;
pub mod correlators;
pub mod dynamics;
pub mod fock;
pub mod ground;
pub mod hyperbolic;
pub mod report;
pub mod scalar;
pub mod series;
pub mod special;

/// Exact rational scalar used by every symbolic lane.
pub type Rat = num_rational::Ratio<i128>;

/// Default floating scalar.
pub type Real = f64;

/// Default complex scalar.
pub type Cplx = num_complex::Complex<f64>;

/// Exact log-Laurent series in one expansion variable.
pub type RatSeries = series::TruncatedLogSeries<Rat>;
