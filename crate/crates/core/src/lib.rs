//! Exact counting, discrete Fourier analysis, and constructive regularity for
//! point configurations over small finite fields F_q with q = 3 mod 4.
//!
//! The crate splits into an exact integer layer and an analytic layer:
//!
//! * [`field`] - table-driven arithmetic in F_{p^k}, traces, additive
//!   characters, multiplicative subgroups;
//! * [`geometry`] - the plane F_q^2, the paraboloid z = x^2 + y^2 in F_q^3,
//!   quadrance, rectangles, circles, squares, and the point-file format;
//! * [`energy`] - energy-tuple and rectangle counting with brute-force
//!   oracles and the energy/rectangle correspondence check;
//! * [`fourier`] - transforms over F_q and F_q^2, the subgroup measure, the
//!   4-point counting forms, box norms, and verified von-Neumann estimates;
//! * [`regularity`] - weak regularity decompositions and the full
//!   subgroup-rectangle counting pipeline;
//! * [`constructions`] - certified extremal constructions;
//! * [`sample`] - seeded input generation (ChaCha8 is the generator of
//!   record).
//!
//! Everything analytic is generic over the scalar through [`scalar::Real`]
//! (`f32` or `f64`); the aliases below pin the `f64` instantiation used by
//! default.

pub mod constructions;
pub mod energy;
pub mod field;
pub mod fourier;
pub mod geometry;
pub mod regularity;
pub mod sample;
pub mod scalar;

pub use field::{Field, FieldElement, FieldError, MultiplicativeSubgroup};
pub use geometry::{GridSet, ParaboloidSet, Point2, Point3};
pub use scalar::Real;

/// Default scalar for the analytic layer.
pub type Scalar = f64;

pub type Grid = fourier::GridFunction<Scalar>;
pub type Line = fourier::LineFunction<Scalar>;
pub type Spectrum = fourier::SpectralFunction<Scalar>;
pub type Measure = fourier::SubgroupMeasure<Scalar>;
pub type Decomp = regularity::Decomposition<Scalar>;
