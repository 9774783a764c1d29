//! Core algorithms for certifying inner-toral polynomials, realizing matrix
//! rational inner functions from unitary colligations, computing rank tuples
//! of pure isopairs, constructing admissible kernel triples, and exact
//! bivariate ideal arithmetic.
//!
//! The crate is `no_std` (with `alloc`); all IO, file formats, and the CLI
//! live in the companion `isopair-lab` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod cmat;
pub mod poly;
pub mod colligation;
pub mod isopair;
pub mod kernel;
pub mod ideal;

pub use cmat::CMat;
pub use poly::{BiPoly, UniPoly};

/// One shared complex scalar type for the whole crate.
pub type C64 = num_complex::Complex<f64>;

/// Errors reported by the numerical and exact layers.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Matrix dimensions incompatible with the requested operation.
    Shape {
        expected: (usize, usize),
        got: (usize, usize),
    },
    /// An iterative solver failed to converge within its iteration budget.
    NoConvergence(&'static str),
    /// Colligation block sizes are inconsistent.
    BadColligation(&'static str),
    /// The assembled colligation matrix is not unitary to tolerance.
    NotUnitary { defect: f64 },
    /// Transfer-function evaluation hit a singular resolvent.
    SingularResolvent,
    /// The symbol is not inner to tolerance.
    NotInner { deviation: f64 },
    /// The lurking-isometry system has residual above tolerance.
    IsometryResidual { residual: f64 },
    /// A polynomial was identically zero where a nonzero one is required.
    ZeroPolynomial,
    /// The polynomial is not square-free (vanishing discriminant resultant).
    NotSquareFree,
    /// The polynomial must depend on both variables.
    DegenerateBidegree,
    /// The requested point does not lie on the zero set to tolerance.
    PointNotOnVariety { residual: f64 },
    /// Sampling failed to produce enough admissible points.
    SamplingExhausted,
    /// Factor list failed validation (empty, zero, or repeated factors).
    BadFactorization(&'static str),
    /// Joint-kernel dimensions disagreed across regular samples.
    NonUnanimousRank,
    /// A computed quantity changed between consecutive truncation orders.
    TruncationUnstable,
    /// Spectrum escapes the open unit disk.
    SpectrumNotInDisk,
    /// Joint kernel at the base point does not match the requested rank.
    NullityMismatch { expected: usize, got: usize },
    /// A constructed object failed its own certificate.
    CertificateFailed { what: &'static str, residual: f64 },
    /// Evaluation point too close to the Szego singularity.
    SzegoSingular,
    /// Exact division left a nonzero remainder.
    NotDivisible,
    /// Division by an exact zero.
    ExactDivisionByZero,
    /// The polynomial is not monic in w after normalization.
    NotMonicInW,
    /// Model truncation too small for the requested span degree.
    TruncationInsufficient { needed: usize, have: usize },
    /// Invalid argument with a short static reason.
    Invalid(&'static str),
}

impl core::fmt::Display for Error {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Error::Shape { expected, got } => write!(
                f,
                "shape mismatch: expected {}x{}, got {}x{}",
                expected.0, expected.1, got.0, got.1
            ),
            Error::NoConvergence(what) => write!(f, "{what}: iteration budget exhausted"),
            Error::BadColligation(why) => write!(f, "bad colligation: {why}"),
            Error::NotUnitary { defect } => write!(f, "colligation not unitary (defect {defect:.3e})"),
            Error::SingularResolvent => write!(f, "resolvent (I - zD) is singular"),
            Error::NotInner { deviation } => write!(f, "symbol not inner (deviation {deviation:.3e})"),
            Error::IsometryResidual { residual } => {
                write!(f, "lurking isometry residual {residual:.3e} above tolerance")
            }
            Error::ZeroPolynomial => write!(f, "polynomial is identically zero"),
            Error::NotSquareFree => write!(f, "polynomial is not square-free"),
            Error::DegenerateBidegree => write!(f, "polynomial must depend on both variables"),
            Error::PointNotOnVariety { residual } => {
                write!(f, "point off the zero set (residual {residual:.3e})")
            }
            Error::SamplingExhausted => write!(f, "sampling budget exhausted"),
            Error::BadFactorization(why) => write!(f, "bad factor list: {why}"),
            Error::NonUnanimousRank => write!(f, "joint-kernel dimension not unanimous across samples"),
            Error::TruncationUnstable => write!(f, "value unstable across consecutive truncations"),
            Error::SpectrumNotInDisk => write!(f, "spectrum not inside the open unit disk"),
            Error::NullityMismatch { expected, got } => {
                write!(f, "joint-kernel dimension {got} at base point, expected {expected}")
            }
            Error::CertificateFailed { what, residual } => {
                write!(f, "{what} certificate failed (residual {residual:.3e})")
            }
            Error::SzegoSingular => write!(f, "evaluation too close to the Szego singularity"),
            Error::NotDivisible => write!(f, "exact division left a nonzero remainder"),
            Error::ExactDivisionByZero => write!(f, "exact division by zero"),
            Error::NotMonicInW => write!(f, "polynomial is not monic in w"),
            Error::TruncationInsufficient { needed, have } => {
                write!(f, "truncation {have} too small, need at least {needed}")
            }
            Error::Invalid(why) => write!(f, "{why}"),
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;
