//! Non-abelian geometric phases on the four-level, doubly degenerate model
//! `H = U(sigma) H0 U(sigma)^dagger`, `H0 = omega/2 diag(1, 1, -1, -1)`.
//!
//! Connections, curvatures and holonomies are computed twice: from closed-form
//! tables and from independent numeric oracles (finite differences,
//! path-ordered products, Schrodinger evolution). The [`verify`] module
//! diffs the two.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix `f64`, which all default tolerances assume.

pub mod adiabatic;
pub mod connection;
pub mod formulas;
pub mod holonomy;
pub mod manifold;
pub mod matrix;
pub mod quadrature;
pub mod scalar;
pub mod verify;

use thiserror::Error;

pub use adiabatic::{AdiabaticError, Profile, StudyOptions, StudyRow};
pub use connection::{ConnectionError, Method};
pub use holonomy::{HolonomyError, HolonomySign, OrderedOptions};
pub use manifold::{CoordinateIndex, ManifoldError, Pair, RotationConvention};
pub use matrix::{MatrixError, SubspaceLabel};
pub use scalar::Real;
pub use verify::{ConformanceReport, VerifyError};

pub type Complex = scalar::C<f64>;
pub type Mat2 = matrix::CMat2<f64>;
pub type Mat4 = matrix::CMat4<f64>;
pub type Point = manifold::GrassmannianPoint<f64>;
pub type Loop = holonomy::Loop<f64>;
pub type Region = holonomy::PlanarRegion<f64>;
pub type HolonomyPair = holonomy::HolonomyPair<f64>;
pub type ConnectionBlock = connection::ConnectionBlock<f64>;
pub type FieldStrengthBlock = connection::FieldStrengthBlock<f64>;
pub type Schedule = adiabatic::Schedule<f64>;
pub type AdiabaticResult = adiabatic::AdiabaticResult<f64>;
pub type TwoLevelLoop = adiabatic::TwoLevelLoop<f64>;

/// Any error the library reports.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Manifold(#[from] ManifoldError),
    #[error(transparent)]
    Connection(#[from] ConnectionError),
    #[error(transparent)]
    Holonomy(#[from] HolonomyError),
    #[error(transparent)]
    Adiabatic(#[from] AdiabaticError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
}
