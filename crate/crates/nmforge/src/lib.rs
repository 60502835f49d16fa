//! Exact finite-carrier models of `L^p`-normed modules over measure spaces.
//!
//! Everything here lives over a finite carrier: a measure space is a list of
//! labelled points with nonnegative rational masses, a Banach bundle assigns a
//! finite-dimensional normed fiber to each point, and module elements are
//! sections of such bundles considered up to null sets. On this substrate the
//! crate computes the objects that are usually only proved to exist:
//!
//! * Doob conditional-expectation operators along a refining partition chain,
//!   together with the pointwise-defined representative of an `L^1` class and
//!   its `p`-power variant ([`doob`]);
//! * fiberwise norms, dual norms, and dual-norm attainment vectors for the
//!   `l^1`/`l^2`/`l^infinity`, weighted, and polyhedral norm families
//!   ([`fiber`]);
//! * section modules with pointwise norm, glueing, `L^p` module norms, and the
//!   fiberization that recovers the bundle from the module ([`bundle`]);
//! * pullbacks of modules along measure-preserving maps and the extension of
//!   pointwise-dominated operators to the pullback ([`pullback`]);
//! * module duals realized as weak sections of the dual bundle, the duality
//!   isomorphisms, and duals of pullbacks ([`duality`]);
//! * von Neumann liftings induced by retractions onto the support, lifted
//!   modules and morphisms, and compatibility along maps ([`lifting`]);
//! * the mass-redistribution operator adjoint to composition and the weak-star
//!   approximation of a pullback-dual functional by embedded localizations
//!   ([`weakstar`]);
//! * a scenario format, a seeded instance generator, and named verification
//!   suites ([`scenario`], [`generate`], [`suite`]).
//!
//! Arithmetic is exact: masses, coordinates, and pairings are
//! arbitrary-precision rationals, and only root extraction may leave the
//! rational field (see [`scalar::Scalar`]).

pub mod bundle;
pub mod doob;
pub mod duality;
pub mod error;
pub mod fiber;
pub mod generate;
pub mod lifting;
pub mod measure;
pub mod pullback;
pub mod scalar;
pub mod scenario;
pub mod suite;
pub mod weakstar;

pub use error::{Error, Result};
pub use scalar::{Rational, Scalar};
