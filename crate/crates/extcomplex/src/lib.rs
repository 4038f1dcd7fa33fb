//! Exact-arithmetic toolkit for extended formulations of polytopes.
//!
//! The crate provides:
//!
//! * exact rational polyhedral geometry (LPs, hulls, vertex enumeration,
//!   squared Hausdorff distances, inscribed ellipsoids),
//! * linear and semidefinite extended formulations with exact membership and
//!   verification oracles,
//! * size-bounded constructions (V-representation lifts, products, disjunctive
//!   unions, suffix-grouped formulations for 0/1 vertex sets),
//! * a normalization pipeline that rewrites a verified formulation into a
//!   monic encoding triple with certified norm bounds, and
//! * counting lower bounds for the maximal extension complexity of polytope
//!   families, evaluated in configurable high-precision arithmetic.
//!
//! All polyhedral computation is exact over arbitrary-precision rationals.
//! Floating point enters in exactly two places: the inscribed-ellipsoid
//! solver (whose output is re-certified exactly after rationalization) and
//! spectral-norm estimates for matrix pencils, which are always reported as
//! explicit lower/upper brackets.

pub mod bounds;
pub mod constructions;
pub mod error;
pub mod extform;
pub mod geometry;
pub mod highprec;
pub mod linalg;
pub mod normalization;
pub mod rational;

pub use error::{Error, Result};
pub use rational::Rational;
