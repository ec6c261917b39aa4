//! Toric K-stability toolkit.
//!
//! The crate is organised around the objects that appear when one asks whether
//! a polarised toric manifold carries a constant scalar curvature Kähler
//! metric:
//!
//! * [`polytope`] exact rational moment polytopes with lattice boundary measures,
//! * [`stability`] the boundary functional `L`, Futaki invariants on linear
//!   functions, crease searches and toric test configurations,
//! * [`futaki`] the same invariants recovered from lattice-point counts and
//!   filtrations,
//! * [`geometry`] symplectic potentials, the toric metric and Abreu's
//!   scalar curvature operator on graded meshes,
//! * [`solver`] minimisation of the toric Mabuchi functional,
//! * [`kempfness`] finite-dimensional moment map flows and Hilbert–Mumford
//!   weights.
//!
//! Everything on the combinatorial side is exact (`BigRational`); floating
//! point only enters once a potential is discretised.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod banded;
pub mod error;
pub mod format;
pub mod futaki;
pub mod geometry;
pub mod kempfness;
pub mod mesh;
pub mod polytope;
pub mod rational;
pub mod solver;
pub mod stability;

pub use error::{Error, Result};
pub use polytope::{BoundaryMeasure, Facet, Measures, Polytope};
pub use rational::Rational;
pub use stability::{PLConvexFunction, StabilityStatus, StabilityVerdict};
