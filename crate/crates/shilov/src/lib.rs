//! Classification of triples of points on the Shilov boundaries of the
//! tube-type matrix ball domains: Jordan triple primitives, the exact
//! polydisc combinatorics, fractional-linear reduction of matrix triples to
//! the torus, the Lagrangian/symplectic picture with its signature index,
//! and the five-integer orbit invariant that separates the finitely many
//! group orbits.

pub mod error;
pub mod invariants;
pub mod jts;
pub mod lagrangian;
pub mod linalg;
pub mod models;
pub mod polydisc;
pub mod sampling;
pub mod selftest;

/// Default tolerance for residual/value checks (unitarity, symmetry, ...).
pub const EPS_VAL: f64 = 1e-8;
/// Default relative threshold for rank and kernel decisions.
pub const EPS_RANK: f64 = 1e-8;

pub use error::{Error, Result};
pub use invariants::{enumerate_orbits, pair_class, same_orbit, to_monotone_tuple, OrbitInvariant, PairClass};
pub use jts::{Flavor, TripleModel};
pub use models::{direct_invariants, embed_torus, reduce_to_torus, transversality_index, BoundaryMatrix, MoebiusElement};
pub use polydisc::{circle_maslov, standard_triple, torus_invariants, MonotoneTuple, TorusPoint, Turn};
