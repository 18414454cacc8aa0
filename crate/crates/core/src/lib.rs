//! Exact-arithmetic toolkit for positive definite integral quadratic
//! lattices: genus and spin-genus enumeration, primitive representation
//! counting, local representability certificates, bounded-precision
//! p-adic kernels (Smith normal form, Newton and Greenberg lifting,
//! k-generation checks) and content/height computations.

pub mod arith;
pub mod caps;
pub mod error;
pub mod json;
pub mod lattice;
pub mod mat;
pub mod genus;
pub mod localrep;
pub mod poly;

pub use arith::{Int, Rat};
pub use caps::Caps;
pub use error::{Error, Result};
pub use lattice::{QuadLattice, UnimodularChange};
