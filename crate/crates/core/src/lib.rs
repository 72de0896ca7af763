//! Numerical long-term analysis of finite-dimensional Banach lattice
//! homomorphisms.
//!
//! Finite dynamical systems φ: {0,…,n−1} → {0,…,n−1} induce Koopman matrices
//! f ↦ f∘φ, and more generally weighted composition operators
//! (Tf)(x) = w(x)·f(φ(x)) — exactly the nonnegative matrices with at most one
//! nonzero per row, which is what a lattice homomorphism looks like in finite
//! dimension. For such operators with spectral radius 1 and 1 isolated in the
//! spectrum, the space splits into a stable ideal on which the powers of T
//! decay geometrically and a periodic part on which some power of T acts as
//! the identity.
//!
//! This crate computes that splitting numerically (contour-integral spectral
//! projections, peripheral root-of-unity analysis, period extraction), builds
//! Cesàro averages and almost-periodic approximants, decides uniform mean
//! ergodicity, and cross-validates every spectral verdict against exact
//! combinatorial oracles on the underlying functional graph.
//!
//! Module map:
//! - [`dynsys`]: functional graphs, cycles, tails, measure preservation — the
//!   exact oracle layer.
//! - [`specmat`]: the dense complex spectral engine.
//! - [`latops`]: constructors and validators for lattice homomorphisms, plus
//!   the built-in instance gallery.
//! - [`decomp`]: the stable ⊕ periodic decomposition pipeline.
//! - [`ergodic`]: Cesàro averages, ergodicity verdicts, and the consistency
//!   harnesses tying the spectral picture back to the dynamics.
//! - [`instance`]: the JSON instance schema and seeded random generators.
//! - [`report`]: serializable result records shared with the CLI.

pub mod decomp;
pub mod dynsys;
pub mod ergodic;
pub mod error;
pub mod instance;
pub mod latops;
pub mod report;
pub mod specmat;

pub use error::{Error, Result};
