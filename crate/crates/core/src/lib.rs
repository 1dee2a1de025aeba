//! Simulation and analysis of limited-communication sequential processors.
//!
//! A sequential processor is a chain of modules; each module reads a few
//! local input bits plus one symbol from its predecessor and emits one symbol
//! to its successor. This crate covers:
//!
//! - [`target`]: input indexing, ternary target functions, row algebra.
//! - [`quantum`]: exact simulation of the one-qubit and one-qutrit
//!   processors, their deterministic targets, and finite-shot sampling.
//! - [`classical`]: classical processors with a one-bit/one-trit link and an
//!   exact maximum-correlation search.
//! - [`bounds`]: structural lower-bound certificates and the expressibility
//!   criterion.
//! - [`pbo`]: pseudo-Boolean encoding of the approximation problem,
//!   quadratization and QUBO export.
//! - [`anneal`]: simulated annealing over polynomials and strategy tables.
//! - [`apps`]: low-rank binary matrix approximation and completion.
//! - [`files`]: text formats for targets, strategies and matrices.

pub mod anneal;
pub mod apps;
pub mod bounds;
pub mod classical;
pub mod error;
pub mod files;
pub mod pbo;
pub mod quantum;
pub mod reference;
pub mod target;

pub use error::{Error, Result};
pub use target::{InputWord, ReshapedMatrix, TargetFunction, Topology};
