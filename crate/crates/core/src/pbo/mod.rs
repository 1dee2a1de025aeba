//! Pseudo-Boolean (higher-order Ising) formulation of "find the classical
//! processor whose output best matches a target".
//!
//! Energies follow one convention everywhere: a strategy's energy is
//! `−(matches − mismatches)` on the target's support, so minimising the
//! polynomial maximises correlation and every energy is an integer.

mod encode;
mod io;
mod poly;
mod quadratize;

pub use encode::{encode_correlation, encode_with_penalty, freeze_module, Encoding, VariableLayout};
pub use io::{read_poly, read_qubo, write_poly, write_qubo};
pub use poly::{Coeff, PseudoBooleanPoly};
pub use quadratize::{default_penalty, quadratize, QuadratizedProblem};

/// Number of support errors implied by an energy under the crate-wide
/// convention: `errors = (|support| + energy) / 2`.
pub fn errors_from_energy(support: usize, energy: i64) -> Option<usize> {
    let twice = support as i64 + energy;
    (twice >= 0 && twice % 2 == 0).then_some((twice / 2) as usize)
}
