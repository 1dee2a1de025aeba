//! Published reference data: the deterministic target matrices of the qubit
//! and qutrit processors, and the optimal classical strategy tables found for
//! them. Used as fixtures and by the `--freeze` option of the CLI.

use crate::classical::{ModuleStrategy, StrategySet};
use crate::target::{TargetFunction, Topology};

/// Three-module qubit processor target, rows indexed by `X1X2`.
pub const QUBIT3_ROWS: [[i8; 16]; 4] = [
    [-1, 1, 0, 0, 1, -1, 0, 0, 0, 0, 1, -1, 0, 0, -1, 1],
    [1, -1, 0, 0, -1, 1, 0, 0, 0, 0, -1, 1, 0, 0, 1, -1],
    [0, 0, 1, -1, 0, 0, -1, 1, 1, -1, 0, 0, -1, 1, 0, 0],
    [0, 0, -1, 1, 0, 0, 1, -1, -1, 1, 0, 0, 1, -1, 0, 0],
];

/// Four-module qutrit processor target, rows indexed by `X1…X4`.
pub const QUTRIT4_ROWS: [[i8; 16]; 16] = [
    [0, 0, -1, 1, 0, 0, 1, -1, -1, 1, 0, 0, 1, -1, 0, 0],
    [0, 0, 1, -1, 0, 0, -1, 1, 1, -1, 0, 0, -1, 1, 0, 0],
    [-1, 1, 0, 0, 1, -1, 0, 0, 0, 0, 1, -1, 0, 0, -1, 1],
    [1, -1, 0, 0, -1, 1, 0, 0, 0, 0, -1, 1, 0, 0, 1, -1],
    [1, -1, 0, 0, -1, 1, 0, 0, 0, 0, -1, 1, 0, 0, 1, -1],
    [-1, 1, 0, 0, 1, -1, 0, 0, 0, 0, 1, -1, 0, 0, -1, 1],
    [0, 0, -1, 1, 0, 0, 1, -1, -1, 1, 0, 0, 1, -1, 0, 0],
    [0, 0, 1, -1, 0, 0, -1, 1, 1, -1, 0, 0, -1, 1, 0, 0],
    [0, 0, 1, -1, 0, 0, -1, 1, 1, -1, 0, 0, -1, 1, 0, 0],
    [0, 0, -1, 1, 0, 0, 1, -1, -1, 1, 0, 0, 1, -1, 0, 0],
    [1, -1, 0, 0, -1, 1, 0, 0, 0, 0, -1, 1, 0, 0, 1, -1],
    [-1, 1, 0, 0, 1, -1, 0, 0, 0, 0, 1, -1, 0, 0, -1, 1],
    [-1, 1, 0, 0, 1, -1, 0, 0, 0, 0, 1, -1, 0, 0, -1, 1],
    [1, -1, 0, 0, -1, 1, 0, 0, 0, 0, -1, 1, 0, 0, 1, -1],
    [0, 0, 1, -1, 0, 0, -1, 1, 1, -1, 0, 0, -1, 1, 0, 0],
    [0, 0, -1, 1, 0, 0, 1, -1, -1, 1, 0, 0, 1, -1, 0, 0],
];

fn flatten(rows: &[[i8; 16]]) -> Vec<i8> {
    rows.iter().flatten().copied().collect()
}

pub fn qubit3_target() -> TargetFunction {
    TargetFunction::new(Topology::uniform(3, 2, 2).unwrap(), flatten(&QUBIT3_ROWS)).unwrap()
}

/// Three-module qutrit target: the block of [`QUTRIT4_ROWS`] whose first gate acts as
/// the identity (rows 13–16). It coincides entry for entry with [`QUBIT3_ROWS`].
pub fn qutrit3_target() -> TargetFunction {
    TargetFunction::new(Topology::uniform(3, 2, 3).unwrap(), flatten(&QUTRIT4_ROWS[12..16])).unwrap()
}

/// Rows 1–4 of [`QUTRIT4_ROWS`] viewed as a three-module trit target.
pub fn qutrit4_first_block() -> TargetFunction {
    TargetFunction::new(Topology::uniform(3, 2, 3).unwrap(), flatten(&QUTRIT4_ROWS[..4])).unwrap()
}

pub fn qutrit4_target() -> TargetFunction {
    TargetFunction::new(Topology::uniform(4, 2, 3).unwrap(), flatten(&QUTRIT4_ROWS)).unwrap()
}

fn strategy(q: usize, modules: &[&[&[i8]]]) -> StrategySet {
    let topology = Topology::uniform(modules.len(), 2, q).unwrap();
    let modules = modules
        .iter()
        .map(|rows| ModuleStrategy::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap())
        .collect();
    StrategySet::new(topology, modules).unwrap()
}

/// Optimal one-bit, three-module strategies (8 errors against [`QUBIT3_ROWS`]).
pub fn qubit3_strategy() -> StrategySet {
    strategy(2, &[&[&[0, 1, 1, 1]], &[&[0, 1, 1, 0], &[1, 0, 0, 1]], &[&[-1, 1, -1, 1], &[1, -1, 1, -1]]])
}

/// Optimal one-trit, three-module strategies (2 errors).
pub fn qutrit3_strategy() -> StrategySet {
    strategy(
        3,
        &[
            &[&[0, 1, 2, 1]],
            &[&[2, 1, 2, 1], &[1, 2, 0, 2], &[2, 1, 1, 2]],
            &[&[-1, 1, -1, 1], &[1, -1, -1, 1], &[-1, 1, 1, -1]],
        ],
    )
}

/// Optimal one-trit, four-module strategies (16 errors against [`QUTRIT4_ROWS`]).
pub fn qutrit4_strategy() -> StrategySet {
    strategy(
        3,
        &[
            &[&[0, 2, 1, 0]],
            &[&[1, 2, 0, 1], &[2, 1, 2, 0], &[2, 0, 1, 2]],
            &[&[1, 0, 1, 2], &[2, 1, 1, 0], &[1, 2, 0, 1]],
            &[&[1, -1, -1, 1], &[-1, 1, 1, -1], &[-1, 1, -1, 1]],
        ],
    )
}

/// Reference strategy set by processor name; `TableI`, `TableII` and
/// `TableIII` are accepted as aliases.
pub fn table_by_name(name: &str) -> Option<StrategySet> {
    match name.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
        "qubit3" | "tablei" | "table1" => Some(qubit3_strategy()),
        "qutrit3" | "tableii" | "table2" => Some(qutrit3_strategy()),
        "qutrit4" | "tableiii" | "table3" => Some(qutrit4_strategy()),
        _ => None,
    }
}
