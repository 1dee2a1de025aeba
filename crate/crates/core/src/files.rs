//! Text formats for targets, strategy sets, matrices and shot logs.
//!
//! Targets and strategies are TOML documents carrying a versioned `format`
//! key. Target values are laid out as a matrix whose rows are indexed by the
//! inputs of the first `⌊N/2⌋` modules, which is how the tables are usually
//! printed (4×16 for three two-bit modules, 16×16 for four).

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::classical::{ModuleStrategy, StrategySet};
use crate::error::{contract, Error, Result};
use crate::quantum::ShotRecord;
use crate::target::{ReshapedMatrix, TargetFunction, Topology};

pub const TARGET_FORMAT: &str = "seqproc-target/1";
pub const STRATEGY_FORMAT: &str = "seqproc-strategy/1";

#[derive(Debug, Serialize, Deserialize)]
struct TargetDoc {
    format: String,
    num_modules: usize,
    local_bits: Vec<u32>,
    channel_arity: usize,
    values: Vec<Vec<i8>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct StrategyDoc {
    format: String,
    local_bits: Vec<u32>,
    channel_arity: usize,
    /// One table per module, one row per incoming symbol.
    modules: Vec<Vec<Vec<i8>>>,
}

fn toml_err(e: impl std::fmt::Display) -> Error {
    Error::Parse(e.to_string())
}

fn check_format(found: &str, expected: &str) -> Result<()> {
    if found != expected {
        return Err(Error::Parse(format!("unsupported format {found:?}, expected {expected:?}")));
    }
    Ok(())
}

/// Rows used when printing a target.
pub fn display_matrix(target: &TargetFunction) -> ReshapedMatrix {
    let t = target.topology();
    target.reshape(t.prefix_bits(t.num_modules() / 2)).expect("prefix of a valid topology")
}

/// One line per row, entries right-aligned to width 2.
pub fn render_matrix(m: &ReshapedMatrix) -> String {
    m.rows().map(|r| r.iter().map(|v| format!("{v:>2}")).collect::<Vec<_>>().join(" ") + "\n").collect()
}

pub fn write_target(target: &TargetFunction) -> String {
    let t = target.topology();
    let doc = TargetDoc {
        format: TARGET_FORMAT.into(),
        num_modules: t.num_modules(),
        local_bits: t.local_bits().to_vec(),
        channel_arity: t.channel_arity(),
        values: display_matrix(target).rows().map(<[i8]>::to_vec).collect(),
    };
    toml::to_string(&doc).expect("target document serializes")
}

pub fn read_target(text: &str) -> Result<TargetFunction> {
    let doc: TargetDoc = toml::from_str(text).map_err(toml_err)?;
    check_format(&doc.format, TARGET_FORMAT)?;
    if doc.num_modules != doc.local_bits.len() {
        return Err(contract(format!(
            "num_modules = {} but {} local bit counts given",
            doc.num_modules,
            doc.local_bits.len()
        )));
    }
    let topology = Topology::new(doc.local_bits, doc.channel_arity)?;
    TargetFunction::new(topology, doc.values.concat())
}

pub fn write_strategy(s: &StrategySet) -> String {
    let t = s.topology();
    let doc = StrategyDoc {
        format: STRATEGY_FORMAT.into(),
        local_bits: t.local_bits().to_vec(),
        channel_arity: t.channel_arity(),
        modules: s.modules().iter().map(ModuleStrategy::rows).collect(),
    };
    toml::to_string(&doc).expect("strategy document serializes")
}

pub fn read_strategy(text: &str) -> Result<StrategySet> {
    let doc: StrategyDoc = toml::from_str(text).map_err(toml_err)?;
    check_format(&doc.format, STRATEGY_FORMAT)?;
    let topology = Topology::new(doc.local_bits, doc.channel_arity)?;
    let modules = doc.modules.iter().map(|rows| ModuleStrategy::from_rows(rows)).collect::<Result<Vec<_>>>()?;
    StrategySet::new(topology, modules)
}

/// `mat m n`, then `m` lines of `n` values.
pub fn write_matrix(m: &ReshapedMatrix) -> String {
    let mut out = format!("mat {} {}\n", m.num_rows(), m.num_cols());
    for r in m.rows() {
        out += &r.iter().map(i8::to_string).collect::<Vec<_>>().join(" ");
        out.push('\n');
    }
    out
}

pub fn read_matrix(text: &str) -> Result<ReshapedMatrix> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
    let head: Vec<&str> = lines.next().unwrap_or_default().split_whitespace().collect();
    let (rows, cols) = match head.as_slice() {
        ["mat", m, n] => (
            m.parse::<usize>().map_err(|_| Error::Parse(format!("bad row count {m:?}")))?,
            n.parse::<usize>().map_err(|_| Error::Parse(format!("bad column count {n:?}")))?,
        ),
        _ => return Err(Error::Parse("expected `mat <m> <n>` header".into())),
    };
    let mut data = Vec::with_capacity(rows * cols);
    let mut seen = 0;
    for line in lines {
        let row = line
            .split_whitespace()
            .map(|v| match v.parse::<i8>() {
                Ok(x @ -1..=1) => Ok(x),
                _ => Err(Error::Parse(format!("bad matrix entry {v:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        if row.len() != cols {
            return Err(Error::Parse(format!("row {} has {} entries, expected {cols}", seen + 1, row.len())));
        }
        data.extend(row);
        seen += 1;
    }
    if seen != rows {
        return Err(Error::Parse(format!("expected {rows} rows, found {seen}")));
    }
    ReshapedMatrix::new(rows, cols, data)
}

/// CSV shot log: `word,basis,outcome` with outcomes `+1`, `-1`, `D`.
pub fn write_shots(shots: &[ShotRecord], out: &mut impl Write) -> Result<()> {
    writeln!(out, "word,basis,outcome")?;
    for s in shots {
        writeln!(out, "{},{},{}", s.word, s.basis, s.outcome.token())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference::{qubit3_target, qutrit4_strategy, qutrit4_target, QUBIT3_ROWS, QUTRIT4_ROWS};

    #[test]
    fn target_round_trip_and_layout() {
        let t = qubit3_target();
        let text = write_target(&t);
        assert_eq!(read_target(&text).unwrap(), t);
        let rows = display_matrix(&t);
        assert_eq!((rows.num_rows(), rows.num_cols()), (4, 16));
        assert!(rows.rows().zip(QUBIT3_ROWS.iter()).all(|(a, b)| a == b));
        let rows = display_matrix(&qutrit4_target());
        assert!(rows.rows().zip(QUTRIT4_ROWS.iter()).all(|(a, b)| a == b));
    }

    #[test]
    fn strategy_round_trip() {
        let s = qutrit4_strategy();
        assert_eq!(read_strategy(&write_strategy(&s)).unwrap(), s);
    }

    #[test]
    fn matrix_round_trip_and_errors() {
        let m = ReshapedMatrix::from_rows(&[vec![1, 0, -1], vec![-1, -1, 1]]).unwrap();
        let text = write_matrix(&m);
        assert!(text.starts_with("mat 2 3\n"));
        assert_eq!(read_matrix(&text).unwrap(), m);
        assert!(read_matrix("mat 1 2\n1 2\n").is_err());
        assert!(read_matrix("mat 2 2\n1 1\n").is_err());
        assert!(read_matrix("matrix 1 1\n1\n").is_err());
    }

    #[test]
    fn wrong_format_is_rejected() {
        let text = write_target(&qubit3_target()).replace(TARGET_FORMAT, "other/9");
        assert!(matches!(read_target(&text), Err(Error::Parse(_))));
    }
}
