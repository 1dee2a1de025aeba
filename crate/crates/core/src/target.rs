//! Input-word indexing, ternary target functions and the row algebra used by
//! the classical bounds.
//!
//! Words are indexed big-endian: the first input bit `X1` is the most
//! significant bit of the index, so the rows of a reshaped target are labelled
//! by the inputs of the earliest modules.

use std::collections::HashMap;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};

/// Hard cap on the number of input bits; targets are dense tables.
pub const MAX_TOTAL_BITS: u32 = 24;

/// Shape of a sequential processor: how many modules, how many local input
/// bits each one reads, and how many symbols the links between them carry.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Topology {
    local_bits: Vec<u32>,
    channel_arity: usize,
}

impl Topology {
    pub fn new(local_bits: Vec<u32>, channel_arity: usize) -> Result<Self> {
        if local_bits.len() < 2 {
            return Err(contract(format!("a sequential processor needs at least 2 modules, got {}", local_bits.len())));
        }
        if local_bits.contains(&0) {
            return Err(contract("every module must read at least one local bit"));
        }
        let total: u32 = local_bits.iter().sum();
        if total > MAX_TOTAL_BITS {
            return Err(contract(format!("total input bits {total} exceeds the cap of {MAX_TOTAL_BITS}")));
        }
        if channel_arity < 2 {
            return Err(contract(format!("channel arity must be at least 2, got {channel_arity}")));
        }
        Ok(Self { local_bits, channel_arity })
    }

    /// `num_modules` modules that all read `bits` local bits.
    pub fn uniform(num_modules: usize, bits: u32, channel_arity: usize) -> Result<Self> {
        Self::new(vec![bits; num_modules], channel_arity)
    }

    pub fn num_modules(&self) -> usize {
        self.local_bits.len()
    }

    pub fn local_bits(&self) -> &[u32] {
        &self.local_bits
    }

    pub fn channel_arity(&self) -> usize {
        self.channel_arity
    }

    pub fn total_bits(&self) -> u32 {
        self.local_bits.iter().sum()
    }

    pub fn num_words(&self) -> usize {
        1usize << self.total_bits()
    }

    /// Number of input bits read by modules `0..modules`.
    pub fn prefix_bits(&self, modules: usize) -> u32 {
        self.local_bits[..modules].iter().sum()
    }

    /// The local input of `module` (0-based) inside a word index, as an
    /// integer whose most significant bit is the module's first bit.
    pub fn local_input(&self, module: usize, word: usize) -> usize {
        let after: u32 = self.local_bits[module + 1..].iter().sum();
        (word >> after) & ((1usize << self.local_bits[module]) - 1)
    }
}

/// A sequence of input bits, `X1` first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct InputWord(Vec<u8>);

impl InputWord {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.iter().any(|&b| b > 1) {
            return Err(contract("input word bits must be 0 or 1"));
        }
        if bits.len() > MAX_TOTAL_BITS as usize {
            return Err(contract("input word longer than the bit cap"));
        }
        Ok(Self(bits))
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    /// Big-endian index of this word within `topology`'s word space.
    pub fn index_of(&self, topology: &Topology) -> Result<usize> {
        let total = topology.total_bits() as usize;
        if self.0.len() != total {
            return Err(contract(format!("word has {} bits, topology expects {total}", self.0.len())));
        }
        Ok(self.0.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize))
    }

    /// Inverse of [`InputWord::index_of`].
    pub fn word_of(topology: &Topology, index: usize) -> Result<Self> {
        let total = topology.total_bits();
        if index >= topology.num_words() {
            return Err(contract(format!("index {index} outside the {total}-bit word space")));
        }
        Ok(Self((0..total).rev().map(|shift| ((index >> shift) & 1) as u8).collect()))
    }
}

/// Ternary table over every input word of a topology. `0` marks a word where
/// the quantum processor's output is not deterministic ("don't care").
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetFunction {
    topology: Topology,
    values: Vec<i8>,
}

impl TargetFunction {
    pub fn new(topology: Topology, values: Vec<i8>) -> Result<Self> {
        if values.len() != topology.num_words() {
            return Err(contract(format!(
                "target has {} values, topology has {} words",
                values.len(),
                topology.num_words()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(-1..=1).contains(*v)) {
            return Err(contract(format!("target value {v} not in {{-1, 0, 1}}")));
        }
        Ok(Self { topology, values })
    }

    pub fn from_fn(topology: Topology, f: impl Fn(usize) -> i8) -> Result<Self> {
        let values = (0..topology.num_words()).map(f).collect();
        Self::new(topology, values)
    }

    pub fn constant(topology: Topology, value: i8) -> Result<Self> {
        let n = topology.num_words();
        Self::new(topology, vec![value; n])
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn values(&self) -> &[i8] {
        &self.values
    }

    pub fn value(&self, index: usize) -> i8 {
        self.values[index]
    }

    pub fn support_size(&self) -> usize {
        self.values.iter().filter(|&&v| v != 0).count()
    }

    pub fn is_fully_specified(&self) -> bool {
        self.values.iter().all(|&v| v != 0)
    }

    pub fn negated(&self) -> Self {
        Self { topology: self.topology.clone(), values: self.values.iter().map(|v| -v).collect() }
    }

    /// Same values under a different topology with the same word count.
    pub fn with_topology(&self, topology: Topology) -> Result<Self> {
        Self::new(topology, self.values.clone())
    }

    /// View the table as a matrix whose rows are indexed by the first
    /// `prefix_bits` input bits.
    pub fn reshape(&self, prefix_bits: u32) -> Result<ReshapedMatrix> {
        let total = self.topology.total_bits();
        if prefix_bits == 0 || prefix_bits >= total {
            return Err(contract(format!("prefix of {prefix_bits} bits must lie strictly between 0 and {total}")));
        }
        ReshapedMatrix::new(1 << prefix_bits, 1 << (total - prefix_bits), self.values.clone())
    }

    fn check_output(&self, output: &[i8]) -> Result<()> {
        if output.len() != self.values.len() {
            return Err(contract(format!("output has {} entries, target has {}", output.len(), self.values.len())));
        }
        if output.iter().any(|&o| o != 1 && o != -1) {
            return Err(contract("output entries must be +1 or -1"));
        }
        Ok(())
    }

    /// `Σ output(x)·target(x)`, i.e. matches minus mismatches on the support.
    pub fn signed_matches(&self, output: &[i8]) -> Result<i64> {
        self.check_output(output)?;
        Ok(self.values.iter().zip(output).map(|(&t, &o)| (t * o) as i64).sum())
    }

    /// Correlation `(1/2^total) Σ output(x)·target(x)`, exact.
    pub fn correlation(&self, output: &[i8]) -> Result<Ratio<i64>> {
        let s = self.signed_matches(output)?;
        Ok(Ratio::new(s, self.values.len() as i64))
    }

    /// Number of support words where `output` disagrees with the target.
    pub fn hamming_errors(&self, output: &[i8]) -> Result<usize> {
        self.check_output(output)?;
        Ok(self.values.iter().zip(output).filter(|(&t, &o)| t != 0 && t != o).count())
    }

    /// Correlation implied by an error count: `(|support| − 2E) / 2^total`.
    pub fn correlation_for_errors(&self, errors: usize) -> Ratio<i64> {
        Ratio::new(self.support_size() as i64 - 2 * errors as i64, self.values.len() as i64)
    }
}

/// Row-major ternary matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReshapedMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i8>,
}

impl ReshapedMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<i8>) -> Result<Self> {
        if rows == 0 || cols == 0 || rows * cols != data.len() {
            return Err(contract(format!("{} entries cannot form a {rows}x{cols} matrix", data.len())));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<i8>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(contract("ragged rows"));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn num_rows(&self) -> usize {
        self.rows
    }

    pub fn num_cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[i8] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[i8]> {
        self.data.chunks(self.cols)
    }

    pub fn get(&self, r: usize, c: usize) -> i8 {
        self.data[r * self.cols + c]
    }

    pub fn flatten(&self) -> &[i8] {
        &self.data
    }

    pub fn is_fully_specified(&self) -> bool {
        self.data.iter().all(|&v| v != 0)
    }

    /// Reinterpret the same entries with `cols` columns.
    pub fn reshaped(&self, cols: usize) -> Result<Self> {
        if cols == 0 || !self.data.len().is_multiple_of(cols) {
            return Err(contract(format!("{} entries cannot be split into rows of {cols}", self.data.len())));
        }
        Self::new(self.data.len() / cols, cols, self.data.clone())
    }
}

/// Add two rows whose supports are disjoint.
pub fn merge_complementary_rows(a: &[i8], b: &[i8]) -> Result<Vec<i8>> {
    if a.len() != b.len() {
        return Err(contract("rows have different lengths"));
    }
    a.iter()
        .zip(b)
        .enumerate()
        .map(
            |(i, (&x, &y))| {
                if x != 0 && y != 0 {
                    Err(contract(format!("rows overlap at column {i}")))
                } else {
                    Ok(x + y)
                }
            },
        )
        .collect()
}

/// Two rows are compatible when they agree wherever both are specified.
pub fn rows_compatible(a: &[i8], b: &[i8]) -> bool {
    a.iter().zip(b).all(|(&x, &y)| x == 0 || y == 0 || x == y)
}

pub fn hamming(a: &[i8], b: &[i8]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

/// How rows are compared when counting distinct rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RowMatch {
    /// Rows are equal only when identical entry for entry.
    #[default]
    Exact,
    /// Zeros are wildcards; the count is the smallest partition into
    /// mutually compatible classes.
    Compatible,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowClasses {
    pub count: usize,
    /// Class label of every row; labels are numbered by first appearance.
    pub labels: Vec<usize>,
}

pub fn distinct_rows(matrix: &ReshapedMatrix, mode: RowMatch) -> RowClasses {
    match mode {
        RowMatch::Exact => {
            let mut seen: HashMap<&[i8], usize> = HashMap::new();
            let labels = matrix
                .rows()
                .map(|row| {
                    let next = seen.len();
                    *seen.entry(row).or_insert(next)
                })
                .collect();
            RowClasses { count: seen.len(), labels }
        }
        RowMatch::Compatible => {
            let mut k = 1;
            loop {
                if let Some(labels) = compatible_partition(matrix, k) {
                    let count = labels.iter().max().map_or(0, |m| m + 1);
                    return RowClasses { count, labels };
                }
                k += 1;
            }
        }
    }
}

/// Partition the rows into at most `max_classes` classes of pairwise
/// compatible rows, if such a partition exists. Labels follow first
/// appearance order.
pub fn compatible_partition(matrix: &ReshapedMatrix, max_classes: usize) -> Option<Vec<usize>> {
    // Identical rows always share a class; colour the unique rows only.
    let exact = distinct_rows(matrix, RowMatch::Exact);
    let mut reps: Vec<&[i8]> = vec![&[]; exact.count];
    for (r, &l) in exact.labels.iter().enumerate() {
        reps[l] = matrix.row(r);
    }
    let n = reps.len();
    let conflicts: Vec<Vec<usize>> =
        (0..n).map(|i| (0..i).filter(|&j| !rows_compatible(reps[i], reps[j])).collect()).collect();

    fn assign(i: usize, used: usize, max: usize, colour: &mut Vec<usize>, conflicts: &[Vec<usize>]) -> bool {
        if i == colour.len() {
            return true;
        }
        // Colours beyond `used` are interchangeable; try only the first new one.
        for c in 0..(used + 1).min(max) {
            if conflicts[i].iter().all(|&j| colour[j] != c) {
                colour[i] = c;
                if assign(i + 1, used.max(c + 1), max, colour, conflicts) {
                    return true;
                }
            }
        }
        false
    }

    let mut colour = vec![0; n];
    if n > 0 && !assign(0, 0, max_classes, &mut colour, &conflicts) {
        return None;
    }
    Some(exact.labels.iter().map(|&l| colour[l]).collect())
}

/// Minimum Hamming distance over all pairs of rows.
pub fn min_pairwise_hamming(matrix: &ReshapedMatrix) -> Result<usize> {
    if matrix.num_rows() < 2 {
        return Err(contract("need at least two rows"));
    }
    let mut best = usize::MAX;
    for i in 0..matrix.num_rows() {
        for j in i + 1..matrix.num_rows() {
            best = best.min(hamming(matrix.row(i), matrix.row(j)));
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference;

    fn bits6() -> Topology {
        Topology::uniform(3, 2, 2).unwrap()
    }

    #[test]
    fn word_indexing_is_big_endian() {
        let t = bits6();
        let idx = |b: [u8; 6]| InputWord::new(b.to_vec()).unwrap().index_of(&t).unwrap();
        assert_eq!(idx([0, 0, 0, 0, 0, 0]), 0);
        assert_eq!(idx([0, 0, 0, 0, 0, 1]), 1);
        assert_eq!(idx([1, 0, 0, 0, 0, 0]), 32);
    }

    #[test]
    fn word_length_mismatch_is_rejected() {
        let w = InputWord::new(vec![0, 1, 1]).unwrap();
        assert!(w.index_of(&bits6()).is_err());
        assert!(InputWord::new(vec![2]).is_err());
    }

    #[test]
    fn word_of_inverts_index_of() {
        let t = bits6();
        for i in 0..t.num_words() {
            let w = InputWord::word_of(&t, i).unwrap();
            assert_eq!(w.index_of(&t).unwrap(), i);
        }
        assert!(InputWord::word_of(&t, 64).is_err());
    }

    #[test]
    fn local_input_extracts_module_bits() {
        let t = bits6();
        // 10 01 11
        let w = 0b100111;
        assert_eq!(t.local_input(0, w), 0b10);
        assert_eq!(t.local_input(1, w), 0b01);
        assert_eq!(t.local_input(2, w), 0b11);
    }

    #[test]
    fn topology_guards() {
        assert!(Topology::new(vec![2], 2).is_err());
        assert!(Topology::new(vec![2, 0], 2).is_err());
        assert!(Topology::new(vec![12, 13], 2).is_err());
        assert!(Topology::new(vec![2, 2], 1).is_err());
        assert_eq!(Topology::new(vec![12, 12], 3).unwrap().total_bits(), 24);
    }

    #[test]
    fn reshape_matches_printed_layout() {
        let target = reference::qubit3_target();
        let m = target.reshape(2).unwrap();
        assert_eq!((m.num_rows(), m.num_cols()), (4, 16));
        assert_eq!(m.row(0), &reference::QUBIT3_ROWS[0]);
        assert_eq!(m.get(2, 3), -1);
        let last = target.reshape(5).unwrap();
        assert_eq!((last.num_rows(), last.num_cols()), (32, 2));
        assert_eq!(last.flatten(), target.values());
        assert!(target.reshape(0).is_err());
        assert!(target.reshape(6).is_err());

        let t11 = reference::qutrit4_target();
        let m11 = t11.reshape(4).unwrap();
        for r in 0..16 {
            assert_eq!(m11.row(r), &reference::QUTRIT4_ROWS[r]);
        }
    }

    #[test]
    fn correlation_examples() {
        let target = reference::qubit3_target();
        let zero = TargetFunction::constant(bits6(), 0).unwrap();
        let ones = vec![1i8; 64];
        assert_eq!(zero.correlation(&ones).unwrap(), Ratio::from_integer(0));

        let perfect: Vec<i8> = target.values().iter().map(|&v| if v == 0 { 1 } else { v }).collect();
        assert_eq!(target.correlation(&perfect).unwrap(), Ratio::new(1, 2));
        assert_eq!(target.hamming_errors(&perfect).unwrap(), 0);

        // Flip 8 of the 32 support entries.
        let mut out = perfect.clone();
        let support: Vec<usize> = (0..64).filter(|&i| target.value(i) != 0).collect();
        for &i in &support[..8] {
            out[i] = -out[i];
        }
        assert_eq!(target.hamming_errors(&out).unwrap(), 8);
        assert_eq!(target.correlation(&out).unwrap(), Ratio::new(1, 4));

        assert!(target.correlation(&ones[..10]).is_err());
        assert!(target.correlation(&[0i8; 64]).is_err());
    }

    #[test]
    fn merge_examples() {
        let rows = reference::QUBIT3_ROWS;
        let merged = merge_complementary_rows(&rows[0], &rows[2]).unwrap();
        assert_eq!(merged.len(), 16);
        assert!(merged.iter().all(|&v| v != 0));
        assert_eq!(merge_complementary_rows(&rows[1], &[0; 16]).unwrap(), rows[1].to_vec());
        assert!(merge_complementary_rows(&rows[0], &rows[1]).is_err());

        let rows11 = reference::QUTRIT4_ROWS;
        let wide: Vec<Vec<i8>> = (0..4).map(|r| rows11[4 * r..4 * r + 4].concat()).collect();
        let m = merge_complementary_rows(&wide[0], &wide[1]).unwrap();
        assert_eq!(m.len(), 64);
        assert!(m.iter().all(|&v| v != 0));
    }

    #[test]
    fn distinct_rows_and_min_hamming_examples() {
        let same = ReshapedMatrix::from_rows(&[vec![1, -1], vec![1, -1], vec![1, -1]]).unwrap();
        assert_eq!(distinct_rows(&same, RowMatch::Exact).count, 1);
        let two = ReshapedMatrix::from_rows(&[vec![1, 1], vec![1, 1]]).unwrap();
        assert_eq!(min_pairwise_hamming(&two).unwrap(), 0);
        let one = ReshapedMatrix::from_rows(&[vec![1, 1]]).unwrap();
        assert!(min_pairwise_hamming(&one).is_err());

        let rows = reference::QUBIT3_ROWS;
        let merged = merge_complementary_rows(&rows[0], &rows[2]).unwrap();
        let block = ReshapedMatrix::new(4, 4, merged).unwrap();
        assert_eq!(distinct_rows(&block, RowMatch::Exact).count, 4);
        assert_eq!(min_pairwise_hamming(&block).unwrap(), 2);

        let rows11 = reference::QUTRIT4_ROWS;
        let wide: Vec<Vec<i8>> = (0..4).map(|r| rows11[4 * r..4 * r + 4].concat()).collect();
        let merged = merge_complementary_rows(&wide[0], &wide[1]).unwrap();
        let block = ReshapedMatrix::new(4, 16, merged).unwrap();
        assert_eq!(distinct_rows(&block, RowMatch::Exact).count, 4);
        assert_eq!(min_pairwise_hamming(&block).unwrap(), 8);
    }

    #[test]
    fn compatible_mode_treats_zeros_as_wildcards() {
        let m = ReshapedMatrix::from_rows(&[vec![1, 0, 0], vec![0, -1, 0], vec![-1, 0, 1], vec![0, 0, -1]]).unwrap();
        assert_eq!(distinct_rows(&m, RowMatch::Exact).count, 4);
        let c = distinct_rows(&m, RowMatch::Compatible);
        assert_eq!(c.count, 2);
        for i in 0..4 {
            for j in 0..4 {
                if c.labels[i] == c.labels[j] {
                    assert!(rows_compatible(m.row(i), m.row(j)));
                }
            }
        }
        assert!(compatible_partition(&m, 1).is_none());
    }
}
