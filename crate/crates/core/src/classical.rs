//! Deterministic classical sequential processors with a bounded link alphabet,
//! and an exact maximum-correlation search over all of them.

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};
use crate::target::{TargetFunction, Topology};

/// Lookup table of one module, one row per incoming symbol.
///
/// Entries of a non-final module are link symbols `0..q`; entries of the final
/// module are outputs `±1`. The first module has a single row.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModuleStrategy {
    width: usize,
    table: Vec<i8>,
}

impl ModuleStrategy {
    pub fn from_rows(rows: &[Vec<i8>]) -> Result<Self> {
        let width = rows.first().map_or(0, Vec::len);
        if width == 0 || rows.iter().any(|r| r.len() != width) {
            return Err(contract("strategy rows must be non-empty and of equal length"));
        }
        Ok(Self { width, table: rows.concat() })
    }

    pub(crate) fn from_flat(width: usize, table: Vec<i8>) -> Self {
        debug_assert!(width > 0 && table.len().is_multiple_of(width));
        Self { width, table }
    }

    pub fn num_rows(&self) -> usize {
        self.table.len() / self.width
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn row(&self, incoming: usize) -> &[i8] {
        &self.table[incoming * self.width..(incoming + 1) * self.width]
    }

    pub fn rows(&self) -> Vec<Vec<i8>> {
        self.table.chunks(self.width).map(<[i8]>::to_vec).collect()
    }

    pub fn get(&self, incoming: usize, local: usize) -> i8 {
        self.table[incoming * self.width + local]
    }

    pub(crate) fn cells(&self) -> &[i8] {
        &self.table
    }

    pub(crate) fn cells_mut(&mut self) -> &mut [i8] {
        &mut self.table
    }

    /// Flip the sign of every output entry (only meaningful for the last module).
    pub fn negated(&self) -> Self {
        Self { width: self.width, table: self.table.iter().map(|v| -v).collect() }
    }
}

/// Complete set of module tables defining a classical processor.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StrategySet {
    topology: Topology,
    modules: Vec<ModuleStrategy>,
}

impl StrategySet {
    pub fn new(topology: Topology, modules: Vec<ModuleStrategy>) -> Result<Self> {
        let n = topology.num_modules();
        let q = topology.channel_arity();
        if modules.len() != n {
            return Err(contract(format!("expected {n} module tables, got {}", modules.len())));
        }
        for (i, m) in modules.iter().enumerate() {
            let width = 1usize << topology.local_bits()[i];
            let rows = if i == 0 { 1 } else { q };
            if m.width != width || m.num_rows() != rows {
                return Err(contract(format!(
                    "module {} table is {}x{}, expected {rows}x{width}",
                    i + 1,
                    m.num_rows(),
                    m.width
                )));
            }
            let ok = if i + 1 == n {
                m.table.iter().all(|&v| v == 1 || v == -1)
            } else {
                m.table.iter().all(|&v| v >= 0 && (v as usize) < q)
            };
            if !ok {
                return Err(contract(format!("module {} table has an entry outside its alphabet", i + 1)));
            }
        }
        Ok(Self { topology, modules })
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn modules(&self) -> &[ModuleStrategy] {
        &self.modules
    }

    pub fn module(&self, i: usize) -> &ModuleStrategy {
        &self.modules[i]
    }

    pub(crate) fn module_mut(&mut self, i: usize) -> &mut ModuleStrategy {
        &mut self.modules[i]
    }

    /// Output of the processor on the word with the given index.
    pub fn evaluate(&self, word: usize) -> i8 {
        let mut symbol = 0usize;
        let mut out = 0i8;
        for (i, m) in self.modules.iter().enumerate() {
            out = m.get(symbol, self.topology.local_input(i, word));
            symbol = out as usize;
        }
        out
    }

    /// Outputs over every word, in index order.
    pub fn output_table(&self) -> Vec<i8> {
        (0..self.topology.num_words()).map(|w| self.evaluate(w)).collect()
    }

    /// The same processor with its output negated.
    pub fn negated(&self) -> Self {
        let mut out = self.clone();
        let last = out.modules.len() - 1;
        out.modules[last] = out.modules[last].negated();
        out
    }
}

/// Uniformly random strategy tables.
pub fn random_strategy(topology: &Topology, seed: u64) -> StrategySet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_strategy_with(topology, &mut rng)
}

pub fn random_strategy_with<R: Rng>(topology: &Topology, rng: &mut R) -> StrategySet {
    let n = topology.num_modules();
    let q = topology.channel_arity();
    let modules = (0..n)
        .map(|i| {
            let width = 1usize << topology.local_bits()[i];
            let rows = if i == 0 { 1 } else { q };
            let table = (0..rows * width)
                .map(|_| {
                    if i + 1 == n {
                        if rng.gen::<bool>() {
                            1
                        } else {
                            -1
                        }
                    } else {
                        rng.gen_range(0..q) as i8
                    }
                })
                .collect();
            ModuleStrategy::from_flat(width, table)
        })
        .collect();
    StrategySet { topology: topology.clone(), modules }
}

/// Optimal final-module table for fixed upstream modules: each cell
/// (incoming symbol, local input) outputs the sign of the summed target
/// values routed to it. Ties and unreachable cells give `+1`.
pub fn majority_last_module(upstream: &[ModuleStrategy], target: &TargetFunction) -> ModuleStrategy {
    let topology = target.topology();
    let n = topology.num_modules();
    debug_assert_eq!(upstream.len(), n - 1);
    let width = 1usize << topology.local_bits()[n - 1];
    let q = topology.channel_arity();
    let mut weight = vec![0i64; q * width];
    for word in 0..topology.num_words() {
        let mut symbol = 0usize;
        for (i, m) in upstream.iter().enumerate() {
            symbol = m.get(symbol, topology.local_input(i, word)) as usize;
        }
        weight[symbol * width + topology.local_input(n - 1, word)] += target.value(word) as i64;
    }
    ModuleStrategy::from_flat(width, weight.iter().map(|&w| if w < 0 { -1 } else { 1 }).collect())
}

/// Result of the exact classical search.
#[derive(Debug, Clone)]
pub struct OracleResult {
    pub max_correlation: Ratio<i64>,
    pub min_errors: usize,
    pub witness: StrategySet,
    /// Number of canonical upstream configurations scored.
    pub configurations: u64,
}

/// Default evaluation budget of [`exact_oracle`]; admits three-module trit
/// processors and four-module bit processors with two-bit local inputs.
pub const DEFAULT_ORACLE_BUDGET: f64 = 1e10;

/// Number of tables over `len` cells with at most `q` symbols, counted up to
/// relabelling of the symbols (restricted growth strings).
pub fn canonical_table_count(len: usize, q: usize) -> f64 {
    // dp[k] = number of strings of the current length using exactly k symbols
    let mut dp = vec![0f64; q + 1];
    dp[0] = 1.0;
    for _ in 0..len {
        let mut next = vec![0f64; q + 1];
        for k in 0..=q {
            if dp[k] == 0.0 {
                continue;
            }
            next[k] += dp[k] * k as f64;
            if k < q {
                next[k + 1] += dp[k];
            }
        }
        dp = next;
    }
    dp.iter().sum()
}

/// Estimated number of target-value evaluations the exact search performs.
pub fn oracle_cost_estimate(topology: &Topology) -> f64 {
    let q = topology.channel_arity();
    let n = topology.num_modules();
    let mut count = 1.0;
    for i in 0..n - 1 {
        let incoming = if i == 0 { 1 } else { q };
        count *= canonical_table_count(incoming << topology.local_bits()[i], q);
    }
    count * topology.num_words() as f64
}

/// All tables over `len` cells with at most `q` symbols whose symbols first
/// appear in increasing order, in lexicographic order.
fn canonical_tables(len: usize, q: usize) -> Vec<Vec<i8>> {
    fn rec(prefix: &mut Vec<i8>, used: usize, len: usize, q: usize, out: &mut Vec<Vec<i8>>) {
        if prefix.len() == len {
            out.push(prefix.clone());
            return;
        }
        for s in 0..(used + 1).min(q) {
            prefix.push(s as i8);
            rec(prefix, used.max(s + 1), len, q, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(len), 0, len, q, &mut out);
    out
}

struct Search<'a> {
    target: &'a TargetFunction,
    tables: Vec<Vec<Vec<i8>>>,
}

#[derive(Clone)]
struct Best {
    score: i64,
    tables: Vec<Vec<i8>>,
    count: u64,
}

impl Best {
    fn empty() -> Self {
        Self { score: i64::MIN, tables: Vec::new(), count: 0 }
    }

    fn absorb(&mut self, other: Best) {
        self.count += other.count;
        if other.score > self.score {
            self.score = other.score;
            self.tables = other.tables;
        }
    }
}

impl Search<'_> {
    fn topology(&self) -> &Topology {
        self.target.topology()
    }

    /// `symbols[p]` is the link symbol entering module `level` for prefix `p`
    /// of the inputs of modules `0..level`.
    fn descend(&self, level: usize, symbols: &[u8], chosen: &mut Vec<Vec<i8>>, best: &mut Best) {
        let topology = self.topology();
        let n = topology.num_modules();
        let bits = topology.local_bits()[level];
        if level == n - 2 {
            self.score_last(level, symbols, chosen, best);
            return;
        }
        let width = 1usize << bits;
        let mut next = vec![0u8; symbols.len() * width];
        for table in &self.tables[level] {
            for (p, &s) in symbols.iter().enumerate() {
                let row = &table[s as usize * width..(s as usize + 1) * width];
                for (l, &t) in row.iter().enumerate() {
                    next[p * width + l] = t as u8;
                }
            }
            chosen.push(table.clone());
            self.descend(level + 1, &next, chosen, best);
            chosen.pop();
        }
    }

    fn score_last(&self, level: usize, symbols: &[u8], chosen: &[Vec<i8>], best: &mut Best) {
        let topology = self.topology();
        let n = topology.num_modules();
        let q = topology.channel_arity();
        let bits = topology.local_bits()[level];
        let last_bits = topology.local_bits()[n - 1];
        let width = 1usize << bits;
        let last_width = 1usize << last_bits;
        let incoming = if level == 0 { 1 } else { q };
        let cells = incoming * width;

        // Target mass routed to (cell of this module, local input of the last module).
        let mut routed = vec![0i64; cells * last_width];
        for word in 0..topology.num_words() {
            let prefix = word >> (bits + last_bits);
            let cell = symbols[prefix] as usize * width + topology.local_input(level, word);
            routed[cell * last_width + (word & (last_width - 1))] += self.target.value(word) as i64;
        }

        let mut weight = vec![0i64; q * last_width];
        for table in &self.tables[level] {
            weight.iter_mut().for_each(|w| *w = 0);
            for (cell, &s) in table.iter().enumerate() {
                let dst = &mut weight[s as usize * last_width..(s as usize + 1) * last_width];
                for (d, r) in dst.iter_mut().zip(&routed[cell * last_width..(cell + 1) * last_width]) {
                    *d += r;
                }
            }
            let score: i64 = weight.iter().map(|w| w.abs()).sum();
            best.count += 1;
            if score > best.score {
                best.score = score;
                best.tables = chosen.to_vec();
                best.tables.push(table.clone());
            }
        }
    }
}

/// Exact maximum correlation of any classical processor with `target`'s
/// topology, with a witness strategy set.
///
/// Upstream modules are enumerated up to relabelling of every link alphabet;
/// the final module is never enumerated because its optimal table is the
/// per-cell weighted majority.
pub fn exact_oracle(target: &TargetFunction) -> Result<OracleResult> {
    exact_oracle_with_budget(target, DEFAULT_ORACLE_BUDGET)
}

pub fn exact_oracle_with_budget(target: &TargetFunction, budget: f64) -> Result<OracleResult> {
    let topology = target.topology().clone();
    let estimated = oracle_cost_estimate(&topology);
    if estimated > budget {
        return Err(Error::TooLarge { what: "exact oracle", estimated, budget });
    }
    let n = topology.num_modules();
    let q = topology.channel_arity();
    let tables: Vec<Vec<Vec<i8>>> = (0..n - 1)
        .map(|i| {
            let incoming = if i == 0 { 1 } else { q };
            canonical_tables(incoming << topology.local_bits()[i], q)
        })
        .collect();
    let search = Search { target, tables };

    let first_width = 1usize << topology.local_bits()[0];
    let best = if n == 2 {
        let mut best = Best::empty();
        search.descend(0, &[0], &mut Vec::new(), &mut best);
        best
    } else {
        // Partition over first-module tables; merge in enumeration order so the
        // witness does not depend on the number of workers.
        search.tables[0]
            .par_iter()
            .map(|table| {
                let mut best = Best::empty();
                let symbols: Vec<u8> = table.iter().map(|&s| s as u8).collect();
                debug_assert_eq!(symbols.len(), first_width);
                search.descend(1, &symbols, &mut vec![table.clone()], &mut best);
                best
            })
            .collect::<Vec<_>>()
            .into_iter()
            .fold(Best::empty(), |mut acc, b| {
                acc.absorb(b);
                acc
            })
    };

    let mut modules: Vec<ModuleStrategy> = best
        .tables
        .iter()
        .enumerate()
        .map(|(i, t)| ModuleStrategy::from_flat(1usize << topology.local_bits()[i], t.clone()))
        .collect();
    modules.push(majority_last_module(&modules, target));
    let witness = StrategySet::new(topology, modules)?;
    let score = target.signed_matches(&witness.output_table())?;
    debug_assert_eq!(score, best.score);
    let support = target.support_size() as i64;
    Ok(OracleResult {
        max_correlation: Ratio::new(score, target.values().len() as i64),
        min_errors: ((support - score) / 2) as usize,
        witness,
        configurations: best.count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference;

    #[test]
    fn table_one_evaluates_as_printed() {
        let s = reference::qubit3_strategy();
        assert_eq!(s.evaluate(0), -1);
        let t = reference::qubit3_target();
        assert_eq!(t.hamming_errors(&s.output_table()).unwrap(), 8);
    }

    #[test]
    fn table_two_evaluates_as_printed() {
        let s = reference::qutrit3_strategy();
        // F1(00)=0, F2(0,00)=2, F3(2,00)=-1
        assert_eq!(s.module(0).get(0, 0), 0);
        assert_eq!(s.module(1).get(0, 0), 2);
        assert_eq!(s.evaluate(0), -1);
        let t = reference::qutrit3_target();
        assert_eq!(t.hamming_errors(&s.output_table()).unwrap(), 2);
    }

    #[test]
    fn table_three_has_sixteen_errors() {
        let t = reference::qutrit4_target();
        assert_eq!(t.hamming_errors(&reference::qutrit4_strategy().output_table()).unwrap(), 16);
    }

    #[test]
    fn constant_strategies_give_constant_output() {
        let topo = Topology::uniform(3, 2, 3).unwrap();
        let mut s = random_strategy(&topo, 5);
        for i in 0..3 {
            let fill = if i == 2 { -1 } else { 2 };
            s.module_mut(i).cells_mut().iter_mut().for_each(|v| *v = fill);
        }
        assert!(s.output_table().iter().all(|&o| o == -1));
    }

    #[test]
    fn shape_and_alphabet_are_validated() {
        let topo = Topology::uniform(3, 2, 2).unwrap();
        let ok = reference::qubit3_strategy();
        let mut modules = ok.modules().to_vec();
        modules[0] = ModuleStrategy::from_rows(&[vec![0, 1, 2, 1]]).unwrap();
        assert!(StrategySet::new(topo.clone(), modules).is_err());
        let mut modules = ok.modules().to_vec();
        modules[2] = ModuleStrategy::from_rows(&[vec![1, 1, 1, 0], vec![1, 1, 1, 1]]).unwrap();
        assert!(StrategySet::new(topo.clone(), modules).is_err());
        assert!(StrategySet::new(topo, ok.modules()[..2].to_vec()).is_err());
    }

    #[test]
    fn random_strategy_is_reproducible_and_valid() {
        let topo = Topology::uniform(3, 2, 2).unwrap();
        assert_eq!(random_strategy(&topo, 9), random_strategy(&topo, 9));
        for seed in 0..1000 {
            let s = random_strategy(&topo, seed);
            assert!(StrategySet::new(topo.clone(), s.modules().to_vec()).is_ok());
        }
    }

    #[test]
    fn canonical_counts_match_enumeration() {
        for (len, q) in [(4, 2), (4, 3), (8, 2), (12, 3), (5, 1)] {
            assert_eq!(canonical_tables(len, q).len() as f64, canonical_table_count(len, q));
        }
        // Stirling sums: S(4,1)+S(4,2)+S(4,3)
        assert_eq!(canonical_table_count(4, 3), 14.0);
    }

    #[test]
    fn oracle_on_constant_target_is_one() {
        for q in [2, 3] {
            let t = TargetFunction::constant(Topology::uniform(3, 2, q).unwrap(), 1).unwrap();
            let r = exact_oracle(&t).unwrap();
            assert_eq!(r.max_correlation, Ratio::from_integer(1));
            assert_eq!(r.min_errors, 0);
        }
    }

    #[test]
    fn oracle_rejects_four_module_trits() {
        let t = reference::qutrit4_target();
        match exact_oracle(&t) {
            Err(Error::TooLarge { estimated, .. }) => assert!(estimated > DEFAULT_ORACLE_BUDGET),
            other => panic!("expected size guard, got {other:?}"),
        }
    }

    #[test]
    fn majority_beats_every_last_module_on_two_module_instances() {
        let topo = Topology::uniform(2, 1, 2).unwrap();
        for code in 0..81u32 {
            let values: Vec<i8> = (0..4).map(|i| ((code / 3u32.pow(i)) % 3) as i8 - 1).collect();
            let t = TargetFunction::new(topo.clone(), values).unwrap();
            for first in 0..4u8 {
                let m1 = ModuleStrategy::from_rows(&[vec![(first >> 1) as i8, (first & 1) as i8]]).unwrap();
                let maj = majority_last_module(std::slice::from_ref(&m1), &t);
                let s = StrategySet::new(topo.clone(), vec![m1.clone(), maj]).unwrap();
                let majority_score = t.signed_matches(&s.output_table()).unwrap();
                for last in 0..16u8 {
                    let rows = vec![vec![sign(last, 0), sign(last, 1)], vec![sign(last, 2), sign(last, 3)]];
                    let other =
                        StrategySet::new(topo.clone(), vec![m1.clone(), ModuleStrategy::from_rows(&rows).unwrap()])
                            .unwrap();
                    assert!(t.signed_matches(&other.output_table()).unwrap() <= majority_score);
                }
            }
        }
    }

    fn sign(bits: u8, i: u32) -> i8 {
        if bits >> i & 1 == 1 {
            1
        } else {
            -1
        }
    }
}
