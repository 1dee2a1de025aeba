//! Lower-bound certificates for the classical processors and the
//! distinct-row expressibility criterion.
//!
//! A certificate is a list of checkable facts about a specific target. Each
//! fact records what was measured and what was required; the bound is only
//! claimed when every fact holds. The closing fact of every certificate is a
//! relaxed lower bound computed by [`relaxed_min_errors`]: rows are split
//! into link-symbol classes level by level, and each class is allowed its own
//! downstream tables. Allowing more freedom than a real processor has can
//! only lower the error count, so the relaxation is a valid bound.

use serde::{Deserialize, Serialize};

use crate::classical::{ModuleStrategy, StrategySet};
use crate::error::{contract, Result};
use crate::target::{
    compatible_partition, distinct_rows, hamming, merge_complementary_rows, min_pairwise_hamming, ReshapedMatrix,
    RowMatch, TargetFunction, Topology,
};

/// One verified step of a lower-bound argument.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fact {
    pub description: String,
    pub operation: String,
    pub observed: String,
    pub required: String,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundCertificate {
    pub target_id: String,
    /// Claimed minimum number of errors on the support.
    pub claimed_errors: usize,
    pub facts: Vec<Fact>,
    pub pass: bool,
}

impl BoundCertificate {
    fn new(target_id: &str, claimed_errors: usize, facts: Vec<Fact>) -> Self {
        let pass = !facts.is_empty() && facts.iter().all(|f| f.holds);
        Self { target_id: target_id.to_string(), claimed_errors, facts, pass }
    }

    /// The certified bound, if every fact holds.
    pub fn bound(&self) -> Option<usize> {
        self.pass.then_some(self.claimed_errors)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serialises")
    }

    /// Human-readable report, one line per fact.
    pub fn render(&self) -> String {
        let mut out = format!(
            "certificate {} (claimed lower bound {} errors): {}\n",
            self.target_id,
            self.claimed_errors,
            if self.pass { "PASS" } else { "FAIL" }
        );
        for f in &self.facts {
            out.push_str(&format!(
                "  [{}] {} | {} observed={} required={}\n",
                if f.holds { "ok" } else { "FAIL" },
                f.description,
                f.operation,
                f.observed,
                f.required
            ));
        }
        out
    }
}

fn fact(
    description: impl Into<String>,
    operation: &str,
    observed: impl ToString,
    required: impl Into<String>,
    holds: bool,
) -> Fact {
    Fact {
        description: description.into(),
        operation: operation.to_string(),
        observed: observed.to_string(),
        required: required.into(),
        holds,
    }
}

/// Per-entry tally of target values that were merged into one position.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Votes {
    plus: u32,
    minus: u32,
}

impl Votes {
    fn of(v: i8) -> Self {
        match v {
            1 => Self { plus: 1, minus: 0 },
            -1 => Self { plus: 0, minus: 1 },
            _ => Self::default(),
        }
    }

    fn add(self, o: Self) -> Self {
        Self { plus: self.plus + o.plus, minus: self.minus + o.minus }
    }

    fn cost(self) -> u32 {
        self.plus.min(self.minus)
    }
}

/// Visit every partition of `0..n` into at most `k` classes, as restricted
/// growth strings.
fn for_each_partition(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    fn rec(labels: &mut Vec<usize>, used: usize, n: usize, k: usize, f: &mut dyn FnMut(&[usize])) {
        if labels.len() == n {
            f(labels);
            return;
        }
        for c in 0..(used + 1).min(k) {
            labels.push(c);
            rec(labels, used.max(c + 1), n, k, f);
            labels.pop();
        }
    }
    rec(&mut Vec::with_capacity(n), 0, n, k, &mut f);
}

/// Minimum cost of splitting `rows` into at most `k` classes where each class
/// is merged and then costed by `inner`.
fn partition_cost(rows: &[Vec<Votes>], k: usize, inner: &dyn Fn(&[Votes]) -> u32) -> u32 {
    let mut best = u32::MAX;
    for_each_partition(rows.len(), k, |labels| {
        let classes = labels.iter().max().map_or(0, |m| m + 1);
        let mut total = 0;
        for c in 0..classes {
            let mut merged = vec![Votes::default(); rows[0].len()];
            for (r, _) in labels.iter().enumerate().filter(|(_, &l)| l == c) {
                for (m, v) in merged.iter_mut().zip(&rows[r]) {
                    *m = m.add(*v);
                }
            }
            total += inner(&merged);
            if total >= best {
                return;
            }
        }
        best = best.min(total);
    });
    best
}

fn relaxed(votes: &[Votes], bits: &[u32], q: usize) -> u32 {
    if bits.len() == 1 {
        return votes.iter().map(|v| v.cost()).sum();
    }
    let width = votes.len() >> bits[0];
    let rows: Vec<Vec<Votes>> = votes.chunks(width).map(<[Votes]>::to_vec).collect();
    partition_cost(&rows, q, &|merged| relaxed(merged, &bits[1..], q))
}

/// Lower bound on the errors of any classical processor on `target`: the
/// exact optimum of the relaxation in which every upstream class chooses its
/// downstream tables independently. Exact for two-module processors.
pub fn relaxed_min_errors(target: &TargetFunction) -> usize {
    let topology = target.topology();
    let votes: Vec<Votes> = target.values().iter().map(|&v| Votes::of(v)).collect();
    relaxed(&votes, topology.local_bits(), topology.channel_arity()) as usize
}

/// Exact minimum number of changes that leave at most `k` distinct rows in a
/// fully or partially specified matrix (zeros cost nothing).
pub fn min_changes_to_k_rows(matrix: &ReshapedMatrix, k: usize) -> usize {
    let rows: Vec<Vec<Votes>> = matrix.rows().map(|r| r.iter().map(|&v| Votes::of(v)).collect()).collect();
    partition_cost(&rows, k, &|merged| merged.iter().map(|v| v.cost()).sum()) as usize
}

/// Outcome of the distinct-row expressibility criterion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expressibility {
    pub expressible: bool,
    /// First cut (number of leading modules) whose row count exceeds the
    /// link arity.
    pub first_violation: Option<usize>,
    /// Row-class count at every cut `1..N`.
    pub rows_per_cut: Vec<usize>,
}

/// Check whether every reshaping at a module boundary has at most
/// `channel_arity` distinct rows.
///
/// With [`RowMatch::Exact`] the target must be fully specified. With
/// [`RowMatch::Compatible`] zeros are wildcards and each cut must admit a
/// partition into at most `q` classes of mutually compatible rows.
pub fn expressibility_check(target: &TargetFunction, mode: RowMatch) -> Result<Expressibility> {
    if mode == RowMatch::Exact && !target.is_fully_specified() {
        return Err(contract("target has don't-care entries; enable compatibility mode to check it"));
    }
    let topology = target.topology();
    let q = topology.channel_arity();
    let mut rows_per_cut = Vec::new();
    let mut first_violation = None;
    for cut in 1..topology.num_modules() {
        let m = target.reshape(topology.prefix_bits(cut))?;
        let count = match mode {
            RowMatch::Exact => distinct_rows(&m, RowMatch::Exact).count,
            RowMatch::Compatible => match compatible_partition(&m, q) {
                Some(labels) => labels.iter().max().map_or(0, |x| x + 1),
                None => q + 1,
            },
        };
        if count > q && first_violation.is_none() {
            first_violation = Some(cut);
        }
        rows_per_cut.push(count);
    }
    Ok(Expressibility { expressible: first_violation.is_none(), first_violation, rows_per_cut })
}

/// Build a processor that outputs `target` from the row classes of every cut.
///
/// Returns `Ok(None)` when the classes cannot be chained into consistent
/// module tables, or when the assembled processor does not reproduce the
/// target on its support.
pub fn reconstruct_strategy(target: &TargetFunction, mode: RowMatch) -> Result<Option<StrategySet>> {
    let check = expressibility_check(target, mode)?;
    if !check.expressible {
        return Ok(None);
    }
    let topology = target.topology();
    let n = topology.num_modules();
    let q = topology.channel_arity();
    let labels: Vec<(ReshapedMatrix, Vec<usize>)> = (1..n)
        .map(|cut| {
            let m = target.reshape(topology.prefix_bits(cut))?;
            let l = match mode {
                RowMatch::Exact => distinct_rows(&m, RowMatch::Exact).labels,
                RowMatch::Compatible => compatible_partition(&m, q).expect("checked above"),
            };
            Ok((m, l))
        })
        .collect::<Result<_>>()?;

    let mut modules = Vec::with_capacity(n);
    modules
        .push(ModuleStrategy::from_flat(1 << topology.local_bits()[0], labels[0].1.iter().map(|&l| l as i8).collect()));
    for module in 1..n {
        let width = 1usize << topology.local_bits()[module];
        let upstream = &labels[module - 1].1;
        let mut table: Vec<Option<i8>> = vec![None; q * width];
        for (prefix, &symbol) in upstream.iter().enumerate() {
            for local in 0..width {
                let value = if module + 1 < n {
                    Some(labels[module].1[prefix * width + local] as i8)
                } else {
                    // Output: the row entry at this local input, if specified.
                    let row = labels[module - 1].0.row(prefix);
                    match row[local] {
                        0 => None,
                        v => Some(v),
                    }
                };
                let cell = &mut table[symbol * width + local];
                match (*cell, value) {
                    (Some(a), Some(b)) if a != b => return Ok(None),
                    (None, Some(b)) => *cell = Some(b),
                    _ => {}
                }
            }
        }
        let fill = if module + 1 < n { 0 } else { 1 };
        modules.push(ModuleStrategy::from_flat(width, table.into_iter().map(|c| c.unwrap_or(fill)).collect()));
    }
    let strategy = StrategySet::new(topology.clone(), modules)?;
    if target.hamming_errors(&strategy.output_table())? != 0 {
        return Ok(None);
    }
    Ok(Some(strategy))
}

fn topology_fact(target: &TargetFunction, modules: usize, q: usize) -> Fact {
    let t = target.topology();
    let ok = t.num_modules() == modules && t.local_bits().iter().all(|&b| b == 2) && t.channel_arity() == q;
    fact(
        "processor shape",
        "topology",
        format!("{} modules, bits {:?}, arity {}", t.num_modules(), t.local_bits(), t.channel_arity()),
        format!("{modules} modules of 2 bits, arity {q}"),
        ok,
    )
}

/// Pairings of four rows into two disjoint pairs with complementary supports.
fn complementary_pairings(m: &ReshapedMatrix) -> Vec<[(usize, usize); 2]> {
    let full = |a: usize, b: usize| m.row(a).iter().zip(m.row(b)).all(|(&x, &y)| (x == 0) != (y == 0));
    [[(0, 1), (2, 3)], [(0, 2), (1, 3)], [(0, 3), (1, 2)]]
        .into_iter()
        .filter(|p| p.iter().all(|&(a, b)| full(a, b)))
        .collect()
}

/// Facts shared by the three certificates, up to the pairing step.
fn opening_facts(target: &TargetFunction, modules: usize, q: usize) -> (Vec<Fact>, Option<ReshapedMatrix>) {
    let mut facts = vec![topology_fact(target, modules, q)];
    if !facts[0].holds {
        return (facts, None);
    }
    let support = target.support_size();
    facts.push(fact("target has a non-empty support", "support_size", support, "> 0", support > 0));
    let m = target.reshape(2).expect("two-bit first module");
    let distinct = distinct_rows(&m, RowMatch::Exact).count;
    facts.push(fact(
        format!("first-module rows outnumber the {q} link symbols, so two rows must share a symbol"),
        "distinct_rows(reshape prefix=2)",
        distinct,
        format!("> {q}"),
        distinct > q,
    ));
    (facts, Some(m))
}

fn closing_fact(target: &TargetFunction, claimed: usize) -> Fact {
    let lb = relaxed_min_errors(target);
    fact(
        "relaxed optimum over every split of rows into link-symbol classes",
        "relaxed_min_errors",
        lb,
        format!(">= {claimed}"),
        lb >= claimed,
    )
}

/// Bound of 8 errors for a three-module processor with a one-bit link.
pub fn certify_qubit3(target: &TargetFunction) -> BoundCertificate {
    const CLAIM: usize = 8;
    let (mut facts, m) = opening_facts(target, 3, 2);
    let Some(m) = m else {
        return BoundCertificate::new("qubit3", CLAIM, facts);
    };
    let pairings = complementary_pairings(&m);
    facts.push(fact(
        "rows split into two pairs with complementary supports",
        "merge_complementary_rows",
        pairings.len(),
        ">= 1 pairing",
        !pairings.is_empty(),
    ));
    for pairing in &pairings {
        for &(a, b) in pairing {
            let merged = merge_complementary_rows(m.row(a), m.row(b)).expect("complementary");
            let block = ReshapedMatrix::new(4, 4, merged).expect("16 entries");
            let distinct = distinct_rows(&block, RowMatch::Exact).count;
            let dmin = min_pairwise_hamming(&block).expect("4 rows");
            let cost = min_changes_to_k_rows(&block, 2);
            let pair = format!("rows {}+{}", a + 1, b + 1);
            facts.push(fact(
                format!("{pair}: merged 4x4 block has 4 distinct rows"),
                "distinct_rows",
                distinct,
                "4",
                distinct == 4,
            ));
            facts.push(fact(
                format!("{pair}: minimum pairwise row distance"),
                "min_pairwise_hamming",
                dmin,
                "2",
                dmin == 2,
            ));
            facts.push(fact(
                format!("{pair}: changes needed to reach 2 distinct rows"),
                "min_changes_to_k_rows(k=2)",
                cost,
                ">= 4",
                cost >= 4,
            ));
        }
    }
    facts.push(closing_fact(target, CLAIM));
    BoundCertificate::new("qubit3", CLAIM, facts)
}

/// Bound of 2 errors for a three-module processor with a one-trit link.
pub fn certify_qutrit3(target: &TargetFunction) -> BoundCertificate {
    const CLAIM: usize = 2;
    let (mut facts, m) = opening_facts(target, 3, 3);
    let Some(m) = m else {
        return BoundCertificate::new("qutrit3", CLAIM, facts);
    };
    let pairings = complementary_pairings(&m);
    facts.push(fact(
        "rows split into two pairs with complementary supports",
        "merge_complementary_rows",
        pairings.len(),
        ">= 1 pairing",
        !pairings.is_empty(),
    ));
    for pairing in &pairings {
        for &(a, b) in pairing {
            let merged = merge_complementary_rows(m.row(a), m.row(b)).expect("complementary");
            let blocks = ReshapedMatrix::new(4, 4, merged).expect("16 entries");
            let distinct = distinct_rows(&blocks, RowMatch::Exact).count;
            let dmin = min_pairwise_hamming(&blocks).expect("4 blocks");
            let cost = min_changes_to_k_rows(&blocks, 3);
            let pair = format!("rows {}+{}", a + 1, b + 1);
            facts.push(fact(
                format!("{pair}: four length-4 blocks, all distinct"),
                "distinct_rows",
                distinct,
                "4",
                distinct == 4,
            ));
            facts.push(fact(
                format!("{pair}: minimum pairwise block distance"),
                "min_pairwise_hamming",
                dmin,
                "2",
                dmin == 2,
            ));
            facts.push(fact(
                format!("{pair}: changes needed to reach 3 distinct blocks"),
                "min_changes_to_k_rows(k=3)",
                cost,
                ">= 2",
                cost >= 2,
            ));
        }
    }
    facts.push(closing_fact(target, CLAIM));
    BoundCertificate::new("qutrit3", CLAIM, facts)
}

/// Bound of 16 errors for a four-module processor with a one-trit link.
pub fn certify_qutrit4(target: &TargetFunction) -> BoundCertificate {
    const CLAIM: usize = 16;
    let (mut facts, m) = opening_facts(target, 4, 3);
    let Some(m) = m else {
        return BoundCertificate::new("qutrit4", CLAIM, facts);
    };
    let pairings = complementary_pairings(&m);
    facts.push(fact(
        "rows of the 4x64 reshape split into two pairs with complementary supports",
        "merge_complementary_rows",
        pairings.len(),
        ">= 1 pairing",
        !pairings.is_empty(),
    ));
    for pairing in &pairings {
        for &(a, b) in pairing {
            let merged = merge_complementary_rows(m.row(a), m.row(b)).expect("complementary");
            let mid = ReshapedMatrix::new(4, 16, merged).expect("64 entries");
            let dmin = min_pairwise_hamming(&mid).expect("4 rows");
            let pair = format!("rows {}+{}", a + 1, b + 1);
            facts.push(fact(
                format!("{pair}: minimum pairwise distance of the 4x16 reshape"),
                "min_pairwise_hamming",
                dmin,
                "8",
                dmin == 8,
            ));
            for (r, row) in mid.rows().enumerate() {
                let blocks = ReshapedMatrix::new(4, 4, row.to_vec()).expect("16 entries");
                let distinct = distinct_rows(&blocks, RowMatch::Exact).count;
                let cost = min_changes_to_k_rows(&blocks, 3);
                facts.push(fact(
                    format!("{pair}, line {}: distinct length-4 blocks", r + 1),
                    "distinct_rows",
                    distinct,
                    "4",
                    distinct == 4,
                ));
                facts.push(fact(
                    format!("{pair}, line {}: changes needed to reach 3 distinct blocks", r + 1),
                    "min_changes_to_k_rows(k=3)",
                    cost,
                    ">= 2",
                    cost >= 2,
                ));
            }
        }
    }
    facts.push(closing_fact(target, CLAIM));
    BoundCertificate::new("qutrit4", CLAIM, facts)
}

/// Convenience: pick the certificate matching a target's topology.
pub fn certify(target: &TargetFunction) -> Result<BoundCertificate> {
    let t: &Topology = target.topology();
    match (t.num_modules(), t.channel_arity()) {
        (3, 2) => Ok(certify_qubit3(target)),
        (3, 3) => Ok(certify_qutrit3(target)),
        (4, 3) => Ok(certify_qutrit4(target)),
        (n, q) => Err(contract(format!("no certificate for {n} modules with link arity {q}"))),
    }
}

/// Hamming distance between two blocks of a reshaped row, exposed for reports.
pub fn block_distances(row: &[i8], block: usize) -> Vec<Vec<usize>> {
    let blocks: Vec<&[i8]> = row.chunks(block).collect();
    blocks.iter().map(|a| blocks.iter().map(|b| hamming(a, b)).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::random_strategy;
    use crate::reference;

    #[test]
    fn reference_targets_are_certified() {
        let c = certify_qubit3(&reference::qubit3_target());
        assert!(c.pass, "{}", c.render());
        assert_eq!(c.bound(), Some(8));
        let c = certify_qutrit3(&reference::qutrit3_target());
        assert!(c.pass, "{}", c.render());
        assert_eq!(c.bound(), Some(2));
        let c = certify_qutrit3(&reference::qutrit4_first_block());
        assert!(c.pass, "{}", c.render());
        let c = certify_qutrit4(&reference::qutrit4_target());
        assert!(c.pass, "{}", c.render());
        assert_eq!(c.bound(), Some(16));
    }

    #[test]
    fn certificates_survive_negation() {
        assert!(certify_qubit3(&reference::qubit3_target().negated()).pass);
        assert!(certify_qutrit3(&reference::qutrit3_target().negated()).pass);
        assert!(certify_qutrit4(&reference::qutrit4_target().negated()).pass);
    }

    #[test]
    fn flipping_a_zero_breaks_complementarity() {
        let t = reference::qubit3_target();
        let zero = t.values().iter().position(|&v| v == 0).unwrap();
        let mut values = t.values().to_vec();
        values[zero] = 1;
        let flipped = TargetFunction::new(t.topology().clone(), values).unwrap();
        let c = certify_qubit3(&flipped);
        assert!(!c.pass);
        let f = c.facts.iter().find(|f| f.description.contains("complementary")).unwrap();
        assert!(!f.holds);
    }

    #[test]
    fn empty_and_expressible_targets_get_no_bound() {
        let zero = TargetFunction::constant(Topology::uniform(3, 2, 2).unwrap(), 0).unwrap();
        assert_eq!(certify_qubit3(&zero).bound(), None);
        let topo = Topology::uniform(3, 2, 3).unwrap();
        let synthetic = TargetFunction::new(topo.clone(), random_strategy(&topo, 4).output_table()).unwrap();
        assert_eq!(certify_qutrit3(&synthetic).bound(), None);
        // Wrong shape.
        assert_eq!(certify_qutrit4(&reference::qubit3_target()).bound(), None);
    }

    #[test]
    fn reference_tables_meet_the_bounds() {
        let t = reference::qutrit3_target();
        assert_eq!(t.hamming_errors(&reference::qutrit3_strategy().output_table()).unwrap(), 2);
        let t = reference::qutrit4_target();
        assert_eq!(t.hamming_errors(&reference::qutrit4_strategy().output_table()).unwrap(), 16);
    }

    #[test]
    fn relaxation_is_exact_for_two_modules() {
        let topo = Topology::uniform(2, 1, 2).unwrap();
        for code in 0..81u32 {
            let values: Vec<i8> = (0..4).map(|i| ((code / 3u32.pow(i)) % 3) as i8 - 1).collect();
            let t = TargetFunction::new(topo.clone(), values).unwrap();
            let oracle = crate::classical::exact_oracle(&t).unwrap();
            assert_eq!(relaxed_min_errors(&t), oracle.min_errors);
        }
    }

    #[test]
    fn min_changes_on_proof_block() {
        let rows = reference::QUBIT3_ROWS;
        let merged = merge_complementary_rows(&rows[0], &rows[2]).unwrap();
        let block = ReshapedMatrix::new(4, 4, merged).unwrap();
        assert_eq!(min_changes_to_k_rows(&block, 2), 4);
        assert_eq!(min_changes_to_k_rows(&block, 4), 0);
    }

    #[test]
    fn expressibility_of_constant_and_completions() {
        let topo = Topology::uniform(3, 2, 2).unwrap();
        let one = TargetFunction::constant(topo.clone(), 1).unwrap();
        assert!(expressibility_check(&one, RowMatch::Exact).unwrap().expressible);

        // The optimal processor's full output table is expressible.
        let t = reference::qubit3_target();
        let out = reference::qubit3_strategy().output_table();
        let completed: Vec<i8> = out.clone();
        let c = TargetFunction::new(topo.clone(), completed).unwrap();
        assert!(expressibility_check(&c, RowMatch::Exact).unwrap().expressible);
        // Filling zeros only, keeping the support, is never expressible.
        let filled: Vec<i8> = t.values().iter().zip(&out).map(|(&v, &o)| if v == 0 { o } else { v }).collect();
        let f = TargetFunction::new(topo.clone(), filled).unwrap();
        assert!(!expressibility_check(&f, RowMatch::Exact).unwrap().expressible);

        assert!(expressibility_check(&t, RowMatch::Exact).is_err());
        // Wildcard rows pass the row-count test at every cut, yet no processor
        // reproduces the support: the criterion is necessary only.
        assert!(expressibility_check(&t, RowMatch::Compatible).unwrap().expressible);
        assert!(reconstruct_strategy(&t, RowMatch::Compatible).unwrap().is_none());
    }

    #[test]
    fn reconstruction_round_trips_random_processors() {
        for q in [2, 3] {
            let topo = Topology::uniform(3, 2, q).unwrap();
            for seed in 0..50 {
                let s = random_strategy(&topo, seed);
                let t = TargetFunction::new(topo.clone(), s.output_table()).unwrap();
                let r = reconstruct_strategy(&t, RowMatch::Exact).unwrap().expect("expressible");
                assert_eq!(r.output_table(), s.output_table());
            }
        }
    }
}
