//! Binary matrices with few distinct rows: Hamming-optimal approximation,
//! completion of partially observed matrices, and the sequential-processor
//! view of a target as a chain of such constraints.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::anneal::{anneal_frozen, metropolis, Schedule};
use crate::classical::StrategySet;
use crate::error::{contract, Error, Result};
use crate::pbo::{encode_correlation, Encoding};
use crate::target::{ReshapedMatrix, TargetFunction, Topology};

/// Matrix over `{−1, 0, +1}`; `0` marks an unobserved entry.
pub type BinaryMatrix = ReshapedMatrix;

pub const EXACT_MAX_ROWS: usize = 16;
pub const EXACT_MAX_COLS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Exact,
    Anneal,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exact" => Ok(Self::Exact),
            "anneal" => Ok(Self::Anneal),
            other => Err(contract(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LowRank {
    /// `±1` matrix with at most `k` distinct rows.
    pub approximation: BinaryMatrix,
    /// Disagreements with the observed entries.
    pub distance: usize,
    /// Class of every row.
    pub labels: Vec<usize>,
}

/// Running `(plus, minus)` counts per column of one class.
#[derive(Clone)]
struct ClassVotes(Vec<[u32; 2]>);

impl ClassVotes {
    fn new(cols: usize) -> Self {
        Self(vec![[0, 0]; cols])
    }

    fn cost(&self) -> u32 {
        self.0.iter().map(|[p, m]| (*p).min(*m)).sum()
    }

    /// Cost change from adding (`sign = 1`) or removing (`sign = −1`) a row.
    fn apply(&mut self, row: &[i8], sign: i32) -> i64 {
        let mut d = 0i64;
        for (v, &x) in self.0.iter_mut().zip(row) {
            let slot = match x {
                1 => 0,
                -1 => 1,
                _ => continue,
            };
            let before = v[0].min(v[1]);
            v[slot] = (v[slot] as i32 + sign) as u32;
            d += v[0].min(v[1]) as i64 - before as i64;
        }
        d
    }

    /// Majority sign per column, ties and empty columns `+1`.
    fn centroid(&self) -> Vec<i8> {
        self.0.iter().map(|[p, m]| if p >= m { 1 } else { -1 }).collect()
    }
}

fn check_alphabet(m: &BinaryMatrix) -> Result<()> {
    if m.flatten().iter().any(|v| !(-1..=1).contains(v)) {
        return Err(contract("matrix entries must be -1, 0 or 1"));
    }
    Ok(())
}

fn assemble(m: &BinaryMatrix, labels: Vec<usize>) -> LowRank {
    let classes = labels.iter().max().map_or(0, |c| c + 1);
    let mut votes = vec![ClassVotes::new(m.num_cols()); classes];
    for (r, &c) in labels.iter().enumerate() {
        votes[c].apply(m.row(r), 1);
    }
    let distance = votes.iter().map(ClassVotes::cost).sum::<u32>() as usize;
    let centroids: Vec<Vec<i8>> = votes.iter().map(ClassVotes::centroid).collect();
    let rows: Vec<Vec<i8>> = labels.iter().map(|&c| centroids[c].clone()).collect();
    LowRank { approximation: BinaryMatrix::from_rows(&rows).expect("rows share a width"), distance, labels }
}

/// Branch and bound over restricted growth strings; class costs only grow as
/// rows are added, so the partial cost is a valid bound.
fn exact_labels(m: &BinaryMatrix, k: usize) -> Vec<usize> {
    struct Search<'a> {
        m: &'a BinaryMatrix,
        k: usize,
        labels: Vec<usize>,
        votes: Vec<ClassVotes>,
        best: (u32, Vec<usize>),
    }
    impl Search<'_> {
        fn rec(&mut self, cost: u32, used: usize) {
            if cost >= self.best.0 {
                return;
            }
            let r = self.labels.len();
            if r == self.m.num_rows() {
                self.best = (cost, self.labels.clone());
                return;
            }
            for c in 0..(used + 1).min(self.k) {
                let d = self.votes[c].apply(self.m.row(r), 1);
                self.labels.push(c);
                self.rec(cost + d as u32, used.max(c + 1));
                self.labels.pop();
                self.votes[c].apply(self.m.row(r), -1);
            }
        }
    }
    let mut s = Search {
        m,
        k,
        labels: Vec::with_capacity(m.num_rows()),
        votes: vec![ClassVotes::new(m.num_cols()); k],
        best: (u32::MAX, Vec::new()),
    };
    s.rec(0, 0);
    s.best.1
}

/// Anneal row labels; centroids are always the per-class majority.
fn anneal_labels(m: &BinaryMatrix, k: usize, schedule: &Schedule) -> Result<Vec<usize>> {
    schedule.validate()?;
    let rows = m.num_rows();
    let t0 = schedule.initial_temperature.unwrap_or(m.num_cols() as f64);
    let run = |restart: usize| {
        let mut rng = ChaCha8Rng::seed_from_u64(schedule.restart_seed(restart));
        let mut labels: Vec<usize> = (0..rows).map(|_| rng.gen_range(0..k)).collect();
        let mut votes = vec![ClassVotes::new(m.num_cols()); k];
        for (r, &c) in labels.iter().enumerate() {
            votes[c].apply(m.row(r), 1);
        }
        let mut e: i64 = votes.iter().map(|v| v.cost() as i64).sum();
        let mut best = (e, labels.clone());
        for sweep in 0..schedule.sweeps {
            let t = schedule.temperature(t0, sweep);
            for _ in 0..rows {
                let r = rng.gen_range(0..rows);
                let from = labels[r];
                let to = (from + rng.gen_range(1..k)) % k;
                let d = votes[from].apply(m.row(r), -1) + votes[to].apply(m.row(r), 1);
                if metropolis(d, t, &mut rng) {
                    labels[r] = to;
                    e += d;
                    if e < best.0 {
                        best = (e, labels.clone());
                    }
                } else {
                    votes[to].apply(m.row(r), -1);
                    votes[from].apply(m.row(r), 1);
                }
            }
        }
        best
    };
    let runs: Vec<(i64, Vec<usize>)> = (0..schedule.restarts).into_par_iter().map(run).collect();
    let best = runs.iter().enumerate().min_by_key(|(i, r)| (r.0, *i)).map(|(i, _)| i).unwrap_or(0);
    Ok(canonical_labels(&runs[best].1))
}

/// Relabel classes in order of first appearance.
fn canonical_labels(labels: &[usize]) -> Vec<usize> {
    let mut map = Vec::<(usize, usize)>::new();
    labels
        .iter()
        .map(|&l| match map.iter().find(|(from, _)| *from == l) {
            Some(&(_, to)) => to,
            None => {
                map.push((l, map.len()));
                map.len() - 1
            }
        })
        .collect()
}

/// Closest `±1` matrix with at most `k` distinct rows, counting
/// disagreements on observed entries only.
pub fn lowrank_approx(m: &BinaryMatrix, k: usize, method: Method, schedule: &Schedule) -> Result<LowRank> {
    check_alphabet(m)?;
    if k == 0 {
        return Err(contract("k must be at least 1"));
    }
    let labels = if k == 1 || m.num_rows() == 1 {
        vec![0; m.num_rows()]
    } else {
        match method {
            Method::Exact => {
                if m.num_rows() > EXACT_MAX_ROWS {
                    return Err(Error::TooLarge {
                        what: "exact low-rank search (rows)",
                        estimated: m.num_rows() as f64,
                        budget: EXACT_MAX_ROWS as f64,
                    });
                }
                if m.num_cols() > EXACT_MAX_COLS {
                    return Err(Error::TooLarge {
                        what: "exact low-rank search (columns)",
                        estimated: m.num_cols() as f64,
                        budget: EXACT_MAX_COLS as f64,
                    });
                }
                exact_labels(m, k)
            }
            Method::Anneal => anneal_labels(m, k, schedule)?,
        }
    };
    Ok(assemble(m, labels))
}

/// Fill the unobserved entries of `m` so that the result has at most `k`
/// distinct rows and agrees with as many observed entries as possible.
pub fn complete(m: &BinaryMatrix, k: usize, method: Method, schedule: &Schedule) -> Result<LowRank> {
    if m.flatten().iter().all(|&v| v == 0) {
        return Err(contract("nothing observed: every entry is 0"));
    }
    lowrank_approx(m, k, method, schedule)
}

/// Best sequential-processor representation of `target` found by annealing its
/// pseudo-Boolean encoding.
pub fn tensor_approx(
    target: &TargetFunction,
    topology: &Topology,
    schedule: &Schedule,
) -> Result<(StrategySet, usize)> {
    let target = target.with_topology(topology.clone())?;
    let encoding = Encoding::for_arity(topology.channel_arity())?;
    let (poly, layout) = encode_correlation(&target, encoding)?;
    let r = anneal_frozen(&poly, &layout, &target, schedule)?;
    match (r.strategy, r.errors) {
        (Some(s), Some(e)) => Ok((s, e)),
        _ => Err(contract("annealed assignment did not decode to a strategy")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::random_strategy;
    use crate::reference::{qubit3_strategy, qubit3_target, QUBIT3_ROWS};
    use crate::target::merge_complementary_rows;

    fn m(rows: &[&[i8]]) -> BinaryMatrix {
        BinaryMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn quick() -> Schedule {
        Schedule { sweeps: 200, restarts: 4, ..Schedule::default() }
    }

    #[test]
    fn few_distinct_rows_cost_nothing() {
        let a = m(&[&[1, -1, 1], &[-1, -1, 1], &[1, -1, 1]]);
        let r = lowrank_approx(&a, 2, Method::Exact, &quick()).unwrap();
        assert_eq!(r.distance, 0);
        assert_eq!(r.approximation, a);
    }

    #[test]
    fn proof_block_needs_four_changes() {
        let merged = merge_complementary_rows(&QUBIT3_ROWS[0], &QUBIT3_ROWS[2]).unwrap();
        let a = BinaryMatrix::new(4, 4, merged).unwrap();
        assert_eq!(lowrank_approx(&a, 2, Method::Exact, &quick()).unwrap().distance, 4);
        assert_eq!(lowrank_approx(&a, 2, Method::Anneal, &quick()).unwrap().distance, 4);
    }

    #[test]
    fn distance_is_monotone_in_k() {
        let s = random_strategy(&Topology::uniform(2, 3, 2).unwrap(), 1);
        let out: Vec<i8> = s.output_table().iter().map(|&v| -v).collect();
        let a = BinaryMatrix::new(8, 8, out.iter().zip(0..).map(|(v, i)| if i % 3 == 0 { -v } else { *v }).collect())
            .unwrap();
        let d: Vec<usize> = (1..=8).map(|k| lowrank_approx(&a, k, Method::Exact, &quick()).unwrap().distance).collect();
        assert!(d.windows(2).all(|w| w[0] >= w[1]), "{d:?}");
        assert_eq!(d[7], 0);
    }

    #[test]
    fn single_observation_fills_everything() {
        let a = m(&[&[0, 0, 0], &[0, 1, 0]]);
        let r = complete(&a, 1, Method::Exact, &quick()).unwrap();
        assert!(r.approximation.flatten().iter().all(|&v| v == 1));
        assert!(complete(&m(&[&[0, 0]]), 1, Method::Exact, &quick()).is_err());
    }

    #[test]
    fn exact_guard() {
        let a = BinaryMatrix::new(17, 2, vec![1; 34]).unwrap();
        assert!(matches!(lowrank_approx(&a, 2, Method::Exact, &quick()), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn tensor_view_of_qubit3() {
        let t = qubit3_target();
        let (s, e) = tensor_approx(&t, t.topology(), &Schedule::with_seed(1)).unwrap();
        assert_eq!(e, 8);
        assert_eq!(t.hamming_errors(&s.output_table()).unwrap(), 8);
        assert_eq!(t.hamming_errors(&qubit3_strategy().output_table()).unwrap(), 8);
    }

    #[test]
    fn expressible_target_is_recovered() {
        let topo = Topology::uniform(3, 2, 2).unwrap();
        let s = random_strategy(&topo, 42);
        let t = TargetFunction::new(topo.clone(), s.output_table()).unwrap();
        assert_eq!(tensor_approx(&t, &topo, &Schedule::with_seed(0)).unwrap().1, 0);
    }
}
