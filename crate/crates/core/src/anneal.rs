//! Simulated annealing: single-flip Metropolis over pseudo-Boolean
//! polynomials, and categorical moves directly on strategy tables.

use std::time::{Duration, Instant};

use num_integer::Integer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::{random_strategy_with, StrategySet};
use crate::error::{contract, Result};
use crate::pbo::{Coeff, PseudoBooleanPoly, VariableLayout};
use crate::target::TargetFunction;

/// Geometric cooling schedule, `T_k = max(final, T0 · factor^k)` for sweep `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Schedule {
    /// `None` estimates `T0` as the largest single-move delta seen in 1000 probes.
    pub initial_temperature: Option<f64>,
    pub final_temperature: f64,
    pub factor: f64,
    pub sweeps: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for Schedule {
    fn default() -> Self {
        Self { initial_temperature: None, final_temperature: 0.01, factor: 0.98, sweeps: 2000, restarts: 32, seed: 0 }
    }
}

const PROBES: usize = 1000;

impl Schedule {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let t0 = self.initial_temperature.unwrap_or(f64::INFINITY);
        let ok = self.final_temperature > 0.0
            && self.final_temperature <= t0
            && self.factor > 0.0
            && self.factor < 1.0
            && self.sweeps >= 1
            && self.restarts >= 1;
        if ok {
            Ok(())
        } else {
            Err(contract(format!("invalid schedule {self:?}")))
        }
    }

    pub(crate) fn temperature(&self, t0: f64, sweep: usize) -> f64 {
        (t0 * self.factor.powi(sweep.min(i32::MAX as usize) as i32)).max(self.final_temperature)
    }

    pub(crate) fn restart_seed(&self, restart: usize) -> u64 {
        self.seed.wrapping_add(restart as u64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnealResult {
    /// Best assignment; empty for strategy-space runs.
    pub assignment: Vec<bool>,
    pub strategy: Option<StrategySet>,
    pub energy: Coeff,
    /// Support errors of the decoded strategy, when there is one.
    pub errors: Option<usize>,
    /// Best energy reached by each restart, in restart order.
    pub restart_energies: Vec<Coeff>,
    pub best_restart: usize,
    pub wall_time: Duration,
}

pub(crate) fn metropolis(delta: i64, temperature: f64, rng: &mut impl Rng) -> bool {
    delta <= 0 || rng.gen::<f64>() < (-(delta as f64) / temperature).exp()
}

/// Minimum energy first, then lowest restart index.
fn pick_best<T>(runs: &[(i64, T)]) -> usize {
    let mut best = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.0 < runs[best].0 {
            best = i;
        }
    }
    best
}

/// Polynomial with coefficients scaled to integers for the inner loop.
struct IntProblem {
    scale: i64,
    constant: i64,
    terms: Vec<(Vec<u32>, i64)>,
    incidence: Vec<Vec<usize>>,
}

impl IntProblem {
    fn new(poly: &PseudoBooleanPoly) -> Self {
        let scale = poly.terms().fold(poly.constant().denom().to_owned(), |acc, (_, c)| acc.lcm(c.denom()));
        let int = |c: Coeff| (c * scale).to_integer();
        Self {
            scale,
            constant: int(poly.constant()),
            terms: poly.terms().map(|(v, c)| (v.to_vec(), int(c))).collect(),
            incidence: poly.incidence(),
        }
    }

    fn energy(&self, x: &[bool]) -> i64 {
        self.constant + self.terms.iter().filter(|(v, _)| v.iter().all(|&i| x[i as usize])).map(|(_, c)| c).sum::<i64>()
    }

    /// Number of false variables per term.
    fn zeros(&self, x: &[bool]) -> Vec<u32> {
        self.terms.iter().map(|(v, _)| v.iter().filter(|&&i| !x[i as usize]).count() as u32).collect()
    }

    fn delta(&self, x: &[bool], zeros: &[u32], v: usize) -> i64 {
        let mut d = 0;
        for &t in &self.incidence[v] {
            if x[v] {
                if zeros[t] == 0 {
                    d -= self.terms[t].1;
                }
            } else if zeros[t] == 1 {
                d += self.terms[t].1;
            }
        }
        d
    }

    fn flip(&self, x: &mut [bool], zeros: &mut [u32], v: usize) {
        for &t in &self.incidence[v] {
            if x[v] {
                zeros[t] += 1;
            } else {
                zeros[t] -= 1;
            }
        }
        x[v] = !x[v];
    }

    fn estimate_t0(&self, n: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut best = 0i64;
        for _ in 0..PROBES {
            let x: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
            let zeros = self.zeros(&x);
            let v = rng.gen_range(0..n);
            best = best.max(self.delta(&x, &zeros, v).abs());
        }
        if best == 0 {
            1.0
        } else {
            best as f64
        }
    }

    fn run(&self, n: usize, schedule: &Schedule, t0: f64, restart: usize) -> (i64, Vec<bool>) {
        let mut rng = ChaCha8Rng::seed_from_u64(schedule.restart_seed(restart));
        let mut x: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
        let mut zeros = self.zeros(&x);
        let mut e = self.energy(&x);
        let mut best = (e, x.clone());
        for sweep in 0..schedule.sweeps {
            let t = schedule.temperature(t0, sweep) * self.scale as f64;
            for v in 0..n {
                let d = self.delta(&x, &zeros, v);
                if metropolis(d, t, &mut rng) {
                    self.flip(&mut x, &mut zeros, v);
                    e += d;
                    if e < best.0 {
                        best = (e, x.clone());
                    }
                }
            }
        }
        best
    }
}

/// Anneal a polynomial over its binary variables.
pub fn anneal_poly(poly: &PseudoBooleanPoly, schedule: &Schedule) -> Result<AnnealResult> {
    schedule.validate()?;
    let start = Instant::now();
    let n = poly.num_vars();
    if n == 0 {
        let e = poly.constant();
        return Ok(AnnealResult {
            assignment: Vec::new(),
            strategy: None,
            energy: e,
            errors: None,
            restart_energies: vec![e; schedule.restarts],
            best_restart: 0,
            wall_time: start.elapsed(),
        });
    }
    let problem = IntProblem::new(poly);
    // Temperatures are in the polynomial's own units; `run` rescales.
    let t0 =
        schedule.initial_temperature.unwrap_or_else(|| problem.estimate_t0(n, schedule.seed) / problem.scale as f64);
    let runs: Vec<(i64, Vec<bool>)> =
        (0..schedule.restarts).into_par_iter().map(|r| problem.run(n, schedule, t0, r)).collect();
    let best = pick_best(&runs);
    let energy = poly.evaluate(&runs[best].1)?;
    debug_assert_eq!(energy, Coeff::new(runs[best].0, problem.scale));
    Ok(AnnealResult {
        assignment: runs[best].1.clone(),
        strategy: None,
        energy,
        errors: None,
        restart_energies: runs.iter().map(|r| Coeff::new(r.0, problem.scale)).collect(),
        best_restart: best,
        wall_time: start.elapsed(),
    })
}

/// Anneal an encoded (possibly frozen) polynomial and decode the winner.
/// An assignment that does not decode (invalid one-hot group) leaves
/// `strategy` and `errors` empty.
pub fn anneal_frozen(
    poly: &PseudoBooleanPoly,
    layout: &VariableLayout,
    target: &TargetFunction,
    schedule: &Schedule,
) -> Result<AnnealResult> {
    if poly.num_vars() != layout.num_vars() {
        return Err(contract(format!(
            "polynomial has {} variables, layout has {}",
            poly.num_vars(),
            layout.num_vars()
        )));
    }
    let mut result = anneal_poly(poly, schedule)?;
    if let Ok(s) = layout.decode(&result.assignment) {
        result.errors = Some(target.hamming_errors(&s.output_table())?);
        result.strategy = Some(s);
    }
    Ok(result)
}

/// Strategy-space state with cached per-word link symbols.
struct TableChain<'a> {
    target: &'a TargetFunction,
    s: StrategySet,
    /// `incoming[w * n + m]`: symbol entering module `m` on word `w`.
    incoming: Vec<u8>,
    /// `local[w * n + m]`: local input of module `m` on word `w`.
    local: Vec<u16>,
    out: Vec<i8>,
    /// Words by `(module, local input)`.
    by_local: Vec<Vec<Vec<u32>>>,
}

impl<'a> TableChain<'a> {
    fn new(target: &'a TargetFunction, s: StrategySet) -> Self {
        let t = target.topology();
        let n = t.num_modules();
        let words = t.num_words();
        let mut local = vec![0u16; words * n];
        let mut by_local: Vec<Vec<Vec<u32>>> = (0..n).map(|m| vec![Vec::new(); 1 << t.local_bits()[m]]).collect();
        for w in 0..words {
            for m in 0..n {
                let l = t.local_input(m, w);
                local[w * n + m] = l as u16;
                by_local[m][l].push(w as u32);
            }
        }
        let mut chain = Self { target, s, incoming: vec![0; words * n], local, out: vec![0; words], by_local };
        for w in 0..words {
            chain.out[w] = chain.propagate(w, 0, None);
        }
        chain
    }

    fn n(&self) -> usize {
        self.s.topology().num_modules()
    }

    /// Recompute word `w` from module `from`, optionally pretending that
    /// cell `(module, index)` holds `value`. Writes the incoming cache only
    /// when no override is given.
    fn propagate(&mut self, w: usize, from: usize, over: Option<(usize, usize, i8)>) -> i8 {
        let n = self.n();
        let mut symbol = self.incoming[w * n + from] as usize;
        let mut v = 0;
        for m in from..n {
            if over.is_none() {
                self.incoming[w * n + m] = symbol as u8;
            }
            let module = self.s.module(m);
            let idx = symbol * module.width() + self.local[w * n + m] as usize;
            v = match over {
                Some((om, oi, ov)) if om == m && oi == idx => ov,
                _ => module.cells()[idx],
            };
            symbol = v as usize;
        }
        v
    }

    fn energy(&self) -> i64 {
        -self.target.signed_matches(&self.out).expect("output table matches topology")
    }

    /// Words whose value depends on cell `idx` of module `m`, and the delta of
    /// writing `value` there.
    fn delta(&mut self, m: usize, idx: usize, value: i8, changed: &mut Vec<(u32, i8)>) -> i64 {
        changed.clear();
        let n = self.n();
        let width = self.s.module(m).width();
        let (sym, loc) = (idx / width, idx % width);
        let mut d = 0i64;
        for k in 0..self.by_local[m][loc].len() {
            let w = self.by_local[m][loc][k] as usize;
            if self.incoming[w * n + m] as usize != sym {
                continue;
            }
            let new = self.propagate(w, m, Some((m, idx, value)));
            if new != self.out[w] {
                d -= ((new - self.out[w]) * self.target.value(w)) as i64;
                changed.push((w as u32, new));
            }
        }
        d
    }

    fn commit(&mut self, m: usize, idx: usize, value: i8) {
        self.s.module_mut(m).cells_mut()[idx] = value;
        let n = self.n();
        let width = self.s.module(m).width();
        let (sym, loc) = (idx / width, idx % width);
        for k in 0..self.by_local[m][loc].len() {
            let w = self.by_local[m][loc][k] as usize;
            if self.incoming[w * n + m] as usize == sym {
                self.out[w] = self.propagate(w, m, None);
            }
        }
    }
}

/// `(module, cell index)` of every table cell.
fn cells(s: &StrategySet) -> Vec<(usize, usize)> {
    (0..s.topology().num_modules()).flat_map(|m| (0..s.module(m).cells().len()).map(move |i| (m, i))).collect()
}

fn random_move(chain: &TableChain, cells: &[(usize, usize)], rng: &mut impl Rng) -> (usize, usize, i8) {
    let (m, idx) = cells[rng.gen_range(0..cells.len())];
    let cur = chain.s.module(m).cells()[idx];
    let value = if m + 1 == chain.n() {
        -cur
    } else {
        let q = chain.s.topology().channel_arity() as i8;
        let r = rng.gen_range(0..q - 1);
        if r >= cur {
            r + 1
        } else {
            r
        }
    };
    (m, idx, value)
}

fn strategy_run(target: &TargetFunction, schedule: &Schedule, t0: f64, restart: usize) -> (i64, StrategySet) {
    let mut rng = ChaCha8Rng::seed_from_u64(schedule.restart_seed(restart));
    let start = random_strategy_with(target.topology(), &mut rng);
    let cells = cells(&start);
    let mut chain = TableChain::new(target, start);
    let mut e = chain.energy();
    let mut best = (e, chain.s.clone());
    let mut changed = Vec::new();
    for sweep in 0..schedule.sweeps {
        let t = schedule.temperature(t0, sweep);
        for _ in 0..cells.len() {
            let (m, idx, value) = random_move(&chain, &cells, &mut rng);
            let d = chain.delta(m, idx, value, &mut changed);
            if metropolis(d, t, &mut rng) {
                chain.commit(m, idx, value);
                e += d;
                if e < best.0 {
                    best = (e, chain.s.clone());
                }
            }
        }
    }
    debug_assert_eq!(e, chain.energy());
    best
}

/// Anneal directly over strategy tables; a move rewrites one cell to a
/// different symbol chosen uniformly.
pub fn anneal_strategies(target: &TargetFunction, schedule: &Schedule) -> Result<AnnealResult> {
    schedule.validate()?;
    let start = Instant::now();
    let t0 = match schedule.initial_temperature {
        Some(t) => t,
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed);
            let mut best = 0i64;
            let mut changed = Vec::new();
            for _ in 0..PROBES / 10 {
                let mut chain = TableChain::new(target, random_strategy_with(target.topology(), &mut rng));
                let cells = cells(&chain.s);
                for _ in 0..10 {
                    let (m, idx, value) = random_move(&chain, &cells, &mut rng);
                    best = best.max(chain.delta(m, idx, value, &mut changed).abs());
                }
            }
            if best == 0 {
                1.0
            } else {
                best as f64
            }
        }
    };
    let runs: Vec<(i64, StrategySet)> =
        (0..schedule.restarts).into_par_iter().map(|r| strategy_run(target, schedule, t0, r)).collect();
    let best = pick_best(&runs);
    let s = runs[best].1.clone();
    let output = s.output_table();
    let energy = -target.signed_matches(&output)?;
    debug_assert_eq!(energy, runs[best].0);
    Ok(AnnealResult {
        assignment: Vec::new(),
        errors: Some(target.hamming_errors(&output)?),
        strategy: Some(s),
        energy: Coeff::from_integer(energy),
        restart_energies: runs.iter().map(|r| Coeff::from_integer(r.0)).collect(),
        best_restart: best,
        wall_time: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::exact_oracle;
    use crate::pbo::{encode_correlation, Encoding};
    use crate::reference::{qubit3_target, qutrit4_target};
    use crate::target::Topology;

    fn quick(seed: u64) -> Schedule {
        Schedule { sweeps: 300, restarts: 8, ..Schedule::with_seed(seed) }
    }

    #[test]
    fn single_variable() {
        let mut p = PseudoBooleanPoly::new(1);
        p.add_term(&[0], Coeff::from_integer(-1));
        let r = anneal_poly(&p, &quick(1)).unwrap();
        assert_eq!(r.assignment, vec![true]);
        assert_eq!(r.energy, Coeff::from_integer(-1));
    }

    #[test]
    fn zero_variable_instance_returns_constant() {
        let mut p = PseudoBooleanPoly::new(0);
        p.add_constant(Coeff::from_integer(-96));
        assert_eq!(anneal_poly(&p, &quick(0)).unwrap().energy, Coeff::from_integer(-96));
    }

    #[test]
    fn fractional_coefficients_are_exact() {
        let mut p = PseudoBooleanPoly::new(2);
        p.add_term(&[0], Coeff::new(-1, 3));
        p.add_term(&[0, 1], Coeff::new(-1, 2));
        let r = anneal_poly(&p, &quick(2)).unwrap();
        assert_eq!(r.energy, Coeff::new(-5, 6));
        assert_eq!(r.energy, p.evaluate(&r.assignment).unwrap());
    }

    #[test]
    fn invalid_schedules_are_rejected() {
        let bad = [
            Schedule { factor: 1.0, ..Schedule::default() },
            Schedule { sweeps: 0, ..Schedule::default() },
            Schedule { restarts: 0, ..Schedule::default() },
            Schedule { initial_temperature: Some(0.001), ..Schedule::default() },
        ];
        for s in bad {
            assert!(s.validate().is_err(), "{s:?}");
        }
    }

    #[test]
    fn qubit3_polynomial_reaches_eight_errors() {
        let t = qubit3_target();
        let (p, layout) = encode_correlation(&t, Encoding::Bit).unwrap();
        let r = anneal_frozen(&p, &layout, &t, &Schedule::with_seed(3)).unwrap();
        assert_eq!(r.energy, Coeff::from_integer(-16));
        assert_eq!(r.errors, Some(8));
        assert_eq!(r.energy, p.evaluate(&r.assignment).unwrap());
    }

    #[test]
    fn parallel_result_is_deterministic() {
        let t = qubit3_target();
        let (p, _) = encode_correlation(&t, Encoding::Bit).unwrap();
        let a = anneal_poly(&p, &quick(9)).unwrap();
        let b = anneal_poly(&p, &quick(9)).unwrap();
        assert_eq!(a.assignment, b.assignment);
        assert_eq!(a.restart_energies, b.restart_energies);
    }

    #[test]
    fn strategy_annealing_matches_oracle_on_two_module_toys() {
        let topo = Topology::uniform(2, 1, 2).unwrap();
        for bits in 0u32..16 {
            let t = TargetFunction::from_fn(topo.clone(), |w| if bits >> w & 1 == 1 { 1 } else { -1 }).unwrap();
            let r = anneal_strategies(&t, &quick(bits as u64)).unwrap();
            assert_eq!(r.errors, Some(exact_oracle(&t).unwrap().min_errors), "target {bits:04b}");
        }
    }

    #[test]
    fn constant_target_has_no_errors() {
        let topo = Topology::uniform(3, 2, 2).unwrap();
        let t = TargetFunction::constant(topo, 1).unwrap();
        assert_eq!(anneal_strategies(&t, &quick(0)).unwrap().errors, Some(0));
    }

    #[test]
    fn strategy_annealing_reaches_sixteen_on_qutrit4() {
        let r = anneal_strategies(&qutrit4_target(), &Schedule::with_seed(5)).unwrap();
        assert_eq!(r.errors, Some(16));
        assert_eq!(r.energy, Coeff::from_integer(-96));
    }
}
