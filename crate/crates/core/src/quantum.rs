//! Exact state-vector simulation of the one-qubit and one-qutrit sequential
//! processors, their deterministic target functions, and a finite-shot
//! sampler emulating the photonic runs.
//!
//! The qubit lives in a single photon over two modes (`|0⟩`, `|1⟩`). The
//! qutrit is two photons over two modes, basis ordered `|20⟩, |11⟩, |02⟩`;
//! a 2×2 mode transform acts on it through its two-photon lift.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::target::{InputWord, TargetFunction, Topology};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Linear transform of the two optical modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeUnitary(pub [[Complex64; 2]; 2]);

impl ModeUnitary {
    pub const IDENTITY: Self = Self([[ONE, ZERO], [ZERO, ONE]]);

    /// Largest entry-wise deviation of `U·U†` from the identity.
    pub fn unitarity_error(&self) -> f64 {
        unitarity_error(self.0.map(|r| r.to_vec()).as_ref())
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let a = &self.0;
        let b = &rhs.0;
        let mut out = [[ZERO; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Self(out)
    }
}

fn unitarity_error(m: &[Vec<Complex64>]) -> f64 {
    let n = m.len();
    let mut worst = 0f64;
    for i in 0..n {
        for j in 0..n {
            let s: Complex64 = m[i].iter().zip(&m[j]).map(|(a, b)| a * b.conj()).sum();
            let expected = if i == j { ONE } else { ZERO };
            worst = worst.max((s - expected).norm());
        }
    }
    worst
}

/// Transform induced on the two-photon subspace, basis `|20⟩, |11⟩, |02⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPhotonUnitary(pub [[Complex64; 3]; 3]);

impl TwoPhotonUnitary {
    pub fn unitarity_error(&self) -> f64 {
        unitarity_error(self.0.map(|r| r.to_vec()).as_ref())
    }
}

/// Tolerance on `U·U†` accepted by [`lift_two_photon`].
pub const UNITARY_TOLERANCE: f64 = 1e-10;

/// Lift a mode transform to two photons. The mode transform acts on creation
/// operators, `a†_j → Σ_i U_ij a†_i`, so `|20⟩ = (a†_0)²/√2 |vac⟩` maps to
/// `u00²|20⟩ + √2·u00·u10|11⟩ + u10²|02⟩`, and so on.
pub fn lift_two_photon(u: &ModeUnitary) -> Result<TwoPhotonUnitary> {
    let err = u.unitarity_error();
    if err > UNITARY_TOLERANCE {
        return Err(contract(format!("mode transform is not unitary (deviation {err:e})")));
    }
    let [[u00, u01], [u10, u11]] = u.0;
    let r2 = std::f64::consts::SQRT_2;
    Ok(TwoPhotonUnitary([
        [u00 * u00, u00 * u01 * r2, u01 * u01],
        [u00 * u10 * r2, u00 * u11 + u01 * u10, u10 * u11 * r2],
        [u10 * u10, u01 * u11 * r2, u11 * u11],
    ]))
}

/// Assignment of a gate to each local bit pair of a module.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateFamily {
    /// `00 → 1`, `01 → [[0,1],[1,0]]`, `10 → H`, `11 → H*` with
    /// `H = (1/√2)[[1,i],[i,1]]`.
    Standard,
    /// Gates realisable on the first stage of the four-module qutrit chip.
    AltFirst,
}

impl GateFamily {
    /// Gate selected by the local input pair `(first, second)`.
    pub fn gate_for(self, first: u8, second: u8) -> ModeUnitary {
        let h = FRAC_1_SQRT_2;
        match (self, first & 1, second & 1) {
            (Self::Standard, 0, 0) => ModeUnitary::IDENTITY,
            (Self::Standard, 0, 1) => ModeUnitary([[ZERO, ONE], [ONE, ZERO]]),
            (Self::Standard, 1, 0) => ModeUnitary([[c(h, 0.0), c(0.0, h)], [c(0.0, h), c(h, 0.0)]]),
            (Self::Standard, _, _) => ModeUnitary([[c(h, 0.0), c(0.0, -h)], [c(0.0, -h), c(h, 0.0)]]),
            (Self::AltFirst, 0, 0) => ModeUnitary([[c(h, 0.0), c(0.0, h)], [c(0.0, -h), c(-h, 0.0)]]),
            (Self::AltFirst, 0, 1) => ModeUnitary([[ZERO, ONE], [-ONE, ZERO]]),
            // The printed qutrit target is reproduced with these two images in
            // this order.
            (Self::AltFirst, 1, 0) => ModeUnitary([[c(h, 0.0), c(0.0, -h)], [c(0.0, h), c(-h, 0.0)]]),
            (Self::AltFirst, _, _) => ModeUnitary([[-ONE, ZERO], [ZERO, ONE]]),
        }
    }

    /// Gate selected by a two-bit local input value (`first` is the high bit).
    pub fn gate_for_input(self, local: usize) -> ModeUnitary {
        self.gate_for((local >> 1) as u8, local as u8)
    }
}

/// Normalised amplitude vector, qubit (dimension 2) or qutrit (dimension 3).
#[derive(Debug, Clone, PartialEq)]
pub struct PureState(pub Vec<Complex64>);

impl PureState {
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = vec![ZERO; dim];
        v[index] = ONE;
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.0.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.probabilities().iter().sum()
    }
}

/// Which of the three processors built on the chip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProcessorKind {
    Qubit3,
    Qutrit3,
    Qutrit4,
}

impl ProcessorKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Qubit3 => "qubit3",
            Self::Qutrit3 => "qutrit3",
            Self::Qutrit4 => "qutrit4",
        }
    }
}

impl std::str::FromStr for ProcessorKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qubit3" => Ok(Self::Qubit3),
            "qutrit3" => Ok(Self::Qutrit3),
            "qutrit4" => Ok(Self::Qutrit4),
            other => Err(contract(format!("unknown processor kind {other:?} (expected qubit3, qutrit3 or qutrit4)"))),
        }
    }
}

impl std::fmt::Display for ProcessorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Complete description of a quantum sequential processor.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumProcessor {
    kind: ProcessorKind,
    topology: Topology,
    families: Vec<GateFamily>,
}

impl QuantumProcessor {
    pub fn new(kind: ProcessorKind) -> Self {
        let (n, q) = match kind {
            ProcessorKind::Qubit3 => (3, 2),
            ProcessorKind::Qutrit3 => (3, 3),
            ProcessorKind::Qutrit4 => (4, 3),
        };
        let mut families = vec![GateFamily::Standard; n];
        if kind == ProcessorKind::Qutrit4 {
            families[0] = GateFamily::AltFirst;
        }
        Self { kind, topology: Topology::uniform(n, 2, q).expect("fixed topology"), families }
    }

    pub fn kind(&self) -> ProcessorKind {
        self.kind
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn families(&self) -> &[GateFamily] {
        &self.families
    }

    /// State dimension: 2 for the qubit, 3 for the two-photon qutrit.
    pub fn dim(&self) -> usize {
        self.topology.channel_arity()
    }

    /// `|0⟩` for the qubit, `|20⟩` for the qutrit.
    pub fn initial_state(&self) -> PureState {
        PureState::basis(self.dim(), 0)
    }

    /// Mode transform applied by `module` for the word with index `word`.
    pub fn gate(&self, module: usize, word: usize) -> ModeUnitary {
        self.families[module].gate_for_input(self.topology.local_input(module, word))
    }

    /// Final state for the word with index `word`, modules applied in order.
    pub fn run(&self, word: usize) -> PureState {
        let mut state = self.initial_state();
        for module in 0..self.topology.num_modules() {
            let u = self.gate(module, word);
            state = if self.dim() == 2 {
                let a = &state.0;
                PureState(vec![u.0[0][0] * a[0] + u.0[0][1] * a[1], u.0[1][0] * a[0] + u.0[1][1] * a[1]])
            } else {
                let l = lift_two_photon(&u).expect("gate set is unitary").0;
                let a = &state.0;
                PureState((0..3).map(|i| l[i][0] * a[0] + l[i][1] * a[1] + l[i][2] * a[2]).collect())
            };
        }
        state
    }

    pub fn run_word(&self, word: &InputWord) -> Result<PureState> {
        Ok(self.run(word.index_of(&self.topology)?))
    }
}

/// Default tolerance for calling an outcome deterministic.
pub const DETERMINISM_EPSILON: f64 = 1e-6;

/// `+1` if the first basis state is certain, `-1` if the last one is,
/// `0` otherwise (including a certain `|11⟩`).
pub fn classify_deterministic(state: &PureState, epsilon: f64) -> Result<i8> {
    let norm = state.norm_sqr();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(contract(format!("state is not normalised (|ψ|² = {norm})")));
    }
    let p = state.probabilities();
    Ok(if p[0] >= 1.0 - epsilon {
        1
    } else if p[p.len() - 1] >= 1.0 - epsilon {
        -1
    } else {
        0
    })
}

/// Sign convention of generated targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignConvention {
    /// `+1` when the first basis state is certain.
    Text,
    /// Global negation of [`SignConvention::Text`]; matches the printed
    /// target matrices.
    #[default]
    Matrix,
}

impl SignConvention {
    fn factor(self) -> i8 {
        match self {
            Self::Text => 1,
            Self::Matrix => -1,
        }
    }
}

impl std::str::FromStr for SignConvention {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "text" => Ok(Self::Text),
            "matrix" => Ok(Self::Matrix),
            other => Err(contract(format!("unknown sign convention {other:?}"))),
        }
    }
}

/// Deterministic part of the processor's output over every input word.
pub fn generate_target(processor: &QuantumProcessor, convention: SignConvention) -> TargetFunction {
    TargetFunction::from_fn(processor.topology().clone(), |w| {
        convention.factor() * classify_deterministic(&processor.run(w), DETERMINISM_EPSILON).expect("unitary evolution")
    })
    .expect("topology-sized table")
}

/// Measured outcome of one shot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Plus,
    Minus,
    /// A qutrit `|11⟩` detection, removed by post-selection.
    Discarded,
}

impl Outcome {
    pub fn sign(self) -> Option<i8> {
        match self {
            Self::Plus => Some(1),
            Self::Minus => Some(-1),
            Self::Discarded => None,
        }
    }

    /// Shot-log token: `+1`, `-1` or `D`.
    pub fn token(self) -> &'static str {
        match self {
            Self::Plus => "+1",
            Self::Minus => "-1",
            Self::Discarded => "D",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShotRecord {
    pub word: usize,
    /// Index of the detected basis state.
    pub basis: usize,
    pub outcome: Outcome,
}

/// Parameters of [`sample_shots`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    pub num_shots: usize,
    pub seed: u64,
    /// Visibility `v`: Born probabilities are mixed as `v·p + (1−v)/dim`.
    pub visibility: Option<f64>,
    /// Sign attached to detections; must match the target they are scored on.
    pub convention: SignConvention,
    /// Count only post-selected detections towards `num_shots`, as an
    /// experiment reporting "detection events" does.
    pub count_detections: bool,
}

impl SamplerConfig {
    pub fn new(num_shots: usize, seed: u64) -> Self {
        Self { num_shots, seed, visibility: None, convention: SignConvention::default(), count_detections: false }
    }
}

/// Draw shots with uniformly random input words. A detection of the first
/// basis state scores as the target value a certain first basis state would
/// get under the configured convention; `|11⟩` detections are discarded.
pub fn sample_shots(processor: &QuantumProcessor, config: &SamplerConfig) -> Result<Vec<ShotRecord>> {
    if config.num_shots == 0 {
        return Err(contract("number of shots must be positive"));
    }
    if let Some(v) = config.visibility {
        if !(0.0..=1.0).contains(&v) {
            return Err(contract(format!("visibility {v} outside [0, 1]")));
        }
    }
    let dim = processor.dim();
    let sign = config.convention.factor();
    let num_words = processor.topology().num_words();
    // Born probabilities depend only on the word; tabulate them once.
    let probabilities: Vec<Vec<f64>> = (0..num_words)
        .map(|w| {
            let p = processor.run(w).probabilities();
            match config.visibility {
                Some(v) => p.iter().map(|x| v * x + (1.0 - v) / dim as f64).collect(),
                None => p,
            }
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut draw = || {
        let word = rng.gen_range(0..num_words);
        let p = &probabilities[word];
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut basis = dim - 1;
        for (i, &pi) in p.iter().enumerate() {
            acc += pi;
            if u < acc {
                basis = i;
                break;
            }
        }
        let outcome = if basis == 0 {
            if sign > 0 {
                Outcome::Plus
            } else {
                Outcome::Minus
            }
        } else if basis == dim - 1 {
            if sign > 0 {
                Outcome::Minus
            } else {
                Outcome::Plus
            }
        } else {
            Outcome::Discarded
        };
        ShotRecord { word, basis, outcome }
    };
    let mut shots = Vec::with_capacity(config.num_shots);
    let mut counted = 0;
    while counted < config.num_shots {
        let s = draw();
        if !config.count_detections || s.outcome != Outcome::Discarded {
            counted += 1;
        }
        shots.push(s);
    }
    Ok(shots)
}

/// Per-subset correlations of a shot stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetStatistics {
    pub correlations: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation of the subset values over `√(#subsets)`.
    pub std_error: f64,
    pub kept: usize,
    pub discarded: usize,
}

impl SubsetStatistics {
    pub fn discard_rate(&self) -> f64 {
        self.discarded as f64 / (self.kept + self.discarded) as f64
    }
}

/// Split the post-selected shots, in order, into full subsets of
/// `subset_size` and score each as `(1/n) Σ O(x_i)·T(x_i)`.
pub fn subset_statistics(
    shots: &[ShotRecord],
    target: &TargetFunction,
    subset_size: usize,
) -> Result<SubsetStatistics> {
    if subset_size == 0 {
        return Err(contract("subset size must be at least 1"));
    }
    let kept: Vec<i64> =
        shots.iter().filter_map(|s| s.outcome.sign().map(|o| o as i64 * target.value(s.word) as i64)).collect();
    let discarded = shots.len() - kept.len();
    if kept.len() < subset_size {
        return Err(contract(format!("{} post-selected shots do not fill one subset of {subset_size}", kept.len())));
    }
    let correlations: Vec<f64> =
        kept.chunks_exact(subset_size).map(|c| c.iter().sum::<i64>() as f64 / subset_size as f64).collect();
    let n = correlations.len() as f64;
    let mean = correlations.iter().sum::<f64>() / n;
    let std_error = if correlations.len() > 1 {
        let var = correlations.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    Ok(SubsetStatistics { correlations, mean, std_error, kept: kept.len(), discarded })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference;

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn printed_gates() {
        assert_eq!(GateFamily::Standard.gate_for(0, 0), ModeUnitary::IDENTITY);
        assert_eq!(GateFamily::Standard.gate_for(0, 1), ModeUnitary([[ZERO, ONE], [ONE, ZERO]]));
        assert_eq!(GateFamily::AltFirst.gate_for(0, 1), ModeUnitary([[ZERO, ONE], [-ONE, ZERO]]));
        for family in [GateFamily::Standard, GateFamily::AltFirst] {
            for local in 0..4 {
                assert!(family.gate_for_input(local).unitarity_error() < 1e-12);
            }
        }
    }

    #[test]
    fn lift_of_identity_and_swap() {
        let id = lift_two_photon(&ModeUnitary::IDENTITY).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!(close(id.0[i][j], if i == j { ONE } else { ZERO }));
            }
        }
        let swap = lift_two_photon(&GateFamily::Standard.gate_for(0, 1)).unwrap();
        let expected = [[ZERO, ZERO, ONE], [ZERO, ONE, ZERO], [ONE, ZERO, ZERO]];
        for (row, want) in swap.0.iter().zip(&expected) {
            assert!(row.iter().zip(want).all(|(a, b)| close(*a, *b)));
        }
    }

    #[test]
    fn lifted_hadamard_on_twenty() {
        let l = lift_two_photon(&GateFamily::Standard.gate_for(1, 0)).unwrap();
        // Column of |20⟩.
        assert!(close(l.0[0][0], c(0.5, 0.0)));
        assert!(close(l.0[1][0], c(0.0, FRAC_1_SQRT_2)));
        assert!(close(l.0[2][0], c(-0.5, 0.0)));
    }

    #[test]
    fn lift_rejects_non_unitary() {
        let m = ModeUnitary([[ONE, ONE], [ZERO, ONE]]);
        assert!(lift_two_photon(&m).is_err());
    }

    #[test]
    fn qubit_circuit_examples() {
        let p = QuantumProcessor::new(ProcessorKind::Qubit3);
        let s = p.run(0);
        assert!(close(s.0[0], ONE) && close(s.0[1], ZERO));

        // 00 10 00: a single H at module 2.
        let s = p.run(0b001000);
        assert!(close(s.0[0], c(FRAC_1_SQRT_2, 0.0)));
        assert!(close(s.0[1], c(0.0, FRAC_1_SQRT_2)));
        assert_eq!(classify_deterministic(&s, DETERMINISM_EPSILON).unwrap(), 0);

        // H·H = i·X, so |0⟩ ends in |1⟩ up to phase.
        let s = p.run(0b001010);
        assert!((s.0[1].norm_sqr() - 1.0).abs() < 1e-12);
        assert_eq!(classify_deterministic(&s, DETERMINISM_EPSILON).unwrap(), -1);
    }

    #[test]
    fn classification_examples() {
        assert_eq!(classify_deterministic(&PureState::basis(2, 0), 1e-6).unwrap(), 1);
        assert_eq!(classify_deterministic(&PureState::basis(3, 2), 1e-6).unwrap(), -1);
        assert_eq!(classify_deterministic(&PureState::basis(3, 1), 1e-6).unwrap(), 0);
        assert!(classify_deterministic(&PureState(vec![ONE, ONE]), 1e-6).is_err());
    }

    #[test]
    fn generated_targets_match_reference() {
        let qubit = generate_target(&QuantumProcessor::new(ProcessorKind::Qubit3), SignConvention::Matrix);
        assert_eq!(qubit, reference::qubit3_target());
        let qutrit4 = generate_target(&QuantumProcessor::new(ProcessorKind::Qutrit4), SignConvention::Matrix);
        assert_eq!(qutrit4, reference::qutrit4_target());
        let qutrit3 = generate_target(&QuantumProcessor::new(ProcessorKind::Qutrit3), SignConvention::Matrix);
        assert_eq!(qutrit3, reference::qutrit3_target());
    }

    #[test]
    fn conventions_differ_by_global_sign() {
        for kind in [ProcessorKind::Qubit3, ProcessorKind::Qutrit3, ProcessorKind::Qutrit4] {
            let p = QuantumProcessor::new(kind);
            let text = generate_target(&p, SignConvention::Text);
            let matrix = generate_target(&p, SignConvention::Matrix);
            assert_eq!(text.negated(), matrix);
        }
    }

    #[test]
    fn sampler_is_reproducible() {
        let p = QuantumProcessor::new(ProcessorKind::Qutrit4);
        let cfg = SamplerConfig::new(2000, 42);
        assert_eq!(sample_shots(&p, &cfg).unwrap(), sample_shots(&p, &cfg).unwrap());
        let noisy = SamplerConfig { visibility: Some(1.0), ..cfg };
        assert_eq!(sample_shots(&p, &cfg).unwrap(), sample_shots(&p, &noisy).unwrap());
        assert!(sample_shots(&p, &SamplerConfig::new(0, 1)).is_err());
    }

    #[test]
    fn deterministic_words_always_score_their_target() {
        let p = QuantumProcessor::new(ProcessorKind::Qubit3);
        let t = generate_target(&p, SignConvention::Matrix);
        let shots = sample_shots(&p, &SamplerConfig::new(5000, 3)).unwrap();
        for s in &shots {
            if t.value(s.word) != 0 {
                assert_eq!(s.outcome.sign(), Some(t.value(s.word)));
            }
        }
        let qubit_discards = shots.iter().filter(|s| s.outcome == Outcome::Discarded).count();
        assert_eq!(qubit_discards, 0);
    }

    #[test]
    fn subset_statistics_on_support_only_stream() {
        let t = reference::qubit3_target();
        let shots: Vec<ShotRecord> = (0..64)
            .filter(|&w| t.value(w) != 0)
            .cycle()
            .take(300)
            .map(|w| ShotRecord {
                word: w,
                basis: 0,
                outcome: if t.value(w) > 0 { Outcome::Plus } else { Outcome::Minus },
            })
            .collect();
        let stats = subset_statistics(&shots, &t, 7).unwrap();
        assert_eq!(stats.correlations.len(), 300 / 7);
        assert_eq!(stats.mean, 1.0);
        assert_eq!(stats.std_error, 0.0);
        assert!(subset_statistics(&shots, &t, 301).is_err());
        assert!(subset_statistics(&shots, &t, 0).is_err());
    }
}
