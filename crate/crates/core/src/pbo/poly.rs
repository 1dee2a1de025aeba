use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use num_rational::Ratio;
use num_traits::{Signed, Zero};

use crate::error::{contract, Result};

pub type Coeff = Ratio<i64>;

/// Multilinear polynomial over `{0,1}` variables with rational coefficients.
///
/// Terms are keyed by strictly increasing variable lists; zero coefficients
/// are never stored. The constant term is kept separately.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PseudoBooleanPoly {
    num_vars: usize,
    constant: Coeff,
    terms: BTreeMap<Vec<u32>, Coeff>,
}

impl PseudoBooleanPoly {
    pub fn new(num_vars: usize) -> Self {
        Self { num_vars, constant: Coeff::zero(), terms: BTreeMap::new() }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn constant(&self) -> Coeff {
        self.constant
    }

    /// Non-constant terms.
    pub fn terms(&self) -> impl Iterator<Item = (&[u32], Coeff)> {
        self.terms.iter().map(|(k, &v)| (k.as_slice(), v))
    }

    /// Number of non-constant terms.
    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(Vec::len).max().unwrap_or(0)
    }

    pub fn coefficient(&self, vars: &[u32]) -> Coeff {
        if vars.is_empty() {
            return self.constant;
        }
        self.terms.get(vars).copied().unwrap_or_else(Coeff::zero)
    }

    /// Add `coeff · Π vars`; repeated variables collapse (`x² = x`).
    pub fn add_term(&mut self, vars: &[u32], coeff: Coeff) {
        let mut key = vars.to_vec();
        key.sort_unstable();
        key.dedup();
        if let Some(&v) = key.last() {
            assert!((v as usize) < self.num_vars, "variable {v} out of range");
        }
        self.add_sorted(key, coeff);
    }

    pub(crate) fn add_sorted(&mut self, key: Vec<u32>, coeff: Coeff) {
        if coeff.is_zero() {
            return;
        }
        if key.is_empty() {
            self.constant += coeff;
            return;
        }
        match self.terms.entry(key) {
            Entry::Occupied(mut e) => {
                *e.get_mut() += coeff;
                if e.get().is_zero() {
                    e.remove();
                }
            }
            Entry::Vacant(e) => {
                e.insert(coeff);
            }
        }
    }

    pub fn add_constant(&mut self, c: Coeff) {
        self.constant += c;
    }

    /// Sum of absolute values of the non-constant coefficients.
    pub fn abs_coeff_sum(&self) -> Coeff {
        self.terms.values().fold(Coeff::zero(), |acc, c| acc + c.abs())
    }

    /// Exact value at a 0/1 assignment.
    pub fn evaluate(&self, assignment: &[bool]) -> Result<Coeff> {
        if assignment.len() != self.num_vars {
            return Err(contract(format!(
                "assignment has {} values, polynomial has {} variables",
                assignment.len(),
                self.num_vars
            )));
        }
        Ok(self
            .terms
            .iter()
            .filter(|(k, _)| k.iter().all(|&v| assignment[v as usize]))
            .fold(self.constant, |acc, (_, &c)| acc + c))
    }

    /// For every variable, the indices (into [`Self::terms`] order) of the
    /// terms that contain it.
    pub fn incidence(&self) -> Vec<Vec<usize>> {
        let mut index = vec![Vec::new(); self.num_vars];
        for (t, vars) in self.terms.keys().enumerate() {
            for &v in vars {
                index[v as usize].push(t);
            }
        }
        index
    }

    pub(crate) fn into_parts(self) -> (usize, Coeff, BTreeMap<Vec<u32>, Coeff>) {
        (self.num_vars, self.constant, self.terms)
    }

    pub(crate) fn from_parts(num_vars: usize, constant: Coeff, terms: BTreeMap<Vec<u32>, Coeff>) -> Self {
        debug_assert!(terms.values().all(|c| !c.is_zero()));
        Self { num_vars, constant, terms }
    }
}

/// Sparse multilinear polynomial with integer coefficients, used while
/// building encodings.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub(crate) struct IntPoly(pub BTreeMap<Vec<u32>, i64>);

impl IntPoly {
    pub fn constant(c: i64) -> Self {
        let mut m = BTreeMap::new();
        if c != 0 {
            m.insert(Vec::new(), c);
        }
        Self(m)
    }

    pub fn var(v: u32) -> Self {
        Self(BTreeMap::from([(vec![v], 1)]))
    }

    /// `1 − x`.
    pub fn not(v: u32) -> Self {
        Self(BTreeMap::from([(Vec::new(), 1), (vec![v], -1)]))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn add_scaled(&mut self, other: &Self, k: i64) {
        for (key, &c) in &other.0 {
            let e = self.0.entry(key.clone()).or_insert(0);
            *e += k * c;
            if *e == 0 {
                self.0.remove(key);
            }
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::default();
        for (a, &ca) in &self.0 {
            for (b, &cb) in &other.0 {
                let mut key = Vec::with_capacity(a.len() + b.len());
                let (mut i, mut j) = (0, 0);
                while i < a.len() || j < b.len() {
                    let next = match (a.get(i), b.get(j)) {
                        (Some(&x), Some(&y)) if x == y => {
                            i += 1;
                            j += 1;
                            x
                        }
                        (Some(&x), Some(&y)) if x < y => {
                            i += 1;
                            x
                        }
                        (Some(_), Some(&y)) => {
                            j += 1;
                            y
                        }
                        (Some(&x), None) => {
                            i += 1;
                            x
                        }
                        (None, Some(&y)) => {
                            j += 1;
                            y
                        }
                        (None, None) => unreachable!(),
                    };
                    key.push(next);
                }
                let e = out.0.entry(key).or_insert(0);
                *e += ca * cb;
            }
        }
        out.0.retain(|_, c| *c != 0);
        out
    }
}
