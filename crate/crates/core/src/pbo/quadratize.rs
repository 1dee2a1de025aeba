use std::collections::BTreeMap;

use num_traits::{Signed, Zero};

use super::poly::{Coeff, PseudoBooleanPoly};
use crate::error::{contract, Result};

/// Quadratic reduction of a pseudo-Boolean polynomial.
///
/// Variables `0..num_original` are the original ones; each later variable
/// `z` stands for the product of the pair recorded in `aux`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadratizedProblem {
    poly: PseudoBooleanPoly,
    num_original: usize,
    penalty: Coeff,
    aux: Vec<(u32, u32)>,
}

impl QuadratizedProblem {
    /// The quadratic polynomial (degree ≤ 2), constant included.
    pub fn as_poly(&self) -> &PseudoBooleanPoly {
        &self.poly
    }

    pub fn into_poly(self) -> PseudoBooleanPoly {
        self.poly
    }

    pub fn num_original(&self) -> usize {
        self.num_original
    }

    pub fn num_vars(&self) -> usize {
        self.poly.num_vars()
    }

    pub fn penalty(&self) -> Coeff {
        self.penalty
    }

    pub fn offset(&self) -> Coeff {
        self.poly.constant()
    }

    /// `aux()[k]` is the pair replaced by variable `num_original + k`.
    pub fn aux(&self) -> &[(u32, u32)] {
        &self.aux
    }

    /// Extend an assignment of the original variables with consistent aux values.
    pub fn extend(&self, original: &[bool]) -> Result<Vec<bool>> {
        if original.len() != self.num_original {
            return Err(contract(format!("assignment has {} values, expected {}", original.len(), self.num_original)));
        }
        let mut out = original.to_vec();
        for &(x, y) in &self.aux {
            let v = out[x as usize] && out[y as usize];
            out.push(v);
        }
        Ok(out)
    }

    /// Upper triangle `(i, j, c)` with `i ≤ j`; linear terms sit on the diagonal.
    pub fn qubo_entries(&self) -> Vec<(u32, u32, Coeff)> {
        self.poly
            .terms()
            .map(|(vars, c)| match *vars {
                [i] => (i, i, c),
                [i, j] => (i, j, c),
                _ => unreachable!("quadratized polynomial has a term of degree {}", vars.len()),
            })
            .collect()
    }
}

/// `1 + Σ|c|` over non-constant coefficients.
pub fn default_penalty(poly: &PseudoBooleanPoly) -> Coeff {
    Coeff::from_integer(1) + poly.abs_coeff_sum()
}

/// Rosenberg reduction: while a term of degree ≥ 3 remains, replace the pair
/// occurring in the most such terms (ties: lexicographically smallest) by a new
/// variable `z` and add `M·(xy − 2xz − 2yz + 3z)`.
pub fn quadratize(poly: &PseudoBooleanPoly, penalty: Option<Coeff>) -> Result<QuadratizedProblem> {
    let m = penalty.unwrap_or_else(|| default_penalty(poly));
    if !m.is_positive() {
        return Err(contract(format!("penalty must be positive, got {m}")));
    }
    if m <= poly.abs_coeff_sum() {
        return Err(contract(format!("penalty {m} does not exceed the coefficient mass {}", poly.abs_coeff_sum())));
    }
    let num_original = poly.num_vars();
    let (_, constant, mut terms) = poly.clone().into_parts();
    let mut aux = Vec::new();
    loop {
        let mut counts: BTreeMap<(u32, u32), usize> = BTreeMap::new();
        for vars in terms.keys().filter(|k| k.len() > 2) {
            for (i, &a) in vars.iter().enumerate() {
                for &b in &vars[i + 1..] {
                    *counts.entry((a, b)).or_insert(0) += 1;
                }
            }
        }
        // max_by_key keeps the last maximum; iterate in reverse for the first.
        let Some((&(x, y), _)) = counts.iter().rev().max_by_key(|(_, &n)| n) else {
            break;
        };
        let z = (num_original + aux.len()) as u32;
        aux.push((x, y));
        let mut next: BTreeMap<Vec<u32>, Coeff> = BTreeMap::new();
        let mut add = |key: Vec<u32>, c: Coeff| {
            let e = next.entry(key).or_insert_with(Coeff::zero);
            *e += c;
        };
        for (vars, c) in terms {
            if vars.len() > 2 && vars.contains(&x) && vars.contains(&y) {
                let mut key: Vec<u32> = vars.into_iter().filter(|&v| v != x && v != y).collect();
                key.push(z);
                add(key, c);
            } else {
                add(vars, c);
            }
        }
        add(vec![x, y], m);
        add(vec![x, z], m * -2);
        add(vec![y, z], m * -2);
        add(vec![z], m * 3);
        next.retain(|_, c| !c.is_zero());
        terms = next;
    }
    let num_vars = num_original + aux.len();
    Ok(QuadratizedProblem {
        poly: PseudoBooleanPoly::from_parts(num_vars, constant, terms),
        num_original,
        penalty: m,
        aux,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assignments(n: usize) -> impl Iterator<Item = Vec<bool>> {
        (0u32..1 << n).map(move |m| (0..n).map(|i| m >> i & 1 == 1).collect())
    }

    fn exhaustive_min(p: &PseudoBooleanPoly) -> Coeff {
        assignments(p.num_vars()).map(|a| p.evaluate(&a).unwrap()).min().unwrap()
    }

    #[test]
    fn quadratic_input_is_unchanged() {
        let mut p = PseudoBooleanPoly::new(3);
        p.add_term(&[0, 1], Coeff::from_integer(2));
        p.add_term(&[2], Coeff::from_integer(-1));
        p.add_constant(Coeff::from_integer(5));
        let q = quadratize(&p, None).unwrap();
        assert!(q.aux().is_empty());
        assert_eq!(q.as_poly(), &p);
    }

    #[test]
    fn cubic_monomial_needs_one_aux() {
        let mut p = PseudoBooleanPoly::new(3);
        p.add_term(&[0, 1, 2], Coeff::from_integer(-1));
        let q = quadratize(&p, None).unwrap();
        assert_eq!(q.aux(), &[(0, 1)]);
        assert_eq!(q.num_vars(), 4);
        assert_eq!(q.as_poly().degree(), 2);
        assert_eq!(exhaustive_min(q.as_poly()), exhaustive_min(&p));
        for a in assignments(3) {
            let full = q.extend(&a).unwrap();
            assert_eq!(q.as_poly().evaluate(&full).unwrap(), p.evaluate(&a).unwrap());
        }
    }

    #[test]
    fn shared_pair_is_reused() {
        let mut p = PseudoBooleanPoly::new(4);
        p.add_term(&[0, 1, 2], Coeff::from_integer(1));
        p.add_term(&[0, 1, 3], Coeff::from_integer(-2));
        let q = quadratize(&p, None).unwrap();
        assert_eq!(q.aux(), &[(0, 1)]);
        assert_eq!(exhaustive_min(q.as_poly()), exhaustive_min(&p));
    }

    #[test]
    fn penalty_must_dominate() {
        let mut p = PseudoBooleanPoly::new(3);
        p.add_term(&[0, 1, 2], Coeff::from_integer(4));
        assert!(quadratize(&p, Some(Coeff::from_integer(0))).is_err());
        assert!(quadratize(&p, Some(Coeff::from_integer(4))).is_err());
        assert!(quadratize(&p, Some(Coeff::from_integer(5))).is_ok());
    }
}
