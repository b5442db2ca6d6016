//! Sparse Gaussian elimination over the rationals.

use std::collections::BTreeMap;

use num_traits::Zero;

use crate::diffpoly::Rational;

/// A linear system `Σ_k a_{jk} x_k = b_j` with sparse rows.
#[derive(Clone, Debug, Default)]
pub struct LinearSystem {
    unknowns: usize,
    rows: Vec<(BTreeMap<usize, Rational>, Rational)>,
}

/// Result of a consistent solve. Free unknowns are set to zero in `values`.
#[derive(Clone, Debug)]
pub struct Solution {
    pub values: Vec<Rational>,
    pub free: Vec<usize>,
}

impl Solution {
    pub fn is_unique(&self) -> bool {
        self.free.is_empty()
    }
}

impl LinearSystem {
    pub fn new(unknowns: usize) -> Self {
        LinearSystem {
            unknowns,
            rows: Vec::new(),
        }
    }

    pub fn unknowns(&self) -> usize {
        self.unknowns
    }

    pub fn equations(&self) -> usize {
        self.rows.len()
    }

    pub fn push(&mut self, coeffs: BTreeMap<usize, Rational>, rhs: Rational) {
        debug_assert!(coeffs.keys().all(|&k| k < self.unknowns));
        let coeffs: BTreeMap<_, _> = coeffs.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        if coeffs.is_empty() && rhs.is_zero() {
            return;
        }
        self.rows.push((coeffs, rhs));
    }

    /// Row-reduces and back-substitutes. `None` when the system is inconsistent.
    pub fn solve(&self) -> Option<Solution> {
        let mut rows = self.rows.clone();
        let mut pivots: Vec<(usize, usize)> = Vec::new();
        let mut next = 0;
        for col in 0..self.unknowns {
            let Some(found) = (next..rows.len()).find(|&r| rows[r].0.contains_key(&col)) else {
                continue;
            };
            rows.swap(next, found);
            let inv = Rational::from_integer(1.into()) / rows[next].0[&col].clone();
            let (prow, prhs) = {
                let (p, b) = &rows[next];
                let p: BTreeMap<usize, Rational> =
                    p.iter().map(|(&k, c)| (k, c * &inv)).collect();
                (p, b * &inv)
            };
            rows[next] = (prow.clone(), prhs.clone());
            for r in 0..rows.len() {
                if r == next {
                    continue;
                }
                let Some(f) = rows[r].0.get(&col).cloned() else {
                    continue;
                };
                let (row, rhs) = &mut rows[r];
                for (&k, c) in &prow {
                    let entry = row.entry(k).or_insert_with(Rational::zero);
                    *entry -= &f * c;
                    if entry.is_zero() {
                        row.remove(&k);
                    }
                }
                *rhs -= &f * &prhs;
            }
            pivots.push((next, col));
            next += 1;
        }
        if rows[next..].iter().any(|(_, b)| !b.is_zero()) {
            return None;
        }
        let mut values = vec![Rational::zero(); self.unknowns];
        let mut is_pivot = vec![false; self.unknowns];
        for &(r, col) in &pivots {
            values[col] = rows[r].1.clone();
            is_pivot[col] = true;
        }
        let free = (0..self.unknowns).filter(|&k| !is_pivot[k]).collect();
        Some(Solution { values, free })
    }
}
