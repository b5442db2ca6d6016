//! Random differential polynomials and loop elements for property tests.

use mkdv_core::diffpoly::{rat, DiffPoly, JetVar, Monomial};
use mkdv_core::loopalg::AlgebraCtx;
use mkdv_core::LoopElement;
use proptest::prelude::*;
use rand::Rng;

/// A random polynomial with up to `terms` terms in jets of order `<= max_order`.
pub fn poly<R: Rng>(rng: &mut R, rank: usize, terms: usize, max_order: u32, max_degree: u32) -> DiffPoly {
    let mut p = DiffPoly::zero(rank);
    for _ in 0..rng.gen_range(1..=terms) {
        let degree = rng.gen_range(1..=max_degree);
        let factors: Vec<(JetVar, u32)> = (0..degree)
            .map(|_| (JetVar::new(rng.gen_range(1..=rank), rng.gen_range(0..=max_order)), 1))
            .collect();
        let c = rat(rng.gen_range(-9..=9), rng.gen_range(1..=4));
        p += &DiffPoly::term(rank, Monomial::from_factors(factors), c);
    }
    p
}

/// A random polynomial in `v`-jets whose `v`-weight is at most `max_weight`.
pub fn v_poly<R: Rng>(rng: &mut R, max_weight: u32) -> DiffPoly {
    let mut p = DiffPoly::zero(1);
    for _ in 0..rng.gen_range(1..=4) {
        let mut budget = rng.gen_range(0..=max_weight);
        let mut factors = Vec::new();
        while budget >= 2 {
            let order = rng.gen_range(0..=budget - 2);
            factors.push((JetVar::new(1, order), 1));
            budget -= order + 2;
        }
        let c = rat(rng.gen_range(-6..=6), rng.gen_range(1..=3));
        p += &DiffPoly::term(1, Monomial::from_factors(factors), c);
    }
    p
}

prop_compose! {
    pub fn arb_monomial(rank: usize, max_order: u32)
        (factors in prop::collection::vec((1..=rank, 0..=max_order, 1u32..=2), 0..=3))
        -> Monomial
    {
        Monomial::from_factors(factors.into_iter().map(|(i, k, e)| (JetVar::new(i, k), e)))
    }
}

prop_compose! {
    pub fn arb_poly(rank: usize, max_order: u32)
        (terms in prop::collection::vec((arb_monomial(rank, max_order), -7i64..=7, 1i64..=3), 0..=4))
        -> DiffPoly
    {
        let mut p = DiffPoly::zero(rank);
        for (m, a, b) in terms {
            p += &DiffPoly::term(rank, m, rat(a, b));
        }
        p
    }
}

/// A loop element with small polynomial entries in principal degrees `lo..=hi`.
pub fn arb_loop(rank: usize, lo: i32, hi: i32) -> impl Strategy<Value = LoopElement> {
    let h = rank + 1;
    let entry = (0..h, 0..h, lo..=hi, arb_poly(rank, 1));
    prop::collection::vec(entry, 0..=4).prop_map(move |entries| {
        let ctx = AlgebraCtx::new(rank).unwrap();
        let mut out = LoopElement::zero(ctx);
        for (a, b, j, c) in entries {
            // Place E_{ab} at the λ-power giving principal degree close to j.
            let k = (j - (b as i32 - a as i32)).div_euclid(h as i32);
            let x = if a == b {
                // Keep diagonals traceless by pairing with the next diagonal slot.
                let b2 = (a + 1) % h;
                LoopElement::from_entries(ctx, [(a, a, k, c.clone()), (b2, b2, k, -c)])
            } else {
                LoopElement::from_entries(ctx, [(a, b, k, c)])
            };
            out = &out + &x.unwrap();
        }
        out
    })
}

/// `diag(d)·Λ^degree` with random small entries (traceless when `h | degree`).
pub fn arb_homogeneous(rank: usize, degree: i32) -> impl Strategy<Value = LoopElement> {
    prop::collection::vec(arb_poly(rank, 1), rank + 1).prop_map(move |mut d| {
        let ctx = AlgebraCtx::new(rank).unwrap();
        if degree % (rank as i32 + 1) == 0 {
            let mut tr = DiffPoly::zero(rank);
            for c in &d[..rank] {
                tr += c;
            }
            d[rank] = -tr;
        }
        LoopElement::homogeneous(ctx, degree, d).unwrap()
    })
}

prop_compose! {
    /// Polynomials in `v`-jets of `v`-weight at most 8 (`v^(k)` weighs `k + 2`).
    pub fn arb_v_poly()
        (terms in prop::collection::vec(
            (prop::collection::vec(0u32..=4, 0..=4), -7i64..=7, 1i64..=3), 0..=4))
        -> DiffPoly
    {
        let mut p = DiffPoly::zero(1);
        for (orders, a, b) in terms {
            let mut budget = 8;
            let mut factors = Vec::new();
            for k in orders {
                if k + 2 <= budget {
                    budget -= k + 2;
                    factors.push((JetVar::new(1, k), 1));
                }
            }
            p += &DiffPoly::term(1, Monomial::from_factors(factors), rat(a, b));
        }
        p
    }
}
