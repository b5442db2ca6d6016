//! Differential polynomials in the jet variables `u_i^(n)`.
//!
//! A [`DiffPoly`] is a sparse map from monomials in the jet variables to exact
//! rational coefficients. The ring carries the total derivative `∂_z`
//! (`u_i^(n) ↦ u_i^(n+1)` extended by Leibniz), formal partial derivatives,
//! the Euler operator `δ/δu_i`, and an exact antiderivative that inverts `∂_z`
//! on its image.
//!
//! Every jet variable `u_i^(n)` has principal weight `n + 1`, so `∂_z` raises
//! the weight of each term by exactly one.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::ser::SerializeSeq;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

/// Exact coefficient field.
pub type Rational = BigRational;

/// Shorthand for the rational `num / den`.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Shorthand for the integer `n` as a rational.
pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiffPolyError {
    #[error("rank mismatch: {left} vs {right}")]
    RankMismatch { left: usize, right: usize },
    #[error("jet index {index} outside 1..={rank}")]
    IndexOutOfRange { index: usize, rank: usize },
    #[error("not a total derivative (irreducible remainder: {remainder})")]
    NotExact { remainder: Box<DiffPoly> },
    #[error("malformed polynomial: {0}")]
    Parse(String),
}

/// The jet variable `u_index^(order)`.
///
/// The derived ordering compares `order` first and `index` second, which is
/// the graded lexicographic order used by the by-parts reduction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct JetVar {
    order: u32,
    index: u16,
}

impl JetVar {
    /// `u_index^(order)`; `index` is 1-based.
    pub fn new(index: usize, order: u32) -> Self {
        assert!(index >= 1 && index <= u16::MAX as usize, "jet index must be >= 1");
        JetVar {
            order,
            index: index as u16,
        }
    }

    pub fn index(&self) -> usize {
        self.index as usize
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn weight(&self) -> u32 {
        self.order + 1
    }

    /// `u_i^(n+1)`.
    pub fn derivative(&self) -> JetVar {
        JetVar {
            order: self.order + 1,
            index: self.index,
        }
    }

    /// `u_i^(n-1)`, if `n > 0`.
    pub fn primitive(&self) -> Option<JetVar> {
        self.order.checked_sub(1).map(|order| JetVar {
            order,
            index: self.index,
        })
    }
}

/// A monomial: jet variables with positive exponents, sorted by [`JetVar`] order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial(Vec<(JetVar, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(v: JetVar) -> Self {
        Monomial(vec![(v, 1)])
    }

    /// Builds a monomial from arbitrary `(variable, exponent)` pairs.
    pub fn from_factors(factors: impl IntoIterator<Item = (JetVar, u32)>) -> Self {
        let mut map = BTreeMap::new();
        for (v, e) in factors {
            *map.entry(v).or_insert(0) += e;
        }
        Monomial(map.into_iter().filter(|&(_, e)| e > 0).collect())
    }

    pub fn factors(&self) -> &[(JetVar, u32)] {
        &self.0
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn weight(&self) -> u32 {
        self.0.iter().map(|(v, e)| v.weight() * e).sum()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|(_, e)| e).sum()
    }

    pub fn exponent(&self, v: JetVar) -> u32 {
        self.0
            .binary_search_by(|(w, _)| w.cmp(&v))
            .map(|k| self.0[k].1)
            .unwrap_or(0)
    }

    pub fn max_var(&self) -> Option<JetVar> {
        self.0.last().map(|(v, _)| *v)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            let (a, ea) = self.0[i];
            let (b, eb) = other.0[j];
            match a.cmp(&b) {
                std::cmp::Ordering::Less => {
                    out.push((a, ea));
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push((b, eb));
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push((a, ea + eb));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Monomial(out)
    }

    /// Multiplies by `v^k`.
    pub fn times_var(&self, v: JetVar, k: u32) -> Monomial {
        if k == 0 {
            return self.clone();
        }
        self.mul(&Monomial(vec![(v, k)]))
    }

    /// Removes one factor of `v`, returning the old exponent. `None` if `v` is absent.
    pub fn without_one(&self, v: JetVar) -> Option<(u32, Monomial)> {
        let k = self.0.binary_search_by(|(w, _)| w.cmp(&v)).ok()?;
        let e = self.0[k].1;
        let mut out = self.0.clone();
        if e == 1 {
            out.remove(k);
        } else {
            out[k].1 = e - 1;
        }
        Some((e, Monomial(out)))
    }

    /// Removes `v` entirely, returning its exponent (0 if absent).
    pub fn split_var(&self, v: JetVar) -> (u32, Monomial) {
        match self.0.binary_search_by(|(w, _)| w.cmp(&v)) {
            Ok(k) => {
                let mut out = self.0.clone();
                let (_, e) = out.remove(k);
                (e, Monomial(out))
            }
            Err(_) => (0, self.clone()),
        }
    }
}

/// A differential polynomial over the rationals in the jets of `u_1, ..., u_rank`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DiffPoly {
    rank: usize,
    terms: BTreeMap<Monomial, Rational>,
}

impl DiffPoly {
    pub fn zero(rank: usize) -> Self {
        DiffPoly {
            rank,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(rank: usize) -> Self {
        Self::constant(rank, Rational::one())
    }

    pub fn constant(rank: usize, c: Rational) -> Self {
        let mut p = Self::zero(rank);
        if !c.is_zero() {
            p.terms.insert(Monomial::one(), c);
        }
        p
    }

    pub fn from_int(rank: usize, n: i64) -> Self {
        Self::constant(rank, int(n))
    }

    /// The polynomial `u_v`, checking that the index lies in the rank.
    pub fn var(rank: usize, v: JetVar) -> Result<Self, DiffPolyError> {
        if v.index() > rank {
            return Err(DiffPolyError::IndexOutOfRange {
                index: v.index(),
                rank,
            });
        }
        Ok(Self::term(rank, Monomial::var(v), Rational::one()))
    }

    /// `u_index^(order)`. Panics if `index` is outside `1..=rank`.
    pub fn jet(rank: usize, index: usize, order: u32) -> Self {
        Self::var(rank, JetVar::new(index, order)).expect("jet index within rank")
    }

    pub fn term(rank: usize, m: Monomial, c: Rational) -> Self {
        let mut p = Self::zero(rank);
        if !c.is_zero() {
            p.terms.insert(m, c);
        }
        p
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, m: &Monomial) -> Rational {
        self.terms.get(m).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn constant_term(&self) -> Rational {
        self.coefficient(&Monomial::one())
    }

    /// Returns `Some(c)` when the polynomial is the constant `c`.
    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => self.terms.get(&Monomial::one()).cloned(),
            _ => None,
        }
    }

    /// Value at `u ≡ 0` (every jet variable set to zero).
    pub fn at_zero(&self) -> Rational {
        self.constant_term()
    }

    /// Distinct weights of the terms, ascending.
    pub fn weights(&self) -> BTreeSet<u32> {
        self.terms.keys().map(Monomial::weight).collect()
    }

    /// The common weight of all terms, if the polynomial is nonzero and homogeneous.
    pub fn homogeneous_weight(&self) -> Option<u32> {
        let w = self.weights();
        if w.len() == 1 {
            w.into_iter().next()
        } else {
            None
        }
    }

    /// True for zero or a polynomial all of whose terms have weight `w`.
    pub fn is_homogeneous_of(&self, w: u32) -> bool {
        self.terms.keys().all(|m| m.weight() == w)
    }

    pub fn homogeneous_components(&self) -> BTreeMap<u32, DiffPoly> {
        let mut out: BTreeMap<u32, DiffPoly> = BTreeMap::new();
        for (m, c) in &self.terms {
            out.entry(m.weight())
                .or_insert_with(|| DiffPoly::zero(self.rank))
                .terms
                .insert(m.clone(), c.clone());
        }
        out
    }

    pub fn variables(&self) -> BTreeSet<JetVar> {
        self.terms
            .keys()
            .flat_map(|m| m.factors().iter().map(|(v, _)| *v))
            .collect()
    }

    pub fn max_var(&self) -> Option<JetVar> {
        self.terms.keys().filter_map(Monomial::max_var).max()
    }

    pub fn max_order(&self) -> Option<u32> {
        self.variables().iter().map(JetVar::order).max()
    }

    fn check_rank(&self, other: &DiffPoly) -> Result<(), DiffPolyError> {
        if self.rank == other.rank {
            Ok(())
        } else {
            Err(DiffPolyError::RankMismatch {
                left: self.rank,
                right: other.rank,
            })
        }
    }

    fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(slot) => {
                slot.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut slot) => {
                *slot.get_mut() += c;
                if slot.get().is_zero() {
                    slot.remove();
                }
            }
        }
    }

    pub fn checked_add(&self, other: &DiffPoly) -> Result<DiffPoly, DiffPolyError> {
        self.check_rank(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &DiffPoly) -> Result<DiffPoly, DiffPolyError> {
        self.check_rank(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c.clone());
        }
        Ok(out)
    }

    pub fn checked_mul(&self, other: &DiffPoly) -> Result<DiffPoly, DiffPolyError> {
        self.check_rank(other)?;
        let mut out = DiffPoly::zero(self.rank);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &Rational) -> DiffPoly {
        if c.is_zero() {
            return DiffPoly::zero(self.rank);
        }
        DiffPoly {
            rank: self.rank,
            terms: self
                .terms
                .iter()
                .map(|(m, k)| (m.clone(), k * c))
                .collect(),
        }
    }

    pub fn pow(&self, k: u32) -> DiffPoly {
        let mut out = DiffPoly::one(self.rank);
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    /// The total derivative `∂_z`.
    pub fn total_derivative(&self) -> DiffPoly {
        let mut out = DiffPoly::zero(self.rank);
        for (m, c) in &self.terms {
            for &(v, _) in m.factors() {
                let (e, rest) = m.without_one(v).expect("factor present");
                out.add_term(rest.times_var(v.derivative(), 1), c * int(e as i64));
            }
        }
        out
    }

    /// `∂_z^k`.
    pub fn total_derivative_n(&self, k: u32) -> DiffPoly {
        let mut out = self.clone();
        for _ in 0..k {
            out = out.total_derivative();
        }
        out
    }

    /// Formal partial derivative `∂p/∂v`.
    pub fn partial(&self, v: JetVar) -> DiffPoly {
        let mut out = DiffPoly::zero(self.rank);
        for (m, c) in &self.terms {
            if let Some((e, rest)) = m.without_one(v) {
                out.add_term(rest, c * int(e as i64));
            }
        }
        out
    }

    /// Euler operator `δ/δu_index = Σ_n (−∂_z)^n ∘ ∂/∂u_index^(n)`.
    pub fn variational_derivative(&self, index: usize) -> DiffPoly {
        let mut out = DiffPoly::zero(self.rank);
        for v in self.variables() {
            if v.index() != index {
                continue;
            }
            let mut piece = self.partial(v).total_derivative_n(v.order());
            if v.order() % 2 == 1 {
                piece = -piece;
            }
            out += &piece;
        }
        out
    }

    /// Formal integral with respect to the single variable `v`, other variables held fixed.
    fn integrate_in(&self, v: JetVar) -> DiffPoly {
        let mut out = DiffPoly::zero(self.rank);
        for (m, c) in &self.terms {
            let e = m.exponent(v);
            out.add_term(m.times_var(v, 1), c / int(e as i64 + 1));
        }
        out
    }

    /// Writes `self = a·x + b` where neither `a` nor `b` contains `x`.
    /// `None` if `x` occurs with exponent at least two.
    fn linear_in(&self, x: JetVar) -> Option<(DiffPoly, DiffPoly)> {
        let mut a = DiffPoly::zero(self.rank);
        let mut b = DiffPoly::zero(self.rank);
        for (m, c) in &self.terms {
            match m.split_var(x) {
                (0, _) => b.add_term(m.clone(), c.clone()),
                (1, rest) => a.add_term(rest, c.clone()),
                _ => return None,
            }
        }
        Some((a, b))
    }

    /// Exact antiderivative: returns `g` with `∂_z g = self` and no constant term.
    ///
    /// The reduction repeatedly takes the highest jet variable `x = u_i^(N)`
    /// (order first, then index), writes the remainder as `a·x + b`, integrates
    /// `a` in `u_i^(N-1)`, and subtracts the total derivative of the result.
    /// The step is only valid when the remainder is linear in `x` and `a` is
    /// free of variables above `u_i^(N-1)`; any violation, or a leftover
    /// polynomial in the underived `u_i`, means the input is not in the image
    /// of `∂_z`.
    pub fn antiderivative(&self) -> Result<DiffPoly, DiffPolyError> {
        let not_exact = |rem: &DiffPoly| DiffPolyError::NotExact {
            remainder: Box::new(rem.clone()),
        };
        if !self.constant_term().is_zero() {
            return Err(not_exact(self));
        }
        let mut rem = self.clone();
        let mut primitive = DiffPoly::zero(self.rank);
        while let Some(x) = rem.max_var() {
            let y = match x.primitive() {
                Some(y) => y,
                None => return Err(not_exact(&rem)),
            };
            let (a, _) = rem.linear_in(x).ok_or_else(|| not_exact(&rem))?;
            if a.max_var().is_some_and(|w| w > y) {
                return Err(not_exact(&rem));
            }
            let g = a.integrate_in(y);
            rem -= &g.total_derivative();
            debug_assert!(rem.max_var().is_none_or(|w| w < x));
            primitive += &g;
        }
        Ok(primitive)
    }

    /// Substitutes every jet variable by a polynomial (possibly of another rank).
    pub fn substitute(
        &self,
        target_rank: usize,
        mut image: impl FnMut(JetVar) -> DiffPoly,
    ) -> DiffPoly {
        let mut cache: BTreeMap<JetVar, Vec<DiffPoly>> = BTreeMap::new();
        let mut out = DiffPoly::zero(target_rank);
        for (m, c) in &self.terms {
            let mut prod = DiffPoly::constant(target_rank, c.clone());
            for &(v, e) in m.factors() {
                let powers = cache
                    .entry(v)
                    .or_insert_with(|| vec![DiffPoly::one(target_rank), image(v)]);
                while powers.len() <= e as usize {
                    let next = &powers[powers.len() - 1] * &powers[1];
                    powers.push(next);
                }
                prod = &prod * &powers[e as usize];
            }
            out += &prod;
        }
        out
    }

    /// Human-readable jet name, e.g. `u'''`, `u2''` or `u1^(4)`.
    fn jet_name(rank: usize, v: JetVar) -> String {
        let base = if rank == 1 {
            "u".to_string()
        } else {
            format!("u{}", v.index())
        };
        match v.order() {
            0..=3 => format!("{base}{}", "'".repeat(v.order() as usize)),
            n => format!("{base}^({n})"),
        }
    }

    fn jet_latex(rank: usize, v: JetVar) -> String {
        let base = if rank == 1 {
            "u".to_string()
        } else {
            format!("u_{{{}}}", v.index())
        };
        match v.order() {
            0..=3 => format!("{base}{}", "'".repeat(v.order() as usize)),
            n => format!("{base}^{{({n})}}"),
        }
    }

    /// Terms in display order: descending weight, then descending monomial.
    fn display_terms(&self) -> Vec<(&Monomial, &Rational)> {
        let mut terms: Vec<_> = self.terms.iter().collect();
        terms.sort_by(|(a, _), (b, _)| b.weight().cmp(&a.weight()).then_with(|| b.cmp(a)));
        terms
    }

    /// LaTeX rendering, e.g. `\frac{1}{4} u''' - \frac{3}{2} u^{2} u'`.
    pub fn to_latex(&self) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut out = String::new();
        for (k, (m, c)) in self.display_terms().into_iter().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            if k == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let coeff = if mag.is_integer() {
                mag.numer().to_string()
            } else {
                format!("\\frac{{{}}}{{{}}}", mag.numer(), mag.denom())
            };
            if m.is_one() {
                out.push_str(&coeff);
                continue;
            }
            if !mag.is_one() {
                out.push_str(&coeff);
                out.push(' ');
            }
            let factors: Vec<String> = m
                .factors()
                .iter()
                .map(|&(v, e)| {
                    let name = Self::jet_latex(self.rank, v);
                    match (e, v.order()) {
                        (1, _) => name,
                        (_, 0) => format!("{name}^{{{e}}}"),
                        _ => format!("({name})^{{{e}}}"),
                    }
                })
                .collect();
            out.push_str(&factors.join(" "));
        }
        out
    }

    /// Canonical JSON value: `[{"coeff": "p/q", "monomial": [[i, n, e], ...]}, ...]`.
    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("diffpoly serializes")
    }

    pub fn from_json_value(rank: usize, value: &serde_json::Value) -> Result<Self, DiffPolyError> {
        let terms: Vec<TermJson> = serde_json::from_value(value.clone())
            .map_err(|e| DiffPolyError::Parse(e.to_string()))?;
        let mut out = DiffPoly::zero(rank);
        for t in terms {
            let coeff = parse_rational(&t.coeff)?;
            let mut factors = Vec::with_capacity(t.monomial.len());
            for [i, n, e] in t.monomial {
                let (i, n, e) = (i as usize, n as u32, e as u32);
                if i == 0 || i > rank {
                    return Err(DiffPolyError::IndexOutOfRange { index: i, rank });
                }
                factors.push((JetVar::new(i, n), e));
            }
            out.add_term(Monomial::from_factors(factors), coeff);
        }
        Ok(out)
    }

    /// Coefficients as `f64`, for numerical evaluation only.
    pub fn float_terms(&self) -> Vec<(f64, Vec<(JetVar, u32)>)> {
        self.terms
            .iter()
            .map(|(m, c)| (c.to_f64().unwrap_or(f64::NAN), m.factors().to_vec()))
            .collect()
    }
}

/// Formats a rational as `p/q` (denominator always present).
pub fn format_rational(c: &Rational) -> String {
    format!("{}/{}", c.numer(), c.denom())
}

/// Parses `p/q` or a bare integer.
pub fn parse_rational(s: &str) -> Result<Rational, DiffPolyError> {
    let bad = || DiffPolyError::Parse(format!("bad rational {s:?}"));
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s.trim(), "1"),
    };
    let n: BigInt = n.parse().map_err(|_| bad())?;
    let d: BigInt = d.parse().map_err(|_| bad())?;
    if d.is_zero() {
        return Err(bad());
    }
    Ok(Rational::new(n, d))
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    coeff: String,
    monomial: Vec<[u64; 3]>,
}

impl Serialize for DiffPoly {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.terms.len()))?;
        for (m, c) in &self.terms {
            seq.serialize_element(&TermJson {
                coeff: format_rational(c),
                monomial: m
                    .factors()
                    .iter()
                    .map(|&(v, e)| [v.index() as u64, v.order() as u64, e as u64])
                    .collect(),
            })?;
        }
        seq.end()
    }
}

impl fmt::Display for DiffPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.display_terms().into_iter().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            if k == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{}", if neg { " - " } else { " + " })?;
            }
            if m.is_one() {
                write!(f, "{mag}")?;
                continue;
            }
            if !mag.is_one() {
                write!(f, "{mag} ")?;
            }
            let factors: Vec<String> = m
                .factors()
                .iter()
                .map(|&(v, e)| {
                    let name = Self::jet_name(self.rank, v);
                    match (e, v.order()) {
                        (1, _) => name,
                        (_, 0..=3) => format!("{name}^{e}"),
                        _ => format!("({name})^{e}"),
                    }
                })
                .collect();
            write!(f, "{}", factors.join(" "))?;
        }
        Ok(())
    }
}

impl AddAssign<&DiffPoly> for DiffPoly {
    fn add_assign(&mut self, rhs: &DiffPoly) {
        assert_eq!(self.rank, rhs.rank, "rank mismatch in DiffPoly addition");
        for (m, c) in &rhs.terms {
            self.add_term(m.clone(), c.clone());
        }
    }
}

impl SubAssign<&DiffPoly> for DiffPoly {
    fn sub_assign(&mut self, rhs: &DiffPoly) {
        assert_eq!(self.rank, rhs.rank, "rank mismatch in DiffPoly subtraction");
        for (m, c) in &rhs.terms {
            self.add_term(m.clone(), -c.clone());
        }
    }
}

impl Add<&DiffPoly> for &DiffPoly {
    type Output = DiffPoly;
    fn add(self, rhs: &DiffPoly) -> DiffPoly {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub<&DiffPoly> for &DiffPoly {
    type Output = DiffPoly;
    fn sub(self, rhs: &DiffPoly) -> DiffPoly {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Mul<&DiffPoly> for &DiffPoly {
    type Output = DiffPoly;
    fn mul(self, rhs: &DiffPoly) -> DiffPoly {
        assert_eq!(self.rank, rhs.rank, "rank mismatch in DiffPoly product");
        self.checked_mul(rhs).expect("ranks checked")
    }
}

impl Add for DiffPoly {
    type Output = DiffPoly;
    fn add(mut self, rhs: DiffPoly) -> DiffPoly {
        self += &rhs;
        self
    }
}

impl Sub for DiffPoly {
    type Output = DiffPoly;
    fn sub(mut self, rhs: DiffPoly) -> DiffPoly {
        self -= &rhs;
        self
    }
}

impl Mul for DiffPoly {
    type Output = DiffPoly;
    fn mul(self, rhs: DiffPoly) -> DiffPoly {
        &self * &rhs
    }
}

impl Neg for DiffPoly {
    type Output = DiffPoly;
    fn neg(mut self) -> DiffPoly {
        for c in self.terms.values_mut() {
            *c = -c.clone();
        }
        self
    }
}

impl Neg for &DiffPoly {
    type Output = DiffPoly;
    fn neg(self) -> DiffPoly {
        -self.clone()
    }
}
