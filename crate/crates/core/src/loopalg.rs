//! The centerless loop algebra of `sl_{r+1}` over the jet ring.
//!
//! Elements are stored by principal degree. The degree-`j` slice of
//! `gl_{r+1}[λ, λ⁻¹]` is `{ diag(d) Λ^j }` with `Λ = Σ_a E_{a,a+1} + λ E_{r+1,1}`,
//! so a homogeneous component is just the vector `d` of its `r + 1` row
//! coefficients. Two facts make everything below short:
//!
//! * `Λ^j diag(e) = diag(S^j e) Λ^j` with `(S^j e)_a = e_{a+j mod h}`;
//! * `tr Λ^m` has a nonzero constant term only for `m = 0`.
//!
//! When `h | j` the slice is `diag(d) λ^{j/h}` and must be traceless; otherwise
//! the trace vanishes automatically and the principal abelian subalgebra
//! contributes `p_j = Λ^j`, i.e. `d = (1, …, 1)`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_traits::Zero;
use serde_json::json;
use thiserror::Error;

use crate::diffpoly::{int, DiffPoly, DiffPolyError, Rational};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LoopError {
    #[error("rank must be at least 1")]
    InvalidRank,
    #[error("{n} is divisible by the Coxeter number {coxeter}; p_{n} is not a generator")]
    ExcludedExponent { n: i64, coxeter: usize },
    #[error("algebra context mismatch")]
    ContextMismatch,
    #[error("expected {expected} coefficients, got {got}")]
    WrongLength { expected: usize, got: usize },
    #[error("component of degree {degree} is not traceless")]
    NotTraceless { degree: i32 },
    #[error("element is not homogeneous")]
    NotHomogeneous,
    #[error("degree-{degree} component has a nonzero a-part; not in the image of ad p_-1")]
    Unsolvable { degree: i32 },
    #[error("element does not lie in the Cartan subalgebra")]
    NotCartan,
    #[error("matrix index ({row}, {col}) outside {size}x{size}")]
    BadEntry { row: usize, col: usize, size: usize },
    #[error(transparent)]
    Poly(#[from] DiffPolyError),
}

/// The affine algebra `A_r^(1)`: rank `r`, Coxeter number `h = r + 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct AlgebraCtx {
    rank: usize,
}

impl AlgebraCtx {
    pub fn new(rank: usize) -> Result<Self, LoopError> {
        if rank == 0 {
            return Err(LoopError::InvalidRank);
        }
        Ok(AlgebraCtx { rank })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn coxeter(&self) -> usize {
        self.rank + 1
    }

    /// Matrix size `r + 1`.
    pub fn size(&self) -> usize {
        self.rank + 1
    }

    /// `n ∈ I ∪ −I`, i.e. `p_n` exists.
    pub fn has_generator(&self, n: i64) -> bool {
        n % self.coxeter() as i64 != 0
    }

    /// `n ∈ I`: a positive integer not divisible by `h`.
    pub fn is_exponent(&self, n: i64) -> bool {
        n > 0 && self.has_generator(n)
    }

    /// The exponents `I`, ascending and unbounded.
    pub fn exponents(&self) -> impl Iterator<Item = u32> {
        let h = self.coxeter() as u32;
        (1u32..).filter(move |n| n % h != 0)
    }

    /// Display name, e.g. `A_1^1`.
    pub fn name(&self) -> String {
        format!("A_{}^1", self.rank)
    }

    pub(crate) fn zero_vec(&self) -> Vec<DiffPoly> {
        vec![DiffPoly::zero(self.rank); self.size()]
    }

    fn shift(&self, a: usize, j: i32) -> usize {
        (a as i64 + j as i64).rem_euclid(self.size() as i64) as usize
    }
}

fn min_opt(a: Option<i32>, b: Option<i32>) -> Option<i32> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

/// An element of the loop algebra, possibly known only up to a degree bound.
///
/// `trunc = Some(D)` means components of degree `> D` are unknown and have
/// been discarded; `None` means the element is exactly the finite sum stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoopElement {
    ctx: AlgebraCtx,
    comps: BTreeMap<i32, Vec<DiffPoly>>,
    trunc: Option<i32>,
}

impl LoopElement {
    pub fn zero(ctx: AlgebraCtx) -> Self {
        LoopElement {
            ctx,
            comps: BTreeMap::new(),
            trunc: None,
        }
    }

    /// `diag(coeffs) Λ^degree`.
    pub fn homogeneous(
        ctx: AlgebraCtx,
        degree: i32,
        coeffs: Vec<DiffPoly>,
    ) -> Result<Self, LoopError> {
        if coeffs.len() != ctx.size() {
            return Err(LoopError::WrongLength {
                expected: ctx.size(),
                got: coeffs.len(),
            });
        }
        for c in &coeffs {
            if c.rank() != ctx.rank() {
                return Err(DiffPolyError::RankMismatch {
                    left: ctx.rank(),
                    right: c.rank(),
                }
                .into());
            }
        }
        if degree % ctx.coxeter() as i32 == 0 {
            let mut tr = DiffPoly::zero(ctx.rank());
            for c in &coeffs {
                tr += c;
            }
            if !tr.is_zero() {
                return Err(LoopError::NotTraceless { degree });
            }
        }
        let mut out = LoopElement::zero(ctx);
        out.insert(degree, coeffs);
        Ok(out)
    }

    /// Builds an element from matrix entries `(row, col, λ-power, coefficient)`,
    /// rows and columns 0-based.
    pub fn from_entries(
        ctx: AlgebraCtx,
        entries: impl IntoIterator<Item = (usize, usize, i32, DiffPoly)>,
    ) -> Result<Self, LoopError> {
        let h = ctx.size();
        let mut comps: BTreeMap<i32, Vec<DiffPoly>> = BTreeMap::new();
        for (row, col, k, c) in entries {
            if row >= h || col >= h {
                return Err(LoopError::BadEntry { row, col, size: h });
            }
            let degree = (col as i32 - row as i32) + k * h as i32;
            comps.entry(degree).or_insert_with(|| ctx.zero_vec())[row] += &c;
        }
        let mut out = LoopElement::zero(ctx);
        for (degree, coeffs) in comps {
            out = &out + &LoopElement::homogeneous(ctx, degree, coeffs)?;
        }
        Ok(out)
    }

    /// Nonzero matrix entries `(row, col, λ-power, coefficient)`, 0-based, sorted.
    pub fn entries(&self) -> Vec<(usize, usize, i32, DiffPoly)> {
        let h = self.ctx.size() as i32;
        let mut out = Vec::new();
        for (&j, d) in &self.comps {
            let q = j.div_euclid(h);
            let s = j.rem_euclid(h);
            for (a, c) in d.iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                let wraps = a as i32 + s >= h;
                let col = (a as i32 + s).rem_euclid(h) as usize;
                out.push((a, col, q + wraps as i32, c.clone()));
            }
        }
        out.sort_by_key(|x| (x.0, x.1, x.2));
        out
    }

    fn insert(&mut self, degree: i32, coeffs: Vec<DiffPoly>) {
        if coeffs.iter().all(DiffPoly::is_zero) {
            self.comps.remove(&degree);
        } else {
            self.comps.insert(degree, coeffs);
        }
    }

    fn accumulate(&mut self, degree: i32, coeffs: &[DiffPoly]) {
        let slot = self
            .comps
            .entry(degree)
            .or_insert_with(|| self.ctx.zero_vec());
        for (s, c) in slot.iter_mut().zip(coeffs) {
            *s += c;
        }
        if slot.iter().all(DiffPoly::is_zero) {
            self.comps.remove(&degree);
        }
    }

    pub fn ctx(&self) -> AlgebraCtx {
        self.ctx
    }

    pub fn trunc(&self) -> Option<i32> {
        self.trunc
    }

    pub fn is_zero(&self) -> bool {
        self.comps.is_empty()
    }

    pub fn component(&self, degree: i32) -> Option<&[DiffPoly]> {
        self.comps.get(&degree).map(Vec::as_slice)
    }

    /// Component of the given degree, zero-filled when absent.
    pub fn component_or_zero(&self, degree: i32) -> Vec<DiffPoly> {
        self.comps
            .get(&degree)
            .cloned()
            .unwrap_or_else(|| self.ctx.zero_vec())
    }

    pub fn components(&self) -> impl Iterator<Item = (i32, &[DiffPoly])> {
        self.comps.iter().map(|(&j, d)| (j, d.as_slice()))
    }

    pub fn degrees(&self) -> Vec<i32> {
        self.comps.keys().copied().collect()
    }

    pub fn min_degree(&self) -> Option<i32> {
        self.comps.keys().next().copied()
    }

    pub fn max_degree(&self) -> Option<i32> {
        self.comps.keys().next_back().copied()
    }

    /// The homogeneous component of the given degree as an exact element.
    pub fn homogeneous_part(&self, degree: i32) -> LoopElement {
        let mut out = LoopElement::zero(self.ctx);
        if let Some(d) = self.comps.get(&degree) {
            out.comps.insert(degree, d.clone());
        }
        out
    }

    /// Degree of a nonzero homogeneous element.
    pub fn homogeneous_degree(&self) -> Option<i32> {
        if self.comps.len() == 1 {
            self.min_degree()
        } else {
            None
        }
    }

    /// Lowest degree that can be nonzero (`None` = no constraint, i.e. +∞).
    fn lowest_possible(&self) -> Option<i32> {
        self.min_degree()
            .or_else(|| self.trunc.map(|t| t.saturating_add(1)))
    }

    /// Declares that only degrees `<= degree` are trusted, discarding the rest.
    pub fn truncate(&self, degree: i32) -> LoopElement {
        let mut out = self.clone();
        out.comps.retain(|&j, _| j <= degree);
        out.trunc = min_opt(self.trunc, Some(degree));
        out
    }

    /// Forgets the truncation bound, treating the stored sum as exact.
    pub fn into_exact(mut self) -> LoopElement {
        self.trunc = None;
        self
    }

    pub fn map_entries(&self, mut f: impl FnMut(&DiffPoly) -> DiffPoly) -> LoopElement {
        let mut out = LoopElement {
            ctx: self.ctx,
            comps: BTreeMap::new(),
            trunc: self.trunc,
        };
        for (&j, d) in &self.comps {
            out.insert(j, d.iter().map(&mut f).collect());
        }
        out
    }

    pub fn scale(&self, c: &DiffPoly) -> LoopElement {
        self.map_entries(|e| e * c)
    }

    pub fn scale_rational(&self, c: &Rational) -> LoopElement {
        self.map_entries(|e| e.scale(c))
    }

    /// Entry-wise total derivative `∂_z`.
    pub fn total_derivative(&self) -> LoopElement {
        self.map_entries(DiffPoly::total_derivative)
    }

    /// The grading derivation `x ↦ Σ_j j·x_j`, i.e. `ad ρ∨` on the centerless algebra.
    pub fn grading_derivation(&self) -> LoopElement {
        let mut out = self.clone();
        for (&j, d) in out.comps.iter_mut() {
            for c in d.iter_mut() {
                *c = c.scale(&int(j as i64));
            }
        }
        out.comps.retain(|_, d| d.iter().any(|c| !c.is_zero()));
        out
    }

    /// Borel splitting `x = x₊ + x₋` with `x₊ ∈ n₊` (positive degree) and
    /// `x₋ ∈ b₋` (degree `<= 0`).
    pub fn split(&self) -> (LoopElement, LoopElement) {
        let mut plus = LoopElement {
            ctx: self.ctx,
            comps: BTreeMap::new(),
            trunc: self.trunc,
        };
        let minus_trunc = match self.trunc {
            Some(t) if t < 0 => Some(t),
            _ => None,
        };
        let mut minus = LoopElement {
            ctx: self.ctx,
            comps: BTreeMap::new(),
            trunc: minus_trunc,
        };
        for (&j, d) in &self.comps {
            if j > 0 {
                plus.comps.insert(j, d.clone());
            } else {
                minus.comps.insert(j, d.clone());
            }
        }
        (plus, minus)
    }

    pub fn checked_bracket(&self, other: &LoopElement) -> Result<LoopElement, LoopError> {
        if self.ctx != other.ctx {
            return Err(LoopError::ContextMismatch);
        }
        let trunc = min_opt(
            self.trunc
                .zip(other.lowest_possible())
                .map(|(t, lo)| t.saturating_add(lo)),
            other
                .trunc
                .zip(self.lowest_possible())
                .map(|(t, lo)| t.saturating_add(lo)),
        );
        let h = self.ctx.size();
        let mut out = LoopElement {
            ctx: self.ctx,
            comps: BTreeMap::new(),
            trunc,
        };
        let mut buf = self.ctx.zero_vec();
        for (&j, x) in &self.comps {
            for (&k, y) in &other.comps {
                let degree = j + k;
                if trunc.is_some_and(|t| degree > t) {
                    continue;
                }
                for a in 0..h {
                    let mut v = &x[a] * &y[self.ctx.shift(a, j)];
                    v -= &(&y[a] * &x[self.ctx.shift(a, k)]);
                    buf[a] = v;
                }
                out.accumulate(degree, &buf);
            }
        }
        Ok(out)
    }

    /// Matrix commutator `[x, y] = xy − yx`. Panics on a context mismatch.
    pub fn bracket(&self, other: &LoopElement) -> LoopElement {
        self.checked_bracket(other).expect("same algebra context")
    }

    /// Invariant form: constant λ-term of `tr(xy)`.
    pub fn pairing(&self, other: &LoopElement) -> DiffPoly {
        assert_eq!(self.ctx, other.ctx, "pairing across algebra contexts");
        let mut out = DiffPoly::zero(self.ctx.rank());
        for (&j, x) in &self.comps {
            if let Some(y) = other.comps.get(&-j) {
                for (a, xa) in x.iter().enumerate() {
                    out += &(xa * &y[self.ctx.shift(a, j)]);
                }
            }
        }
        out
    }

    /// Equality of all components of degree `<= degree`.
    pub fn eq_mod(&self, other: &LoopElement, degree: i32) -> bool {
        (self - other).is_zero_mod(degree)
    }

    pub fn is_zero_mod(&self, degree: i32) -> bool {
        self.comps.keys().all(|&j| j > degree)
    }

    /// True when every entry of the degree-`j` component is homogeneous of weight `base + j`.
    pub fn is_weight_graded(&self, base: i64) -> bool {
        self.comps.iter().all(|(&j, d)| {
            let w = base + j as i64;
            d.iter().all(|c| c.is_zero() || (w >= 0 && c.is_homogeneous_of(w as u32)))
        })
    }

    /// Splits every component into its `a`-coordinate and `Im(ad p₋₁)` remainder.
    pub fn kac_split(&self) -> (BTreeMap<i32, DiffPoly>, LoopElement) {
        let mut coeffs = BTreeMap::new();
        let mut rest = self.clone();
        for (&j, d) in &self.comps {
            let a = a_coefficient(self.ctx, j, d);
            if a.is_zero() {
                continue;
            }
            let minus: Vec<DiffPoly> = d.iter().map(|c| c - &a).collect();
            rest.insert(j, minus);
            coeffs.insert(j, a);
        }
        (coeffs, rest)
    }

    /// JSON export: `{trunc, entries: [[row, col, [[k, DiffPoly], ...]], ...]}`, 1-based indices.
    pub fn to_json_value(&self) -> serde_json::Value {
        let mut grouped: BTreeMap<(usize, usize), Vec<serde_json::Value>> = BTreeMap::new();
        for (row, col, k, c) in self.entries() {
            grouped
                .entry((row + 1, col + 1))
                .or_default()
                .push(json!([k, c.to_json_value()]));
        }
        let entries: Vec<_> = grouped
            .into_iter()
            .map(|((row, col), series)| json!([row, col, series]))
            .collect();
        json!({ "trunc": self.trunc, "entries": entries })
    }

    /// LaTeX `pmatrix` whose entries are Laurent polynomials in `λ`.
    pub fn to_latex(&self) -> String {
        let h = self.ctx.size();
        let mut cells: Vec<Vec<Vec<(i32, DiffPoly)>>> = vec![vec![Vec::new(); h]; h];
        for (row, col, k, c) in self.entries() {
            cells[row][col].push((k, c));
        }
        let render = |series: &Vec<(i32, DiffPoly)>| -> String {
            if series.is_empty() {
                return "0".into();
            }
            series
                .iter()
                .map(|(k, c)| {
                    let lam = match k {
                        0 => String::new(),
                        1 => "\\lambda".into(),
                        k => format!("\\lambda^{{{k}}}"),
                    };
                    let body = c.to_latex();
                    match (lam.is_empty(), c.len() > 1, c.as_constant()) {
                        (true, _, _) => body,
                        (false, _, Some(v)) if v == int(1) => lam,
                        (false, true, _) => format!("({body}) {lam}"),
                        (false, false, _) => format!("{body} {lam}"),
                    }
                })
                .collect::<Vec<_>>()
                .join(" + ")
        };
        let rows: Vec<String> = cells
            .iter()
            .map(|r| r.iter().map(render).collect::<Vec<_>>().join(" & "))
            .collect();
        format!("\\begin{{pmatrix}} {} \\end{{pmatrix}}", rows.join(" \\\\ "))
    }
}

/// Coordinate along `p_degree` of a degree-`degree` component, computed as
/// `(x, p_{-j}) / (p_j, p_{-j})`. Zero when `a` has no component of that degree.
fn a_coefficient(ctx: AlgebraCtx, degree: i32, d: &[DiffPoly]) -> DiffPoly {
    if !ctx.has_generator(degree as i64) {
        return DiffPoly::zero(ctx.rank());
    }
    // (diag(d) Λ^j, Λ^{-j}) = Σ_a d_a and (p_j, p_{-j}) = h.
    let mut sum = DiffPoly::zero(ctx.rank());
    for c in d {
        sum += c;
    }
    sum.scale(&Rational::new(1.into(), (ctx.size() as i64).into()))
}

/// `p_n = Λ^n` for `n ∈ I ∪ −I`.
pub fn generator_p(ctx: AlgebraCtx, n: i64) -> Result<LoopElement, LoopError> {
    if !ctx.has_generator(n) {
        return Err(LoopError::ExcludedExponent {
            n,
            coxeter: ctx.coxeter(),
        });
    }
    LoopElement::homogeneous(ctx, n as i32, vec![DiffPoly::one(ctx.rank()); ctx.size()])
}

/// Chevalley generator `e_i`: `E_{i,i+1}` for `1 <= i <= r`, `λ E_{r+1,1}` for `i = 0`.
pub fn chevalley_e(ctx: AlgebraCtx, i: usize) -> Result<LoopElement, LoopError> {
    if i > ctx.rank() {
        return Err(LoopError::BadEntry {
            row: i,
            col: i + 1,
            size: ctx.size(),
        });
    }
    let row = if i == 0 { ctx.size() - 1 } else { i - 1 };
    let mut d = ctx.zero_vec();
    d[row] = DiffPoly::one(ctx.rank());
    LoopElement::homogeneous(ctx, 1, d)
}

/// Decomposes a homogeneous `x` of degree `j` as `a_coeff·p_j + im_part` with
/// `im_part ∈ Im(ad p₋₁)`. Degrees without an `a`-component give `a_coeff = 0`.
pub fn kac_project(x: &LoopElement) -> Result<(DiffPoly, LoopElement), LoopError> {
    let ctx = x.ctx();
    if x.is_zero() {
        return Ok((DiffPoly::zero(ctx.rank()), x.clone()));
    }
    let degree = x.homogeneous_degree().ok_or(LoopError::NotHomogeneous)?;
    let (mut coeffs, rest) = x.kac_split();
    let a = coeffs
        .remove(&degree)
        .unwrap_or_else(|| DiffPoly::zero(ctx.rank()));
    Ok((a, rest))
}

/// Solves `[p₋₁, x] = y` component-wise, choosing `x` with zero `a`-part.
///
/// With `x_{j+1} = diag(e) Λ^{j+1}` the equation reads `e_{a−1} − e_a = y_a`
/// (indices mod `h`), solvable iff `Σ_a y_a = 0`; the free constant shift of `e`
/// is fixed by `Σ_a e_a = 0`.
pub fn invert_ad_pminus1(y: &LoopElement) -> Result<LoopElement, LoopError> {
    let ctx = y.ctx();
    let h = ctx.size();
    let rank = ctx.rank();
    let mut out = LoopElement {
        ctx,
        comps: BTreeMap::new(),
        trunc: y.trunc.map(|t| t + 1),
    };
    for (&j, d) in &y.comps {
        let mut total = DiffPoly::zero(rank);
        for c in d {
            total += c;
        }
        if !total.is_zero() {
            return Err(LoopError::Unsolvable { degree: j });
        }
        // e_a = e_0 − Σ_{b=1}^{a} y_b, then shift so that Σ e = 0.
        let mut e = Vec::with_capacity(h);
        e.push(DiffPoly::zero(rank));
        for a in 1..h {
            let next = &e[a - 1] - &d[a];
            e.push(next);
        }
        let mut sum = DiffPoly::zero(rank);
        for c in &e {
            sum += c;
        }
        let shift = sum.scale(&Rational::new(1.into(), (h as i64).into()));
        let e: Vec<DiffPoly> = e.iter().map(|c| c - &shift).collect();
        out.insert(j + 1, e);
    }
    Ok(out)
}

/// An element `u` of the Cartan subalgebra with coordinates `u_i = (α_i, u)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CartanElement {
    coords: Vec<DiffPoly>,
    element: LoopElement,
}

impl CartanElement {
    pub fn coordinates(&self) -> &[DiffPoly] {
        &self.coords
    }

    pub fn as_loop(&self) -> &LoopElement {
        &self.element
    }

    /// Diagonal entries `d_1, …, d_{r+1}`.
    pub fn diagonal(&self) -> Vec<DiffPoly> {
        self.element.component_or_zero(0)
    }

    /// Recovers the coordinates `u_a = d_a − d_{a+1}` of a λ-free traceless diagonal element.
    pub fn from_loop(x: &LoopElement) -> Result<Self, LoopError> {
        if x.comps.keys().any(|&j| j != 0) {
            return Err(LoopError::NotCartan);
        }
        let d = x.component_or_zero(0);
        let coords = d.windows(2).map(|w| &w[0] - &w[1]).collect();
        Ok(CartanElement {
            coords,
            element: x.clone().into_exact(),
        })
    }
}

/// The traceless diagonal matrix with `d_a − d_{a+1} = u_a`.
pub fn cartan_embed(ctx: AlgebraCtx, coords: &[DiffPoly]) -> Result<CartanElement, LoopError> {
    let r = ctx.rank();
    if coords.len() != r {
        return Err(LoopError::WrongLength {
            expected: r,
            got: coords.len(),
        });
    }
    let h = ctx.size() as i64;
    // d_1 = (1/h) Σ_b (h − b) u_b, then d_{a+1} = d_a − u_a.
    let mut first = DiffPoly::zero(r);
    for (b, u) in coords.iter().enumerate() {
        first += &u.scale(&Rational::new((h - 1 - b as i64).into(), h.into()));
    }
    let mut d = vec![first];
    for u in coords {
        let next = &d[d.len() - 1] - u;
        d.push(next);
    }
    Ok(CartanElement {
        coords: coords.to_vec(),
        element: LoopElement::homogeneous(ctx, 0, d)?,
    })
}

/// The generic Cartan element built from the jet variables `u_1, …, u_r`.
pub fn jet_cartan(ctx: AlgebraCtx) -> CartanElement {
    let coords: Vec<DiffPoly> = (1..=ctx.rank())
        .map(|i| DiffPoly::jet(ctx.rank(), i, 0))
        .collect();
    cartan_embed(ctx, &coords).expect("rank-many coordinates")
}

impl fmt::Display for LoopElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            write!(f, "0")?;
        }
        for (k, (&j, d)) in self.comps.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            let parts: Vec<String> = d.iter().map(|c| c.to_string()).collect();
            write!(f, "diag({})Λ^{j}", parts.join(", "))?;
        }
        if let Some(t) = self.trunc {
            write!(f, " (mod deg > {t})")?;
        }
        Ok(())
    }
}

impl Add<&LoopElement> for &LoopElement {
    type Output = LoopElement;
    fn add(self, rhs: &LoopElement) -> LoopElement {
        assert_eq!(self.ctx, rhs.ctx, "adding across algebra contexts");
        let trunc = min_opt(self.trunc, rhs.trunc);
        let mut out = self.clone();
        out.trunc = trunc;
        for (&j, d) in &rhs.comps {
            out.accumulate(j, d);
        }
        if let Some(t) = trunc {
            out.comps.retain(|&j, _| j <= t);
        }
        out
    }
}

impl Neg for &LoopElement {
    type Output = LoopElement;
    fn neg(self) -> LoopElement {
        self.map_entries(|c| -c)
    }
}

impl Sub<&LoopElement> for &LoopElement {
    type Output = LoopElement;
    fn sub(self, rhs: &LoopElement) -> LoopElement {
        self + &(-rhs)
    }
}

impl Zero for LoopElement {
    fn zero() -> Self {
        LoopElement::zero(AlgebraCtx { rank: 1 })
    }
    fn is_zero(&self) -> bool {
        self.comps.is_empty()
    }
}

impl Add for LoopElement {
    type Output = LoopElement;
    fn add(self, rhs: LoopElement) -> LoopElement {
        &self + &rhs
    }
}
