//! Conserved densities, the cocycles `φ_n(e_i)`, and for `A_1^(1)` the screening
//! vector fields and the Miura map to KdV.
//!
//! For rank one, polynomials in the KdV variable `v` reuse [`DiffPoly`] of rank 1;
//! the jet `u^(k)` of such a polynomial stands for `v^(k)`, whose weight is
//! `k + 2` rather than `k + 1`.

use std::collections::BTreeMap;

use num_traits::Zero;
use serde::Serialize;
use thiserror::Error;

use crate::diffpoly::{format_rational, int, rat, DiffPoly, DiffPolyError, JetVar, Monomial, Rational};
use crate::hierarchy::{Hierarchy, HierarchyError};
use crate::linalg::LinearSystem;
use crate::loopalg::{chevalley_e, generator_p, AlgebraCtx, LoopError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConservedError {
    #[error("this operation is only defined for rank 1, got rank {0}")]
    RankOneOnly(usize),
    #[error("generator index {i} out of range for rank {rank}")]
    BadGenerator { i: usize, rank: usize },
    #[error("polynomial is not in the image of the Miura map")]
    NotInImage,
    #[error("{0} is even; only odd flows exist for rank 1")]
    EvenFlow(u32),
    #[error(transparent)]
    Hierarchy(#[from] HierarchyError),
    #[error(transparent)]
    Poly(#[from] DiffPolyError),
    #[error(transparent)]
    Loop(#[from] LoopError),
}

/// A density `H_n` (`m = None`) or `H_{n,m}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Density {
    pub n: u32,
    pub m: Option<u32>,
    pub value: DiffPoly,
    pub weight: u32,
}

impl Density {
    pub fn label(&self) -> String {
        match self.m {
            None => format!("H_{}", self.n),
            Some(m) => format!("H_{{{},{}}}", self.n, m),
        }
    }
}

/// `H_n = (p₋₁, V⁽ⁿ⁾)`, homogeneous of weight `n + 1`.
pub fn hamiltonian_density(hier: &Hierarchy, n: u32, degree: i32) -> Result<Density, ConservedError> {
    let flow = hier.flow(n, degree)?;
    let pm1 = generator_p(hier.ctx(), -1)?;
    Ok(Density {
        n,
        m: None,
        value: pm1.pairing(&flow.v),
        weight: n + 1,
    })
}

/// `H_{n,m} = −(ρ∨·V⁽ⁿ⁾₋, V⁽ᵐ⁾)` with `ρ∨` acting as the grading derivation.
pub fn second_density(hier: &Hierarchy, n: u32, m: u32, degree: i32) -> Result<Density, ConservedError> {
    let fn_ = hier.flow(n, degree)?;
    let vm = hier.v(m, degree.max(n as i32 + 1))?;
    let graded = fn_.vminus.grading_derivation();
    Ok(Density {
        n,
        m: Some(m),
        value: -graded.pairing(&vm),
        weight: n + m,
    })
}

/// Residuals `(∂_n H_m − ∂_m H_n, ∂_n H_m − ∂_z H_{n,m})`, both identically zero.
pub fn involutivity_check(
    hier: &Hierarchy,
    n: u32,
    m: u32,
    degree: i32,
) -> Result<(DiffPoly, DiffPoly), ConservedError> {
    let fn_ = hier.flow(n, degree)?;
    let fm = hier.flow(m, degree)?;
    let hm = hamiltonian_density(hier, m, degree)?.value;
    let hn = hamiltonian_density(hier, n, degree)?.value;
    let hnm = second_density(hier, n, m, degree)?.value;
    let dn_hm = fn_.prolong(&hm);
    let first = &dn_hm - &fm.prolong(&hn);
    let second = &dn_hm - &hnm.total_derivative();
    Ok((first, second))
}

/// `q_k` with `∂_k u = ∂_z q_k` (rank 1).
pub fn flux(hier: &Hierarchy, k: u32, degree: i32) -> Result<DiffPoly, ConservedError> {
    rank_one(hier.ctx())?;
    Ok(hier.flow(k, degree)?.rhs[0].antiderivative()?)
}

/// Rank-one coordinate form `Σ_n (∂^{n+1} q_k) ∂H_{m,1}/∂u^(n) − ∂_z H_{k,m}`.
pub fn coordinate_identity(
    hier: &Hierarchy,
    k: u32,
    m: u32,
    degree: i32,
) -> Result<DiffPoly, ConservedError> {
    rank_one(hier.ctx())?;
    let q = flux(hier, k, degree)?;
    let hm1 = second_density(hier, m, 1, degree)?.value;
    let mut lhs = DiffPoly::zero(1);
    for v in hm1.variables() {
        lhs += &(&q.total_derivative_n(v.order() + 1) * &hm1.partial(v));
    }
    let hkm = second_density(hier, k, m, degree)?.value;
    Ok(&lhs - &hkm.total_derivative())
}

/// Outcome of comparing `m·q_m` with `δH_{m,1}/δu`.
#[derive(Clone, Debug, PartialEq)]
pub struct VariationalReport {
    pub m: u32,
    /// `c` with `m·q_m = c·δH_{m,1}/δu`, when one exists.
    pub constant: Option<Rational>,
    /// `m·q_m − c·δH_{m,1}/δu` (with `c = 0` when no constant could be read off).
    pub residual: DiffPoly,
}

/// Checks `m·q_m ∝ δH_{m,1}/δu` for rank 1 and reports the constant.
pub fn variational_check(hier: &Hierarchy, m: u32, degree: i32) -> Result<VariationalReport, ConservedError> {
    rank_one(hier.ctx())?;
    if m.is_multiple_of(2) {
        return Err(ConservedError::EvenFlow(m));
    }
    let lhs = flux(hier, m, degree)?.scale(&int(m as i64));
    let delta = second_density(hier, m, 1, degree)?.value.variational_derivative(1);
    let constant = proportionality(&lhs, &delta);
    let residual = match &constant {
        Some(c) => &lhs - &delta.scale(c),
        None => lhs.clone(),
    };
    Ok(VariationalReport { m, constant, residual })
}

/// `c` with `a = c·b`, read off the leading term of `b`; `None` if `b` vanishes
/// but `a` does not. The caller still checks the full residual.
fn proportionality(a: &DiffPoly, b: &DiffPoly) -> Option<Rational> {
    match b.terms().next() {
        Some((mono, coeff)) => Some(a.coefficient(mono) / coeff),
        None if a.is_zero() => Some(Rational::zero()),
        None => None,
    }
}

fn rank_one(ctx: AlgebraCtx) -> Result<(), ConservedError> {
    if ctx.rank() == 1 {
        Ok(())
    } else {
        Err(ConservedError::RankOneOnly(ctx.rank()))
    }
}

/// `P^±_n`: `P_0 = 1`, `P_{n+1} = ∂P_n ± u P_n`.
pub fn pschur(plus: bool, n: u32) -> DiffPoly {
    let u = DiffPoly::jet(1, 1, 0);
    let u = if plus { u } else { -u };
    let mut p = DiffPoly::one(1);
    for _ in 0..n {
        p = &p.total_derivative() + &(&u * &p);
    }
    p
}

/// Vector field of `e_0` (`i = 0`) or `e_1` (`i = 1`) on rank-one jets:
/// `e_0 = −Σ P⁺_n ∂/∂u^(n)`, `e_1 = −Σ P⁻_n ∂/∂u^(n)`.
pub fn screening_action(i: usize, p: &DiffPoly) -> Result<DiffPoly, ConservedError> {
    if p.rank() != 1 {
        return Err(ConservedError::RankOneOnly(p.rank()));
    }
    let plus = match i {
        0 => true,
        1 => false,
        _ => return Err(ConservedError::BadGenerator { i, rank: 1 }),
    };
    let mut out = DiffPoly::zero(1);
    for v in p.variables() {
        out -= &(&pschur(plus, v.order()) * &p.partial(v));
    }
    Ok(out)
}

/// `φ_n(e_i) = (e_i, V⁽ⁿ⁾)`, homogeneous of weight `n − 1`.
pub fn cocycle_value(hier: &Hierarchy, n: u32, i: usize, degree: i32) -> Result<DiffPoly, ConservedError> {
    let ctx = hier.ctx();
    if i > ctx.rank() {
        return Err(ConservedError::BadGenerator { i, rank: ctx.rank() });
    }
    let e = chevalley_e(ctx, i)?;
    Ok(e.pairing(&*hier.v(n, degree)?))
}

/// `u_i = (α_i, u)`: `u_1 = u`, `u_0 = −u` for rank 1.
fn simple_root_coordinate(i: usize) -> DiffPoly {
    let u = DiffPoly::jet(1, 1, 0);
    if i == 0 {
        -u
    } else {
        u
    }
}

/// Scale factors `κ_i` relating the matrix generators to the screening fields:
/// the left action of `e_i` on the jet ring is `κ_i` times [`screening_action`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScreeningCalibration {
    #[serde(serialize_with = "ser_rationals")]
    pub kappa: [Rational; 2],
}

fn ser_rationals<S: serde::Serializer>(v: &[Rational; 2], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(format_rational))
}

/// Reads `κ_i` off the `n = 1` instance of `e_i·H_n = ∂_z φ_n(e_i) − u_i φ_n(e_i)`.
pub fn calibrate_screening(hier: &Hierarchy) -> Result<ScreeningCalibration, ConservedError> {
    rank_one(hier.ctx())?;
    let h1 = hamiltonian_density(hier, 1, 3)?.value;
    let mut kappa = [Rational::zero(), Rational::zero()];
    for (i, k) in kappa.iter_mut().enumerate() {
        let phi = cocycle_value(hier, 1, i, 3)?;
        let target = &phi.total_derivative() - &(&simple_root_coordinate(i) * &phi);
        let field = screening_action(i, &h1)?;
        *k = proportionality(&target, &field).unwrap_or_else(Rational::zero);
    }
    Ok(ScreeningCalibration { kappa })
}

/// `κ_i·e_i(H_n) − ∂_z φ_n(e_i) + u_i φ_n(e_i)`; zero for rank 1.
pub fn coboundary_check(
    hier: &Hierarchy,
    calibration: &ScreeningCalibration,
    n: u32,
    i: usize,
    degree: i32,
) -> Result<DiffPoly, ConservedError> {
    rank_one(hier.ctx())?;
    let hn = hamiltonian_density(hier, n, degree)?.value;
    let phi = cocycle_value(hier, n, i, degree)?;
    let lhs = screening_action(i, &hn)?.scale(&calibration.kappa.get(i).cloned().ok_or(
        ConservedError::BadGenerator { i, rank: 1 },
    )?);
    Ok(&(&lhs - &phi.total_derivative()) + &(&simple_root_coordinate(i) * &phi))
}

/// `v = u²/2 + u'`.
pub fn miura_v() -> DiffPoly {
    let u = DiffPoly::jet(1, 1, 0);
    &u.pow(2).scale(&rat(1, 2)) + &u.total_derivative()
}

/// Substitutes `v^(k) ↦ ∂_z^k(u²/2 + u')`.
pub fn miura(p_in_v: &DiffPoly) -> Result<DiffPoly, ConservedError> {
    if p_in_v.rank() != 1 {
        return Err(ConservedError::RankOneOnly(p_in_v.rank()));
    }
    let v = miura_v();
    Ok(p_in_v.substitute(1, |x| v.total_derivative_n(x.order())))
}

/// Weight of a monomial in `v`-jets, `v^(k)` counting `k + 2`.
pub fn v_weight(m: &Monomial) -> u32 {
    m.factors().iter().map(|&(x, e)| e * (x.order() + 2)).sum()
}

/// All monomials in `v`-jets of `v`-weight exactly `w`.
pub fn v_monomials(w: u32) -> Vec<Monomial> {
    fn go(rest: u32, max_order: u32, acc: &mut Vec<(JetVar, u32)>, out: &mut Vec<Monomial>) {
        if rest == 0 {
            out.push(Monomial::from_factors(acc.iter().copied()));
            return;
        }
        for order in (0..=max_order.min(rest.saturating_sub(2))).rev() {
            let part = order + 2;
            if part > rest {
                continue;
            }
            acc.push((JetVar::new(1, order), 1));
            go(rest - part, order, acc, out);
            acc.pop();
        }
    }
    let mut out = Vec::new();
    if w == 0 {
        return vec![Monomial::one()];
    }
    go(w, w, &mut Vec::new(), &mut out);
    out.sort();
    out.dedup();
    out
}

/// Inverts [`miura`] on its image: returns `q` in `v`-jets with `miura(q) = p`.
pub fn kdv_rewrite(p_in_u: &DiffPoly) -> Result<DiffPoly, ConservedError> {
    if p_in_u.rank() != 1 {
        return Err(ConservedError::RankOneOnly(p_in_u.rank()));
    }
    if !screening_action(1, p_in_u)?.is_zero() {
        return Err(ConservedError::NotInImage);
    }
    let mut out = DiffPoly::zero(1);
    for (w, part) in p_in_u.homogeneous_components() {
        // The Miura map doubles nothing: v-weight w maps to u-weight w.
        let basis = v_monomials(w);
        let images: Vec<DiffPoly> = basis
            .iter()
            .map(|m| miura(&DiffPoly::term(1, m.clone(), int(1))))
            .collect::<Result<_, _>>()?;
        let mut rows: BTreeMap<Monomial, BTreeMap<usize, Rational>> = BTreeMap::new();
        for (k, img) in images.iter().enumerate() {
            for (mono, c) in img.terms() {
                rows.entry(mono.clone()).or_default().insert(k, c.clone());
            }
        }
        for mono in part.terms().map(|(m, _)| m.clone()) {
            rows.entry(mono).or_default();
        }
        let mut system = LinearSystem::new(basis.len());
        for (mono, coeffs) in rows {
            system.push(coeffs, part.coefficient(&mono));
        }
        let sol = system.solve().ok_or(ConservedError::NotInImage)?;
        for (m, c) in basis.into_iter().zip(sol.values) {
            out += &DiffPoly::term(1, m, c);
        }
    }
    Ok(out)
}

/// Renders a rank-one polynomial whose jets stand for `v`.
pub fn display_in_v(p: &DiffPoly) -> String {
    p.to_string().replace('u', "v")
}
