//! The mKdV hierarchy: the centralizer recursion for `V⁽ⁿ⁾ = K p₋ₙ K⁻¹`, the flows
//! it induces in zero-curvature form, and the dressing transform used to
//! cross-check it.
//!
//! `V⁽ⁿ⁾` is built degree by degree from `[∂_z + p₋₁ + u, V] = 0`. At degree `j`
//! the equation reads
//!
//! ```text
//! [p₋₁, V_{j+1}] + ∂_z V_j + [u, V_j] = 0,
//! ```
//!
//! so the `Im(ad p₋₁)` part of `V_{j+1}` comes from inverting `ad p₋₁`, while the
//! `p_j`-coordinate of `V_j` is fixed by the solvability condition at degree `j`,
//! an antiderivative with the integration constant set to zero.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, RwLock};

use serde_json::json;
use thiserror::Error;

use crate::diffpoly::{rat, DiffPoly, DiffPolyError};
use crate::loopalg::{
    cartan_embed, generator_p, invert_ad_pminus1, jet_cartan, AlgebraCtx, CartanElement,
    LoopElement, LoopError,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HierarchyError {
    #[error("{n} is not an exponent of A_{rank}^1")]
    NotAnExponent { n: i64, rank: usize },
    #[error("degree bound {got} too small, need at least {needed}")]
    DegreeTooSmall { needed: i32, got: i32 },
    #[error("zero-curvature right side has components outside the Cartan subalgebra: {residual}")]
    NonCartanResidual { residual: Box<LoopElement> },
    #[error("recursion failed at degree {degree}: {source}")]
    Recursion {
        degree: i32,
        #[source]
        source: DiffPolyError,
    },
    #[error("degree-{degree} equation left an a-component behind")]
    Inconsistent { degree: i32 },
    #[error(transparent)]
    Loop(#[from] LoopError),
}

/// The `n`-th flow `∂_n u_i = rhs_i` with the matrices it was read off from.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowSpec {
    pub ctx: AlgebraCtx,
    pub n: u32,
    pub rhs: Vec<DiffPoly>,
    /// `V⁽ⁿ⁾` modulo its truncation.
    pub v: LoopElement,
    /// `(V⁽ⁿ⁾)₋`, exact.
    pub vminus: LoopElement,
}

impl FlowSpec {
    /// The evolutionary derivation `Σ_{i,k} ∂_z^k(rhs_i) ∂/∂u_i^(k)` applied to `p`.
    pub fn prolong(&self, p: &DiffPoly) -> DiffPoly {
        prolong(&self.rhs, p)
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        flow_json(self.ctx, self.n, &self.rhs)
    }

    /// Reads the `rhs` of a flow file produced by [`FlowSpec::to_json_value`].
    pub fn rhs_from_json(value: &serde_json::Value) -> Result<(usize, u32, Vec<DiffPoly>), DiffPolyError> {
        let bad = |m: &str| DiffPolyError::Parse(m.to_string());
        let algebra = value["algebra"].as_str().ok_or_else(|| bad("missing algebra"))?;
        let rank: usize = algebra
            .strip_prefix("A_")
            .and_then(|s| s.strip_suffix("^1"))
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("algebra must look like A_r^1"))?;
        let n = value["n"].as_u64().ok_or_else(|| bad("missing n"))? as u32;
        let rhs = value["rhs"]
            .as_array()
            .ok_or_else(|| bad("missing rhs"))?
            .iter()
            .map(|p| DiffPoly::from_json_value(rank, p))
            .collect::<Result<Vec<_>, _>>()?;
        Ok((rank, n, rhs))
    }

    pub fn to_latex(&self) -> String {
        flow_latex(self.ctx, self.n, &self.rhs)
    }
}

/// `{"algebra", "n", "rhs"}` for a flow given by its right-hand side.
pub fn flow_json(ctx: AlgebraCtx, n: u32, rhs: &[DiffPoly]) -> serde_json::Value {
    json!({
        "algebra": ctx.name(),
        "n": n,
        "rhs": rhs.iter().map(DiffPoly::to_json_value).collect::<Vec<_>>(),
    })
}

/// An `aligned` block with one line `∂_{t_n} u_i = …` per field.
pub fn flow_latex(ctx: AlgebraCtx, n: u32, rhs: &[DiffPoly]) -> String {
    let lines: Vec<String> = rhs
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let field = if ctx.rank() == 1 {
                "u".to_string()
            } else {
                format!("u_{{{}}}", i + 1)
            };
            format!("\\partial_{{t_{{{n}}}}} {field} &= {}", p.to_latex())
        })
        .collect();
    format!("\\begin{{aligned}}\n{}\n\\end{{aligned}}\n", lines.join(" \\\\\n"))
}

/// Applies the evolutionary derivation with `∂ u_i = rhs[i - 1]` to `p`.
pub fn prolong(rhs: &[DiffPoly], p: &DiffPoly) -> DiffPoly {
    let mut out = DiffPoly::zero(p.rank());
    let mut derivs: HashMap<(usize, u32), DiffPoly> = HashMap::new();
    for v in p.variables() {
        let dq = derivs
            .entry((v.index(), v.order()))
            .or_insert_with(|| rhs[v.index() - 1].total_derivative_n(v.order()));
        out += &(&p.partial(v) * dq);
    }
    out
}

fn exponent(ctx: AlgebraCtx, n: u32) -> Result<(), HierarchyError> {
    if ctx.is_exponent(n as i64) {
        Ok(())
    } else {
        Err(HierarchyError::NotAnExponent {
            n: n as i64,
            rank: ctx.rank(),
        })
    }
}

fn require_degree(got: i32, needed: i32) -> Result<(), HierarchyError> {
    if got < needed {
        Err(HierarchyError::DegreeTooSmall { needed, got })
    } else {
        Ok(())
    }
}

/// `V⁽ⁿ⁾ = Σ_{j=-n}^{D} V_j` for the potential `u`, uncached.
pub fn compute_v(
    u: &CartanElement,
    n: u32,
    degree: i32,
) -> Result<LoopElement, HierarchyError> {
    let ctx = u.as_loop().ctx();
    exponent(ctx, n)?;
    require_degree(degree, 1)?;
    let u = u.as_loop();
    let n = n as i32;
    let pn = generator_p(ctx, -(n as i64))?;
    let mut v = pn.clone();
    let mut w = invert_ad_pminus1(&-&u.bracket(&pn))?;
    for j in (-n + 1)..=degree {
        let mut vj = w;
        if ctx.has_generator(j as i64) {
            let source = u.bracket(&vj).homogeneous_part(j);
            let (a, _) = crate::loopalg::kac_project(&source)?;
            let a = -a
                .antiderivative()
                .map_err(|source| HierarchyError::Recursion { degree: j, source })?;
            vj = &vj + &generator_p(ctx, j as i64)?.scale(&a);
        }
        v = &v + &vj;
        if j < degree {
            let next = -&(&vj.total_derivative() + &u.bracket(&vj));
            w = invert_ad_pminus1(&next).map_err(|e| match e {
                LoopError::Unsolvable { degree } => HierarchyError::Inconsistent { degree },
                e => e.into(),
            })?;
        } else {
            w = LoopElement::zero(ctx);
        }
    }
    Ok(v.truncate(degree))
}

/// Components of `log M` and the functions `h_j` of the dressed operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DressingData {
    pub degree: i32,
    /// `y_j`, `j = 1..=D`; absent entries are zero.
    pub y: BTreeMap<i32, LoopElement>,
    /// `h_j` for exponents `j <= D`.
    pub h: BTreeMap<u32, DiffPoly>,
}

impl DressingData {
    /// `log M = Σ y_j`, known through degree `D`.
    pub fn log_m(&self, ctx: AlgebraCtx) -> LoopElement {
        let mut out = LoopElement::zero(ctx);
        for y in self.y.values() {
            out = &out + y;
        }
        out.truncate(self.degree)
    }
}

fn clip(x: &LoopElement, degree: i32) -> LoopElement {
    x.truncate(degree).into_exact()
}

/// `e^{-ad y} l + Σ_k (-1)^k/(k+1)! (ad y)^k ∂_z y`, the connection
/// `M⁻¹(∂_z + l)M − ∂_z` for `M = e^y`, through degree `upto`.
/// `y` must have strictly positive degrees.
pub fn conjugate_connection(l: &LoopElement, y: &LoopElement, upto: i32) -> LoopElement {
    let y = clip(y, upto + 1);
    let mut acc = clip(l, upto);
    let mut term = acc.clone();
    for k in 1.. {
        term = clip(&y.bracket(&term), upto).scale_rational(&rat(-1, k));
        if term.is_zero() {
            break;
        }
        acc = &acc + &term;
    }
    let mut term = clip(&y.total_derivative(), upto);
    acc = &acc + &term;
    for k in 1.. {
        // term = (-1)^k/k! (ad y)^k ∂y; contributes term/(k+1).
        term = clip(&y.bracket(&term), upto).scale_rational(&rat(-1, k));
        if term.is_zero() {
            break;
        }
        acc = &acc + &term.scale_rational(&rat(1, k + 1));
    }
    acc
}

/// `e^{ad y} x` through degree `upto`, for `y` of positive degree.
pub fn adjoint_exp(y: &LoopElement, x: &LoopElement, upto: i32) -> LoopElement {
    let y = clip(y, upto - x.min_degree().unwrap_or(0));
    let mut acc = clip(x, upto);
    let mut term = clip(x, upto);
    for k in 1.. {
        term = clip(&y.bracket(&term), upto).scale_rational(&rat(1, k));
        if term.is_zero() {
            break;
        }
        acc = &acc + &term;
    }
    acc
}

/// Solves `M⁻¹(∂_z + p₋₁ + u)M = ∂_z + p₋₁ + Σ h_j p_j` degree by degree with
/// `M = exp(Σ y_j)` and every `y_j` free of `p_j`.
pub fn compute_dressing(u: &CartanElement, degree: i32) -> Result<DressingData, HierarchyError> {
    require_degree(degree, 2)?;
    let ctx = u.as_loop().ctx();
    let l = &generator_p(ctx, -1)? + u.as_loop();
    let mut logm = LoopElement::zero(ctx);
    let mut y = BTreeMap::new();
    let mut h = BTreeMap::new();
    for j in 0..=degree {
        let q = conjugate_connection(&l, &logm, j).homogeneous_part(j);
        let (mut a, im) = q.kac_split();
        if let Some(hj) = a.remove(&j) {
            h.insert(j as u32, hj);
        } else if ctx.is_exponent(j as i64) {
            h.insert(j as u32, DiffPoly::zero(ctx.rank()));
        }
        if j < degree {
            let next = invert_ad_pminus1(&-&im)?;
            if !next.is_zero() {
                logm = &logm + &next;
                y.insert(j + 1, next);
            }
        }
    }
    Ok(DressingData { degree, y, h })
}

/// Evaluates both sides of the dressed-operator identity; their difference is
/// the returned residual, zero through degree `D - 1`.
pub fn dressing_residual(u: &CartanElement, data: &DressingData) -> Result<LoopElement, HierarchyError> {
    let ctx = u.as_loop().ctx();
    let upto = data.degree - 1;
    let l = &generator_p(ctx, -1)? + u.as_loop();
    let lhs = conjugate_connection(&l, &data.log_m(ctx), upto);
    let mut rhs = generator_p(ctx, -1)?;
    for (&j, hj) in &data.h {
        rhs = &rhs + &generator_p(ctx, j as i64)?.scale(hj);
    }
    Ok((&lhs - &rhs).truncate(upto))
}

/// Shared state for one algebra and potential: memoized `V⁽ⁿ⁾`.
///
/// The memo table is safe for concurrent readers; a writer only replaces an
/// entry with one of larger degree bound.
pub struct Hierarchy {
    ctx: AlgebraCtx,
    u: CartanElement,
    cache: RwLock<HashMap<u32, Arc<LoopElement>>>,
    perturbations: BTreeMap<u32, Vec<DiffPoly>>,
}

impl Hierarchy {
    /// The hierarchy for the generic potential `u = (u_1, …, u_r)`.
    pub fn new(ctx: AlgebraCtx) -> Self {
        Self::with_potential(jet_cartan(ctx))
    }

    /// The hierarchy evaluated on a fixed potential, e.g. `u ≡ 0`.
    pub fn with_potential(u: CartanElement) -> Self {
        Hierarchy {
            ctx: u.as_loop().ctx(),
            u,
            cache: RwLock::new(HashMap::new()),
            perturbations: BTreeMap::new(),
        }
    }

    /// The hierarchy with potential `u ≡ 0`.
    pub fn trivial(ctx: AlgebraCtx) -> Self {
        let zeros = vec![DiffPoly::zero(ctx.rank()); ctx.rank()];
        Self::with_potential(cartan_embed(ctx, &zeros).expect("rank-many zeros"))
    }

    pub fn ctx(&self) -> AlgebraCtx {
        self.ctx
    }

    pub fn potential(&self) -> &CartanElement {
        &self.u
    }

    /// Adds `delta` to the right side of flow `n`. Only meant for negative
    /// controls: every identity involving that flow should then fail.
    #[doc(hidden)]
    pub fn perturb_flow(&mut self, n: u32, delta: Vec<DiffPoly>) {
        self.perturbations.insert(n, delta);
    }

    pub fn is_perturbed(&self) -> bool {
        !self.perturbations.is_empty()
    }

    /// `V⁽ⁿ⁾` modulo degree `> D`.
    pub fn v(&self, n: u32, degree: i32) -> Result<Arc<LoopElement>, HierarchyError> {
        if let Some(hit) = self.cache.read().expect("memo lock").get(&n) {
            if hit.trunc().is_some_and(|t| t >= degree) {
                return Ok(if hit.trunc() == Some(degree) {
                    Arc::clone(hit)
                } else {
                    Arc::new(hit.truncate(degree))
                });
            }
        }
        log::debug!("computing V^({n}) through degree {degree}");
        let v = Arc::new(compute_v(&self.u, n, degree)?);
        let mut table = self.cache.write().expect("memo lock");
        let keep = table
            .get(&n)
            .is_some_and(|old| old.trunc() >= v.trunc());
        if !keep {
            table.insert(n, Arc::clone(&v));
        }
        Ok(v)
    }

    /// `V⁽ⁿ⁾₋`, exact; needs only degrees `<= 0`.
    pub fn vminus(&self, n: u32) -> Result<LoopElement, HierarchyError> {
        Ok(self.v(n, 1)?.split().1)
    }

    /// The flow `∂_n u = ∂_z V₋ + [p₋₁ + u, V₋]`. Requires `D >= n + 2`.
    pub fn flow(&self, n: u32, degree: i32) -> Result<FlowSpec, HierarchyError> {
        exponent(self.ctx, n)?;
        require_degree(degree, n as i32 + 2)?;
        let v = self.v(n, degree)?;
        let (_, vminus) = v.split();
        let l = &generator_p(self.ctx, -1)? + self.u.as_loop();
        let lhs = &vminus.total_derivative() + &l.bracket(&vminus);
        let cartan = CartanElement::from_loop(&lhs).map_err(|_| HierarchyError::NonCartanResidual {
            residual: Box::new(lhs.clone()),
        })?;
        let mut rhs = cartan.coordinates().to_vec();
        if let Some(delta) = self.perturbations.get(&n) {
            for (r, d) in rhs.iter_mut().zip(delta) {
                *r += d;
            }
        }
        Ok(FlowSpec {
            ctx: self.ctx,
            n,
            rhs,
            v: (*v).clone(),
            vminus,
        })
    }

    /// The smallest admissible degree bound for a set of flows.
    pub fn min_degree(flows: &[u32]) -> i32 {
        flows.iter().copied().max().unwrap_or(1) as i32 + 2
    }

    /// `∂_m ∂_n p − ∂_n ∂_m p`; identically zero.
    pub fn commutator_check(
        &self,
        m: u32,
        n: u32,
        degree: i32,
        probe: &DiffPoly,
    ) -> Result<DiffPoly, HierarchyError> {
        let fm = self.flow(m, degree)?;
        let fn_ = self.flow(n, degree)?;
        Ok(&fm.prolong(&fn_.prolong(probe)) - &fn_.prolong(&fm.prolong(probe)))
    }

    /// `∂_m V⁽ⁿ⁾₋ − ∂_n V⁽ᵐ⁾₋ + [V⁽ᵐ⁾₋, V⁽ⁿ⁾₋]`, reported modulo degree `> D − max(m, n) − 1`.
    pub fn zero_curvature_residual(
        &self,
        m: u32,
        n: u32,
        degree: i32,
    ) -> Result<LoopElement, HierarchyError> {
        let fm = self.flow(m, degree)?;
        let fn_ = self.flow(n, degree)?;
        let dm_vn = fn_.vminus.map_entries(|p| fm.prolong(p));
        let dn_vm = fm.vminus.map_entries(|p| fn_.prolong(p));
        let br = fm.vminus.bracket(&fn_.vminus);
        let window = degree - m.max(n) as i32 - 1;
        Ok((&(&dm_vn - &dn_vm) + &br).truncate(window))
    }

    /// The full centralizer residual `[∂_z + p₋₁ + u, V⁽ⁿ⁾]`, zero through degree `D − 1`.
    pub fn centralizer_residual(&self, n: u32, degree: i32) -> Result<LoopElement, HierarchyError> {
        let v = self.v(n, degree)?;
        let l = &generator_p(self.ctx, -1)? + self.u.as_loop();
        Ok((&v.total_derivative() + &l.bracket(&v)).truncate(degree - 1))
    }

    pub fn dressing(&self, degree: i32) -> Result<DressingData, HierarchyError> {
        compute_dressing(&self.u, degree)
    }

    /// `M p₋ₙ M⁻¹ − V⁽ⁿ⁾` modulo degree `> D − n − 1`.
    pub fn equivalence_check(&self, n: u32, degree: i32) -> Result<LoopElement, HierarchyError> {
        exponent(self.ctx, n)?;
        require_degree(degree, n as i32 + 2)?;
        let data = self.dressing(degree)?;
        let window = degree - n as i32 - 1;
        let pn = generator_p(self.ctx, -(n as i64))?;
        let dressed = adjoint_exp(&data.log_m(self.ctx), &pn, window);
        let v = self.v(n, degree)?;
        Ok((&dressed - &v).truncate(window))
    }

    /// Differences between the flow computed at `D` and at `D + 2`; empty when stable.
    pub fn degree_stability(&self, n: u32, degree: i32) -> Result<Vec<DiffPoly>, HierarchyError> {
        let a = compute_flow_rhs(&self.u, n, degree)?;
        let b = compute_flow_rhs(&self.u, n, degree + 2)?;
        Ok(a.iter()
            .zip(&b)
            .map(|(x, y)| x - y)
            .filter(|d| !d.is_zero())
            .collect())
    }
}

fn compute_flow_rhs(u: &CartanElement, n: u32, degree: i32) -> Result<Vec<DiffPoly>, HierarchyError> {
    Ok(Hierarchy::with_potential(u.clone()).flow(n, degree)?.rhs)
}
