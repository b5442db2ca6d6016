//! Dense `(r+1)×(r+1)` matrices of Laurent polynomials in λ, written directly
//! from the matrix definitions and sharing no code with `loopalg`, plus a
//! brute-force flow solver by undetermined coefficients.

use std::collections::BTreeMap;

use mkdv_core::diffpoly::{int, DiffPoly, JetVar, Monomial, Rational};
use mkdv_core::linalg::LinearSystem;
use mkdv_core::LoopElement;
use num_traits::Zero;

pub type Laurent = BTreeMap<i32, DiffPoly>;

#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    pub size: usize,
    pub rank: usize,
    pub e: Vec<Vec<Laurent>>,
}

fn add_into(l: &mut Laurent, k: i32, c: &DiffPoly) {
    let slot = l.entry(k).or_insert_with(|| DiffPoly::zero(c.rank()));
    *slot += c;
    if slot.is_zero() {
        l.remove(&k);
    }
}

impl Mat {
    pub fn zero(rank: usize) -> Self {
        let size = rank + 1;
        Mat {
            size,
            rank,
            e: vec![vec![Laurent::new(); size]; size],
        }
    }

    /// `c·E_{a,b}·λ^k`, 0-based indices.
    pub fn unit(rank: usize, a: usize, b: usize, k: i32, c: DiffPoly) -> Self {
        let mut m = Mat::zero(rank);
        add_into(&mut m.e[a][b], k, &c);
        m
    }

    pub fn identity(rank: usize) -> Self {
        let mut m = Mat::zero(rank);
        for a in 0..m.size {
            add_into(&mut m.e[a][a], 0, &DiffPoly::one(rank));
        }
        m
    }

    /// `Λ = Σ E_{a,a+1} + λ E_{r+1,1}`.
    pub fn lambda(rank: usize) -> Self {
        let mut m = Mat::zero(rank);
        let one = DiffPoly::one(rank);
        for a in 0..rank {
            add_into(&mut m.e[a][a + 1], 0, &one);
        }
        add_into(&mut m.e[rank][0], 1, &one);
        m
    }

    /// `Λ⁻¹ = Σ E_{a+1,a} + λ⁻¹ E_{1,r+1}`.
    pub fn lambda_inv(rank: usize) -> Self {
        let mut m = Mat::zero(rank);
        let one = DiffPoly::one(rank);
        for a in 0..rank {
            add_into(&mut m.e[a + 1][a], 0, &one);
        }
        add_into(&mut m.e[0][rank], -1, &one);
        m
    }

    /// `Λ^k` for any integer `k`.
    pub fn lambda_pow(rank: usize, k: i32) -> Self {
        let base = if k >= 0 { Mat::lambda(rank) } else { Mat::lambda_inv(rank) };
        let mut out = Mat::identity(rank);
        for _ in 0..k.unsigned_abs() {
            out = out.mul(&base);
        }
        out
    }

    /// The traceless diagonal matrix with `d_a − d_{a+1} = coords[a]`, solved
    /// as a linear system rather than by a closed formula.
    pub fn cartan(coords: &[DiffPoly]) -> Self {
        let rank = coords.len();
        let h = rank + 1;
        // Unknown d_a = Σ_b x_{a,b} coords[b]; solve for the rational matrix x.
        let mut m = Mat::zero(rank);
        for b in 0..rank {
            let mut sys = LinearSystem::new(h);
            for a in 0..rank {
                let rhs = if a == b { int(1) } else { int(0) };
                sys.push([(a, int(1)), (a + 1, int(-1))].into(), rhs);
            }
            sys.push((0..h).map(|a| (a, int(1))).collect(), int(0));
            let sol = sys.solve().expect("the Cartan embedding exists");
            assert!(sol.is_unique());
            for a in 0..h {
                add_into(&mut m.e[a][a], 0, &coords[b].scale(&sol.values[a]));
            }
        }
        m
    }

    pub fn from_loop(x: &LoopElement) -> Self {
        let rank = x.ctx().rank();
        let mut m = Mat::zero(rank);
        for (a, b, k, c) in x.entries() {
            add_into(&mut m.e[a][b], k, &c);
        }
        m
    }

    pub fn add(&self, o: &Mat) -> Mat {
        let mut out = self.clone();
        for a in 0..self.size {
            for b in 0..self.size {
                for (k, c) in &o.e[a][b] {
                    add_into(&mut out.e[a][b], *k, c);
                }
            }
        }
        out
    }

    pub fn scale(&self, c: &DiffPoly) -> Mat {
        let mut out = Mat::zero(self.rank);
        for a in 0..self.size {
            for b in 0..self.size {
                for (k, x) in &self.e[a][b] {
                    add_into(&mut out.e[a][b], *k, &(x * c));
                }
            }
        }
        out
    }

    pub fn sub(&self, o: &Mat) -> Mat {
        self.add(&o.scale(&DiffPoly::from_int(self.rank, -1)))
    }

    pub fn mul(&self, o: &Mat) -> Mat {
        let mut out = Mat::zero(self.rank);
        for a in 0..self.size {
            for c in 0..self.size {
                for b in 0..self.size {
                    for (k1, x) in &self.e[a][c] {
                        for (k2, y) in &o.e[c][b] {
                            add_into(&mut out.e[a][b], k1 + k2, &(x * y));
                        }
                    }
                }
            }
        }
        out
    }

    pub fn comm(&self, o: &Mat) -> Mat {
        self.mul(o).sub(&o.mul(self))
    }

    pub fn deriv(&self) -> Mat {
        self.map(DiffPoly::total_derivative)
    }

    pub fn map(&self, f: impl Fn(&DiffPoly) -> DiffPoly) -> Mat {
        let mut out = Mat::zero(self.rank);
        for a in 0..self.size {
            for b in 0..self.size {
                for (k, x) in &self.e[a][b] {
                    add_into(&mut out.e[a][b], *k, &f(x));
                }
            }
        }
        out
    }

    /// Constant λ-term of `tr(self · o)`.
    pub fn pairing(&self, o: &Mat) -> DiffPoly {
        let prod = self.mul(o);
        let mut out = DiffPoly::zero(self.rank);
        for a in 0..self.size {
            if let Some(c) = prod.e[a][a].get(&0) {
                out += c;
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.e.iter().flatten().all(|l| l.is_empty())
    }

    /// Keeps entries `E_{ab} λ^k` of principal degree `(b − a) + k h <= d`.
    pub fn truncate(&self, d: i32) -> Mat {
        let mut out = self.clone();
        let h = self.size as i32;
        for a in 0..self.size {
            for b in 0..self.size {
                out.e[a][b].retain(|&k, _| (b as i32 - a as i32) + k * h <= d);
            }
        }
        out
    }
}

/// All monomials of weight `w` in `u_1, …, u_rank` and their derivatives
/// (`u_i^(k)` has weight `k + 1`).
pub fn monomials(rank: usize, w: u32) -> Vec<Monomial> {
    let vars: Vec<JetVar> = (0..w)
        .flat_map(|k| (1..=rank).map(move |i| JetVar::new(i, k)))
        .collect();
    fn go(vars: &[JetVar], start: usize, rest: u32, acc: &mut Vec<(JetVar, u32)>, out: &mut Vec<Monomial>) {
        if rest == 0 {
            out.push(Monomial::from_factors(acc.iter().copied()));
            return;
        }
        for idx in start..vars.len() {
            let v = vars[idx];
            if v.weight() > rest {
                continue;
            }
            acc.push((v, 1));
            go(vars, idx, rest - v.weight(), acc, out);
            acc.pop();
        }
    }
    let mut out = Vec::new();
    go(&vars, 0, w, &mut Vec::new(), &mut out);
    out
}

/// A polynomial coefficient linear in unknowns: `None` keys the known part.
type Lin = BTreeMap<Option<usize>, DiffPoly>;
type LinMat = Vec<Vec<BTreeMap<i32, Lin>>>;

fn lin_add(into: &mut Lin, key: Option<usize>, c: &DiffPoly) {
    let slot = into.entry(key).or_insert_with(|| DiffPoly::zero(c.rank()));
    *slot += c;
    if slot.is_zero() {
        into.remove(&key);
    }
}

fn linmat_add(m: &mut LinMat, a: usize, b: usize, k: i32, key: Option<usize>, c: &DiffPoly) {
    lin_add(m[a][b].entry(k).or_default(), key, c);
}

/// Result of the brute-force flow solve.
pub struct AnsatzFlow {
    /// Coefficients of the supplied rhs basis, per field.
    pub coefficients: Vec<Vec<Rational>>,
    /// Whether those coefficients are pinned down by the equations.
    pub unique: bool,
}

impl AnsatzFlow {
    pub fn rhs(&self, basis: &[Vec<DiffPoly>], rank: usize) -> Vec<DiffPoly> {
        basis
            .iter()
            .zip(&self.coefficients)
            .map(|(polys, cs)| {
                let mut out = DiffPoly::zero(rank);
                for (p, c) in polys.iter().zip(cs) {
                    out += &p.scale(c);
                }
                out
            })
            .collect()
    }
}

/// Solves `∂_z A − ∂_t L + [L, A] = 0` for `L = Λ⁻¹ + u`,
/// `A = Λ⁻ⁿ + (unknown entries of degree −n+1..0, weight n + degree)` and
/// `∂_t u_i = Σ_k c_{ik} basis[i][k]`, entirely by linear algebra.
pub fn solve_flow(rank: usize, n: u32, basis: &[Vec<DiffPoly>]) -> Option<AnsatzFlow> {
    let h = rank + 1;
    let n = n as i32;
    let coords: Vec<DiffPoly> = (1..=rank).map(|i| DiffPoly::jet(rank, i, 0)).collect();
    let l = Mat::lambda_inv(rank).add(&Mat::cartan(&coords));

    let mut a_mat: LinMat = vec![vec![BTreeMap::new(); h]; h];
    let lead = Mat::lambda_pow(rank, -n);
    for x in 0..h {
        for y in 0..h {
            for (k, c) in &lead.e[x][y] {
                linmat_add(&mut a_mat, x, y, *k, None, c);
            }
        }
    }
    let mut next = 0usize;
    let mut diag_slots: BTreeMap<i32, Vec<(usize, usize, i32)>> = BTreeMap::new();
    for j in (-n + 1)..=0 {
        let w = (n + j) as u32;
        for row in 0..h {
            let col = (row as i32 + j).rem_euclid(h as i32) as usize;
            let k = (j - (col as i32 - row as i32)) / h as i32;
            for m in monomials(rank, w) {
                linmat_add(&mut a_mat, row, col, k, Some(next), &DiffPoly::term(rank, m, int(1)));
                next += 1;
            }
            if row == col {
                diag_slots.entry(k).or_default().push((row, col, k));
            }
        }
    }
    let first_rhs = next;
    let mut rhs_index = Vec::new();
    for polys in basis {
        rhs_index.push((next..next + polys.len()).collect::<Vec<_>>());
        next += polys.len();
    }

    // ∂_t L = cartan(∂_t u): embed each unknown rhs direction separately.
    let mut dt_l: LinMat = vec![vec![BTreeMap::new(); h]; h];
    for (i, polys) in basis.iter().enumerate() {
        for (t, p) in polys.iter().enumerate() {
            let mut v = vec![DiffPoly::zero(rank); rank];
            v[i] = p.clone();
            let emb = Mat::cartan(&v);
            for x in 0..h {
                if let Some(c) = emb.e[x][x].get(&0) {
                    linmat_add(&mut dt_l, x, x, 0, Some(rhs_index[i][t]), c);
                }
            }
        }
    }

    // Residual R = ∂_z A + L A − A L − ∂_t L.
    let mut res: LinMat = vec![vec![BTreeMap::new(); h]; h];
    for x in 0..h {
        for y in 0..h {
            for (&k, lin) in &a_mat[x][y] {
                for (key, c) in lin {
                    linmat_add(&mut res, x, y, k, *key, &c.total_derivative());
                }
                for z in 0..h {
                    // (L A)_{z y} gets L_{z x} A_{x y}; (A L)_{x z} gets A_{x y} L_{y z}.
                    for (&k2, lc) in &l.e[z][x] {
                        for (key, c) in lin {
                            linmat_add(&mut res, z, y, k + k2, *key, &(lc * c));
                        }
                    }
                    for (&k2, lc) in &l.e[y][z] {
                        for (key, c) in lin {
                            linmat_add(&mut res, x, z, k + k2, *key, &-(c * lc));
                        }
                    }
                }
            }
            for (&k, lin) in &dt_l[x][y] {
                for (key, c) in lin {
                    linmat_add(&mut res, x, y, k, *key, &-c.clone());
                }
            }
        }
    }

    let mut sys = LinearSystem::new(next);
    let mut push_poly_equations = |lins: Vec<&Lin>| {
        let mut rows: BTreeMap<Monomial, (BTreeMap<usize, Rational>, Rational)> = BTreeMap::new();
        for lin in lins {
            for (key, c) in lin {
                for (mono, coeff) in c.terms() {
                    let row = rows
                        .entry(mono.clone())
                        .or_insert_with(|| (BTreeMap::new(), Rational::zero()));
                    match key {
                        Some(u) => *row.0.entry(*u).or_insert_with(Rational::zero) += coeff,
                        None => row.1 -= coeff,
                    }
                }
            }
        }
        for (_, (coeffs, rhs)) in rows {
            sys.push(coeffs, rhs);
        }
    };
    for x in 0..h {
        for y in 0..h {
            for lin in res[x][y].values() {
                push_poly_equations(vec![lin]);
            }
        }
    }
    // Tracelessness of every diagonal λ-power.
    for slots in diag_slots.values() {
        let lins: Vec<&Lin> = slots
            .iter()
            .filter_map(|&(x, y, k)| a_mat[x][y].get(&k))
            .collect();
        push_poly_equations(lins);
    }

    let sol = sys.solve()?;
    let coefficients: Vec<Vec<Rational>> = rhs_index
        .iter()
        .map(|idx| idx.iter().map(|&u| sol.values[u].clone()).collect())
        .collect();
    // The rhs is pinned iff shifting any rhs unknown makes the system inconsistent.
    let unique = (first_rhs..next).all(|u| {
        let mut probe = sys.clone();
        probe.push([(u, int(1))].into(), &sol.values[u] + int(1));
        probe.solve().is_none()
    });
    Some(AnsatzFlow { coefficients, unique })
}

/// The basis of all monomials of weight `w`, repeated for each field.
pub fn generic_basis(rank: usize, w: u32) -> Vec<Vec<DiffPoly>> {
    let polys: Vec<DiffPoly> = monomials(rank, w)
        .into_iter()
        .map(|m| DiffPoly::term(rank, m, int(1)))
        .collect();
    vec![polys; rank]
}
