//! Positive definite integral quadratic lattices and their basic
//! geometry: discriminants, short vectors, Minkowski reduction, isometry
//! testing and automorphism groups.
//!
//! The canonical internal object is the doubled Gram matrix E (integer,
//! symmetric, even diagonal); the coefficient matrix m_ij with
//! Q = sum_{i<=j} m_ij x_i x_j is the I/O form.

use crate::arith::{int, isqrt, Int, Rat};
use crate::caps::Caps;
use crate::error::{Error, Result};
use crate::json::{int_from_json, int_to_json};
use crate::mat::{has_unit_invariant_factors, IMat};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde_json::Value;

/// Integral quadratic lattice given by Q = sum_{i<=j} m_ij x_i x_j.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct QuadLattice {
    n: usize,
    coeffs: Vec<Vec<Int>>,
    e: IMat,
}

impl std::fmt::Debug for QuadLattice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "QuadLattice(n={}, E={:?})", self.n, self.e)
    }
}

/// Base-change witness: an integer matrix with det = +-1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnimodularChange {
    pub u: IMat,
    pub det: i8,
}

impl UnimodularChange {
    pub fn new(u: IMat) -> Result<Self> {
        let d = u.det();
        let det = if d.is_one() {
            1
        } else if d == int(-1) {
            -1
        } else {
            return Err(Error::InvalidInput(format!(
                "matrix is not unimodular (det {d})"
            )));
        };
        Ok(UnimodularChange { u, det })
    }

    pub fn identity(n: usize) -> Self {
        UnimodularChange {
            u: IMat::identity(n),
            det: 1,
        }
    }
}

impl QuadLattice {
    /// Build from the upper-triangular coefficient rows: row i holds
    /// m_ij for j >= i.
    pub fn from_coeffs(coeffs: Vec<Vec<Int>>) -> Result<Self> {
        let n = coeffs.len();
        if n == 0 {
            return Err(Error::InvalidLattice("rank must be positive".into()));
        }
        for (i, row) in coeffs.iter().enumerate() {
            if row.len() != n - i {
                return Err(Error::InvalidLattice(format!(
                    "coefficient row {} must have {} entries, found {}",
                    i,
                    n - i,
                    row.len()
                )));
            }
        }
        let mut e = IMat::zero(n, n);
        for i in 0..n {
            for j in i..n {
                let m = coeffs[i][j - i].clone();
                if i == j {
                    e[(i, i)] = &m + &m;
                } else {
                    e[(i, j)] = m.clone();
                    e[(j, i)] = m;
                }
            }
        }
        let lat = QuadLattice { n, coeffs, e };
        lat.check_positive_definite()?;
        Ok(lat)
    }

    /// Build from a doubled Gram matrix (symmetric, even diagonal).
    pub fn from_doubled_gram(e: IMat) -> Result<Self> {
        if !e.is_symmetric() {
            return Err(Error::InvalidLattice("doubled Gram must be symmetric".into()));
        }
        let n = e.rows;
        let mut coeffs = Vec::with_capacity(n);
        for i in 0..n {
            if (&e[(i, i)] % int(2)).abs() == int(1) {
                return Err(Error::InvalidLattice(
                    "doubled Gram must have even diagonal".into(),
                ));
            }
            let mut row = Vec::with_capacity(n - i);
            row.push(&e[(i, i)] / int(2));
            for j in i + 1..n {
                row.push(e[(i, j)].clone());
            }
            coeffs.push(row);
        }
        let lat = QuadLattice { n, coeffs, e };
        lat.check_positive_definite()?;
        Ok(lat)
    }

    pub fn diagonal(values: &[i64]) -> Result<Self> {
        QuadLattice::from_coeffs(
            (0..values.len())
                .map(|i| {
                    let mut row = vec![Int::zero(); values.len() - i];
                    row[0] = int(values[i]);
                    row
                })
                .collect(),
        )
    }

    pub fn unary(t: &Int) -> Result<Self> {
        QuadLattice::from_coeffs(vec![vec![t.clone()]])
    }

    fn check_positive_definite(&self) -> Result<()> {
        for (k, m) in self.e.leading_principal_minors().iter().enumerate() {
            if !m.is_positive() {
                return Err(Error::InvalidLattice(format!(
                    "doubled Gram is not positive definite (leading minor {} is {})",
                    k + 1,
                    m
                )));
            }
        }
        Ok(())
    }

    pub fn rank(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &[Vec<Int>] {
        &self.coeffs
    }

    /// The doubled Gram matrix E with E_ii = 2 m_ii, E_ij = m_ij (i != j).
    pub fn doubled_gram(&self) -> &IMat {
        &self.e
    }

    /// Q(x) = x^T E x / 2, a non-negative integer.
    pub fn q(&self, x: &[Int]) -> Int {
        let ex = self.e.mul_vec(x);
        let twice: Int = ex.iter().zip(x).map(|(a, b)| a * b).sum();
        debug_assert!((&twice % int(2)).is_zero());
        twice / int(2)
    }

    /// Doubled bilinear pairing (x, y)_E = x^T E y.
    pub fn pair(&self, x: &[Int], y: &[Int]) -> Int {
        self.e.mul_vec(y).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// (det E, disc = det(E/2)): both conventions exposed because the
    /// normalization differs across the literature.
    pub fn discriminant(&self) -> (Int, Rat) {
        let det_e = self.e.det();
        let disc = Rat::new(det_e.clone(), Int::from(2u32).pow(self.n as u32));
        (det_e, disc)
    }

    pub fn det_e(&self) -> Int {
        self.e.det()
    }

    /// min over x != 0 of Q(x). The diagonal provides an upper bound, so a
    /// single enumeration suffices.
    pub fn minimum(&self, caps: &Caps) -> Result<Int> {
        let bound = (0..self.n)
            .map(|i| &self.e[(i, i)] / int(2))
            .min()
            .expect("positive rank");
        let sv = self.short_vectors(&bound, caps)?;
        Ok(sv
            .first()
            .map(|(_, q)| q.clone())
            .expect("diagonal vector must appear"))
    }

    /// All x with 0 < Q(x) <= bound, one representative per +-pair (first
    /// non-zero coordinate positive), sorted by (Q(x), lex).
    pub fn short_vectors(&self, bound: &Int, caps: &Caps) -> Result<Vec<(Vec<Int>, Int)>> {
        if bound.is_negative() {
            return Err(Error::InvalidInput("short-vector bound must be >= 0".into()));
        }
        let chol = RationalCholesky::new(self);
        let mut out = Vec::new();
        let mut x = vec![Int::zero(); self.n];
        chol.enumerate(
            self.n,
            &Rat::from_integer(bound.clone()),
            &Rat::zero(),
            &mut x,
            &mut out,
            caps,
        )?;
        // keep the canonical representative of each +-pair
        out.retain(|(v, _)| {
            v.iter()
                .find(|c| !c.is_zero())
                .map(|c| c.is_positive())
                .unwrap_or(false)
        });
        out.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
        Ok(out)
    }

    /// Vector counts per norm value up to `bound`; cheap isometry invariant.
    pub fn theta_profile(&self, bound: &Int, caps: &Caps) -> Result<Vec<(Int, usize)>> {
        let sv = self.short_vectors(bound, caps)?;
        let mut out: Vec<(Int, usize)> = Vec::new();
        for (_, q) in sv {
            match out.last_mut() {
                Some((v, c)) if *v == q => *c += 1,
                _ => out.push((q, 1)),
            }
        }
        Ok(out)
    }

    /// Apply a basis change: Gram of the lattice with basis columns of u.
    pub fn transform(&self, u: &IMat) -> Result<QuadLattice> {
        let e = u.transpose().mul(&self.e).mul(u);
        QuadLattice::from_doubled_gram(e)
    }

    pub fn to_json(&self) -> Value {
        serde_json::json!({
            "n": self.n,
            "coeffs": self
                .coeffs
                .iter()
                .map(|row| Value::Array(row.iter().map(int_to_json).collect()))
                .collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::InvalidInput("lattice JSON must be an object".into()))?;
        let n = obj
            .get("n")
            .and_then(|x| x.as_u64())
            .ok_or_else(|| Error::InvalidInput("missing rank \"n\"".into()))? as usize;
        let rows = obj
            .get("coeffs")
            .and_then(|x| x.as_array())
            .ok_or_else(|| Error::InvalidInput("missing \"coeffs\"".into()))?;
        if rows.len() != n {
            return Err(Error::InvalidInput(format!(
                "expected {} coefficient rows, found {}",
                n,
                rows.len()
            )));
        }
        let coeffs: Option<Vec<Vec<Int>>> = rows
            .iter()
            .map(|r| r.as_array().and_then(|a| a.iter().map(int_from_json).collect()))
            .collect();
        let coeffs =
            coeffs.ok_or_else(|| Error::InvalidInput("bad coefficient entry".into()))?;
        QuadLattice::from_coeffs(coeffs)
    }
}

/// Exact rational Cholesky-style decomposition Q(x) = sum q_i (x_i + sum_{j>i} mu_ij x_j)^2.
struct RationalCholesky {
    n: usize,
    q: Vec<Rat>,
    mu: Vec<Vec<Rat>>, // mu[i][j] for j > i
}

impl RationalCholesky {
    fn new(lat: &QuadLattice) -> Self {
        let n = lat.n;
        // start from the rational Gram B = E/2
        let mut a = vec![vec![Rat::zero(); n]; n];
        for i in 0..n {
            for j in 0..n {
                a[i][j] = Rat::new(lat.e[(i, j)].clone(), int(2));
            }
        }
        let mut q = vec![Rat::zero(); n];
        let mut mu = vec![vec![Rat::zero(); n]; n];
        for i in 0..n {
            q[i] = a[i][i].clone();
            debug_assert!(q[i].is_positive());
            for j in i + 1..n {
                mu[i][j] = &a[i][j] / &q[i];
            }
            for r in i + 1..n {
                for c in r..n {
                    let t = &a[i][r] * &a[i][c] / &q[i];
                    a[r][c] -= &t;
                    if r != c {
                        a[c][r] = a[r][c].clone();
                    }
                }
            }
        }
        RationalCholesky { n, q, mu }
    }

    /// Depth-first enumeration over levels n-1 .. 0 of all x with
    /// Q(x) <= bound (including x = 0; the caller filters). `used` is the
    /// exact value already accumulated by the fixed coordinates.
    fn enumerate(
        &self,
        level: usize,
        remaining: &Rat,
        used: &Rat,
        x: &mut Vec<Int>,
        out: &mut Vec<(Vec<Int>, Int)>,
        caps: &Caps,
    ) -> Result<()> {
        if level == 0 {
            if !x.iter().all(|c| c.is_zero()) {
                debug_assert!(used.is_integer());
                if out.len() as u64 >= caps.short_vectors {
                    return Err(Error::Resource {
                        what: "short_vectors",
                        cap: caps.short_vectors,
                    });
                }
                out.push((x.clone(), used.to_integer()));
            }
            return Ok(());
        }
        let i = level - 1;
        // offset c_i = sum_{j>i} mu_ij x_j
        let mut c = Rat::zero();
        for j in i + 1..self.n {
            c += &self.mu[i][j] * Rat::from_integer(x[j].clone());
        }
        // q_i (x_i + c)^2 <= remaining
        let m = remaining / &self.q[i];
        // (x_i + c)^2 <= m: with c = u/v, solve (x v + u)^2 <= m v^2 in integers
        let u = c.numer().clone();
        let v = c.denom().clone();
        let mv2 = (&m * Rat::from_integer(&v * &v)).floor().to_integer();
        if mv2.is_negative() {
            return Ok(());
        }
        let s = isqrt(&mv2);
        let lo = (-&s - &u).div_ceil(&v);
        let hi = (&s - &u).div_floor(&v);
        let mut t = lo;
        while t <= hi {
            x[i] = t.clone();
            let inner = Rat::from_integer(t.clone()) + &c;
            let step = &self.q[i] * &inner * &inner;
            let rem = remaining - &step;
            let acc = used + &step;
            self.enumerate(level - 1, &rem, &acc, x, out, caps)?;
            t += 1;
        }
        x[i] = Int::zero();
        Ok(())
    }
}

/// Minkowski reduction. In rank <= 4 computes a fully reduced basis by
/// successive minima with the basis-extendability condition; in higher
/// rank a greedy pair reduction that enforces the two inequalities
/// Q(v_1) <= ... <= Q(v_n) and |(v_i, v_j)_E| <= Q(v_i).
pub fn minkowski_reduce(lat: &QuadLattice, caps: &Caps) -> Result<(QuadLattice, UnimodularChange)> {
    let u = if lat.rank() <= 4 {
        reduce_successive_minima(lat, caps)?
    } else {
        reduce_greedy(lat, caps)?
    };
    let u = canonical_signs(lat, u);
    let reduced = lat.transform(&u)?;
    debug_assert_eq!(reduced.det_e(), lat.det_e());
    Ok((reduced, UnimodularChange::new(u)?))
}

fn reduce_successive_minima(lat: &QuadLattice, caps: &Caps) -> Result<IMat> {
    let n = lat.rank();
    let mut chosen: Vec<Vec<Int>> = Vec::new();
    // work against a known completion to keep a candidate bound available
    let mut completion: Vec<Vec<Int>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { Int::one() } else { Int::zero() })
                .collect()
        })
        .collect();
    for step in 0..n {
        // bound: the norm of the current completion vector at this step
        let mut bound = lat.q(&completion[step]);
        let candidates = loop {
            let sv = lat.short_vectors(&bound, caps)?;
            let mut ok: Vec<(Vec<Int>, Int)> = sv
                .into_iter()
                .filter(|(v, _)| extends_to_basis(&chosen, v))
                .collect();
            if !ok.is_empty() {
                ok.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
                break ok;
            }
            bound = &bound * int(2);
        };
        let (v, _) = candidates.into_iter().next().unwrap();
        chosen.push(v);
        // rebuild a completion of the chosen prefix to keep bounds valid
        completion = complete_basis(&chosen, n);
    }
    let mut u = IMat::zero(n, n);
    for (c, v) in chosen.iter().enumerate() {
        for r in 0..n {
            u[(r, c)] = v[r].clone();
        }
    }
    debug_assert!(u.det().abs().is_one());
    Ok(u)
}

/// Does [prefix..., v] extend to a basis of Z^n?
fn extends_to_basis(prefix: &[Vec<Int>], v: &[Int]) -> bool {
    let n = v.len();
    let k = prefix.len() + 1;
    let m = IMat::from_fn(n, k, |r, c| {
        if c < prefix.len() {
            prefix[c][r].clone()
        } else {
            v[r].clone()
        }
    });
    has_unit_invariant_factors(&m)
}

/// Extend the chosen vectors (which have unit invariant factors) to a
/// full basis of Z^n. With U A V = [I_k; 0] the columns of A·V are the
/// first k columns of U^-1, so the trailing columns of U^-1 complete any
/// basis of the span of A's columns.
fn complete_basis(chosen: &[Vec<Int>], n: usize) -> Vec<Vec<Int>> {
    let k = chosen.len();
    if k == n {
        return chosen.to_vec();
    }
    let a = IMat::from_fn(n, k, |r, c| chosen[c][r].clone());
    let snf = crate::mat::smith_normal_form(&a);
    let uinv = snf
        .u
        .to_rat()
        .inverse()
        .expect("SNF transform is unimodular")
        .to_int()
        .expect("inverse of unimodular matrix is integral");
    let mut out = chosen.to_vec();
    for j in k..n {
        out.push(uinv.col(j));
    }
    let full = IMat::from_fn(n, n, |r, c| out[c][r].clone());
    debug_assert!(full.det().abs().is_one());
    out
}

fn reduce_greedy(lat: &QuadLattice, _caps: &Caps) -> Result<IMat> {
    let n = lat.rank();
    let mut u = IMat::identity(n);
    let mut g = lat.e.clone();
    loop {
        let mut changed = false;
        // sort by diagonal (stable bubble keeps determinism)
        for i in 0..n {
            for j in (i + 1..n).rev() {
                if g[(j - 1, j - 1)] > g[(j, j)] {
                    g.swap_rows(j - 1, j);
                    g.swap_cols(j - 1, j);
                    u.swap_cols(j - 1, j);
                    changed = true;
                }
            }
        }
        // size-reduce pairs: |E_ij| <= E_ii / 2 i.e. |(v_i,v_j)_E| <= Q(v_i)
        for i in 0..n {
            for j in i + 1..n {
                let twice = &g[(i, j)] * int(2);
                if twice.abs() > g[(i, i)] {
                    // v_j <- v_j - round(E_ij / E_ii) v_i
                    let q = rounded_div(&g[(i, j)], &g[(i, i)]);
                    if !q.is_zero() {
                        let nq = -&q;
                        // apply to Gram symmetrically and to u
                        g.col_op(j, i, &nq);
                        g.row_op(j, i, &nq);
                        u.col_op(j, i, &nq);
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    Ok(u)
}

/// Nearest integer to a/b (ties toward zero), b > 0.
fn rounded_div(a: &Int, b: &Int) -> Int {
    debug_assert!(b.is_positive());
    let two_a = a * int(2);
    if a.is_negative() {
        -((-two_a + b) / (b * int(2)))
    } else {
        (two_a + b) / (b * int(2))
    }
}

/// Deterministic sign choice: among the 2^n diagonal sign matrices pick
/// the one making the transformed Gram row-major lexicographically
/// largest (prefers non-negative off-diagonal entries; the all-plus
/// pattern wins ties, so already-canonical inputs are kept unchanged).
fn canonical_signs(lat: &QuadLattice, u: IMat) -> IMat {
    let n = u.cols;
    let base = u.transpose().mul(&lat.e).mul(&u);
    let flatten = |g: &IMat| -> Vec<Int> {
        let mut v = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                v.push(g[(r, c)].clone());
            }
        }
        v
    };
    let mut best_signs = vec![1i8; n];
    let mut best = flatten(&base);
    for mask in 1u32..(1 << n) {
        let signs: Vec<i8> = (0..n)
            .map(|i| if mask >> i & 1 == 1 { -1 } else { 1 })
            .collect();
        let g = IMat::from_fn(n, n, |r, c| {
            let s = (signs[r] * signs[c]) as i64;
            &base[(r, c)] * int(s)
        });
        let f = flatten(&g);
        if f > best {
            best = f;
            best_signs = signs;
        }
    }
    let mut out = u;
    for (c, s) in best_signs.iter().enumerate() {
        if *s < 0 {
            for r in 0..out.rows {
                let t = -out[(r, c)].clone();
                out[(r, c)] = t;
            }
        }
    }
    out
}

/// Search for U with U^T E1 U = E2; None when the lattices are not
/// isometric. Backtracking over short vectors of L1 matching the Gram
/// of L2 column by column.
pub fn isometric(l1: &QuadLattice, l2: &QuadLattice, caps: &Caps) -> Result<Option<UnimodularChange>> {
    if l1.rank() != l2.rank() {
        return Ok(None);
    }
    if l1.det_e() != l2.det_e() {
        return Ok(None);
    }
    let n = l1.rank();
    let bound = (0..n)
        .map(|i| &l2.e[(i, i)] / int(2))
        .max()
        .expect("positive rank");
    // cheap invariant: theta profiles up to the max diagonal must agree
    let b1 = (0..n)
        .map(|i| &l1.e[(i, i)] / int(2))
        .max()
        .unwrap()
        .max(bound.clone());
    if l1.theta_profile(&b1, caps)? != l2.theta_profile(&b1, caps)? {
        return Ok(None);
    }
    let sv = l1.short_vectors(&bound, caps)?;
    // signed candidate list in canonical order
    let mut signed: Vec<(Vec<Int>, Int)> = Vec::with_capacity(sv.len() * 2);
    for (v, q) in sv {
        let neg: Vec<Int> = v.iter().map(|c| -c.clone()).collect();
        signed.push((v, q.clone()));
        signed.push((neg, q));
    }
    signed.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    let mut cols: Vec<Vec<Int>> = Vec::new();
    if backtrack_isometry(l1, l2, &signed, &mut cols, false, &mut None) {
        let u = IMat::from_fn(n, n, |r, c| cols[c][r].clone());
        debug_assert_eq!(u.transpose().mul(&l1.e).mul(&u), l2.e);
        return Ok(Some(UnimodularChange::new(u)?));
    }
    Ok(None)
}

/// All automorphisms of L: backtracking with E1 = E2 = E, complete
/// traversal. Returns (generators, order). The generator list is a
/// greedily chosen set whose closure is the full group.
pub fn automorphisms(lat: &QuadLattice, caps: &Caps) -> Result<(Vec<UnimodularChange>, u64)> {
    let n = lat.rank();
    let bound = (0..n)
        .map(|i| &lat.e[(i, i)] / int(2))
        .max()
        .expect("positive rank");
    let sv = lat.short_vectors(&bound, caps)?;
    let mut signed: Vec<(Vec<Int>, Int)> = Vec::with_capacity(sv.len() * 2);
    for (v, q) in sv {
        let neg: Vec<Int> = v.iter().map(|c| -c.clone()).collect();
        signed.push((v, q.clone()));
        signed.push((neg, q));
    }
    signed.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    let mut cols: Vec<Vec<Int>> = Vec::new();
    let mut all: Vec<IMat> = Vec::new();
    let mut sink = Some(&mut all);
    backtrack_isometry(lat, lat, &signed, &mut cols, true, &mut sink);
    let order = all.len() as u64;
    debug_assert!(order % 2 == 0, "automorphism group must contain -id");
    // greedy generating set
    let mut gens: Vec<IMat> = Vec::new();
    let mut closure: std::collections::BTreeSet<Vec<Int>> = std::collections::BTreeSet::new();
    let key = |m: &IMat| -> Vec<Int> {
        let mut v = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                v.push(m[(r, c)].clone());
            }
        }
        v
    };
    closure.insert(key(&IMat::identity(n)));
    for m in &all {
        if closure.contains(&key(m)) {
            continue;
        }
        gens.push(m.clone());
        // recompute closure with the new generator
        let mut frontier: Vec<IMat> = closure
            .iter()
            .map(|k| IMat::from_fn(n, n, |r, c| k[r * n + c].clone()))
            .collect();
        while let Some(g) = frontier.pop() {
            for h in &gens {
                let prod = g.mul(h);
                if closure.insert(key(&prod)) {
                    frontier.push(prod);
                }
            }
        }
        if closure.len() as u64 == order {
            break;
        }
    }
    let gens = gens
        .into_iter()
        .map(|u| UnimodularChange::new(u).expect("automorphism is unimodular"))
        .collect();
    Ok((gens, order))
}

/// Core backtracker: find columns u_1..u_n among `signed` vectors of L1
/// with (u_i, u_j)_{E1} = (E2)_{ij}. With `collect_all` the whole tree is
/// traversed and solutions are pushed into `sink`; otherwise the first
/// solution is left in `cols` and true returned.
fn backtrack_isometry(
    l1: &QuadLattice,
    l2: &QuadLattice,
    signed: &[(Vec<Int>, Int)],
    cols: &mut Vec<Vec<Int>>,
    collect_all: bool,
    sink: &mut Option<&mut Vec<IMat>>,
) -> bool {
    let n = l2.rank();
    let k = cols.len();
    if k == n {
        let u = IMat::from_fn(n, n, |r, c| cols[c][r].clone());
        if !u.det().abs().is_one() {
            return false;
        }
        if let Some(all) = sink.as_deref_mut() {
            all.push(u);
            return false; // keep searching
        }
        return true;
    }
    let want_q = &l2.e[(k, k)] / int(2);
    'cand: for (v, q) in signed {
        if *q != want_q {
            continue;
        }
        for (i, c) in cols.iter().enumerate() {
            if l1.pair(c, v) != l2.e[(i, k)] {
                continue 'cand;
            }
        }
        cols.push(v.clone());
        if backtrack_isometry(l1, l2, signed, cols, collect_all, sink) {
            return true;
        }
        cols.pop();
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn caps() -> Caps {
        Caps::default()
    }

    fn i4() -> QuadLattice {
        QuadLattice::diagonal(&[1, 1, 1, 1]).unwrap()
    }

    fn kitaoka() -> QuadLattice {
        QuadLattice::diagonal(&[1, 1, 25, 25]).unwrap()
    }

    /// Q = 2x^2 + 2xy + 3y^2
    fn binary_235() -> QuadLattice {
        QuadLattice::from_coeffs(vec![vec![int(2), int(2)], vec![int(3)]]).unwrap()
    }

    #[test]
    fn discriminants() {
        let (det_e, disc) = QuadLattice::diagonal(&[1, 1, 1]).unwrap().discriminant();
        assert_eq!(det_e, int(8));
        assert_eq!(disc, Rat::from_integer(int(1)));

        let (_, disc) = kitaoka().discriminant();
        assert_eq!(disc, Rat::from_integer(int(625)));

        let (det_e, disc) = binary_235().discriminant();
        assert_eq!(det_e, int(20));
        assert_eq!(disc, Rat::from_integer(int(5)));
    }

    #[test]
    fn rejects_indefinite() {
        assert!(QuadLattice::diagonal(&[1, -1]).is_err());
        assert!(QuadLattice::unary(&int(0)).is_err());
    }

    #[test]
    fn short_vectors_i4() {
        let sv = i4().short_vectors(&int(1), &caps()).unwrap();
        assert_eq!(sv.len(), 4);
        for (v, q) in &sv {
            assert_eq!(*q, int(1));
            assert_eq!(v.iter().filter(|c| !c.is_zero()).count(), 1);
        }
        let sv2 = i4().short_vectors(&int(2), &caps()).unwrap();
        assert_eq!(sv2.len(), 16);
        assert_eq!(sv2.iter().filter(|(_, q)| *q == int(2)).count(), 12);
        // prefix consistency
        assert_eq!(&sv2[..4], &sv[..]);
    }

    #[test]
    fn short_vectors_binary() {
        let sv = binary_235().short_vectors(&int(2), &caps()).unwrap();
        assert_eq!(sv.len(), 1);
        assert_eq!(sv[0].0, vec![int(1), int(0)]);
        assert_eq!(sv[0].1, int(2));
    }

    #[test]
    fn minima() {
        assert_eq!(i4().minimum(&caps()).unwrap(), int(1));
        assert_eq!(binary_235().minimum(&caps()).unwrap(), int(2));
        assert_eq!(kitaoka().minimum(&caps()).unwrap(), int(1));
    }

    #[test]
    fn reduce_dim2_example() {
        // Gram B = [[5,4],[4,5]] i.e. Q = 5x^2 + 8xy + 5y^2
        let lat = QuadLattice::from_coeffs(vec![vec![int(5), int(8)], vec![int(5)]]).unwrap();
        let (red, u) = minkowski_reduce(&lat, &caps()).unwrap();
        // expect Gram [[2,1],[1,5]] i.e. coeffs (2, 2, 5)
        assert_eq!(red.coeffs()[0], vec![int(2), int(2)]);
        assert_eq!(red.coeffs()[1], vec![int(5)]);
        assert_eq!(red.det_e(), lat.det_e());
        assert_eq!(u.u.transpose().mul(lat.doubled_gram()).mul(&u.u), *red.doubled_gram());
    }

    #[test]
    fn reduce_already_reduced() {
        let lat = QuadLattice::diagonal(&[1, 2, 3]).unwrap();
        let (red, u) = minkowski_reduce(&lat, &caps()).unwrap();
        assert_eq!(red, lat);
        assert_eq!(u.u, IMat::identity(3));
    }

    #[test]
    fn reduce_sorts_diagonal() {
        let lat = QuadLattice::diagonal(&[9, 1]).unwrap();
        let (red, _) = minkowski_reduce(&lat, &caps()).unwrap();
        assert_eq!(red, QuadLattice::diagonal(&[1, 9]).unwrap());
    }

    #[test]
    fn isometry_reflexive_and_reduction_witness() {
        let lat = binary_235();
        let u = isometric(&lat, &lat, &caps()).unwrap().unwrap();
        assert_eq!(u.u.transpose().mul(lat.doubled_gram()).mul(&u.u), *lat.doubled_gram());

        let a = QuadLattice::from_coeffs(vec![vec![int(5), int(8)], vec![int(5)]]).unwrap();
        let (b, _) = minkowski_reduce(&a, &caps()).unwrap();
        assert!(isometric(&a, &b, &caps()).unwrap().is_some());
    }

    #[test]
    fn isometry_det_obstruction() {
        let a = QuadLattice::diagonal(&[1, 1]).unwrap();
        let b = QuadLattice::diagonal(&[1, 2]).unwrap();
        assert!(isometric(&a, &b, &caps()).unwrap().is_none());
    }

    #[test]
    fn aut_orders() {
        let (_, order) = automorphisms(&QuadLattice::diagonal(&[1, 1]).unwrap(), &caps()).unwrap();
        assert_eq!(order, 8);
        let (_, order) = automorphisms(&i4(), &caps()).unwrap();
        assert_eq!(order, 384);
        // 2x^2 + 2xy + 3y^2 sits on the a = b boundary of the reduced
        // domain, so besides -id it has the isometry (x, y) -> (x+y, -y)
        let lat = binary_235();
        let (gens, order) = automorphisms(&lat, &caps()).unwrap();
        assert_eq!(order, 4);
        for g in &gens {
            assert_eq!(
                g.u.transpose().mul(lat.doubled_gram()).mul(&g.u),
                *lat.doubled_gram()
            );
        }
        // a generic binary form has only +-id
        let generic = QuadLattice::from_coeffs(vec![vec![int(2), int(1)], vec![int(5)]]).unwrap();
        let (_, order) = automorphisms(&generic, &caps()).unwrap();
        assert_eq!(order, 2);
    }

    #[test]
    fn json_round_trip() {
        let lat = kitaoka();
        let v = lat.to_json();
        let back = QuadLattice::from_json(&v).unwrap();
        assert_eq!(lat, back);
    }
}
