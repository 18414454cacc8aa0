//! Local (primitive) representability of one lattice by another over Z_p
//! and over the reals.
//!
//! The decision procedure is uniform in p: depth-first search over
//! solutions of the quadratic system modulo increasing powers of p, with
//! a Newton-margin check that certifies lifting to Z_p as soon as some
//! maximal minor of the Jacobian is large relative to the attained
//! precision. Odd primes additionally get an exact Jordan-splitting
//! classifier used for genus membership.

use crate::arith::{int, inv_mod, legendre, valuation, valuation_rat, Int, Rat};
use crate::caps::Caps;
use crate::error::{Error, Result};
use crate::lattice::QuadLattice;
use crate::mat::{IMat, QMat};
use num_integer::Integer;
use num_traits::{One, Zero};

/// Per-prime certificate for (non-)representability.
#[derive(Clone, Debug)]
pub struct LocalCertificate {
    pub p: u64,
    /// precision exponent at which the decision was reached
    pub e: u32,
    /// witness T mod p^e (entries in [0, p^e)) when the verdict is true
    pub witness: Option<IMat>,
    pub verdict: bool,
    /// the witness meets the Newton margin, so it lifts to an exact
    /// solution over Z_p
    pub liftable: bool,
}

/// The polynomial system T^t E_L T = E_M expressed through Q and the
/// doubled pairing so that every equation is integral (also at p = 2):
/// rows are Q_L(t_j) - m_jj for each column j, then (t_i, t_j)_E - E_M[i,j]
/// for i < j.
struct QuadSystem<'a> {
    l: &'a QuadLattice,
    m: &'a QuadLattice,
}

impl<'a> QuadSystem<'a> {
    fn rows(&self) -> usize {
        let m = self.m.rank();
        m * (m + 1) / 2
    }

    fn cols(&self) -> usize {
        self.l.rank() * self.m.rank()
    }

    /// columns of T as slices of the flat variable vector
    fn eval(&self, t: &IMat) -> Vec<Int> {
        let m = self.m.rank();
        let em = self.m.doubled_gram();
        let mut out = Vec::with_capacity(self.rows());
        for j in 0..m {
            let col = t.col(j);
            out.push(self.l.q(&col) - &em[(j, j)] / int(2));
        }
        for i in 0..m {
            for j in i + 1..m {
                out.push(self.l.pair(&t.col(i), &t.col(j)) - &em[(i, j)]);
            }
        }
        out
    }

    /// Jacobian with respect to the nm entries of T (column-major:
    /// variable index j * n + r for entry T[r][j]).
    fn jacobian(&self, t: &IMat) -> IMat {
        let n = self.l.rank();
        let m = self.m.rank();
        let mut jac = IMat::zero(self.rows(), self.cols());
        let e_cols: Vec<Vec<Int>> = (0..m)
            .map(|j| self.l.doubled_gram().mul_vec(&t.col(j)))
            .collect();
        for j in 0..m {
            // d/dT[r][j] Q(t_j) = (E t_j)_r
            for r in 0..n {
                jac[(j, j * n + r)] = e_cols[j][r].clone();
            }
        }
        let mut row = m;
        for i in 0..m {
            for j in i + 1..m {
                for r in 0..n {
                    jac[(row, i * n + r)] = e_cols[j][r].clone();
                    jac[(row, j * n + r)] = e_cols[i][r].clone();
                }
                row += 1;
            }
        }
        jac
    }
}

/// Exact count of n x m matrices T over Z/p^e with T^t E_L T = E_M mod p^e.
/// Brute force by construction; the precondition caps p^(e n m).
pub fn count_solutions_mod(
    m: &QuadLattice,
    l: &QuadLattice,
    p: u64,
    e: u32,
    caps: &Caps,
) -> Result<u64> {
    let n = l.rank();
    let mm = m.rank();
    let cells = (n * mm) as u32;
    if Int::from(p).pow(e * cells) > Int::from(caps.mod_pe) {
        return Err(Error::Resource {
            what: "count_solutions_mod",
            cap: caps.mod_pe,
        });
    }
    let pe = Int::from(p).pow(e);
    let el = l.doubled_gram();
    let em = m.doubled_gram();
    let mut t = IMat::zero(n, mm);
    let mut count = 0u64;
    // odometer over all residue matrices
    loop {
        // check congruence T^t E T = E_M mod p^e
        let g = t.transpose().mul(el).mul(&t);
        let mut ok = true;
        'outer: for i in 0..mm {
            for j in 0..mm {
                if !((&g[(i, j)] - &em[(i, j)]).mod_floor(&pe)).is_zero() {
                    ok = false;
                    break 'outer;
                }
            }
        }
        if ok {
            count += 1;
        }
        // increment
        let mut carry = true;
        'inc: for r in 0..n {
            for c in 0..mm {
                let cell = &mut t[(r, c)];
                *cell += 1;
                if *cell == pe {
                    *cell = Int::zero();
                } else {
                    carry = false;
                    break 'inc;
                }
            }
        }
        if carry {
            break;
        }
    }
    Ok(count)
}

/// Search state for the p-adic lifting tree.
struct TreeSearch<'a> {
    sys: QuadSystem<'a>,
    p: u64,
    primitive: bool,
    target_e: u32,
    /// equal-rank equal-det searches: survival at the depth cap already
    /// certifies an isometry by the classical stable-range theorem
    survival_is_proof: bool,
    nodes: u64,
    node_cap: u64,
}

enum TreeOutcome {
    /// liftable witness found at the stated precision
    Witness(IMat, u32),
    /// the whole tree died before the depth cap: certified no solution
    Exhausted,
    /// branches alive at the depth cap but none with a Newton margin
    Undecided,
}

impl<'a> TreeSearch<'a> {
    fn run(&mut self, depth_cap: u32) -> Result<TreeOutcome> {
        let n = self.sys.l.rank();
        let m = self.sys.m.rank();
        let p = Int::from(self.p);
        // level 1: enumerate T mod p column by column with constraint checks
        let mut sols: Vec<IMat> = Vec::new();
        let mut t = IMat::zero(n, m);
        self.level_one(&mut t, 0, &mut sols)?;
        let mut undecided = false;
        for s in sols {
            match self.descend(s, 1, depth_cap, &p)? {
                TreeOutcome::Witness(w, e) => return Ok(TreeOutcome::Witness(w, e)),
                TreeOutcome::Undecided => undecided = true,
                TreeOutcome::Exhausted => {}
            }
        }
        Ok(if undecided {
            TreeOutcome::Undecided
        } else {
            TreeOutcome::Exhausted
        })
    }

    /// Enumerate level-1 solutions (mod p) column by column; primitivity
    /// is the rank-m condition mod p, checked on the full matrix.
    fn level_one(&mut self, t: &mut IMat, col: usize, out: &mut Vec<IMat>) -> Result<()> {
        let n = self.sys.l.rank();
        let m = self.sys.m.rank();
        let p = int(self.p as i64);
        if col == m {
            if self.primitive && rank_mod_p(t, self.p) < m {
                return Ok(());
            }
            out.push(t.clone());
            return Ok(());
        }
        let em = self.sys.m.doubled_gram();
        let mut x = vec![Int::zero(); n];
        loop {
            self.nodes += 1;
            if self.nodes > self.node_cap {
                return Err(Error::Resource {
                    what: "local representability search",
                    cap: self.node_cap,
                });
            }
            // constraints for this column at level 1
            let q_ok = ((self.sys.l.q(&x) - &em[(col, col)] / int(2)).mod_floor(&p)).is_zero();
            let pair_ok = (0..col).all(|i| {
                ((self.sys.l.pair(&t.col(i), &x) - &em[(i, col)]).mod_floor(&p)).is_zero()
            });
            if q_ok && pair_ok {
                for r in 0..n {
                    t[(r, col)] = x[r].clone();
                }
                self.level_one(t, col + 1, out)?;
            }
            // odometer on x
            let mut carry = true;
            for cell in x.iter_mut() {
                *cell += 1;
                if *cell == p {
                    *cell = Int::zero();
                } else {
                    carry = false;
                    break;
                }
            }
            if carry {
                for r in 0..n {
                    t[(r, col)] = Int::zero();
                }
                return Ok(());
            }
        }
    }

    /// Extend a solution known mod p^level; check the Newton margin first.
    fn descend(
        &mut self,
        t: IMat,
        level: u32,
        depth_cap: u32,
        p: &Int,
    ) -> Result<TreeOutcome> {
        self.nodes += 1;
        if self.nodes > self.node_cap {
            return Err(Error::Resource {
                what: "local representability search",
                cap: self.node_cap,
            });
        }
        if let Some((kappa, pivots)) = self.margin(&t, level) {
            if level >= 2 * kappa + 1 {
                // certified liftable: refine to the target precision
                let w = self.newton_refine(t, &pivots)?;
                return Ok(TreeOutcome::Witness(w, self.target_e));
            }
        }
        if level >= depth_cap {
            if self.survival_is_proof {
                let pe = p.pow(self.target_e);
                let n = self.sys.l.rank();
                let m = self.sys.m.rank();
                let w = IMat::from_fn(n, m, |r, c| t[(r, c)].mod_floor(&pe));
                return Ok(TreeOutcome::Witness(w, level.min(self.target_e)));
            }
            return Ok(TreeOutcome::Undecided);
        }
        // extensions T + p^level S with S mod p solving the linearized system
        let pl = p.pow(level);
        let pl1 = p.pow(level + 1);
        let f = self.sys.eval(&t);
        if f.iter().any(|v| !(v.mod_floor(&pl)).is_zero()) {
            return Ok(TreeOutcome::Exhausted);
        }
        let rhs: Vec<Int> = f
            .iter()
            .map(|v| (-(v / &pl)).mod_floor(p))
            .collect();
        let jac = self.sys.jacobian(&t);
        let sols = solve_mod_p(&jac, &rhs, self.p);
        let Some((particular, kernel)) = sols else {
            return Ok(TreeOutcome::Exhausted);
        };
        let n = self.sys.l.rank();
        let m = self.sys.m.rank();
        let dim = kernel.len();
        let mut undecided = false;
        // iterate over particular + span(kernel)
        let mut combo = vec![0u64; dim];
        loop {
            let mut s = particular.clone();
            for (ci, kv) in combo.iter().zip(&kernel) {
                for (si, kvi) in s.iter_mut().zip(kv) {
                    *si = (&*si + kvi * int(*ci as i64)).mod_floor(p);
                }
            }
            // T' = T + p^level S
            let t2 = IMat::from_fn(n, m, |r, c| {
                (&t[(r, c)] + &pl * &s[c * n + r]).mod_floor(&pl1)
            });
            match self.descend(t2, level + 1, depth_cap, p)? {
                TreeOutcome::Witness(w, e) => return Ok(TreeOutcome::Witness(w, e)),
                TreeOutcome::Undecided => undecided = true,
                TreeOutcome::Exhausted => {}
            }
            // odometer over F_p^dim
            let mut carry = true;
            for c in combo.iter_mut() {
                *c += 1;
                if *c == self.p {
                    *c = 0;
                } else {
                    carry = false;
                    break;
                }
            }
            if carry {
                break;
            }
        }
        Ok(if undecided {
            TreeOutcome::Undecided
        } else {
            TreeOutcome::Exhausted
        })
    }

    /// Minimal maximal-minor valuation of the Jacobian visible at this
    /// precision (= the sum of the p-parts of its invariant factors),
    /// together with a column set achieving it. None when the value is
    /// not determined below `level`.
    fn margin(&self, t: &IMat, level: u32) -> Option<(u32, Vec<usize>)> {
        let jac = self.sys.jacobian(t);
        minor_valuation(&jac, self.p, level)
    }

    /// Newton refinement of a margin witness to the target precision on
    /// the square subsystem given by `vars`, re-verified against the
    /// full system.
    fn newton_refine(&self, t: IMat, vars: &[usize]) -> Result<IMat> {
        let n = self.sys.l.rank();
        let m = self.sys.m.rank();
        let r = self.sys.rows();
        let p = Int::from(self.p);
        let kappa = {
            let jac = self.sys.jacobian(&t);
            let sub = IMat::from_fn(r, r, |i, j| jac[(i, vars[j])].clone());
            valuation(&sub.det(), self.p)
        };
        let work = self.target_e + 2 * kappa + 2;
        let pw = p.pow(work);
        let mut cur = t;
        for _ in 0..64 {
            let f = self.sys.eval(&cur);
            if f.iter().all(|v| (v.mod_floor(&pw)).is_zero()) {
                break;
            }
            let jac = self.sys.jacobian(&cur);
            let sub = IMat::from_fn(r, r, |i, j| jac[(i, vars[j])].clone());
            let det = sub.det();
            let vdet = valuation(&det, self.p);
            // delta = -adj(sub) f / det on the selected variables
            let adj = adjugate(&sub);
            let num: Vec<Int> = (0..r)
                .map(|i| -(0..r).map(|j| &adj[(i, j)] * &f[j]).sum::<Int>())
                .collect();
            let pk = p.pow(vdet);
            let unit = &det / &pk;
            let unit_inv = inv_mod(&unit, &pw).expect("unit is invertible");
            for (idx, var) in vars.iter().enumerate() {
                let (q, rem) = num[idx].div_rem(&pk);
                if !rem.is_zero() {
                    return Err(Error::Precision {
                        what: "newton_refine division",
                        p: self.p,
                        e: self.target_e,
                    });
                }
                let delta = (q * &unit_inv).mod_floor(&pw);
                let (rr, cc) = (var % n, var / n);
                cur[(rr, cc)] = (&cur[(rr, cc)] + delta).mod_floor(&pw);
            }
        }
        let pe = p.pow(self.target_e);
        let out = IMat::from_fn(n, m, |rr, cc| cur[(rr, cc)].mod_floor(&pe));
        // final re-verification, independent of the search path
        let f = self.sys.eval(&out);
        if !f.iter().all(|v| (v.mod_floor(&pe)).is_zero()) {
            return Err(Error::Precision {
                what: "newton_refine verification",
                p: self.p,
                e: self.target_e,
            });
        }
        if self.primitive && rank_mod_p(&out, self.p) < m {
            return Err(Error::Precision {
                what: "newton_refine primitivity",
                p: self.p,
                e: self.target_e,
            });
        }
        Ok(out)
    }
}

/// Greedy min-valuation elimination over Z/p^level: computes the
/// valuation of the gcd of the maximal minors (the sum of the p-parts of
/// the invariant factors) of a full-row-rank-over-Q_p matrix, plus the
/// pivot columns realizing it. Returns None when some pivot is not
/// determined below the working precision.
fn minor_valuation(a: &IMat, p: u64, level: u32) -> Option<(u32, Vec<usize>)> {
    let rows = a.rows;
    let pi = Int::from(p);
    let pl = pi.pow(level);
    let mut m = IMat::from_fn(a.rows, a.cols, |r, c| a[(r, c)].mod_floor(&pl));
    let mut used_rows = vec![false; rows];
    let mut pivot_cols: Vec<usize> = Vec::new();
    let mut total = 0u32;
    for _ in 0..rows {
        // minimal-valuation entry among unused rows / unused cols
        let mut best: Option<(u32, usize, usize)> = None;
        for r in 0..rows {
            if used_rows[r] {
                continue;
            }
            for c in 0..m.cols {
                if pivot_cols.contains(&c) || m[(r, c)].is_zero() {
                    continue;
                }
                let v = valuation(&m[(r, c)], p);
                if v >= level {
                    continue;
                }
                if best.map_or(true, |(bv, _, _)| v < bv) {
                    best = Some((v, r, c));
                }
            }
        }
        let (v, pr, pc) = best?;
        total += v;
        if total >= level {
            return None;
        }
        used_rows[pr] = true;
        pivot_cols.push(pc);
        // eliminate column pc from the other unused rows
        let pk = pi.pow(v);
        let unit = &m[(pr, pc)] / &pk;
        let unit_inv = inv_mod(&unit, &pl).expect("unit invertible");
        for r in 0..rows {
            if used_rows[r] || m[(r, pc)].is_zero() {
                continue;
            }
            let (q, rem) = m[(r, pc)].div_rem(&pk);
            debug_assert!(rem.is_zero(), "pivot has minimal valuation");
            let f = (q * &unit_inv).mod_floor(&pl);
            for c in 0..m.cols {
                let t = (&m[(r, c)] - &f * &m[(pr, c)]).mod_floor(&pl);
                m[(r, c)] = t;
            }
        }
    }
    pivot_cols.sort_unstable();
    Some((total, pivot_cols))
}

fn adjugate(a: &IMat) -> IMat {
    let n = a.rows;
    if n == 1 {
        return IMat::identity(1);
    }
    IMat::from_fn(n, n, |r, c| {
        // cofactor C_{c,r}
        let minor = IMat::from_fn(n - 1, n - 1, |i, j| {
            let ii = if i < c { i } else { i + 1 };
            let jj = if j < r { j } else { j + 1 };
            a[(ii, jj)].clone()
        });
        let d = minor.det();
        if (r + c) % 2 == 0 {
            d
        } else {
            -d
        }
    })
}

fn rank_mod_p(t: &IMat, p: u64) -> usize {
    let p = Int::from(p);
    let mut a = IMat::from_fn(t.rows, t.cols, |r, c| t[(r, c)].mod_floor(&p));
    let mut rank = 0;
    for col in 0..a.cols {
        let pivot = (rank..a.rows).find(|&r| !a[(r, col)].is_zero());
        let Some(pr) = pivot else { continue };
        a.swap_rows(rank, pr);
        let inv = inv_mod(&a[(rank, col)], &p).expect("non-zero residue mod prime");
        for r in 0..a.rows {
            if r != rank && !a[(r, col)].is_zero() {
                let f = (&a[(r, col)] * &inv).mod_floor(&p);
                for c in 0..a.cols {
                    let t = (&a[(r, c)] - &f * &a[(rank, c)]).mod_floor(&p);
                    a[(r, c)] = t;
                }
            }
        }
        rank += 1;
        if rank == a.rows {
            break;
        }
    }
    rank
}

/// Solve jac * s = rhs over F_p; returns a particular solution and a
/// kernel basis, or None when inconsistent.
fn solve_mod_p(jac: &IMat, rhs: &[Int], p: u64) -> Option<(Vec<Int>, Vec<Vec<Int>>)> {
    let pi = Int::from(p);
    let rows = jac.rows;
    let cols = jac.cols;
    let mut a = IMat::from_fn(rows, cols + 1, |r, c| {
        if c < cols {
            jac[(r, c)].mod_floor(&pi)
        } else {
            rhs[r].mod_floor(&pi)
        }
    });
    let mut pivot_cols = Vec::new();
    let mut rank = 0usize;
    for col in 0..cols {
        let pivot = (rank..rows).find(|&r| !a[(r, col)].is_zero());
        let Some(pr) = pivot else { continue };
        a.swap_rows(rank, pr);
        let inv = inv_mod(&a[(rank, col)], &pi).expect("pivot invertible");
        for c in col..=cols {
            let t = (&a[(rank, c)] * &inv).mod_floor(&pi);
            a[(rank, c)] = t;
        }
        for r in 0..rows {
            if r != rank && !a[(r, col)].is_zero() {
                let f = a[(r, col)].clone();
                for c in col..=cols {
                    let t = (&a[(r, c)] - &f * &a[(rank, c)]).mod_floor(&pi);
                    a[(r, c)] = t;
                }
            }
        }
        pivot_cols.push(col);
        rank += 1;
        if rank == rows {
            break;
        }
    }
    // consistency
    for r in rank..rows {
        if !a[(r, cols)].is_zero() {
            return None;
        }
    }
    let mut particular = vec![Int::zero(); cols];
    for (i, &pc) in pivot_cols.iter().enumerate() {
        particular[pc] = a[(i, cols)].clone();
    }
    let free: Vec<usize> = (0..cols).filter(|c| !pivot_cols.contains(c)).collect();
    let mut kernel = Vec::with_capacity(free.len());
    for &fc in &free {
        let mut v = vec![Int::zero(); cols];
        v[fc] = Int::one();
        for (i, &pc) in pivot_cols.iter().enumerate() {
            v[pc] = (-&a[(i, fc)]).mod_floor(&pi);
        }
        kernel.push(v);
    }
    Some((particular, kernel))
}

/// Decision precision from the spec of the lifting argument.
fn decision_precision(m: &QuadLattice, l: &QuadLattice, p: u64) -> u32 {
    let v = valuation(&(int(4) * l.det_e() * m.det_e()), p);
    v + 3
}

/// Is M primitively representable by L over Z_p? The `primitive` flag
/// false relaxes to arbitrary representations (used by descent and by
/// callers interested in the classical non-primitive question).
pub fn is_locally_representable(
    m: &QuadLattice,
    l: &QuadLattice,
    p: u64,
    primitive: bool,
    caps: &Caps,
) -> Result<LocalCertificate> {
    if m.rank() > l.rank() {
        return Err(Error::RankMismatch {
            m: m.rank(),
            n: l.rank(),
            bound: l.rank(),
        });
    }
    if !primitive {
        // descent: for rank-1 M an imprimitive representation is p T' for
        // a representation of the form scaled by 1/p^2
        if m.rank() != 1 {
            return Err(Error::InvalidInput(
                "imprimitive local representability is implemented for rank-1 M only".into(),
            ));
        }
        let cert = is_locally_representable(m, l, p, true, caps)?;
        if cert.verdict {
            return Ok(cert);
        }
        let p2 = int((p * p) as i64);
        let scaled: Option<Vec<Vec<Int>>> = m
            .coeffs()
            .iter()
            .map(|row| {
                row.iter()
                    .map(|c| {
                        let (q, r) = c.div_rem(&p2);
                        if r.is_zero() {
                            Some(q)
                        } else {
                            None
                        }
                    })
                    .collect()
            })
            .collect();
        if let Some(saved) = scaled {
            let m2 = QuadLattice::from_coeffs(saved)?;
            let mut cert = is_locally_representable(&m2, l, p, false, caps)?;
            if cert.verdict {
                // scale the witness back up
                if let Some(w) = cert.witness.take() {
                    cert.witness = Some(w.scale(&int(p as i64)));
                }
                return Ok(cert);
            }
        }
        return Ok(LocalCertificate {
            p,
            e: decision_precision(m, l, p),
            witness: None,
            verdict: false,
            liftable: false,
        });
    }
    // Equal ranks: a primitive representation is square with unit
    // invariant factors, i.e. a Z_p-isometry.
    if m.rank() == l.rank() {
        let e = decision_precision(m, l, p);
        if m.doubled_gram() == l.doubled_gram() {
            let pe = Int::from(p).pow(e);
            let id = IMat::from_fn(l.rank(), l.rank(), |r, c| {
                if r == c {
                    Int::one().mod_floor(&pe)
                } else {
                    Int::zero()
                }
            });
            return Ok(LocalCertificate {
                p,
                e,
                witness: Some(id),
                verdict: true,
                liftable: true,
            });
        }
        if p % 2 == 1 {
            let verdict = jordan_invariants_odd(m, p) == jordan_invariants_odd(l, p);
            return Ok(LocalCertificate {
                p,
                e,
                witness: None,
                verdict,
                liftable: false,
            });
        }
    }
    let survival_is_proof = m.rank() == l.rank() && m.det_e() == l.det_e();
    let mut e_star = decision_precision(m, l, p);
    for _escalation in 0..3 {
        let mut search = TreeSearch {
            sys: QuadSystem { l, m },
            p,
            primitive,
            target_e: e_star,
            survival_is_proof,
            nodes: 0,
            node_cap: caps.local_nodes,
        };
        match search.run(e_star)? {
            TreeOutcome::Witness(w, e) => {
                return Ok(LocalCertificate {
                    p,
                    e,
                    witness: Some(w),
                    verdict: true,
                    liftable: true,
                });
            }
            TreeOutcome::Exhausted => {
                return Ok(LocalCertificate {
                    p,
                    e: e_star,
                    witness: None,
                    verdict: false,
                    liftable: false,
                });
            }
            TreeOutcome::Undecided => {
                e_star += 2;
            }
        }
    }
    Err(Error::Precision {
        what: "is_locally_representable",
        p,
        e: e_star,
    })
}

/// Primitive variant per the hypotheses of the local-global statements.
pub fn is_locally_primitively_representable(
    m: &QuadLattice,
    l: &QuadLattice,
    p: u64,
    caps: &Caps,
) -> Result<LocalCertificate> {
    is_locally_representable(m, l, p, true, caps)
}

#[derive(Clone, Debug)]
pub struct EverywhereReport {
    pub verdict: bool,
    /// positive definiteness plus the rank inequality settle the real place
    pub real_ok: bool,
    pub certificates: Vec<LocalCertificate>,
}

/// Local primitive representability at every place. Finite primes are
/// checked exactly for p | 2 det(E_L) det(E_M); elsewhere both lattices
/// are unimodular and representability is automatic in these ranks.
pub fn locally_primitively_representable_everywhere(
    m: &QuadLattice,
    l: &QuadLattice,
    caps: &Caps,
) -> Result<EverywhereReport> {
    locally_representable_everywhere(m, l, true, caps)
}

pub fn locally_representable_everywhere(
    m: &QuadLattice,
    l: &QuadLattice,
    primitive: bool,
    caps: &Caps,
) -> Result<EverywhereReport> {
    if m.rank() > l.rank() {
        return Err(Error::RankMismatch {
            m: m.rank(),
            n: l.rank(),
            bound: l.rank(),
        });
    }
    let real_ok = true; // definite lattices with rank(M) <= rank(L)
    let product = int(2) * l.det_e() * m.det_e();
    let primes = crate::arith::prime_divisors(&product);
    let mut certificates = Vec::new();
    let mut verdict = real_ok;
    for p in primes {
        let cert = is_locally_representable(m, l, p, primitive, caps)?;
        verdict &= cert.verdict;
        certificates.push(cert);
    }
    Ok(EverywhereReport {
        verdict,
        real_ok,
        certificates,
    })
}

/// Jordan data of L over Z_p at an odd prime: per scale e the rank and
/// the Legendre class of the unit determinant. A complete isometry
/// invariant over Z_p for odd p.
pub fn jordan_invariants_odd(l: &QuadLattice, p: u64) -> Vec<(i64, usize, i32)> {
    assert!(p % 2 == 1, "odd primes only");
    let n = l.rank();
    let mut a = QMat::from_fn(n, n, |r, c| {
        Rat::new(l.doubled_gram()[(r, c)].clone(), int(2))
    });
    let mut diag: Vec<Rat> = Vec::with_capacity(n);
    let mut size = n;
    while size > 0 {
        let off = n - size;
        // pivot selection: minimal valuation, prefer diagonal
        let mut best: Option<(i64, usize, usize)> = None;
        for r in off..n {
            for c in r..n {
                if a[(r, c)].is_zero() {
                    continue;
                }
                let v = valuation_rat(&a[(r, c)], p);
                let better = match &best {
                    None => true,
                    Some((bv, br, bc)) => {
                        v < *bv || (v == *bv && *br != *bc && r == c)
                    }
                };
                if better {
                    best = Some((v, r, c));
                }
            }
        }
        let (_, r, c) = best.expect("nondegenerate form");
        if r != c {
            // fold the off-diagonal entry onto the diagonal: v_r += v_c
            for i in 0..n {
                let t = &a[(i, r)] + &a[(i, c)];
                a[(i, r)] = t;
            }
            for i in 0..n {
                let t = &a[(r, i)] + &a[(c, i)];
                a[(r, i)] = t;
            }
        }
        // move pivot to the leading position of the block
        if r != off {
            for i in 0..n {
                let t = a[(i, r)].clone();
                a[(i, r)] = a[(i, off)].clone();
                a[(i, off)] = t;
            }
            for i in 0..n {
                let t = a[(r, i)].clone();
                a[(r, i)] = a[(off, i)].clone();
                a[(off, i)] = t;
            }
        }
        let pv = a[(off, off)].clone();
        debug_assert!(!pv.is_zero());
        for i in off + 1..n {
            if a[(i, off)].is_zero() {
                continue;
            }
            let f = &a[(i, off)] / &pv;
            for j in 0..n {
                let t = &a[(off, j)] * &f;
                a[(i, j)] -= t;
            }
            for j in 0..n {
                let t = &a[(j, off)] * &f;
                a[(j, i)] -= t;
            }
        }
        diag.push(pv);
        size -= 1;
    }
    // group by scale
    let mut entries: Vec<(i64, i32)> = diag
        .iter()
        .map(|d| {
            let v = valuation_rat(d, p);
            let pv = Rat::from_integer(int(p as i64).pow(v.unsigned_abs() as u32));
            let unit = if v >= 0 { d / pv } else { d * pv };
            let cls = legendre(&(unit.numer() * unit.denom()), p);
            (v, cls)
        })
        .collect();
    entries.sort_unstable();
    let mut out: Vec<(i64, usize, i32)> = Vec::new();
    for (v, cls) in entries {
        match out.last_mut() {
            Some((sv, count, det_cls)) if *sv == v => {
                *count += 1;
                *det_cls *= cls;
            }
            _ => out.push((v, 1, cls)),
        }
    }
    out
}

/// Are L1 and L2 isometric over Z_p? Odd primes compare Jordan
/// invariants exactly; p = 2 runs the lifting tree on the rank-n
/// isometry system (primitive = invertible for equal ranks and dets).
pub fn locally_isometric(
    l1: &QuadLattice,
    l2: &QuadLattice,
    p: u64,
    caps: &Caps,
) -> Result<bool> {
    if l1.rank() != l2.rank() || l1.det_e() != l2.det_e() {
        return Ok(false);
    }
    if p % 2 == 1 {
        return Ok(jordan_invariants_odd(l1, p) == jordan_invariants_odd(l2, p));
    }
    // cheap mod-8 refutation: representation counts of small forms are
    // Z/8 invariants of the class
    for t in 1..=8i64 {
        let m = QuadLattice::unary(&int(t))?;
        if count_solutions_mod(&m, l1, 2, 3, caps)? != count_solutions_mod(&m, l2, 2, 3, caps)? {
            return Ok(false);
        }
    }
    let cert = is_locally_representable(l2, l1, 2, true, caps)?;
    Ok(cert.verdict)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn caps() -> Caps {
        Caps::default()
    }

    fn kitaoka() -> QuadLattice {
        QuadLattice::diagonal(&[1, 1, 25, 25]).unwrap()
    }

    #[test]
    fn count_mod_examples() {
        let one = QuadLattice::unary(&int(1)).unwrap();
        let i1 = QuadLattice::diagonal(&[1]).unwrap();
        assert_eq!(count_solutions_mod(&one, &i1, 3, 1, &caps()).unwrap(), 2);
        let two = QuadLattice::unary(&int(2)).unwrap();
        assert_eq!(count_solutions_mod(&two, &i1, 3, 1, &caps()).unwrap(), 0);
        assert!(QuadLattice::unary(&int(0)).is_err());
    }

    #[test]
    fn local_five_by_i3() {
        let five = QuadLattice::unary(&int(5)).unwrap();
        let i3 = QuadLattice::diagonal(&[1, 1, 1]).unwrap();
        let cert = is_locally_primitively_representable(&five, &i3, 5, &caps()).unwrap();
        assert!(cert.verdict && cert.liftable);
        let w = cert.witness.unwrap();
        // witness satisfies the congruence mod 5^e by construction;
        // re-check it independently here
        let pe = int(5).pow(cert.e);
        let q = i3.q(&w.col(0));
        assert!(((q - int(5)).mod_floor(&pe)).is_zero());
    }

    #[test]
    fn local_self_identity() {
        let l = kitaoka();
        for p in [2u64, 5] {
            let cert = is_locally_primitively_representable(&l, &l, p, &caps()).unwrap();
            assert!(cert.verdict, "self representation at p = {p}");
        }
    }

    #[test]
    fn seven_not_three_squares_at_two() {
        let seven = QuadLattice::unary(&int(7)).unwrap();
        let i3 = QuadLattice::diagonal(&[1, 1, 1]).unwrap();
        let cert = is_locally_primitively_representable(&seven, &i3, 2, &caps()).unwrap();
        assert!(!cert.verdict);
        // not even imprimitively
        let cert = is_locally_representable(&seven, &i3, 2, false, &caps()).unwrap();
        assert!(!cert.verdict);
        let report = locally_primitively_representable_everywhere(&seven, &i3, &caps()).unwrap();
        assert!(!report.verdict);
    }

    #[test]
    fn kitaoka_local_pattern() {
        let l = kitaoka();
        // 3, 6, 12 have primitive local representations everywhere
        for t in [3i64, 6, 12] {
            let m = QuadLattice::unary(&int(t)).unwrap();
            let rep = locally_primitively_representable_everywhere(&m, &l, &caps()).unwrap();
            assert!(rep.verdict, "t = {t} should be locally primitively representable");
        }
        // 24 and 48 are locally representable but not primitively at p = 2
        for t in [24i64, 48] {
            let m = QuadLattice::unary(&int(t)).unwrap();
            let prim = is_locally_primitively_representable(&m, &l, 2, &caps()).unwrap();
            assert!(!prim.verdict, "t = {t} has no primitive local representation at 2");
            let any = is_locally_representable(&m, &l, 2, false, &caps()).unwrap();
            assert!(any.verdict, "t = {t} is locally representable at 2");
        }
    }

    #[test]
    fn everywhere_trivial_cases() {
        let one = QuadLattice::unary(&int(1)).unwrap();
        let i4 = QuadLattice::diagonal(&[1, 1, 1, 1]).unwrap();
        let rep = locally_primitively_representable_everywhere(&one, &i4, &caps()).unwrap();
        assert!(rep.verdict);
        let three = QuadLattice::unary(&int(3)).unwrap();
        let rep = locally_primitively_representable_everywhere(&three, &kitaoka(), &caps()).unwrap();
        assert!(rep.verdict);
    }

    #[test]
    fn jordan_odd_invariants() {
        let l = kitaoka();
        let inv = jordan_invariants_odd(&l, 5);
        assert_eq!(inv.len(), 2);
        assert_eq!(inv[0].0, 0);
        assert_eq!(inv[0].1, 2);
        assert_eq!(inv[1].0, 2);
        assert_eq!(inv[1].1, 2);
        // unimodular at 3
        let inv3 = jordan_invariants_odd(&l, 3);
        assert_eq!(inv3.len(), 1);
        assert_eq!(inv3[0], (0, 4, legendre(&l.det_e(), 3)));
    }

    #[test]
    fn locally_isometric_detects_difference() {
        let a = QuadLattice::diagonal(&[1, 1, 1, 25]).unwrap();
        let b = QuadLattice::diagonal(&[1, 1, 5, 5]).unwrap();
        assert_eq!(a.det_e(), b.det_e());
        assert!(!locally_isometric(&a, &b, 5, &caps()).unwrap());
        assert!(locally_isometric(&a, &a, 5, &caps()).unwrap());
        assert!(locally_isometric(&a, &a, 2, &caps()).unwrap());
    }
}
