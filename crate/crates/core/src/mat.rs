//! Dense exact matrices over Z and Q with the normal forms the rest of
//! the crate is built on: Bareiss determinants, Hermite and Smith normal
//! forms with transformation matrices, saturated integer kernels.

use crate::arith::{Int, Rat};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use std::fmt;
use std::ops::{Index, IndexMut};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IMat {
    pub rows: usize,
    pub cols: usize,
    data: Vec<Int>,
}

impl Index<(usize, usize)> for IMat {
    type Output = Int;
    fn index(&self, (r, c): (usize, usize)) -> &Int {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for IMat {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Int {
        &mut self.data[r * self.cols + c]
    }
}

impl fmt::Debug for IMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "IMat {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                write!(f, "{} ", self[(r, c)])?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl IMat {
    pub fn zero(rows: usize, cols: usize) -> Self {
        IMat {
            rows,
            cols,
            data: vec![Int::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = IMat::zero(n, n);
        for i in 0..n {
            m[(i, i)] = Int::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Int) -> Self {
        let mut m = IMat::zero(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m[(r, c)] = f(r, c);
            }
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Int>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        assert!(rows.iter().all(|x| x.len() == c), "ragged rows");
        IMat {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn from_i64(rows: &[&[i64]]) -> Self {
        IMat::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&v| Int::from(v)).collect())
                .collect(),
        )
    }

    pub fn row(&self, r: usize) -> &[Int] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn col(&self, c: usize) -> Vec<Int> {
        (0..self.rows).map(|r| self[(r, c)].clone()).collect()
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> IMat {
        IMat::from_fn(self.cols, self.rows, |r, c| self[(c, r)].clone())
    }

    pub fn mul(&self, other: &IMat) -> IMat {
        assert_eq!(self.cols, other.rows, "dimension mismatch in mul");
        let mut out = IMat::zero(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(r, k)];
                if a.is_zero() {
                    continue;
                }
                for c in 0..other.cols {
                    let t = a * &other[(k, c)];
                    out[(r, c)] += t;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Int]) -> Vec<Int> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum::<Int>()
            })
            .collect()
    }

    pub fn add(&self, other: &IMat) -> IMat {
        assert!(self.rows == other.rows && self.cols == other.cols);
        IMat::from_fn(self.rows, self.cols, |r, c| &self[(r, c)] + &other[(r, c)])
    }

    pub fn neg(&self) -> IMat {
        IMat::from_fn(self.rows, self.cols, |r, c| -self[(r, c)].clone())
    }

    pub fn scale(&self, s: &Int) -> IMat {
        IMat::from_fn(self.rows, self.cols, |r, c| &self[(r, c)] * s)
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|r| (0..r).all(|c| self[(r, c)] == self[(c, r)]))
    }

    /// Fraction-free Bareiss determinant.
    pub fn det(&self) -> Int {
        assert!(self.is_square(), "determinant of non-square matrix");
        let n = self.rows;
        if n == 0 {
            return Int::one();
        }
        let mut a = self.clone();
        let mut sign = Int::one();
        let mut prev = Int::one();
        for k in 0..n - 1 {
            if a[(k, k)].is_zero() {
                match (k + 1..n).find(|&r| !a[(r, k)].is_zero()) {
                    Some(r) => {
                        for c in 0..n {
                            let t = a[(k, c)].clone();
                            a[(k, c)] = a[(r, c)].clone();
                            a[(r, c)] = t;
                        }
                        sign = -sign;
                    }
                    None => return Int::zero(),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let t = (&a[(i, j)] * &a[(k, k)] - &a[(i, k)] * &a[(k, j)]) / &prev;
                    a[(i, j)] = t;
                }
                a[(i, k)] = Int::zero();
            }
            prev = a[(k, k)].clone();
        }
        sign * a[(n - 1, n - 1)].clone()
    }

    /// Leading principal minors det(A[..k, ..k]) for k = 1..=n.
    pub fn leading_principal_minors(&self) -> Vec<Int> {
        assert!(self.is_square());
        (1..=self.rows)
            .map(|k| IMat::from_fn(k, k, |r, c| self[(r, c)].clone()).det())
            .collect()
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data
                .swap(a * self.cols + c, b * self.cols + c);
        }
    }

    pub fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for r in 0..self.rows {
            self.data.swap(r * self.cols + a, r * self.cols + b);
        }
    }

    /// rows[b] += q * rows[a]
    pub fn row_op(&mut self, b: usize, a: usize, q: &Int) {
        for c in 0..self.cols {
            let t = &self[(a, c)] * q;
            self[(b, c)] += t;
        }
    }

    /// cols[b] += q * cols[a]
    pub fn col_op(&mut self, b: usize, a: usize, q: &Int) {
        for r in 0..self.rows {
            let t = &self[(r, a)] * q;
            self[(r, b)] += t;
        }
    }

    pub fn to_rat(&self) -> QMat {
        QMat::from_fn(self.rows, self.cols, |r, c| {
            Rat::from_integer(self[(r, c)].clone())
        })
    }

    /// Row-style Hermite normal form of the lattice spanned by the rows.
    /// Returns a matrix whose non-zero rows are an upper-echelon basis with
    /// positive pivots and reduced entries above each pivot.
    pub fn row_hnf(&self) -> IMat {
        let mut a = self.clone();
        let (rows, cols) = (a.rows, a.cols);
        let mut pivot_row = 0usize;
        for col in 0..cols {
            if pivot_row >= rows {
                break;
            }
            // gcd out the column below pivot_row
            loop {
                let mut best: Option<usize> = None;
                for r in pivot_row..rows {
                    if !a[(r, col)].is_zero() {
                        let better = match best {
                            None => true,
                            Some(b) => a[(r, col)].abs() < a[(b, col)].abs(),
                        };
                        if better {
                            best = Some(r);
                        }
                    }
                }
                let Some(b) = best else { break };
                a.swap_rows(pivot_row, b);
                let mut done = true;
                let pv = a[(pivot_row, col)].clone();
                for r in pivot_row + 1..rows {
                    if !a[(r, col)].is_zero() {
                        let q = -(&a[(r, col)].div_floor(&pv));
                        a.row_op(r, pivot_row, &q);
                        if !a[(r, col)].is_zero() {
                            done = false;
                        }
                    }
                }
                if done {
                    break;
                }
            }
            if a[(pivot_row, col)].is_zero() {
                continue;
            }
            if a[(pivot_row, col)].is_negative() {
                for c in 0..cols {
                    let t = -a[(pivot_row, c)].clone();
                    a[(pivot_row, c)] = t;
                }
            }
            // reduce entries above the pivot
            let pv = a[(pivot_row, col)].clone();
            for r in 0..pivot_row {
                let q = -(&a[(r, col)].div_floor(&pv));
                if !q.is_zero() {
                    a.row_op(r, pivot_row, &q);
                }
            }
            pivot_row += 1;
        }
        a
    }
}

/// Smith normal form data: u * a * v = d with u, v unimodular over Z and
/// d diagonal with d_1 | d_2 | ... (non-negative).
pub struct Snf {
    pub u: IMat,
    pub d: IMat,
    pub v: IMat,
}

impl Snf {
    pub fn invariant_factors(&self) -> Vec<Int> {
        let n = self.d.rows.min(self.d.cols);
        (0..n)
            .map(|i| self.d[(i, i)].clone())
            .take_while(|x| !x.is_zero())
            .collect()
    }

    pub fn rank(&self) -> usize {
        self.invariant_factors().len()
    }
}

/// Smith normal form over Z with transforms.
pub fn smith_normal_form(a: &IMat) -> Snf {
    let mut d = a.clone();
    let mut u = IMat::identity(d.rows);
    let mut v = IMat::identity(d.cols);
    let n = d.rows.min(d.cols);
    for t in 0..n {
        loop {
            // locate a non-zero entry of minimal absolute value in the
            // trailing block
            let mut best: Option<(usize, usize)> = None;
            for r in t..d.rows {
                for c in t..d.cols {
                    if !d[(r, c)].is_zero() {
                        let better = match best {
                            None => true,
                            Some(b) => d[(r, c)].abs() < d[b].abs(),
                        };
                        if better {
                            best = Some((r, c));
                        }
                    }
                }
            }
            let Some((r, c)) = best else {
                return Snf { u, d, v };
            };
            d.swap_rows(t, r);
            u.swap_rows(t, r);
            d.swap_cols(t, c);
            v.swap_cols(t, c);
            let pv = d[(t, t)].clone();
            let mut dirty = false;
            for r in t + 1..d.rows {
                if !d[(r, t)].is_zero() {
                    let q = -(&d[(r, t)].div_floor(&pv));
                    d.row_op(r, t, &q);
                    u.row_op(r, t, &q);
                    if !d[(r, t)].is_zero() {
                        dirty = true;
                    }
                }
            }
            for c in t + 1..d.cols {
                if !d[(t, c)].is_zero() {
                    let q = -(&d[(t, c)].div_floor(&pv));
                    d.col_op(c, t, &q);
                    v.col_op(c, t, &q);
                    if !d[(t, c)].is_zero() {
                        dirty = true;
                    }
                }
            }
            if dirty {
                continue;
            }
            // pivot must divide every remaining entry
            let mut fixed = true;
            'scan: for r in t + 1..d.rows {
                for c in t + 1..d.cols {
                    if !(&d[(r, c)] % &pv).is_zero() {
                        d.row_op(t, r, &Int::one());
                        u.row_op(t, r, &Int::one());
                        fixed = false;
                        break 'scan;
                    }
                }
            }
            if fixed {
                break;
            }
        }
        if d[(t, t)].is_negative() {
            for c in 0..d.cols {
                let x = -d[(t, c)].clone();
                d[(t, c)] = x;
            }
            for c in 0..u.cols {
                let x = -u[(t, c)].clone();
                u[(t, c)] = x;
            }
        }
    }
    Snf { u, d, v }
}

/// Saturated basis of the integer kernel {x : a x = 0}, as columns.
/// The returned vectors span ker(a) over Q and generate the full lattice
/// ker(a) ∩ Z^cols.
pub fn integer_kernel(a: &IMat) -> Vec<Vec<Int>> {
    let snf = smith_normal_form(a);
    let r = snf.rank();
    // a = u^-1 d v^-1, so a * (v e_j) = u^-1 d e_j = 0 for j >= rank
    (r..a.cols).map(|j| snf.v.col(j)).collect()
}

/// Integer matrix with all invariant factors 1 (content-primitive and
/// extendable to a unimodular matrix).
pub fn has_unit_invariant_factors(a: &IMat) -> bool {
    let snf = smith_normal_form(a);
    let f = snf.invariant_factors();
    f.len() == a.rows.min(a.cols) && f.iter().all(|x| x.is_one())
}

#[derive(Clone, PartialEq, Eq)]
pub struct QMat {
    pub rows: usize,
    pub cols: usize,
    data: Vec<Rat>,
}

impl Index<(usize, usize)> for QMat {
    type Output = Rat;
    fn index(&self, (r, c): (usize, usize)) -> &Rat {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for QMat {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Rat {
        &mut self.data[r * self.cols + c]
    }
}

impl fmt::Debug for QMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "QMat {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                write!(f, "{} ", self[(r, c)])?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl QMat {
    pub fn zero(rows: usize, cols: usize) -> Self {
        QMat {
            rows,
            cols,
            data: vec![Rat::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = QMat::zero(n, n);
        for i in 0..n {
            m[(i, i)] = Rat::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Rat) -> Self {
        let mut m = QMat::zero(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m[(r, c)] = f(r, c);
            }
        }
        m
    }

    pub fn mul(&self, other: &QMat) -> QMat {
        assert_eq!(self.cols, other.rows);
        let mut out = QMat::zero(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(r, k)];
                if a.is_zero() {
                    continue;
                }
                for c in 0..other.cols {
                    let t = a * &other[(k, c)];
                    out[(r, c)] += t;
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> QMat {
        QMat::from_fn(self.cols, self.rows, |r, c| self[(c, r)].clone())
    }

    /// Exact inverse by Gauss-Jordan elimination; None when singular.
    pub fn inverse(&self) -> Option<QMat> {
        assert!(self.rows == self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = QMat::identity(n);
        for col in 0..n {
            let pivot = (col..n).find(|&r| !a[(r, col)].is_zero())?;
            for c in 0..n {
                let t = a[(col, c)].clone();
                a[(col, c)] = a[(pivot, c)].clone();
                a[(pivot, c)] = t;
                let t = inv[(col, c)].clone();
                inv[(col, c)] = inv[(pivot, c)].clone();
                inv[(pivot, c)] = t;
            }
            let pv = a[(col, col)].clone();
            for c in 0..n {
                a[(col, c)] = &a[(col, c)] / &pv;
                inv[(col, c)] = &inv[(col, c)] / &pv;
            }
            for r in 0..n {
                if r != col && !a[(r, col)].is_zero() {
                    let f = a[(r, col)].clone();
                    for c in 0..n {
                        let t = &a[(col, c)] * &f;
                        a[(r, c)] -= t;
                        let t = &inv[(col, c)] * &f;
                        inv[(r, c)] -= t;
                    }
                }
            }
        }
        Some(inv)
    }

    pub fn scale(&self, s: &Rat) -> QMat {
        QMat::from_fn(self.rows, self.cols, |r, c| &self[(r, c)] * s)
    }

    /// The integer matrix obtained by clearing denominators is not wanted
    /// here; this conversion requires every entry to be an integer already.
    pub fn to_int(&self) -> Option<IMat> {
        let mut out = IMat::zero(self.rows, self.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                if !self[(r, c)].is_integer() {
                    return None;
                }
                out[(r, c)] = self[(r, c)].to_integer();
            }
        }
        Some(out)
    }

    pub fn det(&self) -> Rat {
        assert!(self.rows == self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut det = Rat::one();
        for col in 0..n {
            let Some(pivot) = (col..n).find(|&r| !a[(r, col)].is_zero()) else {
                return Rat::zero();
            };
            if pivot != col {
                for c in 0..n {
                    let t = a[(col, c)].clone();
                    a[(col, c)] = a[(pivot, c)].clone();
                    a[(pivot, c)] = t;
                }
                det = -det;
            }
            let pv = a[(col, col)].clone();
            det *= pv.clone();
            for r in col + 1..n {
                if a[(r, col)].is_zero() {
                    continue;
                }
                let f = &a[(r, col)] / &pv;
                for c in col..n {
                    let t = &a[(col, c)] * &f;
                    a[(r, c)] -= t;
                }
            }
        }
        det
    }
}

/// Gram matrix w w^T of a list of integer row vectors.
pub fn gram_of_rows(rows: &[Vec<Int>]) -> IMat {
    let k = rows.len();
    IMat::from_fn(k, k, |r, c| {
        rows[r]
            .iter()
            .zip(&rows[c])
            .map(|(a, b)| a * b)
            .sum::<Int>()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::int;

    #[test]
    fn det_bareiss() {
        let a = IMat::from_i64(&[&[2, 1], &[1, 3]]);
        assert_eq!(a.det(), int(5));
        let b = IMat::from_i64(&[&[1, 2, 3], &[4, 5, 6], &[7, 8, 9]]);
        assert_eq!(b.det(), int(0));
        let c = IMat::from_i64(&[&[0, 1], &[1, 0]]);
        assert_eq!(c.det(), int(-1));
    }

    #[test]
    fn snf_small() {
        let a = IMat::from_i64(&[&[2, 4, 4], &[-6, 6, 12], &[10, 4, 16]]);
        let s = smith_normal_form(&a);
        assert_eq!(s.u.mul(&a).mul(&s.v), s.d);
        assert_eq!(s.u.det().abs(), int(1));
        assert_eq!(s.v.det().abs(), int(1));
        let f = s.invariant_factors();
        for w in f.windows(2) {
            assert!((&w[1] % &w[0]).is_zero());
        }
        assert_eq!(f, vec![int(2), int(2), int(156)]);
    }

    #[test]
    fn kernel_saturated() {
        let a = IMat::from_i64(&[&[2, 4]]);
        let k = integer_kernel(&a);
        assert_eq!(k.len(), 1);
        let v = &k[0];
        assert!((&v[0] * int(2) + &v[1] * int(4)).is_zero());
        assert!(v[0].gcd(&v[1]).is_one());
    }

    #[test]
    fn hnf_basis() {
        let a = IMat::from_i64(&[&[2, 0], &[0, 2], &[1, 1]]);
        let h = a.row_hnf();
        assert_eq!(h[(0, 0)], int(1));
        assert_eq!(h[(0, 1)], int(1));
        assert_eq!(h[(1, 0)], int(0));
        assert_eq!(h[(1, 1)], int(2));
    }

    #[test]
    fn qmat_inverse_roundtrip() {
        let a = IMat::from_i64(&[&[1, 2], &[3, 5]]).to_rat();
        let inv = a.inverse().unwrap();
        assert_eq!(a.mul(&inv), QMat::identity(2));
    }
}
