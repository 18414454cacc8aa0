//! Sparse multivariate polynomials with exact rational coefficients,
//! plus the integer-coefficient systems fed to the lifting kernels.

use crate::arith::{Int, Rat};
use crate::error::{Error, Result};
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;
use std::fmt;

/// Sparse polynomial in `vars` variables over Q, keyed by exponent vector.
#[derive(Clone, PartialEq, Eq)]
pub struct MPoly {
    pub vars: usize,
    terms: BTreeMap<Vec<u32>, Rat>,
}

impl fmt::Debug for MPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (exp, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{}", c)?;
            for (i, &e) in exp.iter().enumerate() {
                if e == 1 {
                    write!(f, "*t{}", i + 1)?;
                } else if e > 1 {
                    write!(f, "*t{}^{}", i + 1, e)?;
                }
            }
        }
        Ok(())
    }
}

impl MPoly {
    pub fn zero(vars: usize) -> Self {
        MPoly {
            vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(vars: usize, c: Rat) -> Self {
        let mut p = MPoly::zero(vars);
        if !c.is_zero() {
            p.terms.insert(vec![0; vars], c);
        }
        p
    }

    pub fn one(vars: usize) -> Self {
        MPoly::constant(vars, Rat::one())
    }

    pub fn var(vars: usize, i: usize) -> Self {
        assert!(i < vars);
        let mut exp = vec![0; vars];
        exp[i] = 1;
        let mut p = MPoly::zero(vars);
        p.terms.insert(exp, Rat::one());
        p
    }

    pub fn add_term(&mut self, exp: Vec<u32>, c: Rat) {
        assert_eq!(exp.len(), self.vars);
        use std::collections::btree_map::Entry;
        match self.terms.entry(exp) {
            Entry::Vacant(e) => {
                if !c.is_zero() {
                    e.insert(c);
                }
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &Rat)> {
        self.terms.iter()
    }

    pub fn total_degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|e| e.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    /// Max absolute value of the coefficients, for integer polynomials the
    /// classical height.
    pub fn height(&self) -> Rat {
        self.terms
            .values()
            .map(|c| c.abs())
            .max()
            .unwrap_or_else(Rat::zero)
    }

    pub fn add(&self, other: &MPoly) -> MPoly {
        assert_eq!(self.vars, other.vars);
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> MPoly {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c = -c.clone();
        }
        out
    }

    pub fn sub(&self, other: &MPoly) -> MPoly {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &MPoly) -> MPoly {
        assert_eq!(self.vars, other.vars);
        let mut out = MPoly::zero(self.vars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let exp: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(exp, c1 * c2);
            }
        }
        out
    }

    pub fn scale(&self, s: &Rat) -> MPoly {
        if s.is_zero() {
            return MPoly::zero(self.vars);
        }
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c *= s;
        }
        out
    }

    /// Formal partial derivative with respect to variable `i`.
    pub fn derivative(&self, i: usize) -> MPoly {
        assert!(i < self.vars);
        let mut out = MPoly::zero(self.vars);
        for (e, c) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let mut exp = e.clone();
            exp[i] -= 1;
            out.add_term(exp, c * Rat::from_integer(Int::from(e[i])));
        }
        out
    }

    pub fn eval_rat(&self, x: &[Rat]) -> Rat {
        assert_eq!(x.len(), self.vars);
        let mut acc = Rat::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (xi, &ei) in x.iter().zip(e) {
                for _ in 0..ei {
                    t *= xi;
                }
            }
            acc += t;
        }
        acc
    }

    pub fn eval_int(&self, x: &[Int]) -> Rat {
        let xr: Vec<Rat> = x.iter().cloned().map(Rat::from_integer).collect();
        self.eval_rat(&xr)
    }

    /// True when every coefficient is an integer.
    pub fn is_integral(&self) -> bool {
        self.terms.values().all(|c| c.is_integer())
    }
}

/// System of integer-coefficient polynomials f_1..f_r in m variables.
/// Degree and height are recomputed from the terms, never trusted.
#[derive(Clone, Debug)]
pub struct PolySystem {
    pub vars: usize,
    pub polys: Vec<MPoly>,
}

impl PolySystem {
    pub fn new(vars: usize, polys: Vec<MPoly>) -> Result<Self> {
        for (i, p) in polys.iter().enumerate() {
            if p.vars != vars {
                return Err(Error::InvalidInput(format!(
                    "polynomial {} declares {} variables, system has {}",
                    i, p.vars, vars
                )));
            }
            if !p.is_integral() {
                return Err(Error::InvalidInput(format!(
                    "polynomial {i} has non-integer coefficients"
                )));
            }
        }
        Ok(PolySystem { vars, polys })
    }

    pub fn len(&self) -> usize {
        self.polys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polys.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.polys.iter().map(|p| p.total_degree()).max().unwrap_or(0)
    }

    pub fn height(&self) -> Int {
        self.polys
            .iter()
            .map(|p| p.height())
            .max()
            .map(|h| h.to_integer())
            .unwrap_or_else(Int::zero)
    }

    pub fn eval(&self, x: &[Int]) -> Vec<Int> {
        self.polys
            .iter()
            .map(|p| {
                let v = p.eval_int(x);
                debug_assert!(v.is_integer());
                v.to_integer()
            })
            .collect()
    }

    /// Jacobian evaluated at an integer point: len() x vars matrix.
    pub fn jacobian_at(&self, x: &[Int]) -> crate::mat::IMat {
        crate::mat::IMat::from_fn(self.len(), self.vars, |r, c| {
            let v = self.polys[r].derivative(c).eval_int(x);
            debug_assert!(v.is_integer());
            v.to_integer()
        })
    }

    /// Parse from the JSON shape {"vars": m, "polys": [[[coef, [exps]], ...], ...]}.
    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::InvalidInput("polynomial system must be an object".into()))?;
        let vars = obj
            .get("vars")
            .and_then(|x| x.as_u64())
            .ok_or_else(|| Error::InvalidInput("missing \"vars\"".into()))? as usize;
        let polys_json = obj
            .get("polys")
            .and_then(|x| x.as_array())
            .ok_or_else(|| Error::InvalidInput("missing \"polys\" array".into()))?;
        let mut polys = Vec::new();
        for pj in polys_json {
            let terms = pj
                .as_array()
                .ok_or_else(|| Error::InvalidInput("each polynomial must be a term list".into()))?;
            let mut p = MPoly::zero(vars);
            for t in terms {
                let pair = t
                    .as_array()
                    .filter(|a| a.len() == 2)
                    .ok_or_else(|| Error::InvalidInput("term must be [coef, [exps]]".into()))?;
                let c = crate::json::int_from_json(&pair[0])
                    .ok_or_else(|| Error::InvalidInput("bad coefficient".into()))?;
                let exps = pair[1]
                    .as_array()
                    .ok_or_else(|| Error::InvalidInput("bad exponent vector".into()))?;
                if exps.len() != vars {
                    return Err(Error::InvalidInput(format!(
                        "exponent vector length {} != vars {}",
                        exps.len(),
                        vars
                    )));
                }
                let e: Option<Vec<u32>> =
                    exps.iter().map(|x| x.as_u64().map(|v| v as u32)).collect();
                let e = e.ok_or_else(|| Error::InvalidInput("bad exponent".into()))?;
                p.add_term(e, Rat::from_integer(c));
            }
            polys.push(p);
        }
        PolySystem::new(vars, polys)
    }
}

/// Square matrix with polynomial entries; enough operations for products
/// of exponentials of nilpotents and their derivatives.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyMat {
    pub n: usize,
    pub entries: Vec<MPoly>,
}

impl PolyMat {
    pub fn identity(n: usize, vars: usize) -> Self {
        let mut entries = vec![MPoly::zero(vars); n * n];
        for i in 0..n {
            entries[i * n + i] = MPoly::one(vars);
        }
        PolyMat { n, entries }
    }

    pub fn at(&self, r: usize, c: usize) -> &MPoly {
        &self.entries[r * self.n + c]
    }

    pub fn mul(&self, other: &PolyMat) -> PolyMat {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let vars = self.entries[0].vars;
        let mut entries = vec![MPoly::zero(vars); n * n];
        for r in 0..n {
            for k in 0..n {
                if self.at(r, k).is_zero() {
                    continue;
                }
                for c in 0..n {
                    if other.at(k, c).is_zero() {
                        continue;
                    }
                    let t = self.at(r, k).mul(other.at(k, c));
                    entries[r * n + c] = entries[r * n + c].add(&t);
                }
            }
        }
        PolyMat { n, entries }
    }

    /// Determinant by cofactor expansion (sizes here are tiny).
    pub fn det(&self) -> MPoly {
        let vars = self.entries[0].vars;
        match self.n {
            0 => MPoly::one(vars),
            1 => self.at(0, 0).clone(),
            _ => {
                let mut acc = MPoly::zero(vars);
                for c in 0..self.n {
                    if self.at(0, c).is_zero() {
                        continue;
                    }
                    let minor = PolyMat {
                        n: self.n - 1,
                        entries: (1..self.n)
                            .flat_map(|r| {
                                (0..self.n)
                                    .filter(|&cc| cc != c)
                                    .map(move |cc| (r, cc))
                            })
                            .map(|(r, cc)| self.at(r, cc).clone())
                            .collect(),
                    };
                    let t = self.at(0, c).mul(&minor.det());
                    acc = if c % 2 == 0 { acc.add(&t) } else { acc.sub(&t) };
                }
                acc
            }
        }
    }

    /// Adjugate matrix, valid for any square size used here.
    pub fn adjugate(&self) -> PolyMat {
        let n = self.n;
        let vars = self.entries[0].vars;
        let mut entries = vec![MPoly::zero(vars); n * n];
        for r in 0..n {
            for c in 0..n {
                let minor = PolyMat {
                    n: n - 1,
                    entries: (0..n)
                        .filter(|&rr| rr != r)
                        .flat_map(|rr| {
                            (0..n).filter(|&cc| cc != c).map(move |cc| (rr, cc))
                        })
                        .map(|(rr, cc)| self.at(rr, cc).clone())
                        .collect(),
                };
                let d = minor.det();
                entries[c * n + r] = if (r + c) % 2 == 0 { d } else { d.neg() };
            }
        }
        PolyMat { n, entries }
    }

    pub fn derivative(&self, i: usize) -> PolyMat {
        PolyMat {
            n: self.n,
            entries: self.entries.iter().map(|p| p.derivative(i)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rat;

    fn x2_minus_2() -> PolySystem {
        let mut p = MPoly::zero(1);
        p.add_term(vec![2], rat(1, 1));
        p.add_term(vec![0], rat(-2, 1));
        PolySystem::new(1, vec![p]).unwrap()
    }

    #[test]
    fn eval_and_derivative() {
        let s = x2_minus_2();
        assert_eq!(s.eval(&[Int::from(3)]), vec![Int::from(7)]);
        let j = s.jacobian_at(&[Int::from(3)]);
        assert_eq!(j[(0, 0)], Int::from(6));
        assert_eq!(s.degree(), 2);
        assert_eq!(s.height(), Int::from(2));
    }

    #[test]
    fn poly_mat_det() {
        // det of [[1, t], [0, 1]] = 1
        let t = MPoly::var(1, 0);
        let m = PolyMat {
            n: 2,
            entries: vec![MPoly::one(1), t, MPoly::zero(1), MPoly::one(1)],
        };
        assert_eq!(m.det(), MPoly::one(1));
        let adj = m.adjugate();
        assert_eq!(m.mul(&adj), PolyMat::identity(2, 1));
    }

    #[test]
    fn json_round_trip() {
        let v: serde_json::Value = serde_json::json!({
            "vars": 2,
            "polys": [[[1, [1, 1]]], [[1, [2, 0]], [-2, [0, 0]]]]
        });
        let s = PolySystem::from_json(&v).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.eval(&[Int::from(5), Int::from(5)]), vec![Int::from(25), Int::from(23)]);
    }
}
