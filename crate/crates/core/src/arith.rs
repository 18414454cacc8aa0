//! Exact integer and rational helpers shared across the crate.
//!
//! Everything here is arbitrary precision; no floating point is used
//! anywhere in the library.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Int = BigInt;
pub type Rat = BigRational;

pub fn int(v: i64) -> Int {
    Int::from(v)
}

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(Int::from(n), Int::from(d))
}

/// Floor of the square root of a non-negative integer.
pub fn isqrt(n: &Int) -> Int {
    assert!(!n.is_negative(), "isqrt of negative value");
    n.sqrt()
}

/// p-adic valuation of a non-zero integer.
pub fn valuation(n: &Int, p: u64) -> u32 {
    assert!(!n.is_zero(), "valuation of zero");
    let p = Int::from(p);
    let mut n = n.abs();
    let mut v = 0u32;
    loop {
        let (q, r) = n.div_rem(&p);
        if r.is_zero() {
            n = q;
            v += 1;
        } else {
            return v;
        }
    }
}

/// p-adic valuation of a non-zero rational (may be negative).
pub fn valuation_rat(x: &Rat, p: u64) -> i64 {
    assert!(!x.is_zero());
    valuation(x.numer(), p) as i64 - valuation(x.denom(), p) as i64
}

/// Strip all factors of p: returns (v, n / p^v).
pub fn split_valuation(n: &Int, p: u64) -> (u32, Int) {
    let v = valuation(n, p);
    let unit = n / Int::from(p).pow(v);
    (v, unit)
}

pub fn pow_mod_u64(base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc: u128 = 1;
    let mm = m as u128;
    let mut b = (base % m) as u128;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % mm;
        }
        b = b * b % mm;
        exp >>= 1;
    }
    acc as u64
}

pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    // deterministic Miller-Rabin for u64
    let d = n - 1;
    let s = d.trailing_zeros();
    let d = d >> s;
    'witness: for &a in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod_u64(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = (x as u128 * x as u128 % n as u128) as u64;
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Primes dividing |n|, ascending. Trial division; adequate for the
/// magnitudes this library works at. Returns None when a cofactor
/// beyond the trial bound remains unfactored.
pub fn factor(n: &Int) -> Option<Vec<(u64, u32)>> {
    let mut n = n.abs();
    assert!(!n.is_zero(), "factor of zero");
    let mut out: Vec<(u64, u32)> = Vec::new();
    let mut push = |p: u64, n: &mut Int| {
        let mut e = 0u32;
        let pi = Int::from(p);
        loop {
            let (q, r) = n.div_rem(&pi);
            if r.is_zero() {
                *n = q;
                e += 1;
            } else {
                break;
            }
        }
        if e > 0 {
            out.push((p, e));
        }
    };
    push(2, &mut n);
    push(3, &mut n);
    let mut p = 5u64;
    while Int::from(p) * Int::from(p) <= n {
        push(p, &mut n);
        push(p + 2, &mut n);
        p += 6;
        if p > 20_000_000 {
            // remaining cofactor too large for trial division
            return if n.is_one() { Some(out) } else { None };
        }
    }
    if !n.is_one() {
        // the cofactor is prime at this point
        let c: u64 = u64::try_from(&n).ok()?;
        out.push((c, 1));
    }
    out.sort_unstable();
    Some(out)
}

/// Positive squarefree kernel of a non-zero rational:
/// the squarefree integer representing |x| in Q^x / (Q^x)^2.
pub fn squarefree_class(x: &Rat) -> Option<Int> {
    assert!(!x.is_zero());
    let n = x.numer().abs() * x.denom().abs();
    let mut out = Int::one();
    for (p, e) in factor(&n)? {
        if e % 2 == 1 {
            out *= Int::from(p);
        }
    }
    Some(out)
}

/// Legendre symbol (a/p) for odd prime p; a must be prime to p.
pub fn legendre(a: &Int, p: u64) -> i32 {
    debug_assert!(p % 2 == 1 && is_prime_u64(p));
    let pi = Int::from(p);
    let a = a.mod_floor(&pi);
    assert!(!a.is_zero(), "legendre of multiple of p");
    let r = a.modpow(&((&pi - 1) / 2), &pi);
    if r.is_one() {
        1
    } else {
        -1
    }
}

/// Modular inverse of a mod m (m > 1), when gcd(a, m) = 1.
pub fn inv_mod(a: &Int, m: &Int) -> Option<Int> {
    let e = a.extended_gcd(m);
    if e.gcd.is_one() {
        Some(e.x.mod_floor(m))
    } else {
        None
    }
}

/// The first `count` odd primes not dividing `avoid`.
pub fn odd_primes_avoiding(avoid: &Int, count: usize) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 3u64;
    while out.len() < count {
        if is_prime_u64(p) && !(avoid % Int::from(p)).is_zero() {
            out.push(p);
        }
        p += 2;
    }
    out
}

/// Ascending list of the primes dividing |n|.
pub fn prime_divisors(n: &Int) -> Vec<u64> {
    factor(n)
        .unwrap_or_else(|| panic!("prime_divisors: value too large to factor: {n}"))
        .into_iter()
        .map(|(p, _)| p)
        .collect()
}

/// Render a rational as "num/den" (or plain integer when den = 1).
pub fn rat_to_string(x: &Rat) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Parse "num/den" or a plain integer string.
pub fn rat_from_string(s: &str) -> Option<Rat> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: Int = n.trim().parse().ok()?;
        let d: Int = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        Some(Rat::new(n, d))
    } else {
        let n: Int = s.parse().ok()?;
        Some(Rat::from_integer(n))
    }
}

/// Decimal rendering of sqrt(x) for a non-negative rational, to `digits`
/// fractional digits (truncated). Used only for display; all comparisons
/// in the library are exact.
pub fn sqrt_decimal(x: &Rat, digits: u32) -> String {
    assert!(!x.is_negative());
    let scale = Int::from(10u32).pow(digits);
    // floor(sqrt(x) * 10^digits) = isqrt(floor(x * 10^(2 digits)))
    let scaled = (x * Rat::from_integer(&scale * &scale)).floor();
    let root = isqrt(&scaled.to_integer());
    let (q, r) = root.div_rem(&scale);
    if digits == 0 {
        q.to_string()
    } else {
        format!("{}.{:0width$}", q, r, width = digits as usize)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn isqrt_small() {
        for n in 0..200i64 {
            let r = isqrt(&int(n));
            assert!(&r * &r <= int(n) && (&r + 1) * (&r + 1) > int(n));
        }
    }

    #[test]
    fn factor_and_squarefree() {
        assert_eq!(factor(&int(360)), Some(vec![(2, 3), (3, 2), (5, 1)]));
        assert_eq!(squarefree_class(&rat(8, 1)), Some(int(2)));
        assert_eq!(squarefree_class(&rat(-45, 4)), Some(int(5)));
        assert_eq!(squarefree_class(&rat(1, 2)), Some(int(2)));
    }

    #[test]
    fn legendre_matches_squares() {
        for p in [3u64, 5, 7, 11, 13] {
            let mut squares = std::collections::HashSet::new();
            for x in 1..p {
                squares.insert(x * x % p);
            }
            for a in 1..p {
                let want = if squares.contains(&a) { 1 } else { -1 };
                assert_eq!(legendre(&int(a as i64), p), want);
            }
        }
    }

    #[test]
    fn primes_avoiding() {
        assert_eq!(odd_primes_avoiding(&int(15), 2), vec![7, 11]);
        assert_eq!(odd_primes_avoiding(&int(8), 2), vec![3, 5]);
    }

    #[test]
    fn sqrt_decimal_renders() {
        assert_eq!(sqrt_decimal(&rat(25, 1), 3), "5.000");
        assert_eq!(sqrt_decimal(&rat(2, 1), 4), "1.4142");
    }
}
