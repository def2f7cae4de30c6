//! Exact coefficient fields: the rationals and the cyclotomic fields Q(ζ_N).

use std::fmt;
use std::hash::Hash;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

/// An exact field of characteristic zero.
pub trait Field:
    Clone + PartialEq + Eq + Hash + fmt::Debug + fmt::Display + Send + Sync + 'static
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(n: i64) -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    /// Multiplicative inverse; `None` for zero.
    fn inv(&self) -> Option<Self>;

    fn div(&self, other: &Self) -> Self {
        self.mul(&other.inv().expect("division by zero"))
    }
    fn is_one(&self) -> bool {
        *self == Self::one()
    }
}

/// Arbitrary-precision rational.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Rat(pub BigRational);

impl Rat {
    pub fn from_frac(n: i64, d: i64) -> Self {
        Rat(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Field for Rat {
    fn zero() -> Self {
        Rat(BigRational::zero())
    }
    fn one() -> Self {
        Rat(BigRational::one())
    }
    fn from_i64(n: i64) -> Self {
        Rat(BigRational::from(BigInt::from(n)))
    }
    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
    fn add(&self, other: &Self) -> Self {
        Rat(&self.0 + &other.0)
    }
    fn sub(&self, other: &Self) -> Self {
        Rat(&self.0 - &other.0)
    }
    fn neg(&self) -> Self {
        Rat(-self.0.clone())
    }
    fn mul(&self, other: &Self) -> Self {
        Rat(&self.0 * &other.0)
    }
    fn inv(&self) -> Option<Self> {
        if self.0.is_zero() {
            None
        } else {
            Some(Rat(self.0.recip()))
        }
    }
}

/// The N-th cyclotomic polynomial Φ_N, as a dense coefficient vector
/// (constant term first, leading coefficient 1).
pub fn cyclotomic_polynomial(n: u32) -> Vec<BigRational> {
    assert!(n >= 1);
    // x^n - 1 divided by the product of Φ_d over proper divisors d of n.
    let mut num = vec![BigRational::zero(); n as usize + 1];
    num[0] = -BigRational::one();
    num[n as usize] = BigRational::one();
    for d in 1..n {
        if n % d == 0 {
            let phi_d = cyclotomic_polynomial(d);
            num = poly_div_exact(&num, &phi_d);
        }
    }
    num
}

fn poly_div_exact(num: &[BigRational], den: &[BigRational]) -> Vec<BigRational> {
    let mut rem = num.to_vec();
    let dd = den.len() - 1;
    assert!(den[dd].is_one());
    let mut quot = vec![BigRational::zero(); rem.len() - dd];
    for i in (dd..rem.len()).rev() {
        let c = rem[i].clone();
        if c.is_zero() {
            continue;
        }
        quot[i - dd] = c.clone();
        for j in 0..=dd {
            rem[i - dd + j] -= &c * &den[j];
        }
    }
    assert!(rem.iter().all(|c| c.is_zero()), "inexact polynomial division");
    quot
}

/// Shared description of Q(ζ_N): residues modulo Φ_N.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CycField {
    pub n: u32,
    /// Φ_N coefficients, constant first; degree = φ(N).
    pub modulus: Vec<BigRational>,
}

impl CycField {
    pub fn new(n: u32) -> Self {
        assert!(n >= 2, "cyclotomic order must be >= 2");
        CycField { n, modulus: cyclotomic_polynomial(n) }
    }

    pub fn degree(&self) -> usize {
        self.modulus.len() - 1
    }
}

/// An element of Q(ζ_N): coefficients of 1, ζ, ..., ζ^{φ(N)-1}.
///
/// The order N travels with each element; mixing orders is a bug and panics.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Cyc {
    pub n: u32,
    pub coeffs: Vec<Rat>,
}

thread_local! {
    static CYC_CACHE: std::cell::RefCell<std::collections::HashMap<u32, CycField>> =
        std::cell::RefCell::new(std::collections::HashMap::new());
}

fn with_field<T>(n: u32, f: impl FnOnce(&CycField) -> T) -> T {
    CYC_CACHE.with(|c| {
        let mut map = c.borrow_mut();
        let fld = map.entry(n).or_insert_with(|| CycField::new(n));
        f(fld)
    })
}

impl Cyc {
    pub fn rational(n: u32, r: Rat) -> Self {
        let deg = with_field(n, |f| f.degree());
        let mut coeffs = vec![Rat::zero(); deg];
        coeffs[0] = r;
        Cyc { n, coeffs }
    }

    /// ζ_N^k.
    pub fn zeta_pow(n: u32, k: i64) -> Self {
        let kk = k.rem_euclid(n as i64) as usize;
        let deg = with_field(n, |f| f.degree());
        let mut dense = vec![BigRational::zero(); kk + 1];
        dense[kk] = BigRational::one();
        Self::reduce(n, dense, deg)
    }

    fn reduce(n: u32, mut dense: Vec<BigRational>, deg: usize) -> Self {
        with_field(n, |f| {
            for i in (deg..dense.len()).rev() {
                let c = dense[i].clone();
                if c.is_zero() {
                    continue;
                }
                dense[i] = BigRational::zero();
                for j in 0..deg {
                    let adj = &c * &f.modulus[j];
                    dense[i - deg + j] -= adj;
                }
            }
            dense.truncate(deg);
            dense.resize(deg, BigRational::zero());
            Cyc { n, coeffs: dense.into_iter().map(Rat).collect() }
        })
    }
}

impl fmt::Display for Cyc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if i == 0 {
                write!(f, "{}", c)?;
            } else {
                write!(f, "({})*z^{}", c, i)?;
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

impl Field for Cyc {
    fn zero() -> Self {
        // order-agnostic zero is not representable; use order 2 and fix up on mixing.
        Cyc { n: 0, coeffs: vec![] }
    }
    fn one() -> Self {
        let mut z = Self::zero();
        z.coeffs = vec![Rat::one()];
        z
    }
    fn from_i64(v: i64) -> Self {
        let mut z = Self::zero();
        z.coeffs = vec![Rat::from_i64(v)];
        z
    }
    fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }
    fn add(&self, other: &Self) -> Self {
        let (a, b) = promote(self, other);
        let l = a.coeffs.len().max(b.coeffs.len());
        let mut coeffs = Vec::with_capacity(l);
        for i in 0..l {
            let x = a.coeffs.get(i).cloned().unwrap_or_else(Rat::zero);
            let y = b.coeffs.get(i).cloned().unwrap_or_else(Rat::zero);
            coeffs.push(x.add(&y));
        }
        Cyc { n: a.n.max(b.n), coeffs }
    }
    fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }
    fn neg(&self) -> Self {
        Cyc { n: self.n, coeffs: self.coeffs.iter().map(|c| c.neg()).collect() }
    }
    fn mul(&self, other: &Self) -> Self {
        let (a, b) = promote(self, other);
        let n = a.n.max(b.n);
        if n == 0 {
            // both are plain rationals
            let x = a.coeffs.first().cloned().unwrap_or_else(Rat::zero);
            let y = b.coeffs.first().cloned().unwrap_or_else(Rat::zero);
            return Cyc { n: 0, coeffs: vec![x.mul(&y)] };
        }
        let mut dense =
            vec![BigRational::zero(); a.coeffs.len() + b.coeffs.len()];
        for (i, x) in a.coeffs.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.coeffs.iter().enumerate() {
                if y.is_zero() {
                    continue;
                }
                dense[i + j] += &x.0 * &y.0;
            }
        }
        let deg = with_field(n, |f| f.degree());
        Cyc::reduce(n, dense, deg)
    }
    fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        if self.n == 0 {
            return Some(Cyc { n: 0, coeffs: vec![self.coeffs[0].inv()?] });
        }
        // extended Euclid in Q[x] against Φ_N
        let n = self.n;
        let modulus: Vec<BigRational> = with_field(n, |f| f.modulus.clone());
        let a: Vec<BigRational> = self.coeffs.iter().map(|c| c.0.clone()).collect();
        let (g, s) = ext_gcd_poly(&a, &modulus);
        // g must be a nonzero constant
        assert!(g.len() == 1 && !g[0].is_zero(), "non-invertible cyclotomic element");
        let ginv = g[0].recip();
        let coeffs: Vec<BigRational> = s.iter().map(|c| c * &ginv).collect();
        let deg = with_field(n, |f| f.degree());
        Some(Cyc::reduce(n, coeffs, deg))
    }
}

/// Align two cyclotomic elements: order-0 means "plain rational" and promotes.
fn promote(a: &Cyc, b: &Cyc) -> (Cyc, Cyc) {
    match (a.n, b.n) {
        (0, 0) => (a.clone(), b.clone()),
        (0, n) => {
            let r = a.coeffs.first().cloned().unwrap_or_else(Rat::zero);
            (Cyc::rational(n, r), b.clone())
        }
        (n, 0) => {
            let r = b.coeffs.first().cloned().unwrap_or_else(Rat::zero);
            (a.clone(), Cyc::rational(n, r))
        }
        (n, m) => {
            assert_eq!(n, m, "mixed cyclotomic orders");
            (a.clone(), b.clone())
        }
    }
}

fn trim(p: &mut Vec<BigRational>) {
    while p.len() > 1 && p.last().map_or(false, |c| c.is_zero()) {
        p.pop();
    }
}

fn poly_divmod(
    num: &[BigRational],
    den: &[BigRational],
) -> (Vec<BigRational>, Vec<BigRational>) {
    let mut rem = num.to_vec();
    trim(&mut rem);
    let mut den = den.to_vec();
    trim(&mut den);
    let dd = den.len() - 1;
    let lead = den[dd].clone();
    if rem.len() <= dd && !(rem.len() == 1 && dd == 0) {
        return (vec![BigRational::zero()], rem);
    }
    let mut quot = vec![BigRational::zero(); rem.len().saturating_sub(dd).max(1)];
    for i in (dd..rem.len()).rev() {
        let c = &rem[i] / &lead;
        if c.is_zero() {
            continue;
        }
        quot[i - dd] = c.clone();
        for j in 0..=dd {
            let adj = &c * &den[j];
            rem[i - dd + j] -= adj;
        }
    }
    trim(&mut rem);
    trim(&mut quot);
    (quot, rem)
}

/// Returns (gcd, s) with s*a ≡ gcd mod b.
fn ext_gcd_poly(
    a: &[BigRational],
    b: &[BigRational],
) -> (Vec<BigRational>, Vec<BigRational>) {
    let mut r0 = a.to_vec();
    let mut r1 = b.to_vec();
    trim(&mut r0);
    trim(&mut r1);
    let mut s0 = vec![BigRational::one()];
    let mut s1 = vec![BigRational::zero()];
    while !(r1.len() == 1 && r1[0].is_zero()) {
        let (q, r) = poly_divmod(&r0, &r1);
        let s = poly_sub(&s0, &poly_mul(&q, &s1));
        r0 = std::mem::replace(&mut r1, r);
        s0 = std::mem::replace(&mut s1, s);
    }
    (r0, s0)
}

fn poly_mul(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let mut out = vec![BigRational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    trim(&mut out);
    out
}

fn poly_sub(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let l = a.len().max(b.len());
    let mut out = vec![BigRational::zero(); l];
    for i in 0..l {
        if i < a.len() {
            out[i] += &a[i];
        }
        if i < b.len() {
            out[i] -= &b[i];
        }
    }
    trim(&mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cyclotomic_polys() {
        // Φ_2 = x + 1, Φ_3 = x^2 + x + 1, Φ_4 = x^2 + 1
        let r = |v: i64| BigRational::from(BigInt::from(v));
        assert_eq!(cyclotomic_polynomial(2), vec![r(1), r(1)]);
        assert_eq!(cyclotomic_polynomial(3), vec![r(1), r(1), r(1)]);
        assert_eq!(cyclotomic_polynomial(4), vec![r(1), r(0), r(1)]);
        assert_eq!(cyclotomic_polynomial(6), vec![r(1), r(-1), r(1)]);
    }

    #[test]
    fn zeta_n_is_primitive() {
        for n in 2..=6u32 {
            let z = Cyc::zeta_pow(n, 1);
            let mut p = Cyc::one();
            for k in 1..n {
                p = p.mul(&z);
                assert!(!(p == Cyc::rational(n, Rat::one())), "zeta^{k} = 1 for k < {n}");
                let _ = k;
            }
            p = p.mul(&z);
            assert_eq!(p, Cyc::rational(n, Rat::one()), "zeta^{n} != 1");
        }
    }

    #[test]
    fn zeta_power_sum_vanishes() {
        // Σ_{k=0}^{N-1} ζ^k = 0 for N >= 2
        for n in 2..=6u32 {
            let mut s = Cyc::zeta_pow(n, 0);
            for k in 1..n {
                s = s.add(&Cyc::zeta_pow(n, k as i64));
            }
            assert!(s.is_zero(), "power sum nonzero for N={n}");
        }
    }

    #[test]
    fn cyc_field_axioms_sampled() {
        // associativity / distributivity / inverses on a deterministic sample
        let n = 3;
        let els: Vec<Cyc> = (0..9)
            .map(|i| {
                let a = Cyc::zeta_pow(n, i % 3);
                let b = Cyc::rational(n, Rat::from_frac(i - 4, 3));
                a.add(&b)
            })
            .collect();
        for a in &els {
            for b in &els {
                for c in &els {
                    assert_eq!(a.mul(&b.mul(c)), a.mul(b).mul(c));
                    assert_eq!(a.mul(&b.add(c)), a.mul(b).add(&a.mul(c)));
                }
                if !a.is_zero() {
                    let ai = a.inv().unwrap();
                    assert!(a.mul(&ai).sub(&Cyc::one()).is_zero());
                }
            }
        }
    }
}
