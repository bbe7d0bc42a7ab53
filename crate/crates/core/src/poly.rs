//! Dense univariate polynomials with rational coefficients.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::arith::{factor, FactorBudget, Incomplete};

/// Coefficients are stored constant term first with no trailing zeros.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct QPoly {
    coeffs: Vec<BigRational>,
}

pub fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn int(n: &BigInt) -> BigRational {
    BigRational::from_integer(n.clone())
}

impl QPoly {
    pub fn new(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn from_ints(coeffs: &[i64]) -> Self {
        Self::new(coeffs.iter().map(|&c| rat(c)).collect())
    }

    pub fn from_bigints(coeffs: &[BigInt]) -> Self {
        Self::new(coeffs.iter().map(int).collect())
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(BigRational::one())
    }

    pub fn x() -> Self {
        Self::new(vec![BigRational::zero(), BigRational::one()])
    }

    pub fn constant(c: BigRational) -> Self {
        Self::new(vec![c])
    }

    /// `x - a`.
    pub fn linear_root(a: &BigRational) -> Self {
        Self::new(vec![-a.clone(), BigRational::one()])
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> BigRational {
        self.coeffs.get(i).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> BigRational {
        self.coeffs.last().cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn is_monic(&self) -> bool {
        self.leading().is_one()
    }

    pub fn monic(&self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let lc = self.leading();
        self.scale(&lc.recip())
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        Self::new(self.coeffs.iter().map(|a| a * c).collect())
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    /// Evaluation at an integer point of a polynomial with integer coefficients.
    pub fn eval_int(&self, x: &BigInt) -> BigRational {
        self.eval(&int(x))
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * rat(i as i64))
                .collect(),
        )
    }

    pub fn pow(&self, mut e: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Euclidean division; panics on a zero divisor.
    pub fn divrem(&self, d: &Self) -> (Self, Self) {
        let dd = d.degree().expect("division by the zero polynomial");
        let lc_inv = d.leading().recip();
        let mut r = self.coeffs.clone();
        let Some(n) = self.degree() else {
            return (Self::zero(), Self::zero());
        };
        if n < dd {
            return (Self::zero(), self.clone());
        }
        let mut q = vec![BigRational::zero(); n - dd + 1];
        for i in (0..=n - dd).rev() {
            let c = &r[i + dd] * &lc_inv;
            if c.is_zero() {
                continue;
            }
            for (j, dc) in d.coeffs.iter().enumerate() {
                r[i + j] -= &c * dc;
            }
            q[i] = c;
        }
        r.truncate(dd);
        (Self::new(q), Self::new(r))
    }

    pub fn rem(&self, d: &Self) -> Self {
        self.divrem(d).1
    }

    /// Quotient when `d` divides `self` exactly.
    pub fn div_exact(&self, d: &Self) -> Option<Self> {
        let (q, r) = self.divrem(d);
        r.is_zero().then_some(q)
    }

    pub fn divides(&self, other: &Self) -> bool {
        other.rem(self).is_zero()
    }

    /// Monic greatest common divisor.
    pub fn gcd(&self, other: &Self) -> Self {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r.monic();
        }
        a.monic()
    }

    /// Inverse of `self` in `Q[x]/(modulus)`, if the two are coprime.
    pub fn inverse_mod(&self, modulus: &Self) -> Option<Self> {
        let (mut r0, mut r1) = (modulus.clone(), self.rem(modulus));
        let (mut s0, mut s1) = (Self::zero(), Self::one());
        while !r1.is_zero() {
            let (q, r) = r0.divrem(&r1);
            let s = &s0 - &(&q * &s1);
            r0 = r1;
            r1 = r;
            s0 = s1;
            s1 = s;
        }
        if r0.degree() != Some(0) {
            return None;
        }
        Some(s0.scale(&r0.leading().recip()).rem(modulus))
    }

    /// `self(inner(x))`.
    pub fn compose(&self, inner: &Self) -> Self {
        let mut acc = Self::zero();
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * inner) + &Self::constant(c.clone());
        }
        acc
    }

    pub fn is_integral(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_integer())
    }

    /// Integer coefficients, if every coefficient is integral.
    pub fn integer_coeffs(&self) -> Option<Vec<BigInt>> {
        self.coeffs.iter().map(|c| c.is_integer().then(|| c.to_integer())).collect()
    }

    /// Positive gcd of the coefficients of an integral polynomial.
    pub fn content(&self) -> BigInt {
        self.coeffs
            .iter()
            .fold(BigInt::zero(), |g, c| g.gcd(&c.to_integer()))
    }

    /// Newton power sums `p_1 … p_k` of the roots of a monic polynomial.
    pub fn power_sums(&self, k: usize) -> Vec<BigRational> {
        assert!(self.is_monic(), "power sums need a monic polynomial");
        let n = self.degree().unwrap_or(0);
        // e_i with sign: x^n + c_{n-1} x^{n-1} + … ; a_i = coeff of x^{n-i}
        let a = |i: usize| if i <= n { self.coeff(n - i) } else { BigRational::zero() };
        let mut p: Vec<BigRational> = Vec::with_capacity(k + 1);
        p.push(rat(n as i64));
        for m in 1..=k {
            // p_m = -m a_m - sum_{i=1}^{m-1} a_i p_{m-i}   (a_i = 0 for i > n)
            let mut s = -(a(m) * rat(m as i64));
            for i in 1..m {
                s -= a(i) * &p[m - i];
            }
            p.push(s);
        }
        p.remove(0);
        p
    }

    /// Monic polynomial of degree `n` whose roots have the given power sums.
    pub fn from_power_sums(n: usize, sums: &[BigRational]) -> Self {
        assert!(sums.len() >= n);
        // e_0 = 1, k e_k = sum_{i=1}^k (-1)^{i-1} e_{k-i} p_i
        let mut e = vec![BigRational::one()];
        for k in 1..=n {
            let mut s = BigRational::zero();
            for i in 1..=k {
                let term = &e[k - i] * &sums[i - 1];
                if i % 2 == 1 {
                    s += term;
                } else {
                    s -= term;
                }
            }
            e.push(s / rat(k as i64));
        }
        // x^n - e1 x^{n-1} + e2 x^{n-2} - …
        let mut coeffs = vec![BigRational::zero(); n + 1];
        for (k, ek) in e.iter().enumerate() {
            let c = if k % 2 == 0 { ek.clone() } else { -ek.clone() };
            coeffs[n - k] = c;
        }
        Self::new(coeffs)
    }

    /// Value modulo a prime `q`, or `None` if a denominator vanishes mod `q`.
    pub fn eval_mod(&self, x: u64, q: u64) -> Option<u64> {
        let qb = BigInt::from(q);
        let mut acc = BigInt::zero();
        for c in self.coeffs.iter().rev() {
            let den = c.denom().mod_floor(&qb);
            if den.is_zero() {
                return None;
            }
            let inv = den.modpow(&(&qb - 2u32), &qb);
            let cm = (c.numer() * inv).mod_floor(&qb);
            acc = (acc * x + cm).mod_floor(&qb);
        }
        acc.to_u64()
    }

    /// Roots modulo a prime `q` by exhaustive search; only for small `q`.
    pub fn roots_mod(&self, q: u64) -> Vec<u64> {
        (0..q).filter(|&x| self.eval_mod(x, q) == Some(0)).collect()
    }

    /// All rational roots of a nonzero polynomial, ascending and without
    /// multiplicity.
    pub fn rational_roots(&self, budget: FactorBudget) -> Result<Vec<BigRational>, Incomplete> {
        let Some(prim) = self.primitive_integer() else {
            return Ok(Vec::new());
        };
        let mut roots = Vec::new();
        // strip the root 0 first so the constant term is nonzero
        let mut shift = 0;
        while prim.get(shift).is_some_and(Zero::is_zero) {
            shift += 1;
        }
        if shift > 0 {
            roots.push(BigRational::zero());
        }
        let trimmed = &prim[shift..];
        if trimmed.len() <= 1 {
            return Ok(roots);
        }
        let a0 = &trimmed[0];
        let an = trimmed.last().unwrap();
        let num_divs = divisors(a0, budget)?;
        let den_divs = divisors(an, budget)?;
        let poly = QPoly::from_bigints(trimmed);
        let mut seen = std::collections::BTreeSet::new();
        for d in &num_divs {
            for e in &den_divs {
                for s in [1, -1] {
                    let cand = BigRational::new(d * s, e.clone());
                    if seen.insert(cand.clone()) && poly.eval(&cand).is_zero() {
                        roots.push(cand);
                    }
                }
            }
        }
        roots.sort();
        Ok(roots)
    }

    /// Integer coefficient vector of a primitive multiple of `self`.
    pub fn primitive_integer(&self) -> Option<Vec<BigInt>> {
        if self.is_zero() {
            return None;
        }
        let lcm = self.coeffs.iter().fold(BigInt::one(), |l, c| l.lcm(c.denom()));
        let ints: Vec<BigInt> = self.coeffs.iter().map(|c| (c * int(&lcm)).to_integer()).collect();
        let g = ints.iter().fold(BigInt::zero(), |g, c| g.gcd(c));
        Some(ints.into_iter().map(|c| c / &g).collect())
    }
}

/// Factorization over Q into primitive integer factors with positive
/// leading coefficient. `complete` is false when a leftover factor of degree
/// at least 6 has no linear or quadratic divisor and was not split further.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolyFactorization {
    pub content: BigRational,
    pub factors: Vec<(QPoly, u32)>,
    pub complete: bool,
}

impl PolyFactorization {
    pub fn expand(&self) -> QPoly {
        self.factors
            .iter()
            .fold(QPoly::constant(self.content.clone()), |acc, (f, e)| &acc * &f.pow(*e))
    }
}

const QUADRATIC_SEARCH_CAP: u64 = 5_000_000;

impl QPoly {
    /// Primitive integer normalization with positive leading coefficient.
    pub fn normalized(&self) -> Self {
        let prim = self.primitive_integer().expect("nonzero polynomial");
        let out = QPoly::from_bigints(&prim);
        if out.leading().is_negative() {
            -&out
        } else {
            out
        }
    }

    /// Splits off rational roots, then quadratic factors found by exhaustive
    /// search inside the Cauchy root bound.
    pub fn factor_over_q(&self, budget: FactorBudget) -> Result<PolyFactorization, Incomplete> {
        assert!(!self.is_zero(), "cannot factor the zero polynomial");
        let mut rest = self.normalized();
        let mut factors: Vec<(QPoly, u32)> = Vec::new();
        let mut complete = true;
        let strip = |rest: &mut QPoly, f: QPoly, factors: &mut Vec<(QPoly, u32)>| {
            let mut e = 0;
            while let Some(q) = rest.div_exact(&f) {
                *rest = q;
                e += 1;
            }
            if e > 0 {
                factors.push((f, e));
            }
        };
        for r in rest.rational_roots(budget)? {
            let lin = QPoly::new(vec![-BigRational::from_integer(r.numer().clone()), BigRational::from_integer(r.denom().clone())]).normalized();
            strip(&mut rest, lin, &mut factors);
        }
        while rest.degree().unwrap_or(0) >= 4 {
            match rest.quadratic_divisor(budget)? {
                Some(q) => strip(&mut rest, q, &mut factors),
                None => break,
            }
        }
        if rest.degree().unwrap_or(0) >= 1 {
            if rest.degree().unwrap() >= 6 {
                complete = false;
            }
            factors.push((rest.normalized(), 1));
        }
        factors.sort_by(|a, b| a.0.degree().cmp(&b.0.degree()).then_with(|| a.0.coeffs.cmp(&b.0.coeffs)));
        let prod = factors.iter().fold(QPoly::one(), |acc, (f, e)| &acc * &f.pow(*e));
        let content = self.leading() / prod.leading();
        Ok(PolyFactorization { content, factors, complete })
    }

    /// Some quadratic `c·x² + a·x + b` dividing a primitive integer
    /// polynomial with no rational roots, or `None` if there is none.
    fn quadratic_divisor(&self, budget: FactorBudget) -> Result<Option<QPoly>, Incomplete> {
        let prim = self.primitive_integer().expect("nonzero");
        let lead = prim.last().unwrap().abs();
        let a0 = &prim[0];
        // every root has |r| < R = 1 + max |a_i / a_n|
        let r_bound: BigInt = prim[..prim.len() - 1]
            .iter()
            .map(|c| BigRational::new(c.abs(), lead.clone()))
            .max()
            .unwrap_or_else(BigRational::zero)
            .ceil()
            .to_integer()
            + 1;
        let mut work = 0u64;
        for c in divisors(&lead, budget)? {
            let a_max: BigInt = BigInt::from(2) * &r_bound * &c;
            let b_max: BigInt = &r_bound * &r_bound * &c;
            for bd in divisors(a0, budget)? {
                if bd > b_max {
                    continue;
                }
                for b in [bd.clone(), -bd] {
                    let mut a = -a_max.clone();
                    while a <= a_max {
                        work += 1;
                        if work > QUADRATIC_SEARCH_CAP {
                            return Ok(None);
                        }
                        let cand = QPoly::from_bigints(&[b.clone(), a.clone(), c.clone()]);
                        if cand.divides(self) {
                            return Ok(Some(cand));
                        }
                        a += 1;
                    }
                }
            }
        }
        Ok(None)
    }
}

/// Positive divisors of a nonzero integer.
pub fn divisors(n: &BigInt, budget: FactorBudget) -> Result<Vec<BigInt>, Incomplete> {
    let fz = factor(n, budget)?;
    let mut divs = vec![BigInt::one()];
    for (p, e) in &fz.factors {
        let p = BigInt::from(p.clone());
        let mut next = Vec::with_capacity(divs.len() * (*e as usize + 1));
        for d in &divs {
            let mut pk = BigInt::one();
            for _ in 0..=*e {
                next.push(d * &pk);
                pk *= &p;
            }
        }
        divs = next;
    }
    divs.sort();
    Ok(divs)
}

impl Add for &QPoly {
    type Output = QPoly;
    fn add(self, rhs: &QPoly) -> QPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        QPoly::new((0..n).map(|i| self.coeff(i) + rhs.coeff(i)).collect())
    }
}

impl Sub for &QPoly {
    type Output = QPoly;
    fn sub(self, rhs: &QPoly) -> QPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        QPoly::new((0..n).map(|i| self.coeff(i) - rhs.coeff(i)).collect())
    }
}

impl Mul for &QPoly {
    type Output = QPoly;
    fn mul(self, rhs: &QPoly) -> QPoly {
        if self.is_zero() || rhs.is_zero() {
            return QPoly::zero();
        }
        let mut out = vec![BigRational::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        QPoly::new(out)
    }
}

impl Neg for &QPoly {
    type Output = QPoly;
    fn neg(self) -> QPoly {
        QPoly::new(self.coeffs.iter().map(|c| -c.clone()).collect())
    }
}

impl Neg for QPoly {
    type Output = QPoly;
    fn neg(self) -> QPoly {
        -&self
    }
}

impl Add for QPoly {
    type Output = QPoly;
    fn add(self, rhs: QPoly) -> QPoly {
        &self + &rhs
    }
}

impl Sub for QPoly {
    type Output = QPoly;
    fn sub(self, rhs: QPoly) -> QPoly {
        &self - &rhs
    }
}

impl Mul for QPoly {
    type Output = QPoly;
    fn mul(self, rhs: QPoly) -> QPoly {
        &self * &rhs
    }
}

impl fmt::Display for QPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let neg = c.is_negative();
            let abs = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            }
            first = false;
            let show_coeff = !abs.is_one() || i == 0;
            if show_coeff {
                write!(f, "{abs}")?;
                if i > 0 {
                    write!(f, "*")?;
                }
            }
            match i {
                0 => {}
                1 => write!(f, "x")?,
                _ => write!(f, "x^{i}")?,
            }
        }
        Ok(())
    }
}
