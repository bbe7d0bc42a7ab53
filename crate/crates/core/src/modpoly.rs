//! Dense polynomials over F_q for word-size primes q, used to compute exact
//! rational results multi-modularly.

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::arith::is_prime_u64;
use crate::poly::QPoly;

/// Primes just below 2^62, largest first.
pub(crate) fn big_primes() -> &'static [u64] {
    static PRIMES: OnceLock<Vec<u64>> = OnceLock::new();
    PRIMES.get_or_init(|| {
        let mut out = Vec::with_capacity(128);
        let mut n = (1u64 << 62) - 1;
        while out.len() < 128 {
            if is_prime_u64(n) {
                out.push(n);
            }
            n -= 2;
        }
        out
    })
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Fq {
    pub q: u64,
}

impl Fq {
    #[inline]
    pub fn add(self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.q {
            s - self.q
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.q - b
        }
    }

    #[inline]
    pub fn mul(self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.q as u128) as u64
    }

    pub fn pow(self, mut a: u64, mut e: u64) -> u64 {
        let mut acc = 1;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, a);
            }
            a = self.mul(a, a);
            e >>= 1;
        }
        acc
    }

    /// Inverse of a nonzero element.
    pub fn inv(self, a: u64) -> u64 {
        debug_assert!(a != 0);
        self.pow(a, self.q - 2)
    }

    pub fn reduce_int(self, n: &BigInt) -> u64 {
        n.mod_floor(&BigInt::from(self.q)).to_u64().expect("reduced below q")
    }

    /// Image of a rational, or `None` when q divides the denominator.
    pub fn reduce_rational(self, x: &BigRational) -> Option<u64> {
        let d = self.reduce_int(x.denom());
        if d == 0 {
            return None;
        }
        Some(self.mul(self.reduce_int(x.numer()), self.inv(d)))
    }

    /// Coefficient vector, lowest degree first, without trailing zeros.
    pub fn poly(self, f: &QPoly) -> Option<Vec<u64>> {
        let mut out: Vec<u64> = f.coeffs().iter().map(|c| self.reduce_rational(c)).collect::<Option<_>>()?;
        trim(&mut out);
        Some(out)
    }

    pub fn poly_mul(self, a: &[u64], b: &[u64]) -> Vec<u64> {
        if a.is_empty() || b.is_empty() {
            return Vec::new();
        }
        let mut out = vec![0u64; a.len() + b.len() - 1];
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                out[i + j] = self.add(out[i + j], self.mul(x, y));
            }
        }
        trim(&mut out);
        out
    }

    pub fn poly_sub(self, a: &[u64], b: &[u64]) -> Vec<u64> {
        let mut out = vec![0u64; a.len().max(b.len())];
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.sub(a.get(i).copied().unwrap_or(0), b.get(i).copied().unwrap_or(0));
        }
        trim(&mut out);
        out
    }

    /// Quotient and remainder; `d` must be nonzero.
    pub fn poly_divrem(self, a: &[u64], d: &[u64]) -> (Vec<u64>, Vec<u64>) {
        let dd = d.len() - 1;
        let lc_inv = self.inv(d[dd]);
        let mut r = a.to_vec();
        if r.len() <= dd {
            return (Vec::new(), r);
        }
        let mut q = vec![0u64; r.len() - dd];
        for i in (0..q.len()).rev() {
            let c = self.mul(r[i + dd], lc_inv);
            if c == 0 {
                continue;
            }
            for (j, &dc) in d.iter().enumerate() {
                r[i + j] = self.sub(r[i + j], self.mul(c, dc));
            }
            q[i] = c;
        }
        r.truncate(dd);
        trim(&mut r);
        trim(&mut q);
        (q, r)
    }

    pub fn poly_rem(self, a: &[u64], d: &[u64]) -> Vec<u64> {
        self.poly_divrem(a, d).1
    }

    /// Inverse of `a` modulo `m`, if they are coprime.
    pub fn poly_inverse_mod(self, a: &[u64], m: &[u64]) -> Option<Vec<u64>> {
        // invariant: s·a ≡ r (mod m)
        let (mut r0, mut r1) = (m.to_vec(), self.poly_rem(a, m));
        let (mut s0, mut s1) = (Vec::new(), vec![1u64]);
        while !r1.is_empty() {
            let (q, r) = self.poly_divrem(&r0, &r1);
            let s = self.poly_sub(&s0, &self.poly_mul(&q, &s1));
            r0 = std::mem::replace(&mut r1, r);
            s0 = std::mem::replace(&mut s1, s);
        }
        if r0.len() != 1 {
            return None;
        }
        let c = self.inv(r0[0]);
        Some(s0.iter().map(|&x| self.mul(x, c)).collect())
    }

    /// Power sums `p_1 … p_k` of the roots of a monic polynomial.
    pub fn power_sums(self, f: &[u64], k: usize) -> Vec<u64> {
        let n = f.len() - 1;
        let a = |i: usize| if i <= n { f[n - i] } else { 0 };
        let mut p = vec![n as u64 % self.q];
        for m in 1..=k {
            let mut s = self.sub(0, self.mul(a(m), m as u64 % self.q));
            for i in 1..m {
                s = self.sub(s, self.mul(a(i), p[m - i]));
            }
            p.push(s);
        }
        p.remove(0);
        p
    }

    /// Monic polynomial of degree `n` with the given power sums; needs q > n.
    pub fn poly_from_power_sums(self, n: usize, sums: &[u64]) -> Vec<u64> {
        let mut e = vec![1u64];
        for k in 1..=n {
            let mut s = 0;
            for i in 1..=k {
                let term = self.mul(e[k - i], sums[i - 1]);
                s = if i % 2 == 1 { self.add(s, term) } else { self.sub(s, term) };
            }
            e.push(self.mul(s, self.inv(k as u64)));
        }
        let mut coeffs = vec![0u64; n + 1];
        for (k, ek) in e.iter().enumerate() {
            coeffs[n - k] = if k % 2 == 0 { *ek } else { self.sub(0, *ek) };
        }
        coeffs
    }
}

fn trim(v: &mut Vec<u64>) {
    while v.last() == Some(&0) {
        v.pop();
    }
}

/// The rational `n/d` with `|n|, |d| ≤ sqrt(m/2)` congruent to `a` mod `m`,
/// if one exists.
pub(crate) fn rational_reconstruct(a: &BigInt, m: &BigInt) -> Option<BigRational> {
    let bound = (m >> 1u32).sqrt();
    let (mut r0, mut r1) = (m.clone(), a.mod_floor(m));
    let (mut t0, mut t1) = (BigInt::zero(), BigInt::one());
    while r1 > bound {
        let (q, r) = r0.div_rem(&r1);
        let t = &t0 - &q * &t1;
        r0 = std::mem::replace(&mut r1, r);
        t0 = std::mem::replace(&mut t1, t);
    }
    if t1.is_zero() || t1.abs() > bound || !r1.gcd(&t1).is_one() {
        return None;
    }
    Some(BigRational::new(r1, t1))
}

/// Accumulates residues of a coefficient vector across primes.
#[derive(Debug, Clone)]
pub(crate) struct CrtVector {
    pub residues: Vec<BigInt>,
    pub modulus: BigInt,
}

impl CrtVector {
    pub fn new(len: usize) -> Self {
        Self { residues: vec![BigInt::zero(); len], modulus: BigInt::one() }
    }

    pub fn push(&mut self, q: u64, values: &[u64]) {
        let qb = BigInt::from(q);
        let fq = Fq { q };
        // x ≡ r (mod M), x ≡ v (mod q): x = r + M·((v − r)·M⁻¹ mod q)
        let m_inv = fq.inv(fq.reduce_int(&self.modulus));
        for (r, &v) in self.residues.iter_mut().zip(values) {
            let diff = fq.sub(v, fq.reduce_int(r));
            let k = fq.mul(diff, m_inv);
            *r += &self.modulus * BigInt::from(k);
        }
        self.modulus *= qb;
    }

    pub fn reconstruct(&self) -> Option<Vec<BigRational>> {
        self.residues.iter().map(|r| rational_reconstruct(r, &self.modulus)).collect()
    }
}
