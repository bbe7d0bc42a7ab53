//! p-th power residue characters on (Z/ℓ)^* and local p-th power tests.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::prime::{is_prime_u64, pow_mod};
use super::ArithError;

/// The discrete-log character `(Z/ℓ)^* → Z/p` for a prime `ℓ ≡ 1 (mod p)`.
///
/// The fixed order-`p` element is `g = r^((ℓ-1)/p)` where `r` is the least
/// primitive root modulo `ℓ`; `eval(a)` is the unique `x` with
/// `a^((ℓ-1)/p) ≡ g^x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ResidueCharacter {
    modulus: u64,
    p: u64,
    generator: u64,
}

/// Distinct prime divisors of a machine word by trial division.
fn prime_divisors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Least primitive root modulo an odd prime `ell`.
pub fn primitive_root(ell: u64) -> u64 {
    if ell == 2 {
        return 1;
    }
    let divisors = prime_divisors(ell - 1);
    (2..ell)
        .find(|&r| divisors.iter().all(|&q| pow_mod(r, (ell - 1) / q, ell) != 1))
        .expect("every prime has a primitive root")
}

impl ResidueCharacter {
    pub fn new(modulus: u64, p: u64) -> Result<Self, ArithError> {
        if !is_prime_u64(p) || p == 2 {
            return Err(ArithError::NotOddPrime(p));
        }
        if !is_prime_u64(modulus) {
            return Err(ArithError::NotPrime(modulus.to_string()));
        }
        if modulus % p != 1 {
            return Err(ArithError::NotOneModP { ell: modulus, p });
        }
        let r = primitive_root(modulus);
        let generator = pow_mod(r, (modulus - 1) / p, modulus);
        Ok(Self { modulus, p, generator })
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn generator(&self) -> u64 {
        self.generator
    }

    /// Character value of a word-sized residue.
    pub fn eval_u64(&self, a: u64) -> Result<u64, ArithError> {
        let a = a % self.modulus;
        if a == 0 {
            return Err(ArithError::DivisibleByModulus { ell: self.modulus });
        }
        let h = pow_mod(a, (self.modulus - 1) / self.p, self.modulus);
        let mut acc = 1u64;
        for x in 0..self.p {
            if acc == h {
                return Ok(x);
            }
            acc = ((acc as u128 * self.generator as u128) % self.modulus as u128) as u64;
        }
        unreachable!("a^((ℓ-1)/p) always lies in the subgroup generated by g")
    }

    pub fn eval(&self, a: &BigInt) -> Result<u64, ArithError> {
        let reduced = a
            .mod_floor(&BigInt::from(self.modulus))
            .to_u64()
            .expect("residue fits the modulus");
        self.eval_u64(reduced)
    }

    /// Character of a rational number with numerator and denominator prime to ℓ.
    pub fn eval_rational(&self, x: &BigRational) -> Result<u64, ArithError> {
        let num = self.eval(x.numer())?;
        let den = self.eval(x.denom())?;
        Ok((num + self.p - den) % self.p)
    }
}

/// Fermat quotient `(a^(p-1) - 1)/p mod p`, the additive coordinate of
/// `Z_p^* / (Z_p^*)^p ≅ Z/p`. Requires `p ∤ a`.
pub fn fermat_quotient(a: &BigInt, p: u64) -> Result<u64, ArithError> {
    let p2 = BigInt::from(p) * BigInt::from(p);
    let a = a.mod_floor(&p2);
    if (&a % p).is_zero() {
        return Err(ArithError::DivisibleByModulus { ell: p });
    }
    let pw = a.modpow(&BigInt::from(p - 1), &p2);
    let q = (pw - 1u32) / p;
    Ok(q.to_u64().expect("value below p"))
}

fn fermat_quotient_rational(x: &BigRational, p: u64) -> Result<u64, ArithError> {
    let num = fermat_quotient(x.numer(), p)?;
    let den = fermat_quotient(x.denom(), p)?;
    Ok((num + p - den) % p)
}

/// `v_q(x)` for a nonzero rational.
pub fn rational_valuation(x: &BigRational, q: u64) -> i64 {
    let qb = BigInt::from(q);
    let mut v = 0i64;
    let mut n = x.numer().clone();
    while !n.is_zero() && (&n % &qb).is_zero() {
        n /= &qb;
        v += 1;
    }
    let mut d = x.denom().clone();
    while (&d % &qb).is_zero() {
        d /= &qb;
        v -= 1;
    }
    v
}

/// Whether a nonzero rational `x` is a p-th power in `Q_q`.
///
/// `v_q(x) ≡ 0 (mod p)` is required; the unit part is then tested by the
/// character at `q ≡ 1 (mod p)`, by `u^(p-1) ≡ 1 (mod p²)` at `q = p`, and is
/// automatically a p-th power otherwise.
pub fn is_local_pth_power(x: &BigRational, q: u64, p: u64) -> Result<bool, ArithError> {
    if x.is_zero() {
        return Err(ArithError::Zero);
    }
    let v = rational_valuation(x, q);
    if v.rem_euclid(p as i64) != 0 {
        return Ok(false);
    }
    let qpow = BigRational::from_integer(BigInt::from(q).pow(v.unsigned_abs() as u32));
    let unit = if v >= 0 { x / qpow } else { x * qpow };
    if q == p {
        return Ok(fermat_quotient_rational(&unit, p)? == 0);
    }
    if q % p == 1 {
        let chi = ResidueCharacter::new(q, p)?;
        return Ok(chi.eval_rational(&unit)? == 0);
    }
    Ok(true)
}

/// Integer convenience wrapper for [`is_local_pth_power`].
pub fn is_local_pth_power_int(x: &BigInt, q: u64, p: u64) -> Result<bool, ArithError> {
    is_local_pth_power(&BigRational::from_integer(x.clone()), q, p)
}
