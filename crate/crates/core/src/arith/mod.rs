//! Exact integer and modular arithmetic.

mod factor;
mod prime;
mod residue;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use factor::{
    count_distinct_prime_factors, factor, factor_with_hint, remove_factor, valuation, FactorBudget, Factorization,
    Incomplete, FACTOR_BUDGET_ENV,
};
pub use prime::{is_prime, is_prime_int, is_prime_u64, jacobi, small_primes, TRIAL_BOUND};
pub use residue::{
    fermat_quotient, is_local_pth_power, is_local_pth_power_int, primitive_root,
    rational_valuation, ResidueCharacter,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArithError {
    #[error("input of {bits} bits exceeds the 128-bit working range")]
    OutOfRange { bits: u64 },
    #[error("{0} is not prime")]
    NotPrime(String),
    #[error("{0} is not an odd prime")]
    NotOddPrime(u64),
    #[error("prime {ell} is not congruent to 1 mod {p}")]
    NotOneModP { ell: u64, p: u64 },
    #[error("argument is divisible by the modulus {ell}")]
    DivisibleByModulus { ell: u64 },
    #[error("zero has no valuation")]
    Zero,
    #[error("moduli {a} and {b} are not coprime")]
    NotCoprime { a: String, b: String },
    #[error("modulus must be positive, got {0}")]
    NonPositiveModulus(String),
    #[error("prime {0} is ramified in the cyclotomic field")]
    Ramified(u64),
}

/// Least nonnegative solution of a system of congruences with pairwise
/// coprime moduli. The empty system has solution 0.
pub fn crt_solve(congruences: &[(BigInt, BigInt)]) -> Result<BigInt, ArithError> {
    for (_, m) in congruences {
        if !m.is_positive() {
            return Err(ArithError::NonPositiveModulus(m.to_string()));
        }
    }
    for (i, (_, a)) in congruences.iter().enumerate() {
        for (_, b) in &congruences[i + 1..] {
            if !a.gcd(b).is_one() {
                return Err(ArithError::NotCoprime { a: a.to_string(), b: b.to_string() });
            }
        }
    }
    let mut x = BigInt::zero();
    let mut modulus = BigInt::one();
    for (r, m) in congruences {
        // x + modulus * k ≡ r (mod m)
        let ext = modulus.extended_gcd(m);
        let inv = ext.x.mod_floor(m);
        let k = ((r - &x) * inv).mod_floor(m);
        x += &modulus * k;
        modulus *= m;
        x = x.mod_floor(&modulus);
    }
    Ok(x)
}

/// Product of the moduli of a congruence system.
pub fn crt_modulus(congruences: &[(BigInt, BigInt)]) -> BigInt {
    congruences.iter().fold(BigInt::one(), |acc, (_, m)| acc * m)
}

/// Splitting of a rational prime `ℓ ≠ p` in `Q(ζ_p)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplittingData {
    pub ell: u64,
    pub p: u64,
    /// Residue degree: the multiplicative order of ℓ modulo p.
    pub residue_degree: u64,
    /// Number of primes above ℓ, `(p-1)/f`.
    pub num_primes: u64,
}

impl SplittingData {
    pub fn splits_completely(&self) -> bool {
        self.residue_degree == 1
    }
}

pub fn cyclotomic_splitting(ell: u64, p: u64) -> Result<SplittingData, ArithError> {
    if !is_prime_u64(p) || p == 2 {
        return Err(ArithError::NotOddPrime(p));
    }
    if !is_prime_u64(ell) {
        return Err(ArithError::NotPrime(ell.to_string()));
    }
    if ell == p {
        return Err(ArithError::Ramified(ell));
    }
    let base = ell % p;
    let mut f = 1u64;
    let mut acc = base;
    while acc != 1 {
        acc = acc * base % p;
        f += 1;
    }
    Ok(SplittingData { ell, p, residue_degree: f, num_primes: (p - 1) / f })
}
