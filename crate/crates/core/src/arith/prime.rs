//! Deterministic primality testing over the 128-bit working range.
//!
//! * `n < 2^64`: strong probable-prime test to the twelve prime bases up to 37,
//!   which has no pseudoprimes below 3.18e23.
//! * `n < 3.317e24`: the thirteen prime bases up to 41 (no pseudoprimes below
//!   3 317 044 064 679 887 385 961 981).
//! * up to `2^128`: Baillie-PSW (strong base 2 plus strong Lucas with
//!   Selfridge parameters). No composite passing it is known.
//!
//! Anything larger is rejected with [`ArithError::OutOfRange`].

use std::sync::OnceLock;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use super::ArithError;

/// Bound below which trial division is exhaustive.
pub const TRIAL_BOUND: u32 = 1_000_000;

const BASES_64: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
const BASES_81: [u64; 13] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41];
const MR13_LIMIT: u128 = 3_317_044_064_679_887_385_961_981;

/// All primes below [`TRIAL_BOUND`].
pub fn small_primes() -> &'static [u32] {
    static PRIMES: OnceLock<Vec<u32>> = OnceLock::new();
    PRIMES.get_or_init(|| {
        let n = TRIAL_BOUND as usize;
        let mut composite = vec![false; n];
        let mut out = Vec::with_capacity(78_500);
        for i in 2..n {
            if !composite[i] {
                out.push(i as u32);
                let mut j = i * i;
                while j < n {
                    composite[j] = true;
                    j += i;
                }
            }
        }
        out
    })
}

#[inline]
pub(crate) fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub(crate) fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

fn strong_probable_prime_u64(n: u64, base: u64) -> bool {
    let a = base % n;
    if a == 0 {
        return true;
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    let mut x = pow_mod(a, d, n);
    if x == 1 || x == n - 1 {
        return true;
    }
    for _ in 1..s {
        x = mul_mod(x, x, n);
        if x == n - 1 {
            return true;
        }
    }
    false
}

/// Deterministic primality for machine words.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &BASES_64 {
        if n == p {
            return true;
        }
        if n.is_multiple_of(p) {
            return false;
        }
    }
    if n < 41 * 41 {
        return true;
    }
    BASES_64.iter().all(|&b| strong_probable_prime_u64(n, b))
}

fn strong_probable_prime_big(n: &BigUint, base: u64) -> bool {
    let one = BigUint::one();
    let n_minus_1 = n - &one;
    let s = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> s;
    let mut x = BigUint::from(base).modpow(&d, n);
    if x == one || x == n_minus_1 {
        return true;
    }
    for _ in 1..s {
        x = (&x * &x) % n;
        if x == n_minus_1 {
            return true;
        }
    }
    false
}

/// Jacobi symbol (a/n) for odd positive n.
pub fn jacobi(a: &BigInt, n: &BigInt) -> i32 {
    debug_assert!(n.is_odd() && n.sign() == Sign::Plus);
    let mut a = a.mod_floor(n);
    let mut n = n.clone();
    let mut result = 1;
    let three = BigInt::from(3);
    let five = BigInt::from(5);
    let eight = BigInt::from(8);
    while !a.is_zero() {
        while a.is_even() {
            a >>= 1;
            let r = n.mod_floor(&eight);
            if r == three || r == five {
                result = -result;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a.mod_floor(&BigInt::from(4)) == three && n.mod_floor(&BigInt::from(4)) == three {
            result = -result;
        }
        a = a.mod_floor(&n);
    }
    if n.is_one() {
        result
    } else {
        0
    }
}

fn half_mod(x: BigInt, n: &BigInt) -> BigInt {
    let x = x.mod_floor(n);
    if x.is_odd() {
        (x + n) >> 1
    } else {
        x >> 1
    }
}

/// Strong Lucas probable-prime test with Selfridge's method A parameters.
fn strong_lucas(n: &BigUint) -> bool {
    let sqrt = n.sqrt();
    if &(&sqrt * &sqrt) == n {
        return false;
    }
    let nn = BigInt::from(n.clone());
    let mut d_abs = 5i64;
    let mut sign = 1i64;
    let d = loop {
        let d = BigInt::from(sign * d_abs);
        match jacobi(&d, &nn) {
            -1 => break d,
            0 => {
                // gcd(D, n) > 1; n is composite unless n == |D|
                return BigInt::from(d_abs) == nn;
            }
            _ => {}
        }
        d_abs += 2;
        sign = -sign;
    };
    let p_param = BigInt::one();
    let q_param: BigInt = (BigInt::one() - &d) / 4;

    let n_plus_1: BigInt = &nn + 1;
    let s = n_plus_1.trailing_zeros().unwrap_or(0);
    let k = &n_plus_1 >> s;

    let mut u = BigInt::one();
    let mut v = p_param.clone();
    let mut qk = q_param.mod_floor(&nn);
    let bits = k.bits();
    for i in (0..bits - 1).rev() {
        u = (&u * &v).mod_floor(&nn);
        v = (&v * &v - (&qk << 1u32)).mod_floor(&nn);
        qk = (&qk * &qk).mod_floor(&nn);
        if k.bit(i) {
            let u_next = half_mod(&p_param * &u + &v, &nn);
            let v_next = half_mod(&d * &u + &p_param * &v, &nn);
            u = u_next;
            v = v_next;
            qk = (&qk * &q_param).mod_floor(&nn);
        }
    }
    if u.is_zero() || v.is_zero() {
        return true;
    }
    for _ in 1..s {
        v = (&v * &v - (&qk << 1u32)).mod_floor(&nn);
        if v.is_zero() {
            return true;
        }
        qk = (&qk * &qk).mod_floor(&nn);
    }
    false
}

/// Primality of a nonnegative integer within the 128-bit working range.
pub fn is_prime(n: &BigUint) -> Result<bool, ArithError> {
    if let Some(small) = n.to_u64() {
        return Ok(is_prime_u64(small));
    }
    let Some(wide) = n.to_u128() else {
        return Err(ArithError::OutOfRange { bits: n.bits() });
    };
    for &p in small_primes().iter().take(200) {
        if (wide % p as u128) == 0 {
            return Ok(false);
        }
    }
    if wide < MR13_LIMIT {
        return Ok(BASES_81.iter().all(|&b| strong_probable_prime_big(n, b)));
    }
    Ok(strong_probable_prime_big(n, 2) && strong_lucas(n))
}

/// Convenience wrapper for signed inputs; negative numbers are not prime.
pub fn is_prime_int(n: &BigInt) -> Result<bool, ArithError> {
    match n.to_biguint() {
        Some(u) => is_prime(&u),
        None => Ok(false),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial(n: u64) -> bool {
        if n < 2 {
            return false;
        }
        let mut d = 2;
        while d * d <= n {
            if n.is_multiple_of(d) {
                return false;
            }
            d += 1;
        }
        true
    }

    #[test]
    fn small_values() {
        assert!(is_prime_u64(11));
        assert!(!is_prime_u64(1));
        assert!(!is_prime_u64(0));
        assert!(is_prime_u64(2));
        for n in 0..20_000u64 {
            assert_eq!(is_prime_u64(n), trial(n), "n = {n}");
        }
    }

    #[test]
    fn strong_pseudoprime_to_small_bases() {
        let n = 3_215_031_751u64;
        assert!(!trial(n));
        for b in [2, 3, 5, 7] {
            assert!(strong_probable_prime_u64(n, b));
        }
        assert!(!is_prime_u64(n));
    }

    #[test]
    fn wide_range() {
        // 2^89 - 1 is a Mersenne prime; 2^67 - 1 is composite.
        let m89 = (BigUint::one() << 89) - 1u32;
        assert_eq!(is_prime(&m89), Ok(true));
        let m67 = (BigUint::one() << 67) - 1u32;
        assert_eq!(is_prime(&m67), Ok(false));
        // 2^127 - 1 exercises the Baillie-PSW branch.
        let m127 = (BigUint::one() << 127) - 1u32;
        assert_eq!(is_prime(&m127), Ok(true));
        let composite = BigUint::from(18_446_744_073_709_551_557u64) * 18_446_744_073_709_551_533u64;
        assert_eq!(is_prime(&composite), Ok(false));
        assert!(is_prime(&(BigUint::one() << 130)).is_err());
    }

    #[test]
    fn lucas_agrees_on_small_odd_numbers() {
        for n in (5u64..5_000).step_by(2) {
            let big = BigUint::from(n);
            let bpsw = strong_probable_prime_big(&big, 2) && strong_lucas(&big);
            assert_eq!(bpsw, trial(n), "n = {n}");
        }
    }

    #[test]
    fn jacobi_matches_euler_for_primes() {
        for p in [3i64, 5, 7, 11, 13, 101] {
            for a in 0..p {
                let euler = pow_mod(a as u64, ((p - 1) / 2) as u64, p as u64);
                let expected = if a == 0 { 0 } else if euler == 1 { 1 } else { -1 };
                assert_eq!(jacobi(&BigInt::from(a), &BigInt::from(p)), expected);
            }
        }
    }
}
