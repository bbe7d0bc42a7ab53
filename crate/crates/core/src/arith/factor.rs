//! Integer factorization: trial division below 10^6 followed by Brent's
//! variant of Pollard rho under an explicit iteration budget.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_with::{serde_as, DisplayFromStr};

use super::prime::{is_prime, small_primes, TRIAL_BOUND};

/// Environment variable overriding the default rho iteration budget.
pub const FACTOR_BUDGET_ENV: &str = "SHABOUND_FACTOR_BUDGET";

/// Upper bound on the total number of rho iterations spent on one input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FactorBudget {
    pub rho_iterations: u64,
}

impl FactorBudget {
    pub const DEFAULT_ITERATIONS: u64 = 1 << 21;

    pub fn new(rho_iterations: u64) -> Self {
        Self { rho_iterations }
    }

    /// Reads [`FACTOR_BUDGET_ENV`], falling back to the default.
    pub fn from_env() -> Self {
        std::env::var(FACTOR_BUDGET_ENV)
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .map(Self::new)
            .unwrap_or_default()
    }
}

impl Default for FactorBudget {
    fn default() -> Self {
        Self::new(Self::DEFAULT_ITERATIONS)
    }
}

/// A complete signed factorization `value = sign * prod(prime^exp)`.
#[serde_as]
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factorization {
    #[serde_as(as = "DisplayFromStr")]
    pub value: BigInt,
    pub sign: i8,
    #[serde_as(as = "Vec<(DisplayFromStr, DisplayFromStr)>")]
    pub factors: Vec<(BigUint, u32)>,
}

impl Factorization {
    fn from_parts(value: BigInt, mut factors: Vec<(BigUint, u32)>) -> Self {
        factors.sort();
        let mut merged: Vec<(BigUint, u32)> = Vec::with_capacity(factors.len());
        for (p, e) in factors {
            match merged.last_mut() {
                Some((q, f)) if *q == p => *f += e,
                _ => merged.push((p, e)),
            }
        }
        let sign = if value.is_negative() { -1 } else { 1 };
        Self { value, sign, factors: merged }
    }

    /// Multiplies the factorization back out.
    pub fn product(&self) -> BigInt {
        let mut acc = BigInt::from(self.sign);
        for (p, e) in &self.factors {
            acc *= BigInt::from(p.clone()).pow(*e);
        }
        acc
    }

    pub fn primes(&self) -> impl Iterator<Item = &BigUint> {
        self.factors.iter().map(|(p, _)| p)
    }

    /// The prime support as machine words, if every prime fits.
    pub fn primes_u64(&self) -> Option<Vec<u64>> {
        self.factors.iter().map(|(p, _)| p.to_u64()).collect()
    }

    pub fn omega(&self) -> usize {
        self.factors.len()
    }
}

/// Factorization that stopped at a cofactor resisting the budget.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Incomplete {
    pub value: BigInt,
    /// Primes found before giving up.
    pub found: Vec<(BigUint, u32)>,
    /// Composite (or unprovable) cofactor left unsplit.
    pub cofactor: BigUint,
}

impl fmt::Display for Incomplete {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "incomplete factorization of {}: cofactor {} ({} bits) resisted the budget",
            self.value,
            self.cofactor,
            self.cofactor.bits()
        )
    }
}

impl std::error::Error for Incomplete {}

fn gcd_u64(a: u64, b: u64) -> u64 {
    a.gcd(&b)
}

/// Brent's cycle-finding rho on word-sized composites.
fn rho_u64(n: u64, budget: &mut u64) -> Option<u64> {
    if n.is_multiple_of(2) {
        return Some(2);
    }
    let step = |x: u64, c: u64| ((x as u128 * x as u128 + c as u128) % n as u128) as u64;
    for c in 1..u64::MAX {
        if *budget == 0 {
            return None;
        }
        let mut y = 2u64;
        let mut r = 1u64;
        let mut q = 1u64;
        let mut g = 1u64;
        let mut x = y;
        let mut ys = y;
        const BLOCK: u64 = 128;
        while g == 1 {
            x = y;
            for _ in 0..r {
                y = step(y, c);
            }
            let mut k = 0;
            while k < r && g == 1 {
                ys = y;
                let lim = BLOCK.min(r - k);
                for _ in 0..lim {
                    y = step(y, c);
                    q = ((q as u128 * x.abs_diff(y) as u128) % n as u128) as u64;
                }
                *budget = budget.saturating_sub(lim);
                g = gcd_u64(q, n);
                k += lim;
                if *budget == 0 && g == 1 {
                    return None;
                }
            }
            r *= 2;
        }
        if g == n {
            loop {
                ys = step(ys, c);
                g = gcd_u64(x.abs_diff(ys), n);
                if g > 1 {
                    break;
                }
            }
        }
        if g != n {
            return Some(g);
        }
    }
    None
}

fn rho_big(n: &BigUint, budget: &mut u64) -> Option<BigUint> {
    if n.is_even() {
        return Some(BigUint::from(2u32));
    }
    let one = BigUint::one();
    let abs_diff = |a: &BigUint, b: &BigUint| if a > b { a - b } else { b - a };
    let mut c = BigUint::one();
    loop {
        if *budget == 0 {
            return None;
        }
        let step = |x: &BigUint| (x * x + &c) % n;
        let mut y = BigUint::from(2u32);
        let mut r = 1u64;
        let mut q = BigUint::one();
        let mut g = BigUint::one();
        let mut x = y.clone();
        let mut ys = y.clone();
        const BLOCK: u64 = 128;
        while g == one {
            x = y.clone();
            for _ in 0..r {
                y = step(&y);
            }
            let mut k = 0;
            while k < r && g == one {
                ys = y.clone();
                let lim = BLOCK.min(r - k);
                for _ in 0..lim {
                    y = step(&y);
                    q = (&q * abs_diff(&x, &y)) % n;
                }
                *budget = budget.saturating_sub(lim);
                g = q.gcd(n);
                k += lim;
                if *budget == 0 && g == one {
                    return None;
                }
            }
            r *= 2;
        }
        if &g == n {
            loop {
                ys = step(&ys);
                g = abs_diff(&x, &ys).gcd(n);
                if g > one {
                    break;
                }
            }
        }
        if &g != n {
            return Some(g);
        }
        c += 1u32;
    }
}

/// Detects `n = r^k` with `k >= 2`, returning the smallest root.
fn perfect_power(n: &BigUint) -> Option<(BigUint, u32)> {
    let bits = n.bits() as u32;
    let mut best = None;
    for k in 2..=bits.max(2) {
        let r = n.nth_root(k);
        if r <= BigUint::one() {
            break;
        }
        if &r.pow(k) == n {
            best = Some((r, k));
        }
    }
    best
}

fn split(n: &BigUint, budget: &mut u64) -> Option<BigUint> {
    if let Some((root, _)) = perfect_power(n) {
        return Some(root);
    }
    match n.to_u64() {
        Some(small) => rho_u64(small, budget).map(BigUint::from),
        None => rho_big(n, budget),
    }
}

/// Factors `n` after dividing out primes already known to divide it.
/// Entries of `hint` must be prime.
pub fn factor_with_hint(n: &BigInt, hint: &[u64], budget: FactorBudget) -> Result<Factorization, Incomplete> {
    assert!(!n.is_zero(), "factor(0) is undefined");
    let mut rest = n.abs();
    let mut found: Vec<(BigUint, u32)> = Vec::new();
    for &q in hint {
        let e = remove_factor(&mut rest, &BigInt::from(q));
        if e > 0 {
            found.push((BigUint::from(q), e));
        }
    }
    let tail = factor(&rest, budget).map_err(|inc| Incomplete {
        value: n.clone(),
        found: found.iter().cloned().chain(inc.found).collect(),
        cofactor: inc.cofactor,
    })?;
    found.extend(tail.factors);
    Ok(Factorization::from_parts(n.clone(), found))
}

/// Factors a nonzero integer.
///
/// Panics if `n == 0`.
pub fn factor(n: &BigInt, budget: FactorBudget) -> Result<Factorization, Incomplete> {
    assert!(!n.is_zero(), "factor(0) is undefined");
    let mut rest = n.magnitude().clone();
    let mut found: Vec<(BigUint, u32)> = Vec::new();

    // Trial division, stopping early once p^2 exceeds what is left.
    let mut exhausted = false;
    if let Some(mut w) = rest.to_u128() {
        for &p in small_primes() {
            let p128 = p as u128;
            if p128 * p128 > w {
                exhausted = true;
                break;
            }
            if w % p128 == 0 {
                let mut e = 0;
                while w % p128 == 0 {
                    w /= p128;
                    e += 1;
                }
                found.push((BigUint::from(p), e));
            }
        }
        rest = BigUint::from(w);
    } else {
        for &p in small_primes() {
            let pb = BigUint::from(p);
            if &pb * &pb > rest {
                exhausted = true;
                break;
            }
            if (&rest % p).is_zero() {
                let mut e = 0;
                while (&rest % p).is_zero() {
                    rest /= p;
                    e += 1;
                }
                found.push((pb, e));
            }
            if let Some(w) = rest.to_u128() {
                // Finish in the cheap representation.
                return finish_small(n, found, w, p, budget);
            }
        }
    }
    if rest.is_one() {
        return Ok(Factorization::from_parts(n.clone(), found));
    }
    let bound = BigUint::from(TRIAL_BOUND);
    if exhausted || rest < &bound * &bound {
        found.push((rest, 1));
        return Ok(Factorization::from_parts(n.clone(), found));
    }
    finish_with_rho(n, found, rest, budget)
}

fn finish_small(
    n: &BigInt,
    mut found: Vec<(BigUint, u32)>,
    mut w: u128,
    last: u32,
    budget: FactorBudget,
) -> Result<Factorization, Incomplete> {
    let mut exhausted = false;
    for &p in small_primes().iter().filter(|&&q| q > last) {
        let p128 = p as u128;
        if p128 * p128 > w {
            exhausted = true;
            break;
        }
        if w.is_multiple_of(p128) {
            let mut e = 0;
            while w.is_multiple_of(p128) {
                w /= p128;
                e += 1;
            }
            found.push((BigUint::from(p), e));
        }
    }
    if w == 1 {
        return Ok(Factorization::from_parts(n.clone(), found));
    }
    let bound = TRIAL_BOUND as u128;
    if exhausted || w < bound * bound {
        found.push((BigUint::from(w), 1));
        return Ok(Factorization::from_parts(n.clone(), found));
    }
    finish_with_rho(n, found, BigUint::from(w), budget)
}

fn finish_with_rho(
    n: &BigInt,
    mut found: Vec<(BigUint, u32)>,
    rest: BigUint,
    budget: FactorBudget,
) -> Result<Factorization, Incomplete> {
    let mut remaining = budget.rho_iterations;
    let mut stack = vec![rest];
    while let Some(c) = stack.pop() {
        if c.is_one() {
            continue;
        }
        if let Ok(true) = is_prime(&c) {
            found.push((c, 1));
            continue;
        }
        match split(&c, &mut remaining) {
            Some(d) => {
                let other = &c / &d;
                stack.push(d);
                stack.push(other);
            }
            None => {
                found.sort();
                let cofactor = stack.into_iter().fold(c, |acc, x| acc * x);
                return Err(Incomplete { value: n.clone(), found, cofactor });
            }
        }
    }
    Ok(Factorization::from_parts(n.clone(), found))
}

/// Number of distinct primes dividing `n`.
pub fn count_distinct_prime_factors(n: &BigInt, budget: FactorBudget) -> Result<usize, Incomplete> {
    factor(n, budget).map(|f| f.omega())
}

/// p-adic valuation of a nonzero integer.
pub fn valuation(n: &BigInt, p: &BigInt) -> u32 {
    debug_assert!(!n.is_zero());
    let mut n = n.clone();
    let mut v = 0;
    loop {
        let (q, r) = n.div_rem(p);
        if !r.is_zero() {
            return v;
        }
        n = q;
        v += 1;
    }
}

/// Strips every factor of `p` from `n`, returning the exponent removed.
pub fn remove_factor(n: &mut BigInt, p: &BigInt) -> u32 {
    let mut v = 0;
    if n.is_zero() {
        return 0;
    }
    loop {
        let (q, r) = n.div_rem(p);
        if !r.is_zero() {
            return v;
        }
        *n = q;
        v += 1;
    }
}
