//! Global minimal models and per-prime reduction data.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};

use super::local::{split_by_c6, tate_local_data, val, Kodaira};
use super::{Curve, EllipticError, Transform};
use crate::arith::{factor, FactorBudget};
use crate::poly::int;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReductionKind {
    Good,
    SplitMultiplicative,
    NonsplitMultiplicative,
    Additive,
}

impl ReductionKind {
    pub fn is_multiplicative(self) -> bool {
        matches!(self, Self::SplitMultiplicative | Self::NonsplitMultiplicative)
    }
}

/// Reduction type at `q`, read on a model minimal at `q`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionData {
    pub q: u64,
    pub kind: ReductionKind,
    pub v_disc: u32,
    /// `None` when `c4 = 0`.
    pub v_c4: Option<u32>,
    pub kodaira: Kodaira,
    pub conductor_exponent: u32,
    pub minimal_model: Curve,
}

pub fn reduction_at(e: &Curve, q: u64) -> Result<ReductionData, EllipticError> {
    let ld = tate_local_data(e, q)?;
    let qb = BigInt::from(q);
    let m = &ld.minimal_model;
    let v_disc = val(m.discriminant(), &qb).expect("nonsingular");
    let v_c4 = val(m.c4(), &qb);
    let kind = match ld.split {
        _ if v_disc == 0 => ReductionKind::Good,
        Some(split) => {
            if let Some(by_c6) = split_by_c6(m, q) {
                if by_c6 != split {
                    return Err(EllipticError::Internal(format!(
                        "split tests disagree at {q} on {m}"
                    )));
                }
            }
            if split {
                ReductionKind::SplitMultiplicative
            } else {
                ReductionKind::NonsplitMultiplicative
            }
        }
        None => ReductionKind::Additive,
    };
    Ok(ReductionData {
        q,
        kind,
        v_disc,
        v_c4,
        kodaira: ld.kodaira,
        conductor_exponent: ld.conductor_exponent,
        minimal_model: ld.minimal_model,
    })
}

/// Normalizes an integral model to `a1, a3 ∈ {0,1}`, `a2 ∈ {-1,0,1}` by an
/// integral translation.
pub fn reduced_form(e: &Curve) -> (Curve, Transform) {
    let two = BigInt::from(2);
    let three = BigInt::from(3);
    let [a1, a2, a3, _, _] = e.a_invariants();
    let s = -a1.div_floor(&two);
    let big_a = a2 - &s * a1 - &s * &s;
    let r = -(&big_a + BigInt::one()).div_floor(&three);
    let big_b = a3 + &r * a1;
    let t = -big_b.div_floor(&two);
    let tr = Transform::translation(int(&r), int(&s), int(&t));
    let out = e.transform(&tr).expect("integral translation preserves integrality");
    (out, tr)
}

/// Globally minimal reduced model, factoring the discriminant.
pub fn minimal_model(e: &Curve, budget: FactorBudget) -> Result<(Curve, Transform), EllipticError> {
    let f = factor(e.discriminant(), budget)?;
    let primes = f.primes_u64().ok_or_else(|| {
        EllipticError::Internal("discriminant prime exceeds 64 bits".to_string())
    })?;
    minimal_model_with_support(e, &primes, budget)
}

/// Globally minimal reduced model, starting from a known list of primes.
/// Primes of the discriminant missing from `support` are found by factoring
/// the leftover cofactor.
pub fn minimal_model_with_support(
    e: &Curve,
    support: &[u64],
    budget: FactorBudget,
) -> Result<(Curve, Transform), EllipticError> {
    let mut cur = e.clone();
    let mut tr = Transform::identity();
    let minimize_at = |cur: &mut Curve, tr: &mut Transform, q: u64| -> Result<(), EllipticError> {
        let v = val(cur.discriminant(), &BigInt::from(q)).expect("nonsingular");
        if v < 12 {
            return Ok(());
        }
        let ld = tate_local_data(cur, q)?;
        if !ld.transform.u.is_one() {
            *cur = ld.minimal_model;
            *tr = tr.then(&ld.transform);
        }
        Ok(())
    };
    let mut cofactor = e.discriminant().abs();
    for &q in support {
        minimize_at(&mut cur, &mut tr, q)?;
        let qb = BigInt::from(q);
        while cofactor.is_multiple_of(&qb) {
            cofactor /= &qb;
        }
    }
    if !cofactor.is_one() {
        let f = factor(&cofactor, budget)?;
        for (q, _) in &f.factors {
            let q = u64::try_from(q).map_err(|_| {
                EllipticError::Internal("discriminant prime exceeds 64 bits".to_string())
            })?;
            minimize_at(&mut cur, &mut tr, q)?;
        }
    }
    let (out, norm) = reduced_form(&cur);
    Ok((out, tr.then(&norm)))
}
