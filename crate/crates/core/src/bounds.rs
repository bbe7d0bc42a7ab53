//! Selmer, rank and Tate-Shafarevich bounds from the descent invariants,
//! and the parameter budget of the large-Sha construction.
//!
//! The field-level formulas assume `K ⊇ Q(ζ_p)` and `K` totally imaginary.
//! When that fails (notably `K = Q`) [`bound_report`] still evaluates them,
//! rounding half-integers inward, and marks the report advisory.

use num_integer::Integer;
use num_rational::Rational64;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use serde_with::{serde_as, DisplayFromStr};
use thiserror::Error;

use crate::arith::is_prime_u64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BoundsError {
    #[error("field hypotheses violated: {}", .0.join("; "))]
    HypothesisViolated(Vec<String>),
    #[error("invalid field invariants: {0}")]
    InvalidField(String),
    #[error("{0} must be a prime greater than 3")]
    BadP(u64),
    #[error("invalid argument: {0}")]
    BadArgument(String),
    #[error("budget chain failed: guarantee {guarantee} < k = {k}")]
    ChainBroken { guarantee: i64, k: i64 },
}

#[serde_as]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldInvariants {
    #[serde_as(as = "DisplayFromStr")]
    pub d: u64,
    #[serde_as(as = "DisplayFromStr")]
    pub cp: u64,
    pub totally_imaginary: bool,
    pub contains_zeta_p: bool,
}

impl FieldInvariants {
    pub fn new(d: u64, cp: u64, totally_imaginary: bool, contains_zeta_p: bool) -> Result<Self, BoundsError> {
        if d == 0 {
            return Err(BoundsError::InvalidField("degree must be positive".into()));
        }
        if totally_imaginary && d % 2 == 1 {
            return Err(BoundsError::InvalidField(format!(
                "a totally imaginary field has even degree, got {d}"
            )));
        }
        Ok(Self { d, cp, totally_imaginary, contains_zeta_p })
    }

    /// Q itself: degree 1, trivial class group, real.
    pub fn rationals() -> Self {
        Self { d: 1, cp: 0, totally_imaginary: false, contains_zeta_p: false }
    }

    /// Hypotheses under which the formulas hold, with the failed ones listed.
    pub fn hypotheses(&self) -> (bool, Vec<String>) {
        let mut reasons = Vec::new();
        if !self.totally_imaginary {
            reasons.push("field has a real embedding".to_string());
        }
        if !self.contains_zeta_p {
            reasons.push("field does not contain the p-th roots of unity".to_string());
        }
        (reasons.is_empty(), reasons)
    }

    fn require(&self) -> Result<(), BoundsError> {
        match self.hypotheses() {
            (true, _) => Ok(()),
            (false, reasons) => Err(BoundsError::HypothesisViolated(reasons)),
        }
    }

    fn d(&self) -> i64 {
        self.d as i64
    }

    fn cp(&self) -> i64 {
        self.cp as i64
    }
}

/// `dim K(S, p) = d/2 + #S + dim C_K[p]`.
pub fn dim_ksp(f: &FieldInvariants, s: i64) -> Result<i64, BoundsError> {
    f.require()?;
    Ok(f.d() / 2 + s + f.cp())
}

fn half_interval(f: &FieldInvariants, s1: i64, s2: i64, m: i64) -> (i64, i64) {
    // in half-units: lower = (2(s1 − s2 + cp) − d)/2, upper = (2(s1 + cp − m) + 3d)/2
    let lo2 = 2 * (s1 - s2 + f.cp()) - f.d();
    let up2 = 2 * (s1 + f.cp() - m) + 3 * f.d();
    (Integer::div_ceil(&lo2, &2), Integer::div_floor(&up2, &2))
}

/// Bounds on `dim S^φ(E/K)`.
pub fn selmer_interval(f: &FieldInvariants, s1: i64, s2: i64, m: i64) -> Result<(i64, i64), BoundsError> {
    f.require()?;
    non_negative(&[("m", m)])?;
    Ok(half_interval(f, s1, s2, m))
}

pub fn rank_upper(f: &FieldInvariants, s1: i64, s2: i64, m: i64, m_hat: i64) -> Result<i64, BoundsError> {
    f.require()?;
    Ok(rank_upper_raw(f, s1, s2, m, m_hat))
}

fn rank_upper_raw(f: &FieldInvariants, s1: i64, s2: i64, m: i64, m_hat: i64) -> i64 {
    s1 + s2 + 2 * f.cp() + 3 * f.d() - m - m_hat - 1
}

/// Range of `dim S^φ̂(E'/K)` given `dim S^φ(E/K)`.
pub fn cassels_interval(f: &FieldInvariants, s1: i64, s2: i64, dim_phi: i64) -> Result<(i64, i64), BoundsError> {
    f.require()?;
    Ok(cassels_raw(f, s1, s2, dim_phi))
}

fn cassels_raw(f: &FieldInvariants, s1: i64, s2: i64, dim_phi: i64) -> (i64, i64) {
    let centre = dim_phi - s1 + s2;
    let t = 2 * f.d() + 1;
    (centre - t, centre + t)
}

/// Lower bound on `dim S^φ + dim S^φ̂`.
pub fn sum_lower(f: &FieldInvariants, s1: i64, s2: i64) -> Result<i64, BoundsError> {
    f.require()?;
    Ok(sum_lower_raw(f, s1, s2))
}

fn sum_lower_raw(f: &FieldInvariants, s1: i64, s2: i64) -> i64 {
    (s1 - s2).abs() + 2 * f.cp() - 3 * f.d() - 1
}

/// `dim Sha[p]` lower bound from a Selmer sum `k + 1` and rank `r`.
pub fn sha_from_sum(selmer_sum: i64, r: i64) -> Result<i64, BoundsError> {
    non_negative(&[("selmer_sum", selmer_sum), ("rank", r)])?;
    Ok(Integer::div_ceil(&(selmer_sum - 1 - r), &2).max(0))
}

/// Sha lower bound from the rank of the character matrices of a second
/// isogeny `ψ` and its dual.
pub fn sha_lower_matrix(
    f: &FieldInvariants,
    s1: i64,
    s2: i64,
    m_psi: i64,
    m_psi_hat: i64,
) -> Result<(Rational64, i64), BoundsError> {
    f.require()?;
    Ok(sha_matrix_raw(f, s1, s2, m_psi, m_psi_hat))
}

fn sha_matrix_raw(f: &FieldInvariants, s1: i64, s2: i64, m_psi: i64, m_psi_hat: i64) -> (Rational64, i64) {
    let raw = Rational64::from_integer(-s1.min(s2) - 3 * f.d() - 1) + Rational64::new(m_psi + m_psi_hat, 2);
    let clamped = raw.ceil().to_integer().max(0);
    (raw, clamped)
}

fn non_negative(args: &[(&str, i64)]) -> Result<(), BoundsError> {
    for (name, v) in args {
        if *v < 0 {
            return Err(BoundsError::BadArgument(format!("{name} must be nonnegative, got {v}")));
        }
    }
    Ok(())
}

/// Inputs to a full report. `dim_phi` defaults to the Selmer upper bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BoundInputs {
    pub s1: i64,
    pub s2: i64,
    pub m: i64,
    pub m_hat: i64,
    pub m_psi: Option<i64>,
    pub m_psi_hat: Option<i64>,
    pub dim_phi: Option<i64>,
    pub selmer_sum: Option<i64>,
    pub rank: Option<i64>,
}

#[serde_as]
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundReport {
    pub field: FieldInvariants,
    #[serde_as(as = "DisplayFromStr")]
    pub selmer_lower: i64,
    #[serde_as(as = "DisplayFromStr")]
    pub selmer_upper: i64,
    #[serde_as(as = "DisplayFromStr")]
    pub rank_upper: i64,
    #[serde_as(as = "DisplayFromStr")]
    pub cassels_dim_phi: i64,
    #[serde_as(as = "(DisplayFromStr, DisplayFromStr)")]
    pub cassels_interval: (i64, i64),
    #[serde_as(as = "DisplayFromStr")]
    pub sum_lower: i64,
    #[serde_as(as = "Option<DisplayFromStr>")]
    pub sha_from_sum: Option<i64>,
    #[serde_as(as = "DisplayFromStr")]
    pub sha_lower_raw: Rational64,
    #[serde_as(as = "DisplayFromStr")]
    pub sha_lower: i64,
    pub hypothesis_ok: bool,
    pub reasons: Vec<String>,
    /// Set when the hypotheses fail and the numbers are indicative only.
    pub advisory: bool,
}

/// Evaluates every formula; never refuses on failed hypotheses.
pub fn bound_report(f: &FieldInvariants, inp: &BoundInputs) -> Result<BoundReport, BoundsError> {
    non_negative(&[("s1", inp.s1), ("s2", inp.s2), ("m", inp.m), ("m_hat", inp.m_hat)])?;
    let (ok, reasons) = f.hypotheses();
    let (lo, up) = half_interval(f, inp.s1, inp.s2, inp.m);
    let dim_phi = inp.dim_phi.unwrap_or(up);
    let m_psi = inp.m_psi.unwrap_or(inp.m);
    let m_psi_hat = inp.m_psi_hat.unwrap_or(inp.m_hat);
    let (raw, clamped) = sha_matrix_raw(f, inp.s1, inp.s2, m_psi, m_psi_hat);
    let sha_sum = match inp.selmer_sum {
        Some(sum) => Some(sha_from_sum(sum, inp.rank.unwrap_or(0))?),
        None => None,
    };
    Ok(BoundReport {
        field: *f,
        selmer_lower: lo,
        selmer_upper: up,
        rank_upper: rank_upper_raw(f, inp.s1, inp.s2, inp.m, inp.m_hat),
        cassels_dim_phi: dim_phi,
        cassels_interval: cassels_raw(f, inp.s1, inp.s2, dim_phi),
        sum_lower: sum_lower_raw(f, inp.s1, inp.s2),
        sha_from_sum: sha_sum,
        sha_lower_raw: raw,
        sha_lower: clamped,
        hypothesis_ok: ok,
        reasons,
        advisory: !ok,
    })
}

#[serde_as]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TheoremBudget {
    #[serde_as(as = "DisplayFromStr")]
    pub p: u64,
    #[serde_as(as = "DisplayFromStr")]
    pub k: u64,
    #[serde_as(as = "DisplayFromStr")]
    pub n: u64,
    #[serde_as(as = "DisplayFromStr")]
    pub deg_h: u64,
    #[serde_as(as = "DisplayFromStr")]
    pub m_threshold: i64,
    #[serde_as(as = "DisplayFromStr")]
    pub d_max: i64,
    #[serde_as(as = "DisplayFromStr")]
    pub s2_max: i64,
    #[serde_as(as = "DisplayFromStr")]
    pub sha_guarantee: i64,
}

impl TheoremBudget {
    /// Chain value `−n·d − 3d − 1 + ⌈m/2⌉` at a field degree `d`.
    pub fn guarantee_at(&self, d: i64) -> i64 {
        -(self.n as i64) * d - 3 * d - 1 + Integer::div_ceil(&self.m_threshold, &2)
    }
}

/// The matrix-rank threshold and degree budget that force `dim Sha[p] ≥ k`.
pub fn theorem_budget(p: u64, k: u64, n: u64, deg_h: u64) -> Result<TheoremBudget, BoundsError> {
    if p <= 3 || !is_prime_u64(p) {
        return Err(BoundsError::BadP(p));
    }
    for (name, v) in [("k", k), ("n", n), ("deg_h", deg_h)] {
        if v == 0 {
            return Err(BoundsError::BadArgument(format!("{name} must be at least 1")));
        }
    }
    let (pi, ki, ni, di) = (p as i64, k as i64, n as i64, deg_h as i64);
    let m_threshold = 2 * ki + 4 * (ni + 3) * di * (pi - 1) + 2;
    let d_max = 2 * (pi - 1) * di;
    let s2_max = ni * d_max;
    let sha_guarantee = -s2_max - 3 * d_max - 1 + Integer::div_ceil(&m_threshold, &2);
    if sha_guarantee < ki {
        return Err(BoundsError::ChainBroken { guarantee: sha_guarantee, k: ki });
    }
    Ok(TheoremBudget { p, k, n, deg_h, m_threshold, d_max, s2_max, sha_guarantee })
}

#[serde_as]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeBudget {
    #[serde_as(as = "DisplayFromStr")]
    pub p: u64,
    #[serde_as(as = "DisplayFromStr")]
    pub c3: u64,
    #[serde_as(as = "DisplayFromStr")]
    pub deg_h_bound: u64,
    #[serde_as(as = "DisplayFromStr")]
    pub g_bound: u64,
}

/// `D(p) = C₃·p³` and `g(p) = 2(p−1)·D(p)`; `C₃` is a placeholder constant.
pub fn degree_budget(p: u64, c3: u64) -> Result<DegreeBudget, BoundsError> {
    if p <= 3 || !is_prime_u64(p) {
        return Err(BoundsError::BadP(p));
    }
    let deg_h_bound = c3
        .checked_mul(p.pow(3))
        .ok_or_else(|| BoundsError::BadArgument("degree budget overflows".into()))?;
    let g_bound = (2 * (p - 1))
        .checked_mul(deg_h_bound)
        .ok_or_else(|| BoundsError::BadArgument("degree budget overflows".into()))?;
    Ok(DegreeBudget { p, c3, deg_h_bound, g_bound })
}

impl Default for DegreeBudget {
    fn default() -> Self {
        degree_budget(5, 1).expect("5 is a valid prime")
    }
}

/// True when `r` is an exact integer.
pub fn is_integral(r: &Rational64) -> bool {
    r.denom() == &1 || r.numer().is_zero()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn k4() -> FieldInvariants {
        FieldInvariants::new(4, 0, true, true).unwrap()
    }

    #[test]
    fn dim_ksp_examples() {
        assert_eq!(dim_ksp(&k4(), 0).unwrap(), 2);
        assert_eq!(dim_ksp(&k4(), 3).unwrap(), 5);
        assert!(matches!(dim_ksp(&FieldInvariants::rationals(), 0), Err(BoundsError::HypothesisViolated(_))));
    }

    #[test]
    fn interval_examples() {
        assert_eq!(selmer_interval(&k4(), 5, 1, 0).unwrap(), (2, 11));
        assert_eq!(selmer_interval(&k4(), 0, 0, 0).unwrap(), (-2, 6));
        assert_eq!(selmer_interval(&k4(), 3, 0, 3).unwrap(), (1, 6));
        assert_eq!(rank_upper(&k4(), 1, 1, 1, 1).unwrap(), 11);
        assert_eq!(rank_upper(&k4(), 5, 1, 0, 0).unwrap(), 17);
        assert_eq!(rank_upper(&k4(), 0, 0, 0, 0).unwrap(), 11);
        assert_eq!(rank_upper(&k4(), 10, 10, 10, 10).unwrap(), 11);
        assert_eq!(cassels_interval(&k4(), 0, 0, 5).unwrap(), (-4, 14));
        assert_eq!(cassels_interval(&k4(), 3, 0, 3).unwrap(), (-9, 9));
        assert_eq!(sum_lower(&k4(), 20, 1).unwrap(), 6);
        assert_eq!(sum_lower(&k4(), 1, 20).unwrap(), 6);
        assert_eq!(sum_lower(&k4(), 0, 0).unwrap(), -13);
    }

    #[test]
    fn sha_examples() {
        assert_eq!(sha_from_sum(11, 0).unwrap(), 5);
        assert_eq!(sha_from_sum(1, 0).unwrap(), 0);
        assert_eq!(sha_from_sum(12, 1).unwrap(), 5);
        assert!(sha_from_sum(-1, 0).is_err());
        let (raw, c) = sha_lower_matrix(&k4(), 0, 2, 40, 0).unwrap();
        assert_eq!((raw, c), (Rational64::from_integer(7), 7));
        let (raw, c) = sha_lower_matrix(&k4(), 0, 0, 0, 0).unwrap();
        assert_eq!((raw, c), (Rational64::from_integer(-13), 0));
        let (raw, c) = sha_lower_matrix(&k4(), 0, 0, 27, 0).unwrap();
        assert_eq!((raw, c), (Rational64::new(1, 2), 1));
    }

    #[test]
    fn budget_examples() {
        let b = theorem_budget(5, 1, 3, 1).unwrap();
        assert_eq!((b.m_threshold, b.d_max, b.s2_max, b.sha_guarantee), (100, 8, 24, 1));
        assert!(theorem_budget(5, 0, 3, 1).is_err());
        assert!(theorem_budget(3, 1, 3, 1).is_err());
        let d = degree_budget(5, 1).unwrap();
        assert_eq!((d.deg_h_bound, d.g_bound), (125, 1000));
        for p in [5u64, 7, 11, 13, 101] {
            let d = degree_budget(p, 1).unwrap();
            assert_eq!(d.g_bound / d.deg_h_bound, 2 * (p - 1));
            assert_eq!(d.g_bound, 2 * (p - 1) * p.pow(3));
        }
    }

    #[test]
    fn budget_guarantee_minus_k_is_constant_in_k() {
        for p in [5u64, 7, 11] {
            for n in 1..4 {
                for dd in 1..4 {
                    let base = theorem_budget(p, 1, n, dd).unwrap();
                    for k in 2..30 {
                        let b = theorem_budget(p, k, n, dd).unwrap();
                        assert_eq!(b.sha_guarantee - k as i64, base.sha_guarantee - 1);
                    }
                }
            }
        }
    }

    #[test]
    fn matrix_bound_reproduces_budget_chain() {
        for p in [5u64, 7, 11, 13] {
            for (k, n, dd) in [(1u64, 1u64, 1u64), (3, 2, 2), (20, 10, 5)] {
                let b = theorem_budget(p, k, n, dd).unwrap();
                let f = FieldInvariants::new(b.d_max as u64, 0, true, true).unwrap();
                for s1 in [b.s2_max, b.s2_max + 7] {
                    let (raw, c) = sha_lower_matrix(&f, s1, b.s2_max, b.m_threshold, 0).unwrap();
                    assert!(raw >= Rational64::from_integer(k as i64));
                    assert_eq!(c, b.sha_guarantee);
                }
            }
        }
    }

    #[test]
    fn advisory_report_over_q() {
        let r = bound_report(&FieldInvariants::rationals(), &BoundInputs { s1: 0, s2: 1, ..Default::default() }).unwrap();
        assert!(r.advisory && !r.hypothesis_ok);
        assert_eq!(r.reasons.len(), 2);
        // (2(0 − 1) − 1)/2 = −3/2 → −1; (0 + 3)/2 → 1
        assert_eq!((r.selmer_lower, r.selmer_upper), (-1, 1));
        let json = serde_json::to_string(&r).unwrap();
        let back: BoundReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
        assert!(FieldInvariants::new(3, 0, true, true).is_err());
    }

    proptest! {
        #[test]
        fn interval_ordered_under_side_condition(s1 in 0i64..200, s2 in 0i64..200, m in 0i64..200, half_d in 1i64..20, cp in 0i64..10) {
            let f = FieldInvariants::new(2 * half_d as u64, cp as u64, true, true).unwrap();
            let (lo, up) = selmer_interval(&f, s1, s2, m).unwrap();
            if m <= s2 + f.d() * 2 {
                prop_assert!(lo <= up);
            }
            let (a, b) = cassels_interval(&f, s1, s2, lo).unwrap();
            prop_assert_eq!(b - a, 2 * (2 * f.d() + 1));
        }

        #[test]
        fn sha_from_sum_monotone(s in 0i64..1000, r in 0i64..1000) {
            let v = sha_from_sum(s, r).unwrap();
            prop_assert!(sha_from_sum(s + 1, r).unwrap() >= v);
            prop_assert!(sha_from_sum(s, r + 1).unwrap() <= v);
        }

        /// Some admissible `dim S^φ` leaves room for `dim S^φ̂` in both the
        /// dual Selmer interval and the Cassels window.
        #[test]
        fn cassels_meets_dual_interval(s1 in 0i64..40, s2 in 0i64..40, mf in 0.0f64..1.0, mhf in 0.0f64..1.0, half_d in 1i64..10, cp in 0i64..5) {
            let f = FieldInvariants::new(2 * half_d as u64, cp as u64, true, true).unwrap();
            let cap = s1.min(s2);
            let m = (mf * cap as f64) as i64;
            let m_hat = (mhf * cap as f64) as i64;
            let (lo, up) = selmer_interval(&f, s1, s2, m).unwrap();
            let (dlo, dup) = selmer_interval(&f, s2, s1, m_hat).unwrap();
            let found = (lo..=up).any(|x| {
                let (a, b) = cassels_interval(&f, s1, s2, x).unwrap();
                a.max(dlo) <= b.min(dup)
            });
            prop_assert!(found);
        }
    }
}
