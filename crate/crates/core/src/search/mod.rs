//! Constrained scans over torsion families: force primes into S₁/S₂ by
//! congruences on the parameter, filter by the number of leftover prime
//! factors, and rank fibers by their descent invariants.

mod family;

use std::cmp::Reverse;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_with::{serde_as, DisplayFromStr, PickFirst};
use thiserror::Error;

pub use family::{FactorPoly, FamilyKind, FamilySpec, Fiber};

use crate::arith::{count_distinct_prime_factors, crt_solve, is_prime_u64, ArithError, FactorBudget, Incomplete};
use crate::bounds::{bound_report, BoundInputs, BoundReport, FieldInvariants};
use crate::descent::{
    analyze_descent_with_hint, m_rank_relaxed, sandwich_for_sets, DescentError, ExclusionReason, Excluded, SetLabel,
};
use crate::elliptic::{Curve, EllipticError, Point};
use crate::formats::rational_to_string;

/// Forced primes above this are rejected; roots mod ℓ are found by
/// enumeration.
pub const MAX_FORCED_PRIME: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error("no family for p = {0}; supported are 5 and 7")]
    UnsupportedP(u64),
    #[error("degenerate fiber at parameter {0}")]
    Degenerate(String),
    #[error("no factor with role {label:?} has a root mod {ell}")]
    UnreachableCusp { ell: u64, label: SetLabel },
    #[error("invalid constraints: {0}")]
    InvalidConstraints(String),
    #[error(transparent)]
    Incomplete(#[from] Incomplete),
    #[error(transparent)]
    Elliptic(EllipticError),
    #[error(transparent)]
    Descent(DescentError),
    #[error(transparent)]
    Arith(#[from] ArithError),
}

impl From<EllipticError> for SearchError {
    fn from(e: EllipticError) -> Self {
        match e {
            EllipticError::Incomplete(inc) => SearchError::Incomplete(inc),
            other => SearchError::Elliptic(other),
        }
    }
}

impl From<DescentError> for SearchError {
    fn from(e: DescentError) -> Self {
        match e {
            DescentError::Incomplete(inc) => SearchError::Incomplete(inc),
            other => SearchError::Descent(other),
        }
    }
}

/// Scan configuration. Integers are accepted as JSON numbers or strings and
/// written back as strings.
#[serde_as]
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConstraints {
    #[serde_as(as = "PickFirst<(DisplayFromStr, _)>")]
    #[serde(default = "default_p")]
    pub p: u64,
    #[serde_as(as = "Vec<PickFirst<(DisplayFromStr, _)>>")]
    #[serde(default)]
    pub force_s1: Vec<u64>,
    #[serde_as(as = "Vec<PickFirst<(DisplayFromStr, _)>>")]
    #[serde(default)]
    pub force_s2: Vec<u64>,
    /// Keep fibers whose discriminant, with forced primes removed, has at
    /// most this many distinct prime factors.
    #[serde_as(as = "Option<PickFirst<(DisplayFromStr, _)>>")]
    #[serde(default)]
    pub omega_max: Option<u32>,
    /// Number of parameters tried; unlimited when absent.
    #[serde_as(as = "Option<PickFirst<(DisplayFromStr, _)>>")]
    #[serde(default)]
    pub scan_budget: Option<u64>,
    /// Height bound on the parameter.
    #[serde_as(as = "PickFirst<(DisplayFromStr, _)>")]
    #[serde(default = "default_box")]
    pub parameter_box: u64,
    /// Largest parameter denominator; 1 keeps the scan on integers.
    #[serde_as(as = "PickFirst<(DisplayFromStr, _)>")]
    #[serde(default = "default_denominator")]
    pub max_denominator: u64,
}

fn default_p() -> u64 {
    5
}

fn default_box() -> u64 {
    10_000
}

fn default_denominator() -> u64 {
    1
}

impl Default for SearchConstraints {
    fn default() -> Self {
        Self {
            p: default_p(),
            force_s1: Vec::new(),
            force_s2: Vec::new(),
            omega_max: None,
            scan_budget: None,
            parameter_box: default_box(),
            max_denominator: default_denominator(),
        }
    }
}

impl SearchConstraints {
    fn validate_structure(&self) -> Result<(), SearchError> {
        FamilySpec::new(self.p)?;
        let bad = |m: String| Err(SearchError::InvalidConstraints(m));
        let mut all: Vec<u64> = self.force_s1.iter().chain(&self.force_s2).copied().collect();
        for &q in &all {
            if !is_prime_u64(q) {
                return bad(format!("forced value {q} is not prime"));
            }
            if q == self.p {
                return bad(format!("cannot force the isogeny degree {q}"));
            }
            if q > MAX_FORCED_PRIME {
                return bad(format!("forced prime {q} exceeds {MAX_FORCED_PRIME}"));
            }
        }
        all.sort_unstable();
        if let Some(w) = all.windows(2).find(|w| w[0] == w[1]) {
            return bad(format!("prime {} forced twice", w[0]));
        }
        if self.max_denominator == 0 {
            return bad("max_denominator must be at least 1".into());
        }
        Ok(())
    }

    /// Forced S₂ primes must be 1 mod p for a split torus to hold the point.
    fn validate_s2_congruence(&self) -> Result<(), SearchError> {
        match self.force_s2.iter().find(|&&q| q % self.p != 1) {
            Some(q) => Err(SearchError::InvalidConstraints(format!("forced S2 prime {q} is not 1 mod {}", self.p))),
            None => Ok(()),
        }
    }

    /// Structural checks followed by the S₂ congruence condition.
    pub fn validate(&self) -> Result<(), SearchError> {
        self.validate_structure()?;
        self.validate_s2_congruence()
    }

    fn forced(&self) -> impl Iterator<Item = (u64, SetLabel)> + '_ {
        self.force_s1
            .iter()
            .map(|&q| (q, SetLabel::S1))
            .chain(self.force_s2.iter().map(|&q| (q, SetLabel::S2)))
    }
}

/// The chosen root of a role polynomial modulo a forced prime.
#[serde_as]
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Congruence {
    #[serde_as(as = "DisplayFromStr")]
    pub ell: u64,
    pub label: SetLabel,
    #[serde_as(as = "DisplayFromStr")]
    pub residue: u64,
    pub factor_index: usize,
}

#[serde_as]
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Construction {
    #[serde_as(as = "DisplayFromStr")]
    pub base: BigInt,
    #[serde_as(as = "DisplayFromStr")]
    pub modulus: BigInt,
    pub congruences: Vec<Congruence>,
}

/// Least nonnegative parameter meeting every forcing congruence. The root
/// taken mod ℓ is the least root of any factor polynomial with the wanted role.
/// Reachability is checked before the S₂ congruence condition: the S₂ factors
/// of both families split completely mod every ℓ ≡ 1 mod p.
pub fn construct_parameter(fam: &FamilySpec, c: &SearchConstraints) -> Result<Construction, SearchError> {
    c.validate_structure()?;
    let mut congruences = Vec::new();
    for (ell, label) in c.forced() {
        let best = fam
            .factor_polys()
            .iter()
            .enumerate()
            .filter(|(_, f)| f.role == Some(label))
            .filter_map(|(i, f)| f.poly.roots_mod(ell).first().map(|&r| (r, i)))
            .min();
        let Some((residue, factor_index)) = best else {
            return Err(SearchError::UnreachableCusp { ell, label });
        };
        congruences.push(Congruence { ell, label, residue, factor_index });
    }
    c.validate_s2_congruence()?;
    let system: Vec<(BigInt, BigInt)> =
        congruences.iter().map(|k| (BigInt::from(k.residue), BigInt::from(k.ell))).collect();
    let base = crt_solve(&system)?;
    let modulus = congruences.iter().fold(BigInt::one(), |m, k| m * k.ell);
    Ok(Construction { base, modulus, congruences })
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AlmostPrimes {
    pub kept: Vec<BigInt>,
    pub rejected: usize,
    pub incomplete: usize,
}

/// Values with at most `omega_max` distinct prime factors. Values whose
/// factorization exceeds the budget are dropped and counted apart.
pub fn almost_prime_filter(values: &[BigInt], omega_max: u32, budget: FactorBudget) -> AlmostPrimes {
    let mut out = AlmostPrimes::default();
    for v in values {
        assert!(!v.is_zero(), "almost-prime filter takes nonzero values");
        match count_distinct_prime_factors(v, budget) {
            Ok(w) if w <= omega_max as usize => out.kept.push(v.clone()),
            Ok(_) => out.rejected += 1,
            Err(_) => out.incomplete += 1,
        }
    }
    out
}

/// Where a forced prime ended up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Landing {
    S1,
    S2,
    Nonsplit,
    Additive,
    AbovePOverlap,
    Good,
}

#[serde_as]
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForcedPrime {
    #[serde_as(as = "DisplayFromStr")]
    pub q: u64,
    pub intended: SetLabel,
    pub landed: Landing,
}

#[serde_as]
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowAnalysis {
    #[serde_as(as = "Vec<DisplayFromStr>")]
    pub s1: Vec<u64>,
    #[serde_as(as = "Vec<DisplayFromStr>")]
    pub s2: Vec<u64>,
    #[serde_as(as = "Vec<DisplayFromStr>")]
    pub s3: Vec<u64>,
    pub excluded: Vec<Excluded>,
    #[serde_as(as = "DisplayFromStr")]
    pub m_phi: usize,
    #[serde_as(as = "DisplayFromStr")]
    pub m_phihat: usize,
    #[serde_as(as = "(DisplayFromStr, DisplayFromStr)")]
    pub sandwich_phi: (usize, usize),
    #[serde_as(as = "(DisplayFromStr, DisplayFromStr)")]
    pub sandwich_phihat: (usize, usize),
    pub codomain: Curve,
    /// The dual classification swaps S₁ and S₂.
    pub dual_swap: bool,
    /// Both classifiers agreed at every prime, in both directions.
    pub classifier_agreement: bool,
    pub bounds: BoundReport,
}

#[serde_as]
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchRow {
    #[serde_as(as = "DisplayFromStr")]
    pub b: BigRational,
    pub curve: Curve,
    pub point: Point,
    #[serde_as(as = "DisplayFromStr")]
    pub omega_of_cofactor: usize,
    pub forcing: Vec<ForcedPrime>,
    pub forcing_ok: bool,
    pub analysis: Option<RowAnalysis>,
    pub error: Option<String>,
}

impl SearchRow {
    fn rank_key(&self) -> (Reverse<usize>, Reverse<usize>, BigInt, BigRational) {
        let (gap, m) = match &self.analysis {
            Some(a) => (a.s1.len().abs_diff(a.s2.len()), a.m_phi),
            None => (0, 0),
        };
        (Reverse(gap), Reverse(m), height(&self.b), self.b.clone())
    }
}

#[serde_as]
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchReport {
    #[serde_as(as = "DisplayFromStr")]
    pub p: u64,
    pub parameter_name: String,
    pub factor_polys: Vec<FactorPoly>,
    pub constraints: SearchConstraints,
    pub construction: Option<Construction>,
    #[serde_as(as = "DisplayFromStr")]
    pub parameters_tried: u64,
    #[serde_as(as = "DisplayFromStr")]
    pub degenerate: u64,
    #[serde_as(as = "DisplayFromStr")]
    pub filtered_out: u64,
    #[serde_as(as = "DisplayFromStr")]
    pub incomplete: u64,
    pub rows: Vec<SearchRow>,
}

/// `max(|n|, d)` for `b = n/d` in lowest terms.
fn height(b: &BigRational) -> BigInt {
    b.numer().abs().max(b.denom().clone())
}

/// Parameters in scan order: CRT shifts `base + k·M` when primes are forced,
/// otherwise the height box ordered by height, then denominator, then value.
pub fn scan_parameters(c: &SearchConstraints, construction: Option<&Construction>) -> Vec<BigRational> {
    let cap = c.scan_budget.unwrap_or(u64::MAX);
    let bound = BigInt::from(c.parameter_box);
    let mut out = Vec::new();
    if let Some(k) = construction.filter(|k| !k.congruences.is_empty()) {
        let mut b = k.base.clone();
        while (out.len() as u64) < cap && b <= bound {
            out.push(BigRational::from_integer(b.clone()));
            b += &k.modulus;
        }
        return out;
    }
    let d_max = c.max_denominator as i64;
    'outer: for h in 1..=c.parameter_box as i64 {
        for d in 1..=d_max.min(h) {
            // numerators with max(|n|, d) = h
            let nums: Vec<i64> = if d < h { vec![-h, h] } else { (-h..=h).collect() };
            for n in nums.into_iter().filter(|n| n.gcd(&d) == 1) {
                if out.len() as u64 >= cap {
                    break 'outer;
                }
                out.push(BigRational::new(n.into(), d.into()));
            }
        }
    }
    out
}

enum Outcome {
    Row(Box<SearchRow>),
    Degenerate,
    Filtered,
    Incomplete,
}

fn landing(q: u64, s1: &[u64], s2: &[u64], excluded: &[Excluded]) -> Landing {
    if s1.contains(&q) {
        return Landing::S1;
    }
    if s2.contains(&q) {
        return Landing::S2;
    }
    match excluded.iter().find(|e| e.q == q).map(|e| e.reason) {
        Some(ExclusionReason::Nonsplit) => Landing::Nonsplit,
        Some(ExclusionReason::Additive) => Landing::Additive,
        Some(ExclusionReason::AbovePOverlap) => Landing::AbovePOverlap,
        None => Landing::Good,
    }
}

fn evaluate(fam: &FamilySpec, c: &SearchConstraints, b: &BigRational, budget: FactorBudget) -> Outcome {
    let fiber = match fam.fiber(b, budget) {
        Ok(f) => f,
        Err(SearchError::Degenerate(_)) => return Outcome::Degenerate,
        Err(SearchError::Incomplete(_)) => return Outcome::Incomplete,
        Err(e) => return Outcome::Row(Box::new(error_row(b, None, e))),
    };
    let forced: Vec<u64> = c.forced().map(|(q, _)| q).collect();
    let omega = fiber.disc.primes_u64().map(|ps| ps.iter().filter(|q| !forced.contains(q)).count());
    let omega = match omega {
        Some(w) => w,
        None => fiber.disc.omega() - fiber.disc.primes().filter(|q| forced.iter().any(|f| **q == (*f).into())).count(),
    };
    if c.omega_max.is_some_and(|m| omega > m as usize) {
        return Outcome::Filtered;
    }
    match analyze_row(fam, c, &fiber, budget) {
        Ok((analysis, forcing)) => {
            let forcing_ok = forcing.iter().all(|f| match f.intended {
                SetLabel::S1 => f.landed == Landing::S1,
                SetLabel::S2 => f.landed == Landing::S2,
            });
            Outcome::Row(Box::new(SearchRow {
                b: b.clone(),
                curve: fiber.curve,
                point: fiber.point,
                omega_of_cofactor: omega,
                forcing,
                forcing_ok,
                analysis: Some(analysis),
                error: None,
            }))
        }
        Err(SearchError::Incomplete(_)) => Outcome::Incomplete,
        Err(e) => Outcome::Row(Box::new(error_row(b, Some((&fiber, omega)), e))),
    }
}

fn error_row(b: &BigRational, fiber: Option<(&Fiber, usize)>, e: SearchError) -> SearchRow {
    let (curve, point, omega) = match fiber {
        Some((f, w)) => (f.curve.clone(), f.point.clone(), w),
        None => (Curve::from_i64([0, -1, 1, 0, 0]).expect("fixed model"), Point::Infinity, 0),
    };
    SearchRow {
        b: b.clone(),
        curve,
        point,
        omega_of_cofactor: omega,
        forcing: Vec::new(),
        forcing_ok: false,
        analysis: None,
        error: Some(e.to_string()),
    }
}

fn analyze_row(
    fam: &FamilySpec,
    c: &SearchConstraints,
    fiber: &Fiber,
    budget: FactorBudget,
) -> Result<(RowAnalysis, Vec<ForcedPrime>), SearchError> {
    let p = fam.p();
    let hint = fiber.disc.primes_u64().ok_or(DescentError::PrimeTooLarge)?;
    let d = analyze_descent_with_hint(&fiber.curve, &fiber.point, p, &hint, budget)?;
    let dual = d.dual(budget)?;
    let sets = &d.sets;
    let dual_swap = dual.sets.s1 == sets.s2 && dual.sets.s2 == sets.s1;
    let agree = |ev: &[crate::descent::Evidence]| ev.iter().all(|e| e.singular_point_test == e.valuation_ratio_test);
    let classifier_agreement = agree(&sets.evidence) && agree(&dual.sets.evidence);
    let m_phi = m_rank_relaxed(p, &sets.s1, &sets.s2)?;
    let m_phihat = m_rank_relaxed(p, &sets.s2, &sets.s1)?;
    let sw = sandwich_for_sets(p, &sets.s1, &sets.s2)?;
    let sw_hat = sandwich_for_sets(p, &sets.s2, &sets.s1)?;
    let bounds = bound_report(
        &FieldInvariants::rationals(),
        &BoundInputs {
            s1: sets.s1.len() as i64,
            s2: sets.s2.len() as i64,
            m: m_phi as i64,
            m_hat: m_phihat as i64,
            dim_phi: Some(sw.upper_dim as i64),
            ..Default::default()
        },
    )
    .map_err(|e| SearchError::InvalidConstraints(e.to_string()))?;
    let forcing = c
        .forced()
        .map(|(q, intended)| ForcedPrime { q, intended, landed: landing(q, &sets.s1, &sets.s2, &sets.excluded) })
        .collect();
    let analysis = RowAnalysis {
        s1: sets.s1.clone(),
        s2: sets.s2.clone(),
        s3: sets.s3.clone(),
        excluded: sets.excluded.clone(),
        m_phi,
        m_phihat,
        sandwich_phi: (sw.lower_dim, sw.upper_dim),
        sandwich_phihat: (sw_hat.lower_dim, sw_hat.upper_dim),
        codomain: d.isogeny.codomain.clone(),
        dual_swap,
        classifier_agreement,
        bounds,
    };
    Ok((analysis, forcing))
}

/// Runs the scan on `jobs` workers (the global pool when `None`). Rows are
/// merged in parameter order and then ranked, so the report does not depend
/// on the worker count.
pub fn scan(c: &SearchConstraints, jobs: Option<usize>, budget: FactorBudget) -> Result<SearchReport, SearchError> {
    c.validate_structure()?;
    let fam = FamilySpec::new(c.p)?;
    let forcing = !c.force_s1.is_empty() || !c.force_s2.is_empty();
    let construction = if forcing { Some(construct_parameter(&fam, c)?) } else { None };
    c.validate_s2_congruence()?;
    let params = scan_parameters(c, construction.as_ref());
    let run = || params.par_iter().map(|b| evaluate(&fam, c, b, budget)).collect::<Vec<_>>();
    let outcomes = match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| SearchError::InvalidConstraints(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    };
    let mut report = SearchReport {
        p: fam.p(),
        parameter_name: fam.parameter_name().to_string(),
        factor_polys: fam.factor_polys().to_vec(),
        constraints: c.clone(),
        construction,
        parameters_tried: params.len() as u64,
        degenerate: 0,
        filtered_out: 0,
        incomplete: 0,
        rows: Vec::new(),
    };
    for o in outcomes {
        match o {
            Outcome::Row(r) => report.rows.push(*r),
            Outcome::Degenerate => report.degenerate += 1,
            Outcome::Filtered => report.filtered_out += 1,
            Outcome::Incomplete => report.incomplete += 1,
        }
    }
    report.rows.sort_by_cached_key(SearchRow::rank_key);
    Ok(report)
}

impl SearchReport {
    pub fn row(&self, b: i64) -> Option<&SearchRow> {
        let b = BigRational::from_integer(b.into());
        self.rows.iter().find(|r| r.b == b)
    }

    /// Integer parameter value, when it is one.
    pub fn integer_parameters(&self) -> Vec<i64> {
        self.rows.iter().filter(|r| r.b.is_integer()).filter_map(|r| r.b.to_integer().to_i64()).collect()
    }
}

/// Rational parameter as `n` or `n/d`.
pub fn parameter_to_string(b: &BigRational) -> String {
    if b.is_integer() {
        b.numer().to_string()
    } else {
        rational_to_string(b)
    }
}
