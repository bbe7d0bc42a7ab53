//! Descent data for a rational p-isogeny over Q: the prime sets S₁, S₂, S₃,
//! the power-residue character matrix between them, and the two explicit
//! groups that bracket the isogeny Selmer group.
//!
//! Elements of `Q*/Q*^p` supported on a prime list are exponent vectors mod
//! `p`; the sign is a p-th power for odd `p`.

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use serde_with::{serde_as, DisplayFromStr};
use thiserror::Error;

use crate::arith::{
    factor, factor_with_hint, fermat_quotient, is_prime_u64, ArithError, FactorBudget, Factorization, Incomplete,
    ResidueCharacter,
};
use crate::elliptic::{
    minimal_model, minimal_model_with_support, reduction_at, singular_point, Curve, EllipticError, Point, ReductionKind,
    Transform,
};
use crate::fp_linalg::FpMatrix;
use crate::isogeny::{
    transform_kernel_poly, velu_from_kernel_poly, velu_quotient_with_support, IsogenyData,
    IsogenyError,
};
use crate::poly::QPoly;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DescentError {
    #[error("{0} is not an odd prime")]
    BadP(u64),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("prime {0} lies in both S1 and S2")]
    Overlap(u64),
    #[error("prime {0} lies above p")]
    AboveP(u64),
    #[error("prime {ell} in S2 is not congruent to 1 mod {p}")]
    NotOneModP { ell: u64, p: u64 },
    #[error("classifiers disagree at {q}: singular point says {singular:?}, valuations say {valuation:?}")]
    ClassifierDisagreement { q: u64, singular: Option<SetLabel>, valuation: Option<SetLabel> },
    #[error("discriminant prime exceeds 64 bits")]
    PrimeTooLarge,
    #[error(transparent)]
    Incomplete(#[from] Incomplete),
    #[error(transparent)]
    Elliptic(EllipticError),
    #[error(transparent)]
    Isogeny(IsogenyError),
    #[error(transparent)]
    Arith(#[from] ArithError),
}

impl From<EllipticError> for DescentError {
    fn from(e: EllipticError) -> Self {
        match e {
            EllipticError::Incomplete(i) => DescentError::Incomplete(i),
            other => DescentError::Elliptic(other),
        }
    }
}

impl From<IsogenyError> for DescentError {
    fn from(e: IsogenyError) -> Self {
        match e {
            IsogenyError::Elliptic(inner) => inner.into(),
            other => DescentError::Isogeny(other),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SetLabel {
    S1,
    S2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionReason {
    Nonsplit,
    Additive,
    AbovePOverlap,
}

#[serde_as]
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Excluded {
    #[serde_as(as = "DisplayFromStr")]
    pub q: u64,
    pub reason: ExclusionReason,
}

/// Both verdicts for one split multiplicative prime.
#[serde_as]
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evidence {
    #[serde_as(as = "DisplayFromStr")]
    pub q: u64,
    pub singular_point_test: SetLabel,
    pub valuation_ratio_test: SetLabel,
    #[serde_as(as = "DisplayFromStr")]
    pub v_disc: u32,
    #[serde_as(as = "DisplayFromStr")]
    pub v_disc_isogenous: u32,
}

#[serde_as]
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DescentSets {
    #[serde_as(as = "DisplayFromStr")]
    pub p: u64,
    #[serde_as(as = "Vec<DisplayFromStr>")]
    pub s1: Vec<u64>,
    #[serde_as(as = "Vec<DisplayFromStr>")]
    pub s2: Vec<u64>,
    #[serde_as(as = "Vec<DisplayFromStr>")]
    pub s3: Vec<u64>,
    pub excluded: Vec<Excluded>,
    pub evidence: Vec<Evidence>,
}

impl DescentSets {
    /// Sets of the dual isogeny: S₁ and S₂ trade places.
    pub fn dual(&self) -> DescentSets {
        let evidence = self
            .evidence
            .iter()
            .map(|ev| Evidence {
                q: ev.q,
                singular_point_test: swap(ev.singular_point_test),
                valuation_ratio_test: swap(ev.valuation_ratio_test),
                v_disc: ev.v_disc_isogenous,
                v_disc_isogenous: ev.v_disc,
            })
            .collect();
        DescentSets {
            p: self.p,
            s1: self.s2.clone(),
            s2: self.s1.clone(),
            s3: self.s3.clone(),
            excluded: self.excluded.clone(),
            evidence,
        }
    }

    /// The sets only, for comparisons that ignore evidence.
    pub fn signature(&self) -> (Vec<u64>, Vec<u64>, Vec<u64>) {
        (self.s1.clone(), self.s2.clone(), self.s3.clone())
    }
}

/// Swaps S₁ and S₂, keeping S₃ and exclusions.
pub fn dual_sets(sets: &DescentSets) -> DescentSets {
    sets.dual()
}

fn swap(l: SetLabel) -> SetLabel {
    match l {
        SetLabel::S1 => SetLabel::S2,
        SetLabel::S2 => SetLabel::S1,
    }
}

/// Kernel of the isogeny, in the coordinates of the supplied model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Kernel {
    Point(Point),
    Poly(QPoly),
}

/// A classified isogeny on a reduced minimal model.
#[derive(Debug, Clone)]
pub struct Descent {
    pub p: u64,
    /// Reduced global minimal model of the domain.
    pub curve: Curve,
    /// From the input model to `curve`.
    pub to_minimal: Transform,
    /// Kernel in minimal coordinates.
    pub kernel: Kernel,
    pub disc: Factorization,
    pub isogeny: IsogenyData,
    pub sets: DescentSets,
}

fn check_p(p: u64) -> Result<(), DescentError> {
    if p < 3 || !is_prime_u64(p) {
        return Err(DescentError::BadP(p));
    }
    Ok(())
}

/// Minimalizes, builds the isogeny, and classifies every bad prime.
pub fn analyze_descent(e: &Curve, kernel: &Kernel, p: u64, budget: FactorBudget) -> Result<Descent, DescentError> {
    check_p(p)?;
    if let Kernel::Point(pt) = kernel {
        if !e.has_order(pt, p) {
            return Err(IsogenyError::WrongOrder(p).into());
        }
    }
    let (curve, to_minimal) = minimal_model(e, budget)?;
    let kernel = match kernel {
        Kernel::Point(pt) => Kernel::Point(to_minimal.apply_point(pt)),
        Kernel::Poly(psi) => Kernel::Poly(transform_kernel_poly(psi, &to_minimal)),
    };
    let disc = factor(curve.discriminant(), budget)?;
    analyze_minimal(curve, to_minimal, kernel, disc, p, budget)
}

/// As [`analyze_descent`] for a point kernel, with primes already known to
/// divide the discriminant; only the leftover cofactor is factored.
pub fn analyze_descent_with_hint(
    e: &Curve,
    pt: &Point,
    p: u64,
    hint: &[u64],
    budget: FactorBudget,
) -> Result<Descent, DescentError> {
    check_p(p)?;
    if !e.has_order(pt, p) {
        return Err(IsogenyError::WrongOrder(p).into());
    }
    let (curve, to_minimal) = minimal_model_with_support(e, hint, budget)?;
    let kernel = Kernel::Point(to_minimal.apply_point(pt));
    let disc = factor_with_hint(curve.discriminant(), hint, budget)?;
    analyze_minimal(curve, to_minimal, kernel, disc, p, budget)
}

fn analyze_minimal(
    curve: Curve,
    to_minimal: Transform,
    kernel: Kernel,
    disc: Factorization,
    p: u64,
    budget: FactorBudget,
) -> Result<Descent, DescentError> {
    let support = disc.primes_u64().ok_or(DescentError::PrimeTooLarge)?;
    let isogeny = match &kernel {
        Kernel::Point(pt) => velu_quotient_with_support(&curve, pt, p, Some(&support), budget)?,
        Kernel::Poly(psi) => velu_from_kernel_poly(&curve, psi, p, Some(&support), budget)?,
    };
    let sets = classify(&curve, &kernel, &isogeny.codomain, &support, p)?;
    Ok(Descent { p, curve, to_minimal, kernel, disc, isogeny, sets })
}

impl Descent {
    /// The dual isogeny `E' → E`, classified on `E'` through its kernel
    /// polynomial.
    pub fn dual(&self, budget: FactorBudget) -> Result<Descent, DescentError> {
        let g = self.isogeny.dual_kernel_candidate()?;
        let hint = self.disc.primes_u64().ok_or(DescentError::PrimeTooLarge)?;
        let disc = factor_with_hint(self.isogeny.codomain.discriminant(), &hint, budget)?;
        analyze_minimal(
            self.isogeny.codomain.clone(),
            Transform::identity(),
            Kernel::Poly(g),
            disc,
            self.p,
            budget,
        )
    }
}

/// Classification for a curve with a rational point of order `p`.
pub fn classify_primes(e: &Curve, pt: &Point, p: u64, budget: FactorBudget) -> Result<DescentSets, DescentError> {
    Ok(analyze_descent(e, &Kernel::Point(pt.clone()), p, budget)?.sets)
}

fn singular_verdict(kernel: &Kernel, xs: u64, ys: u64, q: u64) -> Result<SetLabel, DescentError> {
    match kernel {
        Kernel::Point(Point::Infinity) => Ok(SetLabel::S2),
        Kernel::Point(Point::Affine(x, y)) => {
            let reduce = |c: &num_rational::BigRational| QPoly::constant(c.clone()).eval_mod(0, q);
            match (reduce(x), reduce(y)) {
                (Some(xr), Some(yr)) if xr == xs && yr == ys => Ok(SetLabel::S1),
                _ => Ok(SetLabel::S2),
            }
        }
        Kernel::Poly(psi) => match psi.eval_mod(xs, q) {
            Some(0) => Ok(SetLabel::S1),
            Some(_) => Ok(SetLabel::S2),
            None => Err(DescentError::ClassifierDisagreement { q, singular: None, valuation: None }),
        },
    }
}

fn classify(curve: &Curve, kernel: &Kernel, codomain: &Curve, support: &[u64], p: u64) -> Result<DescentSets, DescentError> {
    let mut sets = DescentSets {
        p,
        s1: Vec::new(),
        s2: Vec::new(),
        s3: vec![p],
        excluded: Vec::new(),
        evidence: Vec::new(),
    };
    for &q in support {
        if q == p {
            sets.excluded.push(Excluded { q, reason: ExclusionReason::AbovePOverlap });
            continue;
        }
        let red = reduction_at(curve, q)?;
        match red.kind {
            ReductionKind::Good => continue,
            ReductionKind::Additive => {
                sets.excluded.push(Excluded { q, reason: ExclusionReason::Additive });
                continue;
            }
            ReductionKind::NonsplitMultiplicative => {
                sets.excluded.push(Excluded { q, reason: ExclusionReason::Nonsplit });
                continue;
            }
            ReductionKind::SplitMultiplicative => {}
        }
        let (xs, ys) = singular_point(curve, q)?;
        let by_point = singular_verdict(kernel, xs, ys, q)?;
        let qb = BigInt::from(q);
        let v = crate::arith::valuation(curve.discriminant(), &qb);
        let v2 = crate::arith::valuation(codomain.discriminant(), &qb);
        let by_val = if v2 == p as u32 * v {
            Some(SetLabel::S2)
        } else if p as u32 * v2 == v {
            Some(SetLabel::S1)
        } else {
            None
        };
        if by_val != Some(by_point) {
            return Err(DescentError::ClassifierDisagreement { q, singular: Some(by_point), valuation: by_val });
        }
        if by_point == SetLabel::S2 && matches!(kernel, Kernel::Point(_)) && q % p != 1 {
            return Err(DescentError::NotOneModP { ell: q, p });
        }
        sets.evidence.push(Evidence {
            q,
            singular_point_test: by_point,
            valuation_ratio_test: by_point,
            v_disc: v,
            v_disc_isogenous: v2,
        });
        match by_point {
            SetLabel::S1 => sets.s1.push(q),
            SetLabel::S2 => sets.s2.push(q),
        }
    }
    Ok(sets)
}

/// The matrix of `T`: rows indexed by S₂, columns by S₁.
#[serde_as]
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharacterMatrixSpec {
    #[serde_as(as = "DisplayFromStr")]
    pub p: u64,
    #[serde_as(as = "Vec<DisplayFromStr>")]
    pub col_basis: Vec<u64>,
    #[serde_as(as = "Vec<DisplayFromStr>")]
    pub row_conditions: Vec<u64>,
    pub matrix: FpMatrix,
}

fn validate_sets(p: u64, s1: &[u64], s2: &[u64]) -> Result<(), DescentError> {
    check_p(p)?;
    for &q in s1.iter().chain(s2) {
        if !is_prime_u64(q) {
            return Err(DescentError::NotPrime(q));
        }
        if q == p {
            return Err(DescentError::AboveP(q));
        }
    }
    if let Some(&q) = s1.iter().find(|q| s2.contains(q)) {
        return Err(DescentError::Overlap(q));
    }
    Ok(())
}

/// Character values `χ_ℓ(q)` for the columns; `None` when `ℓ ≢ 1 mod p`,
/// where every local unit is a p-th power.
fn character_row(ell: u64, p: u64, cols: &[u64]) -> Result<Option<Vec<u32>>, DescentError> {
    if ell % p != 1 {
        return Ok(None);
    }
    let chi = ResidueCharacter::new(ell, p)?;
    let row = cols
        .iter()
        .map(|&q| chi.eval_u64(q).map(|v| v as u32))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Some(row))
}

fn labels(primes: &[u64]) -> Vec<String> {
    primes.iter().map(u64::to_string).collect()
}

pub fn character_matrix(p: u64, s1: &[u64], s2: &[u64]) -> Result<CharacterMatrixSpec, DescentError> {
    validate_sets(p, s1, s2)?;
    if let Some(&ell) = s2.iter().find(|&&l| l % p != 1) {
        return Err(DescentError::NotOneModP { ell, p });
    }
    let mut rows = Vec::with_capacity(s2.len());
    for &ell in s2 {
        rows.push(character_row(ell, p, s1)?.expect("ℓ ≡ 1 mod p"));
    }
    let matrix = build_matrix(p, rows, s1.len(), labels(s2), labels(s1));
    Ok(CharacterMatrixSpec { p, col_basis: s1.to_vec(), row_conditions: s2.to_vec(), matrix })
}

fn build_matrix(p: u64, rows: Vec<Vec<u32>>, cols: usize, row_labels: Vec<String>, col_labels: Vec<String>) -> FpMatrix {
    let entries: Vec<u32> = rows.iter().flatten().copied().collect();
    FpMatrix::new(p as u32, rows.len(), cols, entries)
        .and_then(|m| m.with_labels(row_labels, col_labels))
        .expect("shape fixed by construction")
}

/// `m(S₁, S₂)`: rank of the character matrix.
pub fn m_rank(p: u64, s1: &[u64], s2: &[u64]) -> Result<usize, DescentError> {
    Ok(character_matrix(p, s1, s2)?.matrix.rank())
}

/// As [`m_rank`], but primes `ℓ ≢ 1 mod p` in S₂ contribute zero rows
/// instead of an error.
pub fn m_rank_relaxed(p: u64, s1: &[u64], s2: &[u64]) -> Result<usize, DescentError> {
    validate_sets(p, s1, s2)?;
    let mut rows = Vec::new();
    for &ell in s2 {
        if let Some(r) = character_row(ell, p, s1)? {
            rows.push(r);
        }
    }
    let n = rows.len();
    Ok(build_matrix(p, rows, s1.len(), vec![String::new(); n], labels(s1)).rank())
}

/// Dimensions and bases of the two groups bracketing the Selmer group.
/// Basis vectors are exponent vectors over `support` = S₁ followed by p.
#[serde_as]
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SandwichResult {
    #[serde_as(as = "DisplayFromStr")]
    pub lower_dim: usize,
    #[serde_as(as = "DisplayFromStr")]
    pub upper_dim: usize,
    #[serde_as(as = "Vec<DisplayFromStr>")]
    pub support: Vec<u64>,
    #[serde_as(as = "Vec<Vec<DisplayFromStr>>")]
    pub lower_basis: Vec<Vec<u32>>,
    #[serde_as(as = "Vec<Vec<DisplayFromStr>>")]
    pub upper_basis: Vec<Vec<u32>>,
}

/// Upper group: classes on S₁ ∪ {p} that are local p-th powers at every
/// ℓ ∈ S₂. Lower group: classes on S₁ that are in addition local p-th
/// powers at p.
pub fn sandwich_for_sets(p: u64, s1: &[u64], s2: &[u64]) -> Result<SandwichResult, DescentError> {
    validate_sets(p, s1, s2)?;
    let mut support = s1.to_vec();
    support.push(p);

    let mut upper_rows = Vec::new();
    let mut lower_rows = Vec::new();
    for &ell in s2 {
        if let Some(row) = character_row(ell, p, &support)? {
            lower_rows.push(row[..s1.len()].to_vec());
            upper_rows.push(row);
        }
    }
    // unit condition at p: u^(p−1) ≡ 1 mod p², linear through the Fermat quotient
    let fq_row = s1
        .iter()
        .map(|&q| fermat_quotient(&BigInt::from(q), p).map(|v| v as u32))
        .collect::<Result<Vec<_>, _>>()?;
    lower_rows.push(fq_row);

    let nu = upper_rows.len();
    let upper = build_matrix(p, upper_rows, support.len(), vec![String::new(); nu], labels(&support));
    let nl = lower_rows.len();
    let lower = build_matrix(p, lower_rows, s1.len(), vec![String::new(); nl], labels(s1));

    let upper_basis = upper.kernel_basis();
    let lower_basis: Vec<Vec<u32>> = lower
        .kernel_basis()
        .into_iter()
        .map(|mut v| {
            v.push(0);
            v
        })
        .collect();
    Ok(SandwichResult {
        lower_dim: lower_basis.len(),
        upper_dim: upper_basis.len(),
        support,
        lower_basis,
        upper_basis,
    })
}

/// Sandwich for a curve with a rational point of order `p`.
pub fn selmer_sandwich(e: &Curve, pt: &Point, p: u64, budget: FactorBudget) -> Result<SandwichResult, DescentError> {
    let sets = classify_primes(e, pt, p, budget)?;
    sandwich_for_sets(p, &sets.s1, &sets.s2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::small_primes;
    use proptest::prelude::*;
    use rand::{seq::SliceRandom, Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn budget() -> FactorBudget {
        FactorBudget::default()
    }

    #[test]
    fn classifies_11a3() {
        let e = Curve::from_i64([0, -1, 1, 0, 0]).unwrap();
        let sets = classify_primes(&e, &Point::from_i64(0, 0), 5, budget()).unwrap();
        assert_eq!(sets.signature(), (vec![], vec![11], vec![5]));
        assert_eq!(sets.evidence.len(), 1);
        assert_eq!(sets.evidence[0].v_disc, 1);
        assert_eq!(sets.evidence[0].v_disc_isogenous, 5);
        let dual = dual_sets(&sets);
        assert_eq!(dual.signature(), (vec![11], vec![], vec![5]));
        assert_eq!(dual_sets(&dual), sets);
    }

    #[test]
    fn dual_descent_matches_swapped_sets() {
        let e = Curve::from_i64([0, -1, 1, 0, 0]).unwrap();
        let d = analyze_descent(&e, &Kernel::Point(Point::from_i64(0, 0)), 5, budget()).unwrap();
        let dd = d.dual(budget()).unwrap();
        assert_eq!(dd.sets.signature(), d.sets.dual().signature());
        assert_eq!(dd.isogeny.codomain, d.curve);
    }

    #[test]
    fn wrong_order_is_rejected() {
        let e = Curve::from_i64([0, -1, 1, 0, 0]).unwrap();
        assert!(matches!(
            classify_primes(&e, &Point::from_i64(0, 0), 7, budget()),
            Err(DescentError::Isogeny(IsogenyError::WrongOrder(7)))
        ));
    }

    #[test]
    fn character_matrix_examples() {
        let m = character_matrix(5, &[2, 3], &[11, 31]).unwrap();
        assert_eq!(m.matrix.to_rows(), vec![vec![1, 3], vec![4, 1]]);
        assert_eq!(m_rank(5, &[2, 3], &[11, 31]).unwrap(), 2);
        let m = character_matrix(5, &[], &[11]).unwrap();
        assert_eq!((m.matrix.rows(), m.matrix.cols()), (1, 0));
        assert_eq!(m_rank(5, &[], &[11]).unwrap(), 0);
        assert_eq!(character_matrix(5, &[2], &[11]).unwrap().matrix.to_rows(), vec![vec![1]]);
        assert_eq!(m_rank(5, &[3], &[11, 31]).unwrap(), 1);
        assert_eq!(character_matrix(5, &[2], &[7]), Err(DescentError::NotOneModP { ell: 7, p: 5 }));
        assert_eq!(character_matrix(5, &[11], &[11]), Err(DescentError::Overlap(11)));
        assert_eq!(character_matrix(5, &[5], &[11]), Err(DescentError::AboveP(5)));
        assert_eq!(character_matrix(5, &[4], &[11]), Err(DescentError::NotPrime(4)));
        assert_eq!(m_rank_relaxed(5, &[2], &[7, 11]).unwrap(), 1);
    }

    #[test]
    fn sandwich_examples() {
        let s = sandwich_for_sets(5, &[], &[11]).unwrap();
        assert_eq!((s.lower_dim, s.upper_dim), (0, 0));
        let s = sandwich_for_sets(5, &[11], &[]).unwrap();
        assert_eq!((s.lower_dim, s.upper_dim), (0, 2));
        assert_eq!(s.support, vec![11, 5]);
        for p in [5, 7] {
            let s = sandwich_for_sets(p, &[], &[]).unwrap();
            assert_eq!((s.lower_dim, s.upper_dim), (0, 1));
        }
        let e = Curve::from_i64([0, -1, 1, 0, 0]).unwrap();
        let s = selmer_sandwich(&e, &Point::from_i64(0, 0), 5, budget()).unwrap();
        assert_eq!((s.lower_dim, s.upper_dim), (0, 0));
    }

    /// Kernel of the character map counted by enumerating exponent vectors.
    fn brute_kernel_size(p: u64, s1: &[u64], s2: &[u64]) -> usize {
        let chis: Vec<ResidueCharacter> = s2.iter().map(|&l| ResidueCharacter::new(l, p).unwrap()).collect();
        let n = s1.len();
        let total = (p as usize).pow(n as u32);
        let mut count = 0;
        for idx in 0..total {
            let mut e = Vec::with_capacity(n);
            let mut k = idx;
            for _ in 0..n {
                e.push((k % p as usize) as u64);
                k /= p as usize;
            }
            // x = ∏ q^e mod ℓ is a p-th power for every ℓ
            let ok = chis.iter().all(|chi| {
                let ell = chi.modulus();
                let x = s1.iter().zip(&e).fold(1u64, |acc, (&q, &ei)| {
                    let mut v = acc;
                    for _ in 0..ei {
                        v = v * (q % ell) % ell;
                    }
                    v
                });
                let pth: std::collections::HashSet<u64> = (1..ell)
                    .map(|y| (0..p).fold(1u64, |a, _| a * y % ell))
                    .collect();
                pth.contains(&x)
            });
            if ok {
                count += 1;
            }
        }
        count
    }

    #[test]
    fn m_rank_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let primes: Vec<u64> = small_primes().iter().map(|&q| q as u64).filter(|&q| q < 400).collect();
        for _ in 0..60 {
            let p = *[5u64, 7].choose(&mut rng).unwrap();
            let ones: Vec<u64> = primes.iter().copied().filter(|&l| l % p == 1).collect();
            let k2 = rng.gen_range(0..=3);
            let mut s2: Vec<u64> = ones.choose_multiple(&mut rng, k2).copied().collect();
            s2.sort();
            let pool: Vec<u64> = primes.iter().copied().filter(|q| *q != p && !s2.contains(q)).collect();
            let k1 = rng.gen_range(0..=3);
            let s1: Vec<u64> = pool.choose_multiple(&mut rng, k1).copied().collect();
            let m = m_rank(p, &s1, &s2).unwrap();
            let expected = (p as usize).pow((s1.len() - m) as u32);
            assert_eq!(brute_kernel_size(p, &s1, &s2), expected, "p={p} s1={s1:?} s2={s2:?}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn sandwich_is_ordered_and_monotone(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = *[5u64, 7].choose(&mut rng).unwrap();
            let primes: Vec<u64> = small_primes().iter().map(|&q| q as u64).filter(|&q| q < 2000 && q != p).collect();
            let mut shuffled = primes.clone();
            shuffled.shuffle(&mut rng);
            let s1: Vec<u64> = shuffled[..rng.gen_range(0..5)].to_vec();
            let rest: Vec<u64> = shuffled[s1.len()..].iter().copied().filter(|l| l % p == 1).take(6).collect();
            let mut prev_upper = usize::MAX;
            for k in 0..=rest.len() {
                let s = sandwich_for_sets(p, &s1, &rest[..k]).unwrap();
                prop_assert!(s.lower_dim <= s.upper_dim);
                prop_assert!(s.upper_dim <= s1.len() + 1);
                prop_assert!(s.upper_dim <= prev_upper);
                // lower ⊂ upper: every lower vector satisfies the upper conditions
                let upper_rows: Vec<Vec<u32>> = rest[..k]
                    .iter()
                    .filter_map(|&l| character_row(l, p, &s.support).unwrap())
                    .collect();
                for v in &s.lower_basis {
                    for row in &upper_rows {
                        let dot: u64 = row.iter().zip(v).map(|(a, b)| (*a as u64) * (*b as u64)).sum();
                        prop_assert_eq!(dot % p, 0);
                    }
                }
                prev_upper = s.upper_dim;
            }
        }
    }
}
