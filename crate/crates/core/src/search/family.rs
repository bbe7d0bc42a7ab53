//! One-parameter Tate normal form families with a rational point of order p.

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_with::{serde_as, DisplayFromStr};

use crate::arith::{factor_with_hint, is_prime_u64, FactorBudget, Factorization};
use crate::descent::{analyze_descent_with_hint, SetLabel};
use crate::elliptic::{derived, minimal_model_with_support, Curve, Point, RationalModel, Transform};
use crate::formats::qpoly_serde;
use crate::poly::{rat, QPoly};

use super::SearchError;

/// A factor of the family discriminant, with the descent set its roots mod ℓ
/// push ℓ into. `role` is `None` when probing found no consistent answer.
#[serde_as]
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorPoly {
    #[serde(with = "qpoly_serde")]
    pub poly: QPoly,
    pub multiplicity: u32,
    pub role: Option<SetLabel>,
    /// Probes `(ℓ, parameter)` that fixed the role.
    #[serde_as(as = "Vec<(DisplayFromStr, DisplayFromStr)>")]
    pub probes: Vec<(u64, i64)>,
}

#[derive(Debug)]
struct FamilyData {
    model: [QPoly; 5],
    disc: QPoly,
    content: BigRational,
    factors: Vec<FactorPoly>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FamilyKind {
    #[serde(rename = "tate5")]
    Tate5,
    #[serde(rename = "tate7")]
    Tate7,
}

#[derive(Debug, Clone, Copy)]
pub struct FamilySpec {
    kind: FamilyKind,
}

/// A nondegenerate fiber in globally minimal form.
#[derive(Debug, Clone)]
pub struct Fiber {
    pub parameter: BigRational,
    pub curve: Curve,
    pub point: Point,
    /// From the raw family model at this parameter to `curve`.
    pub to_minimal: Transform,
    pub disc: Factorization,
}

const PROBES_PER_FACTOR: usize = 3;

impl FamilySpec {
    pub fn new(p: u64) -> Result<Self, SearchError> {
        let kind = match p {
            5 => FamilyKind::Tate5,
            7 => FamilyKind::Tate7,
            _ => return Err(SearchError::UnsupportedP(p)),
        };
        Ok(Self { kind })
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn p(&self) -> u64 {
        match self.kind {
            FamilyKind::Tate5 => 5,
            FamilyKind::Tate7 => 7,
        }
    }

    pub fn parameter_name(&self) -> &'static str {
        match self.kind {
            FamilyKind::Tate5 => "b",
            FamilyKind::Tate7 => "t",
        }
    }

    /// a-invariants as polynomials in the parameter.
    pub fn model_polys(&self) -> &[QPoly; 5] {
        &self.data().model
    }

    /// Discriminant of the family model as a polynomial in the parameter.
    pub fn disc_poly(&self) -> &QPoly {
        &self.data().disc
    }

    /// Constant factor of the discriminant polynomial.
    pub fn disc_content(&self) -> &BigRational {
        &self.data().content
    }

    pub fn factor_polys(&self) -> &[FactorPoly] {
        &self.data().factors
    }

    pub fn model(&self, b: &BigRational) -> RationalModel {
        RationalModel { a: self.model_polys().clone().map(|f| f.eval(b)) }
    }

    fn data(&self) -> &'static FamilyData {
        static TATE5: OnceLock<FamilyData> = OnceLock::new();
        static TATE7: OnceLock<FamilyData> = OnceLock::new();
        let cell = match self.kind {
            FamilyKind::Tate5 => &TATE5,
            FamilyKind::Tate7 => &TATE7,
        };
        cell.get_or_init(|| derive_family(self.kind))
    }

    /// The family member at `b` with its marked point, minimalized.
    pub fn fiber(&self, b: &BigRational, budget: FactorBudget) -> Result<Fiber, SearchError> {
        let data = self.data();
        if data.disc.eval(b).is_zero() {
            return Err(SearchError::Degenerate(crate::formats::rational_to_string(b)));
        }
        let (raw, to_int) = self.model(b).integralize()?;
        let hint = self.hint_primes(b);
        let (curve, to_min) = minimal_model_with_support(&raw, &hint, budget)?;
        let to_minimal = to_int.then(&to_min);
        let point = to_minimal.apply_point(&Point::Affine(BigRational::zero(), BigRational::zero()));
        let disc = factor_with_hint(curve.discriminant(), &hint, budget)?;
        Ok(Fiber { parameter: b.clone(), curve, point, to_minimal, disc })
    }

    /// Small primes dividing some factor value, the denominator or the
    /// content; a cheap head start for factoring the discriminant.
    fn hint_primes(&self, b: &BigRational) -> Vec<u64> {
        let data = self.data();
        let mut vals: Vec<BigInt> = vec![b.denom().clone(), data.content.numer().clone(), data.content.denom().clone()];
        for f in &data.factors {
            let v = f.poly.eval(b);
            vals.push(v.numer().clone());
        }
        let mut out = Vec::new();
        for v in vals {
            let mut v = v.abs();
            if v.is_zero() {
                continue;
            }
            for &q in crate::arith::small_primes().iter().take(2_000) {
                let qb = BigInt::from(q);
                if (&v % &qb).is_zero() {
                    out.push(q as u64);
                    while (&v % &qb).is_zero() {
                        v /= &qb;
                    }
                }
                if v < qb.clone() * &qb {
                    break;
                }
            }
            if let Some(r) = v.to_u64() {
                if r > 1 && is_prime_u64(r) {
                    out.push(r);
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

fn family_model(kind: FamilyKind) -> [QPoly; 5] {
    let x = QPoly::x();
    let (b, c) = match kind {
        FamilyKind::Tate5 => (x.clone(), x),
        // b = t³ − t², c = t² − t
        FamilyKind::Tate7 => (QPoly::from_ints(&[0, 0, -1, 1]), QPoly::from_ints(&[0, -1, 1])),
    };
    [&QPoly::one() - &c, -&b, -&b, QPoly::zero(), QPoly::zero()]
}

fn derive_family(kind: FamilyKind) -> FamilyData {
    let model = family_model(kind);
    let [.., disc] = derived(&model, |k| QPoly::constant(rat(k)));
    let fz = disc
        .factor_over_q(FactorBudget::default())
        .expect("family discriminant has small coefficients");
    assert!(fz.complete, "family discriminant factors into pieces of degree at most 5");
    let spec = FamilySpec { kind };
    let p = spec.p();
    let mut factors: Vec<FactorPoly> = fz
        .factors
        .iter()
        .map(|(f, e)| FactorPoly { poly: f.clone(), multiplicity: *e, role: None, probes: Vec::new() })
        .collect();
    let polys: Vec<QPoly> = factors.iter().map(|f| f.poly.clone()).collect();
    for (i, fp) in factors.iter_mut().enumerate() {
        let (role, probes) = probe_role(&model, &disc, &polys, i, p);
        fp.role = role;
        fp.probes = probes;
    }
    FamilyData { model, disc, content: fz.content, factors }
}

/// Classifies fibers where ℓ divides factor `i` only, over the first primes
/// ℓ ≡ 1 mod p that have such a root.
fn probe_role(model: &[QPoly; 5], disc: &QPoly, polys: &[QPoly], i: usize, p: u64) -> (Option<SetLabel>, Vec<(u64, i64)>) {
    let budget = FactorBudget::default();
    let mut labels = Vec::new();
    let mut probes = Vec::new();
    let mut ell = p + 1;
    while labels.len() < PROBES_PER_FACTOR && ell < 10_000 {
        ell += p;
        if !is_prime_u64(ell) {
            continue;
        }
        let others_vanish = |r: u64| polys.iter().enumerate().any(|(j, g)| j != i && g.eval_mod(r, ell) == Some(0));
        let Some(root) = polys[i].roots_mod(ell).into_iter().find(|&r| !others_vanish(r)) else {
            continue;
        };
        let mut b0 = root as i64;
        while disc.eval(&rat(b0)).is_zero() {
            b0 += ell as i64;
        }
        let a = model.clone().map(|f| f.eval(&rat(b0)));
        let Ok((e, _)) = (RationalModel { a }).integralize() else { continue };
        let pt = Point::Affine(BigRational::zero(), BigRational::zero());
        let Ok(d) = analyze_descent_with_hint(&e, &pt, p, &[ell], budget) else { continue };
        let label = if d.sets.s1.contains(&ell) {
            SetLabel::S1
        } else if d.sets.s2.contains(&ell) {
            SetLabel::S2
        } else {
            continue;
        };
        labels.push(label);
        probes.push((ell, b0));
    }
    let role = match labels.first() {
        Some(&l) if labels.iter().all(|&m| m == l) => Some(l),
        _ => None,
    };
    (role, probes)
}
