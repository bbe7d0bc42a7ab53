//! End-to-end analysis of a curve with a rational p-isogeny: minimal model,
//! codomain, descent sets in both directions, character ranks, Selmer
//! sandwiches and the bound formulas.

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use serde_with::{serde_as, DisplayFromStr};
use thiserror::Error;

use crate::arith::{FactorBudget, Incomplete};
use crate::bounds::{bound_report, BoundInputs, BoundReport, BoundsError, FieldInvariants};
use crate::descent::{
    analyze_descent, m_rank_relaxed, sandwich_for_sets, Descent, DescentError, DescentSets, Kernel, SandwichResult,
};
use crate::elliptic::{Curve, EllipticError, Point, Transform};
use crate::formats::qpoly_serde;
use crate::isogeny::IsogenyError;
use crate::poly::QPoly;

/// Failures split by who is at fault: bad input, or a factorization that
/// ran out of budget.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalyzeError {
    #[error("{field}: {message}")]
    Validation { field: String, message: String },
    #[error(transparent)]
    Incomplete(Incomplete),
}

impl AnalyzeError {
    pub fn validation(field: &str, message: impl Into<String>) -> Self {
        AnalyzeError::Validation { field: field.to_string(), message: message.into() }
    }

    /// Process exit code: 2 for invalid input, 3 for an incomplete
    /// factorization.
    pub fn exit_code(&self) -> i32 {
        match self {
            AnalyzeError::Validation { .. } => 2,
            AnalyzeError::Incomplete(_) => 3,
        }
    }

    fn from_descent(field: &str, e: DescentError) -> Self {
        match e {
            DescentError::Incomplete(inc) => AnalyzeError::Incomplete(inc),
            DescentError::Elliptic(EllipticError::Incomplete(inc)) => AnalyzeError::Incomplete(inc),
            DescentError::Isogeny(IsogenyError::Elliptic(EllipticError::Incomplete(inc))) => {
                AnalyzeError::Incomplete(inc)
            }
            DescentError::Isogeny(IsogenyError::WrongOrder(p)) => {
                AnalyzeError::validation("point", format!("point order is not {p}"))
            }
            DescentError::BadP(p) => AnalyzeError::validation("p", format!("{p} is not an odd prime")),
            DescentError::Elliptic(EllipticError::OffCurve) => {
                AnalyzeError::validation("point", "point order check failed: point is not on the curve")
            }
            other => AnalyzeError::validation(field, other.to_string()),
        }
    }
}

impl From<BoundsError> for AnalyzeError {
    fn from(e: BoundsError) -> Self {
        AnalyzeError::validation("field", e.to_string())
    }
}

#[serde_as]
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SecondKernel {
    #[serde(with = "qpoly_serde")]
    pub kernel_poly: QPoly,
    pub codomain: Curve,
    pub sets: DescentSets,
    #[serde_as(as = "DisplayFromStr")]
    pub m_psi: usize,
    #[serde_as(as = "DisplayFromStr")]
    pub m_psihat: usize,
}

#[serde_as]
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalyzeReport {
    #[serde_as(as = "DisplayFromStr")]
    pub p: u64,
    pub input_curve: Curve,
    pub minimal_model: Curve,
    #[serde_as(as = "DisplayFromStr")]
    pub minimal_discriminant: BigInt,
    pub to_minimal: Transform,
    /// Kernel generator in minimal coordinates.
    pub point: Point,
    #[serde(with = "qpoly_serde")]
    pub kernel_poly: QPoly,
    pub codomain: Curve,
    #[serde_as(as = "DisplayFromStr")]
    pub codomain_discriminant: BigInt,
    pub sets: DescentSets,
    /// Sets of the dual isogeny, classified on the codomain.
    pub dual_sets: DescentSets,
    pub dual_swap: bool,
    #[serde_as(as = "DisplayFromStr")]
    pub m_phi: usize,
    #[serde_as(as = "DisplayFromStr")]
    pub m_phihat: usize,
    pub sandwich_phi: SandwichResult,
    pub sandwich_phihat: SandwichResult,
    pub second_kernel: Option<SecondKernel>,
    pub bounds: BoundReport,
}

/// Full analysis of `(E, P)` with `P` of order `p`. The optional second
/// kernel is a kernel polynomial on the input model; when given, its
/// character ranks feed the matrix Sha bound.
pub fn analyze(
    e: &Curve,
    pt: &Point,
    p: u64,
    second_kernel: Option<&QPoly>,
    field: Option<FieldInvariants>,
    budget: FactorBudget,
) -> Result<AnalyzeReport, AnalyzeError> {
    if !e.contains(pt) {
        return Err(AnalyzeError::validation("point", "point order check failed: point is not on the curve"));
    }
    let d: Descent =
        analyze_descent(e, &Kernel::Point(pt.clone()), p, budget).map_err(|x| AnalyzeError::from_descent("curve", x))?;
    let dual = d.dual(budget).map_err(|x| AnalyzeError::from_descent("dual", x))?;
    let sets = d.sets.clone();
    let dual_swap = dual.sets.s1 == sets.s2 && dual.sets.s2 == sets.s1;
    let rank = |a: &[u64], b: &[u64]| m_rank_relaxed(p, a, b).map_err(|x| AnalyzeError::from_descent("sets", x));
    let m_phi = rank(&sets.s1, &sets.s2)?;
    let m_phihat = rank(&sets.s2, &sets.s1)?;
    let sandwich = |a: &[u64], b: &[u64]| sandwich_for_sets(p, a, b).map_err(|x| AnalyzeError::from_descent("sets", x));
    let sandwich_phi = sandwich(&sets.s1, &sets.s2)?;
    let sandwich_phihat = sandwich(&sets.s2, &sets.s1)?;

    let second = match second_kernel {
        Some(psi) => {
            let sd = analyze_descent(e, &Kernel::Poly(psi.clone()), p, budget)
                .map_err(|x| AnalyzeError::from_descent("second_kernel", x))?;
            let m_psi = rank(&sd.sets.s1, &sd.sets.s2)?;
            let m_psihat = rank(&sd.sets.s2, &sd.sets.s1)?;
            let Kernel::Poly(kernel_poly) = sd.kernel else { unreachable!("polynomial kernel in, polynomial out") };
            Some(SecondKernel { kernel_poly, codomain: sd.isogeny.codomain.clone(), sets: sd.sets, m_psi, m_psihat })
        }
        None => None,
    };

    let field = field.unwrap_or_else(FieldInvariants::rationals);
    let bounds = bound_report(
        &field,
        &BoundInputs {
            s1: sets.s1.len() as i64,
            s2: sets.s2.len() as i64,
            m: m_phi as i64,
            m_hat: m_phihat as i64,
            m_psi: second.as_ref().map(|s| s.m_psi as i64),
            m_psi_hat: second.as_ref().map(|s| s.m_psihat as i64),
            dim_phi: Some(sandwich_phi.upper_dim as i64),
            ..Default::default()
        },
    )?;
    let Kernel::Point(point) = d.kernel.clone() else { unreachable!("point kernel in, point kernel out") };
    Ok(AnalyzeReport {
        p,
        input_curve: e.clone(),
        minimal_model: d.curve.clone(),
        minimal_discriminant: d.curve.discriminant().clone(),
        to_minimal: d.to_minimal.clone(),
        point,
        kernel_poly: d.isogeny.kernel_poly.clone(),
        codomain: d.isogeny.codomain.clone(),
        codomain_discriminant: d.isogeny.codomain.discriminant().clone(),
        sets,
        dual_sets: dual.sets,
        dual_swap,
        m_phi,
        m_phihat,
        sandwich_phi,
        sandwich_phihat,
        second_kernel: second,
        bounds,
    })
}
