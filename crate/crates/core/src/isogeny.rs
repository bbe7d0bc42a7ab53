//! Isogenies of odd prime degree from a rational kernel, via the Vélu and
//! Kohel formulas.
//!
//! The quotient is first computed on the model that keeps `a1, a2, a3` of the
//! domain, then moved to its reduced global minimal model. Points and kernel
//! polynomials are reported in minimal coordinates.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::arith::{is_prime_u64, FactorBudget, Incomplete};
use crate::elliptic::{
    minimal_model, minimal_model_with_support, Curve, EllipticError, Point, RationalModel,
    Transform,
};
use crate::modpoly::{big_primes, CrtVector, Fq};
use crate::poly::{int, rat, QPoly};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IsogenyError {
    #[error("point does not have order {0}")]
    WrongOrder(u64),
    #[error("isogeny degree {0} is not an odd prime")]
    BadDegree(u64),
    #[error("kernel polynomial must be monic of degree {expected}")]
    KernelDegree { expected: usize },
    #[error("kernel polynomial does not divide the {0}-division polynomial")]
    NotTorsion(u64),
    #[error("kernel polynomial roots do not form a subgroup")]
    NotSubgroup,
    #[error("dual kernel verification failed: {0}")]
    DualCheck(String),
    #[error(transparent)]
    Elliptic(#[from] EllipticError),
}

impl From<Incomplete> for IsogenyError {
    fn from(e: Incomplete) -> Self {
        IsogenyError::Elliptic(EllipticError::Incomplete(e))
    }
}

/// Division polynomials `f_0 … f_n` in x alone: `f_k = ψ_k` for odd `k`
/// and `ψ_k / ψ_2` for even `k`.
pub fn division_polynomials(e: &Curve, n: usize) -> Vec<QPoly> {
    // integer arithmetic throughout; the curve is integral
    let (b2, b4, b6, b8) = (e.b2().clone(), e.b4().clone(), e.b6().clone(), e.b8().clone());
    let z = |c: i64| BigInt::from(c);
    let big_f = vec![b6.clone(), z(2) * &b4, b2.clone(), z(4)];
    let f2sq = zmul(&big_f, &big_f);
    let mut f: Vec<Vec<BigInt>> = vec![
        vec![],
        vec![z(1)],
        vec![z(1)],
        vec![b8.clone(), z(3) * &b6, z(3) * &b4, b2.clone(), z(3)],
        vec![
            &b4 * &b8 - &b6 * &b6,
            &b2 * &b8 - &b4 * &b6,
            z(10) * &b8,
            z(10) * &b6,
            z(5) * &b4,
            b2.clone(),
            z(2),
        ],
    ];
    let sq = |a: &[BigInt]| zmul(a, a);
    let cube = |a: &[BigInt]| zmul(&zmul(a, a), a);
    for k in 5..=n {
        let m = k / 2;
        let next = if k % 2 == 0 {
            zmul(&f[m], &zsub(&zmul(&f[m + 2], &sq(&f[m - 1])), &zmul(&f[m - 2], &sq(&f[m + 1]))))
        } else if m % 2 == 0 {
            zsub(&zmul(&f2sq, &zmul(&f[m + 2], &cube(&f[m]))), &zmul(&f[m - 1], &cube(&f[m + 1])))
        } else {
            zsub(&zmul(&f[m + 2], &cube(&f[m])), &zmul(&f2sq, &zmul(&f[m - 1], &cube(&f[m + 1]))))
        };
        f.push(next);
    }
    f.truncate(n + 1);
    f.iter().map(|c| QPoly::from_bigints(c)).collect()
}

fn zmul(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn zsub(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); a.len().max(b.len())];
    for (i, o) in out.iter_mut().enumerate() {
        if let Some(x) = a.get(i) {
            *o += x;
        }
        if let Some(y) = b.get(i) {
            *o -= y;
        }
    }
    out
}

/// `x(kQ)` as a rational function `num/den` of `x(Q)`.
fn multiplication_x_map(e: &Curve, f: &[QPoly], k: usize) -> (QPoly, QPoly) {
    let big_f = QPoly::new(vec![int(e.b6()), rat(2) * int(e.b4()), int(e.b2()), rat(4)]);
    let (den, cross) = if k % 2 == 1 {
        (f[k].pow(2), &(&f[k - 1] * &f[k + 1]) * &big_f)
    } else {
        (&f[k].pow(2) * &big_f, &f[k - 1] * &f[k + 1])
    };
    (&(&QPoly::x() * &den) - &cross, den)
}

/// `∏ (x − x(kP))` for `k = 1 … (p−1)/2`.
pub fn kernel_poly_from_point(e: &Curve, pt: &Point, p: u64) -> Result<QPoly, IsogenyError> {
    check_degree(p)?;
    if !e.has_order(pt, p) {
        return Err(IsogenyError::WrongOrder(p));
    }
    let model = e.model();
    let mut acc = QPoly::one();
    let mut q = pt.clone();
    for _ in 0..(p - 1) / 2 {
        let x = q.x().expect("multiples below p are affine");
        acc = &acc * &QPoly::linear_root(x);
        q = model.add_unchecked(&q, pt);
    }
    Ok(acc)
}

fn check_degree(p: u64) -> Result<(), IsogenyError> {
    if p < 3 || !is_prime_u64(p) {
        return Err(IsogenyError::BadDegree(p));
    }
    Ok(())
}

/// Checks that a monic degree `(p−1)/2` polynomial cuts out the nonzero
/// x-coordinates of a subgroup of order `p`.
pub fn check_kernel_poly(e: &Curve, psi: &QPoly, p: u64) -> Result<(), IsogenyError> {
    check_degree(p)?;
    let n = ((p - 1) / 2) as usize;
    if psi.degree() != Some(n) || !psi.is_monic() {
        return Err(IsogenyError::KernelDegree { expected: n });
    }
    let f = division_polynomials(e, p as usize);
    let fp = &f[p as usize];
    if !psi.divides(fp) {
        return Err(IsogenyError::NotTorsion(p));
    }
    // closure: x(kQ) is again a root for every root x(Q) and k ≤ n
    for k in 2..=n {
        let (num, den) = multiplication_x_map(e, &f, k);
        if !den.gcd(psi).degree().is_some_and(|d| d == 0) {
            return Err(IsogenyError::NotSubgroup);
        }
        let mut composed = QPoly::zero();
        for (i, c) in psi.coeffs().iter().enumerate() {
            let term = &num.pow(i as u32) * &den.pow((n - i) as u32);
            composed = &composed + &term.scale(c);
        }
        if !composed.rem(psi).is_zero() {
            return Err(IsogenyError::NotSubgroup);
        }
    }
    Ok(())
}

/// A separable isogeny of odd prime degree with its codomain in reduced
/// minimal form.
#[derive(Debug, Clone)]
pub struct IsogenyData {
    pub p: u64,
    pub domain: Curve,
    pub kernel_gen: Option<Point>,
    /// Monic; vanishes on the x-coordinates of the nonzero kernel points.
    pub kernel_poly: QPoly,
    pub codomain: Curve,
    /// Vélu model of the codomain, same `a1, a2, a3` as the domain.
    pub raw_codomain: RationalModel,
    /// From `raw_codomain` to `codomain`.
    pub to_minimal: Transform,
    x_num: QPoly,
    x_den: QPoly,
}

/// Quotient by the subgroup generated by a rational point of order `p`.
pub fn velu_quotient(e: &Curve, pt: &Point, p: u64, budget: FactorBudget) -> Result<IsogenyData, IsogenyError> {
    velu_quotient_with_support(e, pt, p, None, budget)
}

/// As [`velu_quotient`], with the primes of `Δ(e)` supplied to avoid refactoring.
pub fn velu_quotient_with_support(
    e: &Curve,
    pt: &Point,
    p: u64,
    support: Option<&[u64]>,
    budget: FactorBudget,
) -> Result<IsogenyData, IsogenyError> {
    let psi = kernel_poly_from_point(e, pt, p)?;
    let mut iso = build(e, psi, p, support, budget)?;
    iso.kernel_gen = Some(pt.clone());
    Ok(iso)
}

/// Quotient by the subgroup cut out by a kernel polynomial, after checking
/// that its roots form a rational subgroup of order `p`.
pub fn velu_from_kernel_poly(
    e: &Curve,
    psi: &QPoly,
    p: u64,
    support: Option<&[u64]>,
    budget: FactorBudget,
) -> Result<IsogenyData, IsogenyError> {
    check_kernel_poly(e, psi, p)?;
    build(e, psi.clone(), p, support, budget)
}

fn build(
    e: &Curve,
    psi: QPoly,
    p: u64,
    support: Option<&[u64]>,
    budget: FactorBudget,
) -> Result<IsogenyData, IsogenyError> {
    let n = ((p - 1) / 2) as usize;
    let c = |i: usize| psi.coeff(n.wrapping_sub(i)).clone();
    // ψ = x^n − s1 x^(n−1) + s2 x^(n−2) − s3 x^(n−3) + …
    let s1 = -c(1);
    let s2 = if n >= 2 { c(2) } else { BigRational::zero() };
    let s3 = if n >= 3 { -c(3) } else { BigRational::zero() };
    let (b2, b4, b6) = (int(e.b2()), int(e.b4()), int(e.b6()));
    let nn = rat(n as i64);
    let sq = &s1 * &s1 - rat(2) * &s2;
    let t = rat(6) * &sq + &b2 * &s1 + &nn * &b4;
    let w = rat(10) * (&s1 * &s1 * &s1 - rat(3) * &s1 * &s2 + rat(3) * &s3)
        + rat(2) * &b2 * &sq
        + rat(3) * &b4 * &s1
        + &nn * &b6;
    let a = e.a_invariants().clone().map(|x| int(&x));
    let raw = RationalModel::new([
        a[0].clone(),
        a[1].clone(),
        a[2].clone(),
        &a[3] - rat(5) * &t,
        &a[4] - &b2 * &t - rat(7) * &w,
    ]);
    let (integral, scale) = raw.integralize()?;
    let (codomain, norm) = match support {
        Some(s) => {
            let mut s = s.to_vec();
            s.push(p);
            minimal_model_with_support(&integral, &s, budget)?
        }
        None => minimal_model(&integral, budget)?,
    };
    let to_minimal = scale.then(&norm);

    let big_f = QPoly::new(vec![b6.clone(), rat(2) * &b4, b2.clone(), rat(4)]);
    let big_g = QPoly::new(vec![b4, b2, rat(6)]);
    let d1 = psi.derivative();
    let d2 = d1.derivative();
    let psi2 = psi.pow(2);
    let lin = QPoly::new(vec![rat(-2) * &s1, rat(p as i64)]);
    let x_num = &(&(&lin * &psi2) - &(&big_f * &(&(&psi * &d2) - &d1.pow(2)))) - &(&big_g * &(&psi * &d1));

    Ok(IsogenyData {
        p,
        domain: e.clone(),
        kernel_gen: None,
        kernel_poly: psi,
        codomain,
        raw_codomain: raw,
        to_minimal,
        x_num,
        x_den: psi2,
    })
}

impl IsogenyData {
    /// Image of a point, in the coordinates of the minimal codomain.
    pub fn push_point(&self, q: &Point) -> Result<Point, IsogenyError> {
        if !self.domain.contains(q) {
            return Err(EllipticError::OffCurve.into());
        }
        let raw = self.push_raw(q);
        Ok(self.to_minimal.apply_point(&raw))
    }

    fn push_raw(&self, q: &Point) -> Point {
        let Point::Affine(x, y) = q else { return Point::Infinity };
        let den = self.x_den.eval(x);
        if den.is_zero() {
            return Point::Infinity;
        }
        let num = self.x_num.eval(x);
        let big_x = &num / &den;
        let dnum = self.x_num.derivative().eval(x);
        let dden = self.x_den.derivative().eval(x);
        let dx = (dnum * &den - &num * dden) / (&den * &den);
        let a = &self.raw_codomain.a;
        let (a1, a3) = (&a[0], &a[2]);
        let big_y = (dx * (rat(2) * y + a1 * x + a3) - a1 * &big_x - a3) / rat(2);
        Point::Affine(big_x, big_y)
    }

    /// The x-map `X(x)` on the minimal codomain as `num/den`.
    pub fn x_map(&self) -> (QPoly, QPoly) {
        // x' = (X − r)/u²
        let u2 = &self.to_minimal.u * &self.to_minimal.u;
        let num = (&self.x_num - &self.x_den.scale(&self.to_minimal.r)).scale(&u2.recip());
        (num, self.x_den.clone())
    }

    /// Kernel polynomial of the dual isogeny on the minimal codomain,
    /// checked to cut out a subgroup of order `p`.
    pub fn dual_kernel_poly(&self) -> Result<QPoly, IsogenyError> {
        let g = self.dual_kernel_candidate()?;
        check_kernel_poly(&self.codomain, &g, self.p)
            .map_err(|e| IsogenyError::DualCheck(format!("dual kernel candidate rejected: {e}")))?;
        Ok(g)
    }

    /// Unchecked dual kernel polynomial; callers must validate it.
    ///
    /// Its roots are the images `X(β)` of the non-kernel p-torsion
    /// x-coordinates, each hit by `p` of them; power sums are read off from
    /// traces in `Q[x]/(h)` with `h = f_p / ψ`. The computation runs modulo
    /// word-size primes until the rational reconstruction is stable, falling
    /// back to exact arithmetic if it never is.
    pub(crate) fn dual_kernel_candidate(&self) -> Result<QPoly, IsogenyError> {
        let fp = division_polynomials(&self.domain, self.p as usize).pop().expect("nonempty");
        let h = fp
            .div_exact(&self.kernel_poly)
            .ok_or(IsogenyError::NotTorsion(self.p))?
            .monic();
        let (num, den) = self.x_map();
        match self.dual_kernel_modular(&h, &num, &den) {
            Some(g) => Ok(g),
            None => self.dual_kernel_exact(&h, &num, &den),
        }
    }

    fn dual_kernel_modular(&self, h: &QPoly, num: &QPoly, den: &QPoly) -> Option<QPoly> {
        const MAX_PRIMES: usize = 96;
        let n = ((self.p - 1) / 2) as usize;
        let mut acc = CrtVector::new(n + 1);
        let mut last: Option<Vec<BigRational>> = None;
        let mut used = 0;
        for &q in big_primes() {
            if used == MAX_PRIMES {
                break;
            }
            let Some(g) = dual_kernel_mod(Fq { q }, self.p, h, num, den) else { continue };
            acc.push(q, &g);
            used += 1;
            let rec = acc.reconstruct();
            if rec.is_some() && rec == last {
                return rec.map(QPoly::new);
            }
            last = rec;
        }
        None
    }

    fn dual_kernel_exact(&self, h: &QPoly, num: &QPoly, den: &QPoly) -> Result<QPoly, IsogenyError> {
        let p = self.p;
        let n = ((p - 1) / 2) as usize;
        let den_inv = den
            .inverse_mod(h)
            .ok_or_else(|| IsogenyError::DualCheck("kernel and non-kernel x-coordinates meet".into()))?;
        let z = (num * &den_inv).rem(h);
        let hdeg = h.degree().expect("nonzero");
        let root_sums = h.power_sums(hdeg);
        let trace = |g: &QPoly| -> BigRational {
            g.coeffs()
                .iter()
                .enumerate()
                .map(|(i, c)| if i == 0 { c * rat(hdeg as i64) } else { c * &root_sums[i - 1] })
                .fold(BigRational::zero(), |acc, v| acc + v)
        };
        let mut sums = Vec::with_capacity(n);
        let mut zj = QPoly::one();
        for _ in 0..n {
            zj = (&zj * &z).rem(h);
            sums.push(trace(&zj) / rat(p as i64));
        }
        Ok(QPoly::from_power_sums(n, &sums))
    }

    /// The dual isogeny `E' → E`, verified to land on the minimal model of
    /// the domain.
    pub fn dual(&self, support: Option<&[u64]>, budget: FactorBudget) -> Result<IsogenyData, IsogenyError> {
        let g = self.dual_kernel_candidate()?;
        let dual = velu_from_kernel_poly(&self.codomain, &g, self.p, support, budget)
            .map_err(|e| IsogenyError::DualCheck(e.to_string()))?;
        let (dom_min, _) = match support {
            Some(s) => minimal_model_with_support(&self.domain, s, budget)?,
            None => minimal_model(&self.domain, budget)?,
        };
        if dual.codomain != dom_min {
            return Err(IsogenyError::DualCheck(format!(
                "dual codomain {} differs from {}",
                dual.codomain, dom_min
            )));
        }
        Ok(dual)
    }
}

/// The dual kernel polynomial modulo `q`, or `None` when `q` divides a
/// denominator or makes the kernel and non-kernel roots collide.
fn dual_kernel_mod(fq: Fq, p: u64, h: &QPoly, num: &QPoly, den: &QPoly) -> Option<Vec<u64>> {
    let n = ((p - 1) / 2) as usize;
    let hm = fq.poly(h)?;
    if hm.len() != h.coeffs().len() {
        return None;
    }
    let numm = fq.poly(num)?;
    let denm = fq.poly(den)?;
    let z = fq.poly_rem(&fq.poly_mul(&numm, &fq.poly_inverse_mod(&denm, &hm)?), &hm);
    let hdeg = hm.len() - 1;
    let root_sums = fq.power_sums(&hm, hdeg);
    let p_inv = fq.inv(p % fq.q);
    let mut sums = Vec::with_capacity(n);
    let mut zj = vec![1u64];
    for _ in 0..n {
        zj = fq.poly_rem(&fq.poly_mul(&zj, &z), &hm);
        let mut tr = 0;
        for (i, &c) in zj.iter().enumerate() {
            let s = if i == 0 { hdeg as u64 % fq.q } else { root_sums[i - 1] };
            tr = fq.add(tr, fq.mul(c, s));
        }
        sums.push(fq.mul(tr, p_inv));
    }
    Some(fq.poly_from_power_sums(n, &sums))
}

/// Rewrites a kernel polynomial into new coordinates: roots map by
/// `x ↦ (x − r)/u²`.
pub fn transform_kernel_poly(psi: &QPoly, tr: &Transform) -> QPoly {
    // new(x') ∝ ψ(u² x' + r)
    let u2 = &tr.u * &tr.u;
    let inner = QPoly::new(vec![tr.r.clone(), u2]);
    psi.compose(&inner).monic()
}

/// A rational point generating the kernel, if one exists.
pub fn rational_kernel_point(e: &Curve, psi: &QPoly, p: u64, budget: FactorBudget) -> Result<Option<Point>, Incomplete> {
    let [a1, a2, a3, a4, a6] = e.a_invariants().clone().map(|c| int(&c));
    for x in psi.rational_roots(budget)? {
        // y² + (a1 x + a3) y − (x³ + a2 x² + a4 x + a6) = 0
        let b = &a1 * &x + &a3;
        let c = -(&x * &x * &x + &a2 * &x * &x + &a4 * &x + &a6);
        let disc = &b * &b - rat(4) * &c;
        if disc.is_negative() {
            continue;
        }
        let (Some(rn), Some(rd)) = (exact_sqrt(disc.numer()), exact_sqrt(disc.denom())) else {
            continue;
        };
        let y = (-&b + BigRational::new(rn, rd)) / rat(2);
        let pt = Point::Affine(x, y);
        if e.has_order(&pt, p) {
            return Ok(Some(pt));
        }
    }
    Ok(None)
}

fn exact_sqrt(n: &BigInt) -> Option<BigInt> {
    if n.is_negative() {
        return None;
    }
    let r = n.sqrt();
    (&r * &r == *n).then_some(r)
}
