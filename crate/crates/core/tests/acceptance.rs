//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs without the libtest harness so the lines always print.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use shabound_core::arith::{is_prime_u64, FactorBudget, ResidueCharacter};
use shabound_core::bounds::{cassels_interval, selmer_interval, sha_from_sum, theorem_budget, FieldInvariants};
use shabound_core::descent::{m_rank, sandwich_for_sets};
use shabound_core::elliptic::{Curve, Point};
use shabound_core::pipeline::analyze;
use shabound_core::search::{construct_parameter, scan, FamilySpec, SearchConstraints, SearchReport};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn primes_below(n: u64) -> Vec<u64> {
    (2..n).filter(|&q| is_prime_u64(q)).collect()
}

fn pow_mod(mut a: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    a %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * a % m;
        }
        a = a * a % m;
        e >>= 1;
    }
    acc
}

/// Least primitive root by computing multiplicative orders directly.
fn least_primitive_root(ell: u64) -> u64 {
    (2..ell)
        .find(|&r| {
            let (mut x, mut k) = (r, 1u64);
            while x != 1 {
                x = x * r % ell;
                k += 1;
            }
            k == ell - 1
        })
        .unwrap()
}

/// The subgroup of p-th powers in (Z/ℓ)^*, as a membership table.
fn pth_powers(ell: u64, p: u64) -> Vec<bool> {
    let mut table = vec![false; ell as usize];
    for x in 1..ell {
        table[pow_mod(x, p, ell) as usize] = true;
    }
    table
}

// 1: the construction chain over the full parameter grid.
fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut cases = 0u32;
    for p in [5u64, 7, 11, 13] {
        for k in 1..=20u64 {
            for n in 1..=10u64 {
                for deg_h in 1..=50u64 {
                    let b = theorem_budget(p, k, n, deg_h).map_err(|e| format!("({p},{k},{n},{deg_h}): {e}"))?;
                    ensure!(b.sha_guarantee >= k as i64, "guarantee {} < k at ({p},{k},{n},{deg_h})", b.sha_guarantee);
                    ensure!(b.guarantee_at(b.d_max) == k as i64, "no equality at d_max for ({p},{k},{n},{deg_h})");
                    cases += 1;
                }
            }
        }
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!("{cases} cases in {elapsed:?}"))
}

// 2: the conductor-11 fixture end to end.
fn criterion_2() -> Outcome {
    let start = Instant::now();
    let e = Curve::from_i64([0, -1, 1, 0, 0]).unwrap();
    let r = analyze(&e, &Point::from_i64(0, 0), 5, None, None, FactorBudget::default()).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure!(r.codomain_discriminant == BigInt::from(-161_051), "codomain Δ {}", r.codomain_discriminant);
    ensure!(r.sets.s1.is_empty() && r.sets.s2 == [11] && r.sets.s3 == [5], "sets {:?}", r.sets.signature());
    ensure!(r.m_phi == 0 && r.m_phihat == 0, "m = ({}, {})", r.m_phi, r.m_phihat);
    let dims = |s: &shabound_core::descent::SandwichResult| (s.lower_dim, s.upper_dim);
    ensure!(dims(&r.sandwich_phi) == (0, 0), "phi sandwich {:?}", dims(&r.sandwich_phi));
    ensure!(dims(&r.sandwich_phihat) == (0, 2), "dual sandwich {:?}", dims(&r.sandwich_phihat));
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!("exact values in {elapsed:?}"))
}

// 3: S1 and S2 swap under the dual on every scanned fiber.
fn criterion_3(report: &SearchReport) -> Outcome {
    let mut analyzed = 0;
    for row in &report.rows {
        let a = row.analysis.as_ref().ok_or_else(|| format!("b = {}: {:?}", row.b, row.error))?;
        ensure!(a.dual_swap, "dual swap fails at b = {}", row.b);
        analyzed += 1;
    }
    ensure!(analyzed >= 1000, "only {analyzed} fibers");
    Ok(format!("{analyzed} fibers, {} degenerate, {} incomplete", report.degenerate, report.incomplete))
}

// 4: both classifiers agree on every split multiplicative prime.
fn criterion_4(report: &SearchReport) -> Outcome {
    let mut primes = 0;
    for row in &report.rows {
        let a = row.analysis.as_ref().ok_or_else(|| format!("b = {}: {:?}", row.b, row.error))?;
        ensure!(a.classifier_agreement, "classifiers disagree at b = {}", row.b);
        primes += a.s1.len() + a.s2.len();
    }
    ensure!(report.rows.len() >= 1000, "only {} fibers", report.rows.len());
    Ok(format!("{primes} classified primes over {} fibers", report.rows.len()))
}

// 5: character values and matrix ranks against enumeration.
fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let primes = primes_below(10_000);
    let mut instances = 0;
    for _ in 0..1200 {
        let p = *[5u64, 7].choose(&mut rng).unwrap();
        let ones: Vec<u64> = primes.iter().copied().filter(|&l| l % p == 1).collect();
        let s2_len = rng.gen_range(0..=3);
        let mut s2: Vec<u64> = ones.choose_multiple(&mut rng, s2_len).copied().collect();
        s2.sort_unstable();
        let s1_len = rng.gen_range(0..=4);
        let pool: Vec<u64> = primes.iter().copied().filter(|q| *q != p && !s2.contains(q)).collect();
        let s1: Vec<u64> = pool.choose_multiple(&mut rng, s1_len).copied().collect();

        let tables: Vec<Vec<bool>> = s2.iter().map(|&l| pth_powers(l, p)).collect();
        // character oracle: χ(a) = x iff a·r^(−x) is a p-th power
        for (&ell, table) in s2.iter().zip(&tables) {
            let chi = ResidueCharacter::new(ell, p).map_err(|e| e.to_string())?;
            let r_inv = pow_mod(least_primitive_root(ell), ell - 2, ell);
            for &q in &s1 {
                let x = (0..p).find(|&x| table[(q % ell * pow_mod(r_inv, x, ell) % ell) as usize]);
                let got = chi.eval_u64(q).map_err(|e| e.to_string())?;
                ensure!(x == Some(got), "χ_{ell}({q}) = {got}, oracle {x:?} (p = {p})");
            }
        }
        // rank oracle: count exponent vectors whose product is a p-th power at every ℓ
        let mut kernel = 0u64;
        let total = p.pow(s1.len() as u32);
        for idx in 0..total {
            let exps: Vec<u64> = (0..s1.len()).map(|j| idx / p.pow(j as u32) % p).collect();
            let in_kernel = s2.iter().zip(&tables).all(|(&ell, table)| {
                let prod = s1.iter().zip(&exps).fold(1u64, |acc, (&q, &e)| acc * pow_mod(q, e, ell) % ell);
                table[prod as usize]
            });
            if in_kernel {
                kernel += 1;
            }
        }
        let m = m_rank(p, &s1, &s2).map_err(|e| e.to_string())?;
        ensure!(
            kernel == p.pow((s1.len() - m) as u32),
            "p = {p}, S1 = {s1:?}, S2 = {s2:?}: rank {m}, kernel {kernel}"
        );
        instances += 1;
    }
    Ok(format!("{instances} instances"))
}

// 6: sandwich ordering and monotonicity in S2.
fn criterion_6(report: &SearchReport) -> Outcome {
    for row in &report.rows {
        if let Some(a) = &row.analysis {
            for (lo, up) in [a.sandwich_phi, a.sandwich_phihat] {
                ensure!(lo <= up, "lower {lo} > upper {up} at b = {}", row.b);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let primes = primes_below(5_000);
    let mut chains = 0;
    for _ in 0..150 {
        let p = *[5u64, 7].choose(&mut rng).unwrap();
        let pool: Vec<u64> = primes.iter().copied().filter(|&q| q != p).collect();
        let picks: Vec<u64> = pool.choose_multiple(&mut rng, 10).copied().collect();
        let (s1, extra) = picks.split_at(rng.gen_range(1..=4));
        // bias the S2 pool towards ℓ ≡ 1 mod p, where rows actually appear
        let mut chain: Vec<u64> = extra.to_vec();
        let ones: Vec<u64> =
            pool.iter().copied().filter(|q| q % p == 1 && !picks.contains(q)).collect();
        chain.extend(ones.choose_multiple(&mut rng, 4));
        chain.shuffle(&mut rng);

        let mut prev = sandwich_for_sets(p, s1, &[]).map_err(|e| e.to_string())?;
        for i in 1..=chain.len() {
            let cur = sandwich_for_sets(p, s1, &chain[..i]).map_err(|e| e.to_string())?;
            ensure!(cur.lower_dim <= cur.upper_dim, "ordering fails for S1 = {s1:?}");
            ensure!(cur.upper_dim <= prev.upper_dim, "upper grows: S1 = {s1:?}, S2 = {:?}", &chain[..i]);
            prev = cur;
        }
        chains += 1;
    }
    Ok(format!("{} scanned curves, {chains} chains", report.rows.len()))
}

// 7: interval ordering, Cassels width and monotonicity on a random grid.
fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut points = 0;
    for _ in 0..100_000 {
        let d = 2 * rng.gen_range(1..=25u64);
        let f = FieldInvariants::new(d, rng.gen_range(0..=6), true, true).map_err(|e| e.to_string())?;
        let di = d as i64;
        let s1 = rng.gen_range(0..=60i64);
        let s2 = rng.gen_range(0..=60i64);
        let m = rng.gen_range(0..=s2 + 2 * di);
        let (lo, up) = selmer_interval(&f, s1, s2, m).map_err(|e| e.to_string())?;
        ensure!(lo <= up, "selmer interval ({lo}, {up}) at d={d} s1={s1} s2={s2} m={m}");
        let dim_phi = rng.gen_range(0..=120i64);
        let (clo, cup) = cassels_interval(&f, s1, s2, dim_phi).map_err(|e| e.to_string())?;
        ensure!(cup - clo == 2 * (2 * di + 1), "cassels width {} at d={d}", cup - clo);
        let sum = rng.gen_range(0..=200i64);
        let r = rng.gen_range(0..=50i64);
        let base = sha_from_sum(sum, r).map_err(|e| e.to_string())?;
        ensure!(sha_from_sum(sum + 1, r).unwrap() >= base, "not increasing in sum at ({sum},{r})");
        ensure!(sha_from_sum(sum, r + 1).unwrap() <= base, "not decreasing in r at ({sum},{r})");
        points += 1;
    }
    Ok(format!("{points} grid points"))
}

// 8: the CRT construction for forced primes 41 and 11.
fn criterion_8() -> Outcome {
    let c = SearchConstraints { force_s1: vec![41], force_s2: vec![11], scan_budget: Some(3), ..Default::default() };
    let fam = FamilySpec::new(5).map_err(|e| e.to_string())?;
    let k = construct_parameter(&fam, &c).map_err(|e| e.to_string())?;
    ensure!(k.base == BigInt::from(287), "base {}", k.base);
    // least nonnegative solution of the same residue system, by enumeration
    let residues: Vec<(u64, u64)> = k
        .congruences
        .iter()
        .map(|g| (g.ell, g.residue))
        .collect();
    let least = (0u64..).find(|b| residues.iter().all(|&(l, r)| b % l == r)).unwrap();
    ensure!(least == 287, "enumeration finds {least}");
    let report = scan(&c, Some(1), FactorBudget::default()).map_err(|e| e.to_string())?;
    let row = report.row(287).ok_or("b = 287 missing from the report")?;
    let disc = row.curve.discriminant();
    for q in [41u32, 11] {
        ensure!(disc % q == BigInt::from(0), "{q} does not divide Δ = {disc}");
    }
    ensure!(row.forcing_ok, "forced primes did not land: {:?}", row.forcing);
    Ok(format!("b = 287, Δ_min = {disc}"))
}

// 9: the scan JSON does not depend on the worker count.
fn criterion_9(one: &str) -> Outcome {
    let two = scan(&SearchConstraints::default(), Some(2), FactorBudget::default()).map_err(|e| e.to_string())?;
    let two = serde_json::to_string(&two).unwrap();
    ensure!(one == two, "outputs differ ({} vs {} bytes)", one.len(), two.len());
    Ok(format!("{} bytes identical across 1 and 2 workers", one.len()))
}

fn report(n: u32, name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
        Err(format!("panic: {}", msg.unwrap_or_default()))
    });
    let secs = start.elapsed().as_secs_f64();
    match outcome {
        Ok(detail) => {
            println!("PASS criterion {n} ({name}): {detail} [{secs:.2}s]");
            true
        }
        Err(why) => {
            println!("FAIL criterion {n} ({name}): {why} [{secs:.2}s]");
            false
        }
    }
}

fn main() {
    let mut ok = true;
    ok &= report(1, "budget chain", criterion_1);
    ok &= report(2, "conductor 11 fixture", criterion_2);

    let t = Instant::now();
    let scanned = scan(&SearchConstraints::default(), Some(1), FactorBudget::default());
    println!("default scan finished in {:.1}s", t.elapsed().as_secs_f64());
    match &scanned {
        Ok(r) => {
            ok &= report(3, "dual swap", || criterion_3(r));
            ok &= report(4, "classifier agreement", || criterion_4(r));
        }
        Err(e) => {
            for (n, name) in [(3, "dual swap"), (4, "classifier agreement")] {
                println!("FAIL criterion {n} ({name}): scan failed: {e}");
            }
            ok = false;
        }
    }
    ok &= report(5, "character and rank oracles", criterion_5);
    match &scanned {
        Ok(r) => ok &= report(6, "sandwich soundness", || criterion_6(r)),
        Err(e) => {
            println!("FAIL criterion 6 (sandwich soundness): scan failed: {e}");
            ok = false;
        }
    }
    ok &= report(7, "bound grid", criterion_7);
    ok &= report(8, "forced construction", criterion_8);
    match &scanned {
        Ok(r) => {
            let one = serde_json::to_string(r).unwrap();
            ok &= report(9, "determinism", || criterion_9(&one));
        }
        Err(e) => {
            println!("FAIL criterion 9 (determinism): scan failed: {e}");
            ok = false;
        }
    }
    if !ok {
        std::process::exit(1);
    }
}
