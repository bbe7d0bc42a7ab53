//! Descent invariants for rational p-isogenies of elliptic curves over Q.
//!
//! Given a curve with a rational point of odd prime order `p`, the crate
//! classifies split multiplicative primes by where the kernel point reduces,
//! builds the power-residue character matrix between the two prime sets,
//! brackets the isogeny Selmer group between two explicitly computable
//! subgroups of `Q^*/Q^{*p}`, and evaluates the Selmer, rank and
//! Tate-Shafarevich bound formulas that follow from those invariants. A
//! search module scans Tate normal form families for curves whose invariants
//! make those bounds large.

pub mod arith;
pub mod bounds;
pub mod descent;
pub mod elliptic;
pub mod formats;
pub mod fp_linalg;
pub mod isogeny;
mod modpoly;
pub mod pipeline;
pub mod poly;
pub mod search;
