//! JSON encodings shared by the library and the CLI.
//!
//! Integers and rationals travel as decimal strings. Plain JSON integers are
//! accepted on input for convenience.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde_json::Value;
use thiserror::Error;

use crate::elliptic::{Curve, EllipticError, Point};
use crate::poly::QPoly;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error("{what}: expected {expected}")]
    Shape { what: &'static str, expected: &'static str },
    #[error("{what}: cannot parse {text:?} as {kind}")]
    Number { what: &'static str, text: String, kind: &'static str },
    #[error("{what}: zero denominator in {text:?}")]
    ZeroDenominator { what: &'static str, text: String },
    #[error("curve: {0}")]
    Curve(#[from] EllipticError),
}

pub fn parse_integer(s: &str) -> Result<BigInt, FormatError> {
    let t = s.trim();
    let t = t.strip_prefix('+').unwrap_or(t);
    t.parse::<BigInt>().map_err(|_| FormatError::Number {
        what: "integer",
        text: s.to_string(),
        kind: "an integer",
    })
}

/// Accepts `n` or `n/d`.
pub fn parse_rational(s: &str) -> Result<BigRational, FormatError> {
    let num_err = || FormatError::Number { what: "rational", text: s.to_string(), kind: "a rational" };
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (parse_integer(n).map_err(|_| num_err())?, parse_integer(d).map_err(|_| num_err())?),
        None => (parse_integer(s).map_err(|_| num_err())?, BigInt::from(1)),
    };
    if d.is_zero() {
        return Err(FormatError::ZeroDenominator { what: "rational", text: s.to_string() });
    }
    Ok(BigRational::new(n, d))
}

fn scalar_text(v: &Value, what: &'static str) -> Result<String, FormatError> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) if n.is_i64() || n.is_u64() => Ok(n.to_string()),
        _ => Err(FormatError::Shape { what, expected: "a decimal string or integer" }),
    }
}

pub fn curve_from_json(v: &Value) -> Result<Curve, FormatError> {
    let arr = v
        .as_array()
        .filter(|a| a.len() == 5)
        .ok_or(FormatError::Shape { what: "curve", expected: "an array [a1,a2,a3,a4,a6]" })?;
    let mut a: [BigInt; 5] = Default::default();
    for (slot, item) in a.iter_mut().zip(arr) {
        let text = scalar_text(item, "curve")?;
        *slot = parse_integer(&text).map_err(|_| FormatError::Number {
            what: "curve",
            text,
            kind: "an integer coefficient",
        })?;
    }
    Ok(Curve::new(a)?)
}

pub fn curve_from_str(s: &str) -> Result<Curve, FormatError> {
    let v: Value = serde_json::from_str(s).map_err(|e| FormatError::Json(e.to_string()))?;
    curve_from_json(&v)
}

pub fn point_from_json(v: &Value) -> Result<Point, FormatError> {
    if v.as_str() == Some("O") {
        return Ok(Point::Infinity);
    }
    let arr = v
        .as_array()
        .filter(|a| a.len() == 2)
        .ok_or(FormatError::Shape { what: "point", expected: "\"O\" or an array [x, y]" })?;
    let x = parse_rational(&scalar_text(&arr[0], "point")?)?;
    let y = parse_rational(&scalar_text(&arr[1], "point")?)?;
    Ok(Point::Affine(x, y))
}

pub fn point_from_str(s: &str) -> Result<Point, FormatError> {
    let v: Value = serde_json::from_str(s).map_err(|e| FormatError::Json(e.to_string()))?;
    point_from_json(&v)
}

pub fn point_to_json(p: &Point) -> Value {
    match p {
        Point::Infinity => Value::String("O".to_string()),
        Point::Affine(x, y) => Value::Array(vec![
            Value::String(rational_to_string(x)),
            Value::String(rational_to_string(y)),
        ]),
    }
}

/// Always `n/d` form, so points keep one shape on output.
pub fn rational_to_string(x: &BigRational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// Polynomial as a coefficient array, constant term first.
pub fn poly_from_json(v: &Value) -> Result<QPoly, FormatError> {
    let arr = v
        .as_array()
        .filter(|a| !a.is_empty())
        .ok_or(FormatError::Shape { what: "polynomial", expected: "a nonempty coefficient array" })?;
    let coeffs = arr
        .iter()
        .map(|c| parse_rational(&scalar_text(c, "polynomial")?))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(QPoly::new(coeffs))
}

pub fn poly_from_str(s: &str) -> Result<QPoly, FormatError> {
    let v: Value = serde_json::from_str(s).map_err(|e| FormatError::Json(e.to_string()))?;
    poly_from_json(&v)
}

pub fn poly_to_json(f: &QPoly) -> Value {
    Value::Array(f.coeffs().iter().map(|c| Value::String(c.to_string())).collect())
}

/// Serde adapter for `QPoly` fields.
pub mod qpoly_serde {
    use super::*;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(f: &QPoly, s: S) -> Result<S::Ok, S::Error> {
        poly_to_json(f).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<QPoly, D::Error> {
        let v = Value::deserialize(d)?;
        poly_from_json(&v).map_err(serde::de::Error::custom)
    }
}
