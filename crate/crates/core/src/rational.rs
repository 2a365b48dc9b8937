//! Exact rational scalars and the comma-separated text format used for
//! lotteries and vectors.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Arbitrary precision rational, always in lowest terms with a positive
/// denominator.
pub type Rational = BigRational;

pub fn rat(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn int(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

pub fn zero() -> Rational {
    Rational::zero()
}

pub fn one() -> Rational {
    Rational::one()
}

/// Parses a single rational such as `-3`, `1/3` or `0`. `offset` is added to
/// error positions so that callers can report positions in a larger string.
pub fn parse_rational_at(text: &str, offset: usize) -> Result<Rational> {
    let lead = text.len() - text.trim_start().len();
    let body = text.trim();
    if body.is_empty() {
        return Err(Error::Parse {
            position: offset,
            message: "empty number".into(),
        });
    }
    let bad = |pos: usize, msg: &str| Error::Parse {
        position: offset + lead + pos,
        message: msg.to_string(),
    };
    let (num_txt, den_txt, slash) = match body.find('/') {
        Some(i) => (&body[..i], Some(&body[i + 1..]), i),
        None => (body, None, body.len()),
    };
    let parse_int = |s: &str, at: usize| -> Result<BigInt> {
        let s_trim = s.trim();
        if s_trim.is_empty() {
            return Err(bad(at, "missing integer"));
        }
        for (i, ch) in s_trim.char_indices() {
            let ok = ch.is_ascii_digit() || (i == 0 && (ch == '-' || ch == '+'));
            if !ok {
                return Err(bad(at + i, &format!("unexpected character {ch:?}")));
            }
        }
        s_trim
            .parse::<BigInt>()
            .map_err(|_| bad(at, "invalid integer"))
    };
    let numer = parse_int(num_txt, 0)?;
    let denom = match den_txt {
        Some(d) => parse_int(d, slash + 1)?,
        None => BigInt::one(),
    };
    if denom.is_zero() {
        return Err(bad(slash + 1, "zero denominator"));
    }
    Ok(Rational::new(numer, denom))
}

pub fn parse_rational(text: &str) -> Result<Rational> {
    parse_rational_at(text, 0)
}

/// Parses `"0,1/3,1/3"` into a vector of rationals.
pub fn parse_vector(text: &str) -> Result<Vec<Rational>> {
    let mut out = Vec::new();
    let mut start = 0usize;
    for piece in text.split(',') {
        out.push(parse_rational_at(piece, start)?);
        start += piece.len() + 1;
    }
    Ok(out)
}

pub fn format_vector(values: &[Rational]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

pub fn is_nonnegative(value: &Rational) -> bool {
    !value.is_negative()
}

/// Least common multiple of the denominators.
pub fn common_denominator<'a>(values: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    use num_integer::Integer;
    values
        .into_iter()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

/// Serializes rationals as their `a/b` strings.
pub fn serialize_rationals<S: serde::Serializer>(values: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(values.iter().map(|v| v.to_string()))
}

pub fn serialize_rational<S: serde::Serializer>(value: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&value.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_formats() {
        let v = parse_vector("0,1/3, 2/6 ,-1").unwrap();
        assert_eq!(v, vec![zero(), rat(1, 3), rat(1, 3), int(-1)]);
        assert_eq!(format_vector(&v), "0,1/3,1/3,-1");
    }

    #[test]
    fn reports_positions() {
        match parse_vector("1/3,1/x") {
            Err(Error::Parse { position, .. }) => assert_eq!(position, 6),
            other => panic!("unexpected {other:?}"),
        }
        match parse_vector("1/3,,1") {
            Err(Error::Parse { position, .. }) => assert_eq!(position, 4),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_rational("1/0"), Err(Error::Parse { .. })));
    }
}
