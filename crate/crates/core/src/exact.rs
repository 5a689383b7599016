//! Exact rational arithmetic helpers.
//!
//! All classical probabilities in this crate are `BigRational` values, so
//! statements like "the worst-case error equals 1/3" are checked as exact
//! equalities rather than within a floating-point tolerance. Rationals
//! serialize as `"num/den"` strings; the string form is authoritative and a
//! float field is only ever a convenience.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact rational number used for every classical probability.
pub type Rat = BigRational;

/// Rational from an integer.
pub fn rat_int(v: i64) -> Rat {
    Rat::from_integer(BigInt::from(v))
}

/// Rational from unsigned counts (the common case in enumeration code).
pub fn rat_u(num: u64, den: u64) -> Rat {
    assert!(den != 0, "zero denominator");
    Rat::new(BigInt::from(num), BigInt::from(den))
}

/// Rational `num/den`.
pub fn rat(num: i64, den: i64) -> Rat {
    assert!(den != 0, "zero denominator");
    Rat::new(BigInt::from(num), BigInt::from(den))
}

pub fn rat_zero() -> Rat {
    Rat::zero()
}

pub fn rat_one() -> Rat {
    Rat::one()
}

/// Canonical `"num/den"` form, always with an explicit denominator.
pub fn format_rat(r: &Rat) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parse `"num/den"` or a bare integer string.
pub fn parse_rat(s: &str) -> Result<Rat> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let num: BigInt = num
        .parse()
        .map_err(|_| Error::Parse(format!("bad rational numerator in {s:?}")))?;
    let den: BigInt = den
        .parse()
        .map_err(|_| Error::Parse(format!("bad rational denominator in {s:?}")))?;
    if den.is_zero() {
        return Err(Error::Parse(format!("zero denominator in {s:?}")));
    }
    Ok(Rat::new(num, den))
}

/// Nearest double, for report convenience fields only.
pub fn rat_to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

pub fn is_probability(r: &Rat) -> bool {
    !r.is_negative() && *r <= Rat::one()
}

/// Serde adapter: a single rational as a `"num/den"` string.
pub mod rat_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    use super::{format_rat, parse_rat, Rat};

    pub fn serialize<S: Serializer>(r: &Rat, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rat(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rat, D::Error> {
        let raw = String::deserialize(d)?;
        parse_rat(&raw).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter: a vector of rationals.
pub mod rat_vec_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    use super::{format_rat, parse_rat, Rat};

    pub fn serialize<S: Serializer>(v: &[Rat], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|r| format_rat(r)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rat>, D::Error> {
        let raw = Vec::<String>::deserialize(d)?;
        raw.iter()
            .map(|s| parse_rat(s).map_err(serde::de::Error::custom))
            .collect()
    }
}

/// Serde adapter: a row-major matrix of rationals.
pub mod rat_mat_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    use super::{format_rat, parse_rat, Rat};

    pub fn serialize<S: Serializer>(m: &[Vec<Rat>], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(
            m.iter()
                .map(|row| row.iter().map(|r| format_rat(r)).collect::<Vec<_>>()),
        )
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<Rat>>, D::Error> {
        let raw = Vec::<Vec<String>>::deserialize(d)?;
        raw.iter()
            .map(|row| {
                row.iter()
                    .map(|s| parse_rat(s).map_err(serde::de::Error::custom))
                    .collect()
            })
            .collect()
    }
}

/// Serde adapter: a matrix of rationals nested one level deeper (per-key tables).
pub mod rat_tables_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    use super::{format_rat, parse_rat, Rat};

    #[allow(clippy::ptr_arg)]
    pub fn serialize<S: Serializer>(t: &Vec<Vec<Vec<Rat>>>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(t.iter().map(|table| {
            table
                .iter()
                .map(|row| row.iter().map(|r| format_rat(r)).collect::<Vec<_>>())
                .collect::<Vec<_>>()
        }))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<Vec<Rat>>>, D::Error> {
        let raw = Vec::<Vec<Vec<String>>>::deserialize(d)?;
        raw.iter()
            .map(|table| {
                table
                    .iter()
                    .map(|row| {
                        row.iter()
                            .map(|s| parse_rat(s).map_err(serde::de::Error::custom))
                            .collect()
                    })
                    .collect()
            })
            .collect()
    }
}
