//! Exact rational helpers and the `[num, den]` JSON encoding.

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Always-reduced exact rational with positive denominator.
pub type Rational = Ratio<i64>;

/// Shorthand constructor; panics on a zero denominator.
pub fn rat(num: i64, den: i64) -> Rational {
    Ratio::new(num, den)
}

pub fn int(n: i64) -> Rational {
    Ratio::from_integer(n)
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

pub fn floor(r: &Rational) -> i64 {
    r.floor().to_integer()
}

pub fn max(a: Rational, b: Rational) -> Rational {
    if a >= b {
        a
    } else {
        b
    }
}

pub fn min(a: Rational, b: Rational) -> Rational {
    if a <= b {
        a
    } else {
        b
    }
}

/// Clamp negatives to zero.
pub fn pos(r: Rational) -> Rational {
    if r < Rational::zero() {
        Rational::zero()
    } else {
        r
    }
}

/// Parse `"a/b"`, `"a"` or a decimal such as `"0.25"`.
pub fn parse(s: &str) -> Option<Rational> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: i64 = n.trim().parse().ok()?;
        let d: i64 = d.trim().parse().ok()?;
        if d == 0 {
            return None;
        }
        return Some(rat(n, d));
    }
    if let Some((ip, fp)) = s.split_once('.') {
        if fp.is_empty() || !fp.bytes().all(|b| b.is_ascii_digit()) || fp.len() > 15 {
            return None;
        }
        let neg = ip.starts_with('-');
        let ip: i64 = if ip.is_empty() || ip == "-" { 0 } else { ip.parse().ok()? };
        let den = 10i64.pow(fp.len() as u32);
        let frac: i64 = fp.parse().ok()?;
        let mag = ip.abs() * den + frac;
        return Some(rat(if neg { -mag } else { mag }, den));
    }
    s.parse::<i64>().ok().map(int)
}

/// Serde adapter: a rational as a two-element array `[num, den]`.
pub mod pair {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        [*r.numer(), *r.denom()].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let [n, den] = <[i64; 2]>::deserialize(d)?;
        if den == 0 {
            return Err(serde::de::Error::custom("zero denominator"));
        }
        Ok(rat(n, den))
    }
}

/// Serde adapter for `Vec<Rational>` as `[[num, den], ...]`.
pub mod pair_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<[i64; 2]> = v.iter().map(|r| [*r.numer(), *r.denom()]).collect();
        pairs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        let pairs = <Vec<[i64; 2]>>::deserialize(d)?;
        pairs
            .into_iter()
            .map(|[n, den]| {
                if den == 0 {
                    Err(serde::de::Error::custom("zero denominator"))
                } else {
                    Ok(rat(n, den))
                }
            })
            .collect()
    }
}

/// Rational grid `0, step, 2·step, …` up to and including `hi`.
pub fn grid(lo: Rational, hi: Rational, step: Rational) -> Vec<Rational> {
    assert!(step > Rational::zero());
    let mut out = Vec::new();
    let mut x = lo;
    while x <= hi {
        out.push(x);
        x += step;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_forms() {
        assert_eq!(parse("3/6"), Some(rat(1, 2)));
        assert_eq!(parse("2"), Some(int(2)));
        assert_eq!(parse("0.25"), Some(rat(1, 4)));
        assert_eq!(parse("-1.5"), Some(rat(-3, 2)));
        assert_eq!(parse("1/0"), None);
        assert_eq!(parse("x"), None);
    }

    #[test]
    fn grid_is_inclusive() {
        let g = grid(int(0), int(1), rat(1, 4));
        assert_eq!(g.len(), 5);
        assert_eq!(*g.last().unwrap(), int(1));
    }
}
