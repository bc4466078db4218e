//! Exact affine maps `t ↦ slope·t + offset` over 64-bit rationals.

use std::fmt;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

pub type Q = Ratio<i64>;

pub fn q(num: i64, den: i64) -> Q {
    Ratio::new(num, den)
}

pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Parses "p/q", "p" or a short decimal such as "0.25".
pub fn parse_q(s: &str) -> Option<Q> {
    let s = s.trim();
    if let Ok(r) = s.parse::<Q>() {
        return Some(r);
    }
    let (int, frac) = s.split_once('.')?;
    let neg = int.starts_with('-');
    let digits = format!("{}{}", int.trim_start_matches('-'), frac);
    let num: i64 = digits.parse().ok()?;
    let den = 10i64.checked_pow(frac.len() as u32)?;
    let r = Ratio::new(num, den);
    Some(if neg { -r } else { r })
}

pub fn fmt_q(x: &Q) -> String {
    if x.is_integer() {
        format!("{}", x.numer())
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Serde adapter storing a rational as the string "p/q".
pub mod ratio_str {
    use super::*;
    use serde::{de, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Q, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_q(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Q, D::Error> {
        let s = String::deserialize(d)?;
        parse_q(&s).ok_or_else(|| de::Error::custom(format!("not a rational: {s}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Affine {
    #[serde(with = "ratio_str")]
    pub slope: Q,
    #[serde(with = "ratio_str")]
    pub offset: Q,
}

impl Affine {
    pub fn new(slope: Q, offset: Q) -> Self {
        Affine { slope, offset }
    }

    pub fn identity() -> Self {
        Affine::new(Q::one(), Q::zero())
    }

    pub fn eval(&self, t: f64) -> f64 {
        to_f64(&self.slope) * t + to_f64(&self.offset)
    }

    pub fn eval_exact(&self, t: Q) -> Q {
        self.slope * t + self.offset
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &Affine) -> Affine {
        Affine::new(self.slope * inner.slope, self.slope * inner.offset + self.offset)
    }

    pub fn inverse(&self) -> Affine {
        assert!(!self.slope.is_zero(), "affine map with zero slope has no inverse");
        let s = self.slope.recip();
        Affine::new(s, -self.offset * s)
    }

    pub fn shifted(&self, k: i64) -> Affine {
        Affine::new(self.slope, self.offset + Q::from_integer(k))
    }

    /// Integer translate whose value at `at` lies in `[0, 1)`.
    pub fn reduce_mod1_at(&self, at: Q) -> Affine {
        let v = self.eval_exact(at);
        self.shifted(-v.floor().to_integer())
    }

    /// Integer translate with values on `[a, b]` inside `[0, 1]` when possible,
    /// picked by the value at the midpoint.
    pub fn reduce_mod1_on(&self, a: Q, b: Q) -> Affine {
        self.reduce_mod1_at((a + b) / Q::from_integer(2))
    }

    /// True when the two maps agree modulo an integer translation.
    pub fn eq_mod1(&self, other: &Affine) -> bool {
        self.slope == other.slope && (self.offset - other.offset).is_integer()
    }

    /// Renders the map in the variable `var`, e.g. `2 − 8t`, `3/4 + t/8`.
    pub fn display_in(&self, var: &str) -> String {
        let term = slope_term(&self.slope.abs(), var);
        if self.slope.is_zero() {
            return fmt_signed(&self.offset);
        }
        if self.offset.is_zero() {
            return if self.slope.is_negative() { format!("−{term}") } else { term };
        }
        let sign = if self.slope.is_negative() { "−" } else { "+" };
        format!("{} {sign} {term}", fmt_signed(&self.offset))
    }

    /// Delay form for unit-slope maps: `t − s` with `s ∈ [0, 1)`.
    pub fn display_delay(&self, var: &str) -> String {
        if self.slope == Q::one() {
            let s = -self.offset - (-self.offset).floor();
            if s.is_zero() {
                var.to_string()
            } else {
                format!("{var}−{}", fmt_q(&s))
            }
        } else if self.slope == -Q::one() {
            let s = self.offset - self.offset.ceil() + Q::one();
            format!("{}−{var}", fmt_q(&s))
        } else {
            self.display_in(var).replace(' ', "")
        }
    }
}

impl fmt::Display for Affine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.display_in("t"))
    }
}

fn fmt_signed(x: &Q) -> String {
    let s = fmt_q(&x.abs());
    if x.is_negative() {
        format!("−{s}")
    } else {
        s
    }
}

fn slope_term(a: &Q, var: &str) -> String {
    let (p, d) = (*a.numer(), *a.denom());
    match (p, d) {
        (1, 1) => var.to_string(),
        (_, 1) => format!("{p}{var}"),
        (1, _) => format!("{var}/{d}"),
        _ => format!("{p}{var}/{d}"),
    }
}

/// Accumulates the common denominator of a set of rationals.
pub fn lcm_denominator<'a>(xs: impl IntoIterator<Item = &'a Q>) -> i64 {
    xs.into_iter().fold(1i64, |acc, x| acc.lcm(x.denom()))
}
