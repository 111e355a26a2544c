//! Dual-mode numeric substrate.
//!
//! A [`Scalar`] is either an exact rational (always in lowest terms, courtesy of
//! `num-rational`) or a closed ball `[lo, hi]` with rational endpoints. Ball
//! arithmetic rounds endpoints outward onto a dyadic grid of the tracked
//! precision, so enclosures stay valid while denominators stay bounded.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::{self, Deserializer};
use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Q = BigRational;

/// Default working precision of ball arithmetic, in bits.
pub const DEFAULT_BITS: u32 = 256;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Scalar {
    Exact(Q),
    Ball { lo: Q, hi: Q, bits: u32 },
}

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

fn bit_len(x: &BigInt) -> i64 {
    x.bits() as i64
}

/// Natural logarithm of a positive rational, accurate to f64 precision even when
/// the value itself under- or overflows f64.
pub fn ln_q(x: &Q) -> f64 {
    fn ln_int(n: &BigInt) -> f64 {
        let b = bit_len(n);
        if b <= 1000 {
            return n.to_f64().unwrap().ln();
        }
        let shift = (b - 60) as usize;
        let top: BigInt = n >> shift;
        top.to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
    }
    ln_int(x.numer()) - ln_int(x.denom())
}

pub fn q_to_f64(x: &Q) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    match x.to_f64() {
        Some(v) if v.is_finite() && v != 0.0 => v,
        _ => {
            let s = if x.is_negative() { -1.0 } else { 1.0 };
            s * ln_q(&x.abs()).exp()
        }
    }
}

/// Floor of log2|x| up to an error of one.
fn approx_exponent(x: &Q) -> i64 {
    bit_len(x.numer()) - bit_len(x.denom())
}

fn needs_rounding(x: &Q, bits: u32) -> bool {
    bit_len(x.denom()) > bits as i64 + 64 || bit_len(x.numer()) > bits as i64 + 64 + 256
}

/// Round `x` toward negative infinity onto the grid `2^(e - bits)` where `e` is
/// the binary exponent of `x`.
pub fn round_down(x: &Q, bits: u32) -> Q {
    if x.is_zero() || !needs_rounding(x, bits) {
        return x.clone();
    }
    let shift = bits as i64 - approx_exponent(x) + 2;
    let scaled = if shift >= 0 {
        x * Q::from_integer(BigInt::one() << shift as usize)
    } else {
        x / Q::from_integer(BigInt::one() << (-shift) as usize)
    };
    let fl = Q::from_integer(scaled.floor().to_integer());
    if shift >= 0 {
        fl / Q::from_integer(BigInt::one() << shift as usize)
    } else {
        fl * Q::from_integer(BigInt::one() << (-shift) as usize)
    }
}

pub fn round_up(x: &Q, bits: u32) -> Q {
    -round_down(&-x.clone(), bits)
}

/// Exact `n`-th root of a nonnegative rational when it exists.
pub fn exact_nth_root(x: &Q, n: u32) -> Option<Q> {
    if x.is_negative() {
        return None;
    }
    if x.is_zero() {
        return Some(Q::zero());
    }
    let p = x.numer().magnitude();
    let d = x.denom().magnitude();
    let rp = p.nth_root(n);
    let rd = d.nth_root(n);
    if num_traits::pow(rp.clone(), n as usize) == *p && num_traits::pow(rd.clone(), n as usize) == *d {
        Some(Q::new(BigInt::from_biguint(Sign::Plus, rp), BigInt::from_biguint(Sign::Plus, rd)))
    } else {
        None
    }
}

fn f64_to_q(v: f64) -> Q {
    Q::from_float(v).expect("finite float")
}

/// Rational enclosure `(lo, hi)` of `x^(1/n)` for `x > 0`, of relative width about `2^-bits`.
fn nth_root_bracket(x: &Q, n: u32, bits: u32) -> (Q, Q) {
    let guess = (ln_q(x) / n as f64).exp();
    let pow = |v: &Q| num_traits::pow(v.clone(), n as usize);
    let mut lo = f64_to_q(guess * (1.0 - 1e-9));
    let mut hi = f64_to_q(guess * (1.0 + 1e-9));
    while pow(&lo) > *x {
        lo = &lo / qi(2);
    }
    while pow(&hi) < *x {
        hi = &hi * qi(2);
    }
    let target = bits.min(400) as i64;
    loop {
        let width = &hi - &lo;
        if width.is_zero() || approx_exponent(&width) - approx_exponent(&hi) < -target {
            break;
        }
        let mid = round_down(&((&lo + &hi) / qi(2)), bits + 8);
        if mid <= lo || mid >= hi {
            break;
        }
        let pm = pow(&mid);
        match pm.cmp(x) {
            Ordering::Equal => return (mid.clone(), mid),
            Ordering::Less => lo = mid,
            Ordering::Greater => hi = mid,
        }
    }
    (lo, hi)
}

impl Scalar {
    pub fn zero() -> Self {
        Scalar::Exact(Q::zero())
    }

    pub fn one() -> Self {
        Scalar::Exact(Q::one())
    }

    pub fn int(n: i64) -> Self {
        Scalar::Exact(qi(n))
    }

    pub fn ratio(n: i64, d: i64) -> Self {
        Scalar::Exact(q(n, d))
    }

    /// A ball `[lo, hi]`; collapses to an exact value when the endpoints agree.
    pub fn ball(lo: Q, hi: Q, bits: u32) -> Self {
        debug_assert!(lo <= hi);
        if lo == hi {
            Scalar::Exact(lo)
        } else {
            Scalar::Ball { lo: round_down(&lo, bits), hi: round_up(&hi, bits), bits }
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Scalar::Exact(_))
    }

    pub fn as_exact(&self) -> Option<&Q> {
        match self {
            Scalar::Exact(v) => Some(v),
            Scalar::Ball { .. } => None,
        }
    }

    pub fn exact(&self) -> Result<&Q> {
        self.as_exact().ok_or(Error::InexactData)
    }

    pub fn lo(&self) -> &Q {
        match self {
            Scalar::Exact(v) => v,
            Scalar::Ball { lo, .. } => lo,
        }
    }

    pub fn hi(&self) -> &Q {
        match self {
            Scalar::Exact(v) => v,
            Scalar::Ball { hi, .. } => hi,
        }
    }

    pub fn bits(&self) -> Option<u32> {
        match self {
            Scalar::Exact(_) => None,
            Scalar::Ball { bits, .. } => Some(*bits),
        }
    }

    pub fn mid(&self) -> Q {
        (self.lo() + self.hi()) / qi(2)
    }

    pub fn width(&self) -> Q {
        self.hi() - self.lo()
    }

    pub fn to_f64(&self) -> f64 {
        q_to_f64(&self.mid())
    }

    pub fn contains(&self, x: &Q) -> bool {
        self.lo() <= x && x <= self.hi()
    }

    fn combine_bits(&self, other: &Scalar) -> u32 {
        match (self.bits(), other.bits()) {
            (Some(a), Some(b)) => a.min(b),
            (Some(a), None) | (None, Some(a)) => a,
            (None, None) => DEFAULT_BITS,
        }
    }

    /// Ordering when it is decided by the enclosures.
    pub fn partial_cmp_decided(&self, other: &Scalar) -> Option<Ordering> {
        if let (Scalar::Exact(a), Scalar::Exact(b)) = (self, other) {
            return Some(a.cmp(b));
        }
        if self.hi() < other.lo() {
            Some(Ordering::Less)
        } else if self.lo() > other.hi() {
            Some(Ordering::Greater)
        } else {
            None
        }
    }

    pub fn try_cmp(&self, other: &Scalar) -> Result<Ordering> {
        self.partial_cmp_decided(other)
            .ok_or_else(|| Error::Undecidable(format!("{self} vs {other}")))
    }

    pub fn sign(&self) -> Option<Ordering> {
        self.partial_cmp_decided(&Scalar::zero())
    }

    /// True when the value is certainly zero.
    pub fn is_zero(&self) -> bool {
        matches!(self, Scalar::Exact(v) if v.is_zero())
    }

    /// True when zero lies in the enclosure.
    pub fn may_be_zero(&self) -> bool {
        self.contains(&Q::zero())
    }

    pub fn abs(&self) -> Scalar {
        match self {
            Scalar::Exact(v) => Scalar::Exact(v.abs()),
            Scalar::Ball { lo, hi, bits } => {
                if !lo.is_negative() {
                    self.clone()
                } else if !hi.is_positive() {
                    Scalar::Ball { lo: -hi.clone(), hi: -lo.clone(), bits: *bits }
                } else {
                    let m = if lo.abs() > *hi { lo.abs() } else { hi.clone() };
                    Scalar::Ball { lo: Q::zero(), hi: m, bits: *bits }
                }
            }
        }
    }

    /// Enclosure of `max(self, other)`.
    pub fn max(&self, other: &Scalar) -> Scalar {
        if let (Scalar::Exact(a), Scalar::Exact(b)) = (self, other) {
            return Scalar::Exact(a.max(b).clone());
        }
        let lo = self.lo().max(other.lo()).clone();
        let hi = self.hi().max(other.hi()).clone();
        Scalar::ball(lo, hi, self.combine_bits(other))
    }

    pub fn min(&self, other: &Scalar) -> Scalar {
        -((-self.clone()).max(&-other.clone()))
    }

    pub fn pow(&self, n: u32) -> Scalar {
        let mut acc = Scalar::one();
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    pub fn powi(&self, n: i32) -> Result<Scalar> {
        if n >= 0 {
            Ok(self.pow(n as u32))
        } else {
            Scalar::one().checked_div(&self.pow((-n) as u32))
        }
    }

    pub fn recip(&self) -> Result<Scalar> {
        Scalar::one().checked_div(self)
    }

    pub fn checked_div(&self, other: &Scalar) -> Result<Scalar> {
        if other.may_be_zero() {
            return Err(Error::Undecidable(format!("division by {other}")));
        }
        Ok(match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a / b),
            _ => {
                let inv = Scalar::ball(other.hi().recip(), other.lo().recip(), other.combine_bits(self));
                let inv = match other {
                    Scalar::Exact(b) => Scalar::Exact(b.recip()),
                    _ => inv,
                };
                self * &inv
            }
        })
    }

    /// Enclosure of the nonnegative `n`-th root; exact whenever the root is rational.
    pub fn nth_root(&self, n: u32) -> Result<Scalar> {
        if n == 0 {
            return Err(Error::Precondition("root of order zero".into()));
        }
        if self.lo().is_negative() {
            return Err(Error::Precondition(format!("root of possibly negative value {self}")));
        }
        if let Scalar::Exact(x) = self {
            if let Some(r) = exact_nth_root(x, n) {
                return Ok(Scalar::Exact(r));
            }
            let (lo, hi) = nth_root_bracket(x, n, DEFAULT_BITS);
            return Ok(Scalar::ball(lo, hi, DEFAULT_BITS));
        }
        let bits = self.bits().unwrap_or(DEFAULT_BITS);
        let lo = if self.lo().is_zero() {
            Q::zero()
        } else {
            exact_nth_root(self.lo(), n).unwrap_or_else(|| nth_root_bracket(self.lo(), n, bits).0)
        };
        let hi = exact_nth_root(self.hi(), n).unwrap_or_else(|| nth_root_bracket(self.hi(), n, bits).1);
        Ok(Scalar::ball(lo, hi, bits))
    }

    /// Parse `"p/q"`, an integer, or a decimal literal such as `"-0.15"`.
    pub fn parse(s: &str) -> Result<Scalar> {
        parse_rational(s).map(Scalar::Exact)
    }

    /// A high-precision literal: the decimal value widened by one unit in its last digit.
    pub fn from_decimal_literal(dec: &str, bits: u32) -> Result<Scalar> {
        let centre = parse_rational(dec)?;
        let frac_digits = dec.split('.').nth(1).map(|f| f.len()).unwrap_or(0);
        let ulp = Q::new(BigInt::one(), num_traits::pow(BigInt::from(10), frac_digits));
        Ok(Scalar::ball(&centre - &ulp, &centre + &ulp, bits))
    }

    /// Human-readable value with its enclosure width, or the tag `exact`.
    pub fn describe(&self) -> String {
        match self {
            Scalar::Exact(v) => format!("{} (exact)", fmt_q(v)),
            Scalar::Ball { .. } => {
                format!("{:.12} (width {:.3e})", self.to_f64(), q_to_f64(&self.width()))
            }
        }
    }

    /// Width tag for tabular output.
    pub fn width_tag(&self) -> String {
        match self {
            Scalar::Exact(_) => "exact".into(),
            Scalar::Ball { .. } => format!("{:.3e}", q_to_f64(&self.width())),
        }
    }
}

pub fn fmt_q(v: &Q) -> String {
    if v.is_integer() {
        v.numer().to_string()
    } else {
        format!("{}/{}", v.numer(), v.denom())
    }
}

pub fn parse_rational(s: &str) -> Result<Q> {
    let s = s.trim();
    let err = || Error::Parse(format!("not a rational literal: {s:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| err())?;
        let d: BigInt = d.trim().parse().map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok(Q::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let neg = int.starts_with('-');
        let int_digits = int.trim_start_matches(['-', '+']);
        if !frac.chars().all(|c| c.is_ascii_digit()) || frac.is_empty() && int_digits.is_empty() {
            return Err(err());
        }
        let digits = format!("{}{}", if int_digits.is_empty() { "0" } else { int_digits }, frac);
        let n: BigInt = digits.parse().map_err(|_| err())?;
        let d = num_traits::pow(BigInt::from(10), frac.len());
        let v = Q::new(n, d);
        return Ok(if neg { -v } else { v });
    }
    let n: BigInt = s.parse().map_err(|_| err())?;
    Ok(Q::from_integer(n))
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(v) => write!(f, "{}", fmt_q(v)),
            Scalar::Ball { lo, hi, .. } => write!(f, "[{:.15e}, {:.15e}]", q_to_f64(lo), q_to_f64(hi)),
        }
    }
}

impl From<Q> for Scalar {
    fn from(v: Q) -> Self {
        Scalar::Exact(v)
    }
}

impl From<i64> for Scalar {
    fn from(v: i64) -> Self {
        Scalar::int(v)
    }
}

fn ball_op(a: &Scalar, b: &Scalar, f: impl Fn(&Q, &Q) -> Q, monotone_pairs: bool) -> Scalar {
    let bits = a.combine_bits(b);
    if monotone_pairs {
        // addition: lo with lo, hi with hi
        Scalar::ball(f(a.lo(), b.lo()), f(a.hi(), b.hi()), bits)
    } else {
        let c = [f(a.lo(), b.lo()), f(a.lo(), b.hi()), f(a.hi(), b.lo()), f(a.hi(), b.hi())];
        let lo = c.iter().min().unwrap().clone();
        let hi = c.iter().max().unwrap().clone();
        Scalar::ball(lo, hi, bits)
    }
}

impl<'a> Add<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn add(self, rhs: &'a Scalar) -> Scalar {
        match (self, rhs) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a + b),
            _ => ball_op(self, rhs, |x, y| x + y, true),
        }
    }
}

impl<'a> Sub<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn sub(self, rhs: &'a Scalar) -> Scalar {
        match (self, rhs) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a - b),
            _ => self + &(-rhs.clone()),
        }
    }
}

impl<'a> Mul<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn mul(self, rhs: &'a Scalar) -> Scalar {
        match (self, rhs) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a * b),
            (Scalar::Exact(a), _) | (_, Scalar::Exact(a)) if a.is_zero() => Scalar::zero(),
            _ => ball_op(self, rhs, |x, y| x * y, false),
        }
    }
}

impl<'a> Div<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn div(self, rhs: &'a Scalar) -> Scalar {
        self.checked_div(rhs).expect("division by a value that may be zero")
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match self {
            Scalar::Exact(a) => Scalar::Exact(-a),
            Scalar::Ball { lo, hi, bits } => Scalar::Ball { lo: -hi, hi: -lo, bits },
        }
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -self.clone()
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<Scalar> for Scalar {
            type Output = Scalar;
            fn $m(self, rhs: Scalar) -> Scalar {
                (&self).$m(&rhs)
            }
        }
        impl<'a> $tr<&'a Scalar> for Scalar {
            type Output = Scalar;
            fn $m(self, rhs: &'a Scalar) -> Scalar {
                (&self).$m(rhs)
            }
        }
        impl<'a> $tr<Scalar> for &'a Scalar {
            type Output = Scalar;
            fn $m(self, rhs: Scalar) -> Scalar {
                self.$m(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

impl std::iter::Sum for Scalar {
    fn sum<I: Iterator<Item = Scalar>>(iter: I) -> Scalar {
        iter.fold(Scalar::zero(), |a, b| a + b)
    }
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Scalar::Exact(v) => s.serialize_str(&fmt_q(v)),
            Scalar::Ball { lo, hi, bits } => {
                let mut m = s.serialize_map(Some(3))?;
                m.serialize_entry("lo", &fmt_q(lo))?;
                m.serialize_entry("hi", &fmt_q(hi))?;
                m.serialize_entry("bits", bits)?;
                m.end()
            }
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ScalarRepr {
    Text(String),
    Int(i64),
    Decimal { dec: String, bits: u32 },
    Interval { lo: String, hi: String, bits: u32 },
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = ScalarRepr::deserialize(d)?;
        let out = match repr {
            ScalarRepr::Text(s) => Scalar::parse(&s),
            ScalarRepr::Int(n) => Ok(Scalar::int(n)),
            ScalarRepr::Decimal { dec, bits } => Scalar::from_decimal_literal(&dec, bits),
            ScalarRepr::Interval { lo, hi, bits } => {
                let lo = parse_rational(&lo);
                let hi = parse_rational(&hi);
                match (lo, hi) {
                    (Ok(lo), Ok(hi)) if lo <= hi => Ok(Scalar::ball(lo, hi, bits)),
                    _ => Err(Error::Parse("bad interval literal".into())),
                }
            }
        };
        out.map_err(de::Error::custom)
    }
}

/// Integer part helper used by itinerary and grid code.
pub fn floor_q(x: &Q) -> BigInt {
    x.numer().div_floor(x.denom())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_literals() {
        assert_eq!(Scalar::parse("7/10").unwrap(), Scalar::ratio(7, 10));
        assert_eq!(Scalar::parse("14/20").unwrap(), Scalar::ratio(7, 10));
        assert_eq!(Scalar::parse("-0.15").unwrap(), Scalar::ratio(-3, 20));
        assert_eq!(Scalar::parse("3").unwrap(), Scalar::int(3));
        assert!(Scalar::parse("1/0").is_err());
        assert!(Scalar::parse("abc").is_err());
    }

    #[test]
    fn ball_arithmetic_encloses() {
        let a = Scalar::ball(q(1, 3), q(1, 2), 64);
        let b = Scalar::ball(q(-1, 5), q(1, 7), 64);
        let p = &a * &b;
        for x in [q(1, 3), q(5, 12), q(1, 2)] {
            for y in [q(-1, 5), q(0, 1), q(1, 7)] {
                assert!(p.contains(&(&x * &y)));
            }
        }
        let s = &a - &b;
        assert!(s.contains(&(q(1, 2) + q(1, 5))));
    }

    #[test]
    fn rounding_is_outward() {
        let x = q(1, 3);
        let lo = round_down(&(&x * Q::new(BigInt::one(), BigInt::one() << 400)), 32);
        let hi = round_up(&(&x * Q::new(BigInt::one(), BigInt::one() << 400)), 32);
        let v = &x * Q::new(BigInt::one(), BigInt::one() << 400);
        assert!(lo <= v && v <= hi);
        assert!(bit_len(lo.denom()) < 500);
    }

    #[test]
    fn nth_roots() {
        assert_eq!(Scalar::ratio(1, 1000).nth_root(3).unwrap(), Scalar::ratio(1, 10));
        let r = Scalar::int(2).nth_root(2).unwrap();
        assert!(!r.is_exact());
        assert!(r.lo() * r.lo() <= qi(2) && r.hi() * r.hi() >= qi(2));
        assert!(q_to_f64(&r.width()) < 1e-40);
        let tiny = Scalar::Exact(num_traits::pow(q(1, 10), 64) * q(1, 7));
        let r = tiny.nth_root(64).unwrap();
        assert!((r.to_f64() - 0.1 * (1.0f64 / 7.0).powf(1.0 / 64.0)).abs() < 1e-14);
    }

    #[test]
    fn ordering_is_decided_only_when_disjoint() {
        let a = Scalar::ball(q(1, 3), q(1, 2), 64);
        assert_eq!(a.partial_cmp_decided(&Scalar::int(1)), Some(Ordering::Less));
        assert_eq!(a.partial_cmp_decided(&Scalar::ratio(2, 5)), None);
        assert!(a.try_cmp(&Scalar::ratio(2, 5)).is_err());
    }

    #[test]
    fn serde_roundtrip_forms() {
        let v: Scalar = serde_json::from_str("\"7/10\"").unwrap();
        assert_eq!(v, Scalar::ratio(7, 10));
        let v: Scalar = serde_json::from_str(r#"{"dec": "0.5", "bits": 64}"#).unwrap();
        assert!(v.contains(&q(1, 2)) && !v.is_exact());
        let b = Scalar::ball(q(1, 3), q(1, 2), 64);
        let s = serde_json::to_string(&b).unwrap();
        let back: Scalar = serde_json::from_str(&s).unwrap();
        assert_eq!(back, b);
    }
}
