//! Exact rational helpers and certified comparisons against `e^q`.
//!
//! Every threshold of the form `q · e^β` with rational `q`, `β` is decided by
//! outward-rounded dyadic enclosures of `e^β`, refined until the answer is
//! certain. For `β ≠ 0` the value `e^β` is transcendental, so a rational can
//! never coincide with it and refinement terminates.

use std::cmp::Ordering;
use std::ops::{Add, Neg, Sub};

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Interval width below which refinement gives up.
const REFINEMENT_FLOOR_BITS: u64 = 200;

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses `"p/q"`, `"p"`, or a decimal such as `"-1.25"` or `"3e-2"`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let err = || Error::ParseRational(s.to_string());
    let t = s.trim();
    if let Some((p, q)) = t.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| err())?;
        let q: BigInt = q.trim().parse().map_err(|_| err())?;
        if q.is_zero() {
            return Err(err());
        }
        return Ok(Rational::new(p, q));
    }
    let (mantissa, exp) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i32>().map_err(|_| err())?),
        None => (t, 0),
    };
    let (neg, body) = match mantissa.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (ip, fp) = body.split_once('.').unwrap_or((body, ""));
    if ip.is_empty() && fp.is_empty()
        || !ip.chars().chain(fp.chars()).all(|c| c.is_ascii_digit())
    {
        return Err(err());
    }
    let digits: BigInt = format!("{ip}{fp}").parse().map_err(|_| err())?;
    let scale = exp - fp.len() as i32;
    let ten = BigInt::from(10);
    let mut q = if scale >= 0 {
        Rational::from_integer(digits * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(digits, num_traits::pow(ten, scale.unsigned_abs() as usize))
    };
    if neg {
        q = -q;
    }
    Ok(q)
}

/// Canonical `"p/q"` form, reduced, with positive denominator.
pub fn format_rational(q: &Rational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

pub fn floor_to_bigint(q: &Rational) -> BigInt {
    q.numer().div_floor(q.denom())
}

pub fn ceil_to_bigint(q: &Rational) -> BigInt {
    -((-q.numer()).div_floor(q.denom()))
}

/// Natural log of a positive big integer, without overflowing `f64`.
pub fn ln_bigint(n: &BigInt) -> f64 {
    debug_assert!(n.sign() == Sign::Plus);
    let bits = n.bits();
    if bits <= 1000 {
        n.to_f64().unwrap().ln()
    } else {
        let shift = bits - 64;
        let top: BigInt = n >> shift;
        top.to_f64().unwrap().ln() + (shift as f64) * std::f64::consts::LN_2
    }
}

/// Natural log of a positive rational.
pub fn ln_rational(q: &Rational) -> f64 {
    ln_bigint(q.numer()) - ln_bigint(q.denom())
}

pub fn rational_to_f64(q: &Rational) -> f64 {
    if q.is_zero() {
        return 0.0;
    }
    match (q.numer().to_f64(), q.denom().to_f64()) {
        (Some(a), Some(b)) if a.is_finite() && b.is_finite() => a / b,
        _ => {
            let s = if q.is_negative() { -1.0 } else { 1.0 };
            s * ln_rational(&q.abs()).exp()
        }
    }
}

pub fn f64_to_rational(x: f64) -> Option<Rational> {
    Rational::from_float(x)
}

fn dyadic_floor(q: &Rational, bits: u64) -> Rational {
    let scale = BigInt::one() << bits;
    Rational::new(floor_to_bigint(&(q * &scale)), scale)
}

fn dyadic_ceil(q: &Rational, bits: u64) -> Rational {
    let scale = BigInt::one() << bits;
    Rational::new(ceil_to_bigint(&(q * &scale)), scale)
}

/// Outward-rounded enclosure `[lo, hi] ∋ e^x` with roughly `bits` bits of
/// fractional precision in the intermediate steps.
pub fn exp_enclosure(x: &Rational, bits: u64) -> (Rational, Rational) {
    if x.is_zero() {
        return (Rational::one(), Rational::one());
    }
    let y = x.abs();
    // range reduction: t = y / 2^k with t <= 1/2
    let half = rat(1, 2);
    let mut k = 0u32;
    let mut t = y.clone();
    while t > half {
        t /= int(2);
        k += 1;
    }
    let work = bits + u64::from(k) + 16;
    let tol = Rational::new(BigInt::one(), BigInt::one() << (work + 4));
    let mut sum = Rational::zero();
    let mut term = Rational::one();
    let mut n = 0u64;
    loop {
        sum += &term;
        n += 1;
        term = term * &t / int(n as i64);
        if term < tol {
            break;
        }
    }
    // tail is bounded by term / (1 - t/(n+1)) <= 2 * term for t <= 1/2
    let tail = &term * int(2);
    let mut lo = dyadic_floor(&sum, work);
    let mut hi = dyadic_ceil(&(&sum + &tail), work);
    for _ in 0..k {
        lo = dyadic_floor(&(&lo * &lo), work);
        hi = dyadic_ceil(&(&hi * &hi), work);
    }
    if x.is_negative() {
        let inv_lo = dyadic_floor(&hi.recip(), work);
        let inv_hi = dyadic_ceil(&lo.recip(), work);
        (inv_lo, inv_hi)
    } else {
        (lo, hi)
    }
}

fn refinement_schedule() -> impl Iterator<Item = u64> {
    (0..8u32).map(|i| 64u64 << i)
}

fn floor_too_small(lo: &Rational, hi: &Rational) -> bool {
    let width = hi - lo;
    width < Rational::new(BigInt::one(), BigInt::one() << REFINEMENT_FLOOR_BITS)
}

/// Compares `q` with `e^β`.
pub fn cmp_exp(q: &Rational, beta: &Rational) -> Result<Ordering> {
    if beta.is_zero() {
        return Ok(q.cmp(&Rational::one()));
    }
    if !q.is_positive() {
        return Ok(Ordering::Less);
    }
    // float screen: ln_rational and the f64 β are good to ~1e-15 relative
    let (lq, b) = (ln_rational(q), rational_to_f64(beta));
    if b.is_finite() && (lq - b).abs() > 1e-9 * (1.0 + lq.abs() + b.abs()) {
        return Ok(if lq < b { Ordering::Less } else { Ordering::Greater });
    }
    for bits in refinement_schedule() {
        let (lo, hi) = exp_enclosure(beta, bits);
        if q < &lo {
            return Ok(Ordering::Less);
        }
        if q > &hi {
            return Ok(Ordering::Greater);
        }
        if floor_too_small(&lo, &hi) {
            break;
        }
    }
    Err(Error::Undecidable(format!(
        "{} vs exp({})",
        format_rational(q),
        format_rational(beta)
    )))
}

/// Largest integer `n` with `n <= q·e^β` (or `n < q·e^β` when `strict`).
pub fn floor_mul_exp(q: &Rational, beta: &Rational, strict: bool) -> Result<BigInt> {
    if beta.is_zero() || q.is_zero() {
        return Ok(if strict {
            ceil_to_bigint(q) - BigInt::one()
        } else {
            floor_to_bigint(q)
        });
    }
    // q·e^β is irrational here, so strict and non-strict floors coincide.
    for bits in refinement_schedule() {
        let (lo, hi) = exp_enclosure(beta, bits);
        let (a, b) = if q.is_positive() {
            (q * &lo, q * &hi)
        } else {
            (q * &hi, q * &lo)
        };
        let fa = floor_to_bigint(&a);
        let fb = floor_to_bigint(&b);
        if fa == fb {
            return Ok(fa);
        }
        if floor_too_small(&lo, &hi) {
            break;
        }
    }
    Err(Error::Undecidable(format!(
        "floor({} * exp({}))",
        format_rational(q),
        format_rational(beta)
    )))
}

/// A real of the form `½·ln(square) + shift` with `square > 0` and `shift`
/// rational.
///
/// Logs of counts, of rational or quadratic norm values, rational multiples of
/// `α`, and constants such as `r·ln 3` or `ln r!` are all of this form, so
/// sums and differences of them compare exactly.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LogReal {
    square: Rational,
    shift: Rational,
}

impl LogReal {
    pub fn zero() -> Self {
        LogReal {
            square: Rational::one(),
            shift: Rational::zero(),
        }
    }

    /// `ln q` for positive rational `q`.
    pub fn ln(q: &Rational) -> Self {
        assert!(q.is_positive(), "ln of nonpositive rational");
        LogReal {
            square: q * q,
            shift: Rational::zero(),
        }
    }

    pub fn ln_int(n: impl Into<BigInt>) -> Self {
        Self::ln(&Rational::from_integer(n.into()))
    }

    /// `½·ln q` for positive rational `q`.
    pub fn half_ln(q: &Rational) -> Self {
        assert!(q.is_positive(), "ln of nonpositive rational");
        LogReal {
            square: q.clone(),
            shift: Rational::zero(),
        }
    }

    /// The rational constant `c` (that is, `ln e^c`).
    pub fn constant(c: Rational) -> Self {
        LogReal {
            square: Rational::one(),
            shift: c,
        }
    }

    /// `k · self` for an integer `k`.
    pub fn times(&self, k: i64) -> Self {
        let square = if k >= 0 {
            num_traits::pow(self.square.clone(), k as usize)
        } else {
            num_traits::pow(self.square.recip(), k.unsigned_abs() as usize)
        };
        LogReal {
            square,
            shift: &self.shift * int(k),
        }
    }

    pub fn to_f64(&self) -> f64 {
        0.5 * ln_rational(&self.square) + rational_to_f64(&self.shift)
    }

    /// Exact comparison of two such reals.
    pub fn cmp_exact(&self, other: &LogReal) -> Result<Ordering> {
        // ½ln s1 + a1 ≶ ½ln s2 + a2  ⇔  s1/s2 ≶ e^{2(a2 − a1)}
        let ratio = &self.square / &other.square;
        let beta = (&other.shift - &self.shift) * int(2);
        cmp_exp(&ratio, &beta)
    }

    pub fn is_nonnegative(&self) -> Result<bool> {
        Ok(self.cmp_exact(&LogReal::zero())? != Ordering::Less)
    }

    pub fn max_zero(&self) -> Result<LogReal> {
        Ok(if self.is_nonnegative()? {
            self.clone()
        } else {
            LogReal::zero()
        })
    }
}

impl Add for &LogReal {
    type Output = LogReal;
    fn add(self, rhs: &LogReal) -> LogReal {
        LogReal {
            square: &self.square * &rhs.square,
            shift: &self.shift + &rhs.shift,
        }
    }
}

impl Add for LogReal {
    type Output = LogReal;
    fn add(self, rhs: LogReal) -> LogReal {
        &self + &rhs
    }
}

impl Neg for &LogReal {
    type Output = LogReal;
    fn neg(self) -> LogReal {
        LogReal {
            square: self.square.recip(),
            shift: -&self.shift,
        }
    }
}

impl Neg for LogReal {
    type Output = LogReal;
    fn neg(self) -> LogReal {
        -&self
    }
}

impl Sub for &LogReal {
    type Output = LogReal;
    fn sub(self, rhs: &LogReal) -> LogReal {
        self + &(-rhs)
    }
}

impl Sub for LogReal {
    type Output = LogReal;
    fn sub(self, rhs: LogReal) -> LogReal {
        &self - &rhs
    }
}

impl std::iter::Sum for LogReal {
    fn sum<I: Iterator<Item = LogReal>>(iter: I) -> LogReal {
        iter.fold(LogReal::zero(), |a, b| a + b)
    }
}

pub fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// `r·ln r` as an exact log, with `0·ln 0 = 0`.
pub fn r_log_r(r: u64) -> LogReal {
    if r == 0 {
        return LogReal::zero();
    }
    LogReal::ln_int(num_traits::pow(BigInt::from(r), r as usize))
}

/// `r·ln 3`.
pub fn r_log_3(r: u64) -> LogReal {
    LogReal::ln_int(num_traits::pow(BigInt::from(3), r as usize))
}

/// `r·ln 2`.
pub fn r_log_2(r: u64) -> LogReal {
    LogReal::ln_int(num_traits::pow(BigInt::from(2), r as usize))
}

/// Serde adapters that encode rationals as `"p/q"` strings.
pub mod serde_rational {
    use super::*;
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    /// Accepts a string (`"p/q"`, integer or decimal) or a JSON number.
    pub(crate) struct Lenient(pub Rational);

    impl<'de> Deserialize<'de> for Lenient {
        fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
            match serde_json::Value::deserialize(d)? {
                serde_json::Value::String(s) => parse_rational(&s).map(Lenient).map_err(D::Error::custom),
                serde_json::Value::Number(n) => {
                    parse_rational(&n.to_string()).map(Lenient).map_err(D::Error::custom)
                }
                other => Err(D::Error::custom(format!("expected a rational, got {other}"))),
            }
        }
    }

    pub fn serialize<S: Serializer>(q: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        Ok(Lenient::deserialize(d)?.0)
    }

    pub mod matrix {
        use super::*;
        use serde::ser::SerializeSeq;

        pub fn serialize<S: Serializer>(
            m: &[Vec<Rational>],
            s: S,
        ) -> std::result::Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(m.len()))?;
            for row in m {
                let row: Vec<String> = row.iter().map(format_rational).collect();
                seq.serialize_element(&row)?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(
            d: D,
        ) -> std::result::Result<Vec<Vec<Rational>>, D::Error> {
            let raw: Vec<Vec<Lenient>> = Vec::deserialize(d)?;
            Ok(raw.into_iter().map(|row| row.into_iter().map(|x| x.0).collect()).collect())
        }
    }

    pub mod option {
        use super::*;

        pub fn serialize<S: Serializer>(
            q: &Option<Rational>,
            s: S,
        ) -> std::result::Result<S::Ok, S::Error> {
            match q {
                Some(q) => s.serialize_some(&format_rational(q)),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(
            d: D,
        ) -> std::result::Result<Option<Rational>, D::Error> {
            Ok(Option::<Lenient>::deserialize(d)?.map(|x| x.0))
        }
    }

    pub mod vec {
        use super::*;

        pub fn serialize<S: Serializer>(
            v: &[Rational],
            s: S,
        ) -> std::result::Result<S::Ok, S::Error> {
            let v: Vec<String> = v.iter().map(format_rational).collect();
            serde::Serialize::serialize(&v, s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(
            d: D,
        ) -> std::result::Result<Vec<Rational>, D::Error> {
            let raw: Vec<Lenient> = Vec::deserialize(d)?;
            Ok(raw.into_iter().map(|x| x.0).collect())
        }
    }
}

/// Reals rendered as decimal strings with 12 significant digits.
pub mod real {
    use serde::Serializer;

    pub fn format(x: f64) -> String {
        if x.is_nan() {
            return "nan".into();
        }
        if x.is_infinite() {
            return if x > 0.0 { "inf".into() } else { "-inf".into() };
        }
        if x == 0.0 {
            return "0".into();
        }
        // round to 12 significant digits via scientific formatting first
        let sci = format!("{:.11e}", x);
        let rounded: f64 = sci.parse().unwrap();
        let exp = rounded.abs().log10().floor() as i32;
        if (-5..15).contains(&exp) {
            let prec = (11 - exp).max(0) as usize;
            let mut s = format!("{:.*}", prec, rounded);
            if s.contains('.') {
                while s.ends_with('0') {
                    s.pop();
                }
                if s.ends_with('.') {
                    s.pop();
                }
            }
            if s == "-0" {
                s = "0".into();
            }
            s
        } else {
            sci
        }
    }

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format(*x))
    }

    pub fn serialize_vec<S: Serializer>(v: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<String> = v.iter().map(|x| format(*x)).collect();
        serde::Serialize::serialize(&v, s)
    }

    pub fn serialize_option<S: Serializer>(
        x: &Option<f64>,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        match x {
            Some(x) => s.serialize_some(&format(*x)),
            None => s.serialize_none(),
        }
    }
}
