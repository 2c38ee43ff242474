//! Arbitrary-precision substrate: precision contexts, the `BigReal` value type
//! and the elementary functions everything else is built from.
//!
//! Arithmetic is delegated to `astro-float`. All values created through a
//! [`PrecisionContext`] carry its working precision; binary operations run at
//! the larger precision of their two operands. Rounding is round-half-even,
//! which gives faithful results for the field operations and square roots.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock, PoisonError};

use astro_float::{BigFloat, Consts, Radix, RoundingMode};
use num_rational::Rational64;

use crate::error::{Error, Result};

const RM: RoundingMode = RoundingMode::ToEven;
const LOG2_10: f64 = std::f64::consts::LOG2_10;

/// Smallest accepted `target_digits`.
pub const MIN_TARGET_DIGITS: u32 = 10;

/// Guard-digit policy: `max(10, ceil(2% of target))`.
pub fn guard_policy(target_digits: u32) -> u32 {
    let two_percent = (u64::from(target_digits) * 2).div_ceil(100) as u32;
    two_percent.max(10)
}

fn digits_to_bits(digits: u32) -> usize {
    let bits = (f64::from(digits) * LOG2_10).ceil() as usize;
    // astro-float stores whole 64-bit words; keep one spare word.
    (bits.div_ceil(64) + 1) * 64
}

struct ContextInner {
    target_digits: u32,
    guard_digits: u32,
    bits: usize,
    consts: Mutex<Consts>,
    pi: OnceLock<BigFloat>,
}

/// Requested decimal digits plus guard digits. Cheap to clone; clones share
/// the cached value of π.
#[derive(Clone)]
pub struct PrecisionContext {
    inner: Arc<ContextInner>,
}

impl fmt::Debug for PrecisionContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PrecisionContext")
            .field("target_digits", &self.inner.target_digits)
            .field("guard_digits", &self.inner.guard_digits)
            .field("bits", &self.inner.bits)
            .finish()
    }
}

/// Builds a context for `target_digits` decimal digits using the default
/// guard policy.
pub fn make_context(target_digits: u32) -> Result<PrecisionContext> {
    PrecisionContext::new(target_digits)
}

impl PrecisionContext {
    pub fn new(target_digits: u32) -> Result<Self> {
        Self::with_guard(
            target_digits,
            guard_policy(target_digits.max(MIN_TARGET_DIGITS)),
        )
    }

    /// Context with an explicit guard; the guard may exceed, but never
    /// undercut, the policy.
    pub fn with_guard(target_digits: u32, guard_digits: u32) -> Result<Self> {
        if target_digits < MIN_TARGET_DIGITS {
            return Err(Error::PrecisionTooLow {
                requested: target_digits,
            });
        }
        let minimum = guard_policy(target_digits);
        if guard_digits < minimum {
            return Err(Error::GuardTooSmall {
                guard: guard_digits,
                minimum,
            });
        }
        let consts = Consts::new().map_err(|e| Error::Domain(format!("constant cache: {e:?}")))?;
        Ok(Self {
            inner: Arc::new(ContextInner {
                target_digits,
                guard_digits,
                bits: digits_to_bits(target_digits + guard_digits),
                consts: Mutex::new(consts),
                pi: OnceLock::new(),
            }),
        })
    }

    /// Same target, `extra` additional guard digits. Used where an
    /// intermediate is known to lose digits to cancellation.
    pub fn widened(&self, extra: u32) -> Self {
        Self::with_guard(self.target_digits(), self.guard_digits() + extra)
            .expect("widening keeps the guard policy")
    }

    pub fn target_digits(&self) -> u32 {
        self.inner.target_digits
    }

    pub fn guard_digits(&self) -> u32 {
        self.inner.guard_digits
    }

    pub fn working_digits(&self) -> u32 {
        self.inner.target_digits + self.inner.guard_digits
    }

    pub fn bits(&self) -> usize {
        self.inner.bits
    }

    fn wrap(&self, value: BigFloat) -> BigReal {
        BigReal {
            value,
            digits: self.working_digits(),
        }
    }

    fn with_consts<T>(&self, f: impl FnOnce(&mut Consts) -> T) -> T {
        let mut guard = self
            .inner
            .consts
            .lock()
            .unwrap_or_else(PoisonError::into_inner);
        f(&mut guard)
    }

    // ---- constructors ----

    pub fn int(&self, v: i64) -> BigReal {
        self.wrap(BigFloat::from_i64(v, self.bits()))
    }

    pub fn zero(&self) -> BigReal {
        self.int(0)
    }

    pub fn one(&self) -> BigReal {
        self.int(1)
    }

    pub fn ratio(&self, r: Rational64) -> BigReal {
        let num = BigFloat::from_i64(*r.numer(), self.bits());
        let den = BigFloat::from_i64(*r.denom(), self.bits());
        self.wrap(num.div(&den, self.bits(), RM))
    }

    pub fn frac(&self, num: i64, den: i64) -> BigReal {
        self.ratio(Rational64::new(num, den))
    }

    /// Exact conversion of an `f64` (every finite double is a dyadic rational).
    pub fn from_f64(&self, v: f64) -> BigReal {
        self.wrap(BigFloat::from_f64(v, self.bits()))
    }

    /// Parses a decimal literal such as `"1.8540746773"` or `"6.02e-7"`.
    pub fn parse(&self, s: &str) -> Result<BigReal> {
        let v = self.with_consts(|cc| BigFloat::parse(s, Radix::Dec, self.bits(), RM, cc));
        if v.is_nan() {
            return Err(Error::Domain(format!(
                "cannot parse {s:?} as a decimal number"
            )));
        }
        Ok(self.wrap(v))
    }

    /// `10^(-n)`.
    pub fn eps(&self, n: u32) -> BigReal {
        let ten = BigFloat::from_u32(10, self.bits());
        let p = ten.powi(n as usize, self.bits(), RM);
        self.wrap(p.reciprocal(self.bits(), RM))
    }

    /// Re-rounds `x` to this context's precision.
    pub fn coerce(&self, x: &BigReal) -> BigReal {
        let mut v = x.value.clone();
        // set_precision only fails on allocation failure
        v.set_precision(self.bits(), RM).expect("precision change");
        self.wrap(v)
    }

    // ---- elementary functions ----

    /// π, computed once per context.
    pub fn pi(&self) -> BigReal {
        let v = self
            .inner
            .pi
            .get_or_init(|| self.with_consts(|cc| cc.pi(self.bits(), RM)))
            .clone();
        self.wrap(v)
    }

    pub fn sqrt(&self, x: &BigReal) -> Result<BigReal> {
        if x.is_negative() {
            return Err(Error::Domain(format!(
                "sqrt of negative value {}",
                x.to_f64()
            )));
        }
        Ok(self.wrap(x.value.sqrt(self.bits(), RM)))
    }

    /// Positive real `n`-th root of a non-negative `x`.
    ///
    /// Starts from `exp(ln(x)/n)` and applies one Newton step
    /// `y -= (y^n - x) / (n y^(n-1))` to clean up the logarithm's rounding.
    pub fn root(&self, x: &BigReal, n: u32) -> Result<BigReal> {
        if n == 0 {
            return Err(Error::Domain("zeroth root".into()));
        }
        if x.is_negative() {
            return Err(Error::Domain(format!(
                "root of negative value {}",
                x.to_f64()
            )));
        }
        if x.is_zero() || n == 1 {
            return Ok(self.coerce(x));
        }
        if n == 2 {
            return self.sqrt(x);
        }
        let ln_x = self.ln(x)?;
        let mut y = self.exp(&(&ln_x / i64::from(n)));
        let y_pow = y.powi(n - 1);
        let correction = &(&(&y_pow * &y) - x) / &(&y_pow * i64::from(n));
        y = &y - &correction;
        Ok(y)
    }

    /// `x^(p/q)` for `x ≥ 0`, via the positive `q`-th root.
    pub fn pow_ratio(&self, x: &BigReal, e: Rational64) -> Result<BigReal> {
        let q = u32::try_from(*e.denom())
            .map_err(|_| Error::Domain("exponent denominator too large".into()))?;
        let r = self.root(x, q)?;
        let p = *e.numer();
        let mag = r.powi(p.unsigned_abs() as u32);
        if p < 0 {
            mag.checked_recip()
        } else {
            Ok(mag)
        }
    }

    pub fn exp(&self, x: &BigReal) -> BigReal {
        self.wrap(self.with_consts(|cc| x.value.exp(self.bits(), RM, cc)))
    }

    pub fn ln(&self, x: &BigReal) -> Result<BigReal> {
        if !x.is_positive() {
            return Err(Error::Domain(format!(
                "ln of non-positive value {}",
                x.to_f64()
            )));
        }
        Ok(self.wrap(self.with_consts(|cc| x.value.ln(self.bits(), RM, cc))))
    }

    /// `sin(π·t)` for rational `t`.
    pub fn sin_pi(&self, t: Rational64) -> BigReal {
        let arg = &self.pi() * &self.ratio(t);
        self.wrap(self.with_consts(|cc| arg.value.sin(self.bits(), RM, cc)))
    }

    /// `tan(π·t)` for rational `t`; poles (`t ≡ 1/2 mod 1`) are a domain error.
    pub fn tan_pi(&self, t: Rational64) -> Result<BigReal> {
        let shifted = t - Rational64::new(1, 2);
        if shifted.fract().is_zero_ratio() {
            return Err(Error::Domain(format!("tan pole at {t}·π")));
        }
        let arg = &self.pi() * &self.ratio(t);
        Ok(self.wrap(self.with_consts(|cc| arg.value.tan(self.bits(), RM, cc))))
    }

    /// `true` when `|a - b| < 10^(-digits)`.
    pub fn agrees(&self, a: &BigReal, b: &BigReal, digits: u32) -> bool {
        agreement_digits(a, b) > f64::from(digits)
    }

    /// `true` when `a` and `b` agree to within `10^(-target_digits + 5)`.
    pub fn approx_eq(&self, a: &BigReal, b: &BigReal) -> bool {
        self.agrees(a, b, self.target_digits().saturating_sub(5))
    }

    /// Decimal expansion of `x` with `sig_digits` significant digits,
    /// truncated toward zero.
    pub fn to_decimal(&self, x: &BigReal, sig_digits: usize) -> String {
        if x.is_zero() {
            return "0".into();
        }
        let s = self
            .with_consts(|cc| x.value.format(Radix::Dec, RoundingMode::ToZero, cc))
            .unwrap_or_else(|_| x.value.to_string());
        truncate_scientific(&s, sig_digits.max(1))
    }
}

trait RatioExt {
    fn is_zero_ratio(&self) -> bool;
}

impl RatioExt for Rational64 {
    fn is_zero_ratio(&self) -> bool {
        *self.numer() == 0
    }
}

/// Rewrites astro-float's `d.ddd…e±N` output as a truncated decimal.
fn truncate_scientific(s: &str, sig: usize) -> String {
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (mant, exp) = match body.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i64>().unwrap_or(0)),
        None => (body, 0),
    };
    let (int_part, frac_part) = mant.split_once('.').unwrap_or((mant, ""));
    let mut digits: String = int_part.chars().chain(frac_part.chars()).collect();
    // position of the decimal point relative to the start of `digits`
    let mut point = int_part.len() as i64 + exp;
    let lead = digits.len() - digits.trim_start_matches('0').len();
    digits.drain(..lead);
    point -= lead as i64;
    // a run of nines right after the cut is binary representation error of a
    // value that sits on a decimal boundary; carry it instead of truncating
    const NINES: usize = 6;
    let carry = digits.len() >= sig + NINES && digits[sig..sig + NINES].bytes().all(|b| b == b'9');
    digits.truncate(sig);
    if carry {
        let mut bytes = digits.into_bytes();
        let mut i = bytes.len();
        loop {
            if i == 0 {
                bytes.insert(0, b'1');
                bytes.truncate(sig);
                point += 1;
                break;
            }
            i -= 1;
            if bytes[i] == b'9' {
                bytes[i] = b'0';
            } else {
                bytes[i] += 1;
                break;
            }
        }
        digits = String::from_utf8(bytes).expect("ascii digits");
    }
    if digits.is_empty() {
        return "0".into();
    }
    let sign = if neg { "-" } else { "" };
    if (-30..=0).contains(&point) {
        format!("{sign}0.{}{digits}", "0".repeat((-point) as usize))
    } else if point > 0 && point <= 40 {
        let point = point as usize;
        if digits.len() <= point {
            format!("{sign}{digits}{}", "0".repeat(point - digits.len()))
        } else {
            format!("{sign}{}.{}", &digits[..point], &digits[point..])
        }
    } else {
        let (head, tail) = digits.split_at(1);
        let tail = if tail.is_empty() { "0" } else { tail };
        format!("{sign}{head}.{tail}e{}", point - 1)
    }
}

/// `-log10 |a - b|`; `+∞` when the two values are identical.
pub fn agreement_digits(a: &BigReal, b: &BigReal) -> f64 {
    -(a - b).log10_abs()
}

/// `-log10 (|a - b| / |b|)`.
pub fn relative_agreement_digits(a: &BigReal, b: &BigReal) -> f64 {
    -((a - b).log10_abs() - b.log10_abs())
}

/// Arbitrary-precision real bound to the working precision it was computed at.
#[derive(Clone)]
pub struct BigReal {
    value: BigFloat,
    digits: u32,
}

impl fmt::Debug for BigReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BigReal({:.6e} @ {} digits)", self.to_f64(), self.digits)
    }
}

impl fmt::Display for BigReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.value, f)
    }
}

impl BigReal {
    /// Working decimal digits this value was computed at.
    pub fn precision(&self) -> u32 {
        self.digits
    }

    fn bits(&self) -> usize {
        self.value.mantissa_max_bit_len().unwrap_or(64)
    }

    fn combine(&self, other: &BigReal, value: BigFloat) -> BigReal {
        BigReal {
            value,
            digits: self.digits.max(other.digits),
        }
    }

    fn scalar(&self, v: i64) -> BigReal {
        BigReal {
            value: BigFloat::from_i64(v, self.bits()),
            digits: self.digits,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.value.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        !self.value.is_zero() && self.value.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        !self.value.is_zero() && self.value.is_positive()
    }

    pub fn abs(&self) -> BigReal {
        BigReal {
            value: self.value.abs(),
            digits: self.digits,
        }
    }

    /// `self^n` by repeated squaring.
    pub fn powi(&self, n: u32) -> BigReal {
        BigReal {
            value: self.value.powi(n as usize, self.bits(), RM),
            digits: self.digits,
        }
    }

    pub fn square(&self) -> BigReal {
        self * self
    }

    pub fn checked_div(&self, rhs: &BigReal) -> Result<BigReal> {
        if rhs.is_zero() {
            return Err(Error::ZeroDivisor);
        }
        Ok(self / rhs)
    }

    pub fn checked_recip(&self) -> Result<BigReal> {
        if self.is_zero() {
            return Err(Error::ZeroDivisor);
        }
        Ok(BigReal {
            value: self.value.reciprocal(self.bits(), RM),
            digits: self.digits,
        })
    }

    pub fn max(self, other: BigReal) -> BigReal {
        if other > self {
            other
        } else {
            self
        }
    }

    /// `log10 |self|` as a double; `-∞` for zero. Exact to double precision
    /// for any exponent, including values far outside the `f64` range.
    pub fn log10_abs(&self) -> f64 {
        if self.value.is_zero() {
            return f64::NEG_INFINITY;
        }
        let (top, exp) = self.top_word();
        (top / 2f64.powi(64)).log10() + exp as f64 * std::f64::consts::LOG10_2
    }

    /// Nearest `f64` (0 or ±∞ outside the double range).
    pub fn to_f64(&self) -> f64 {
        if self.value.is_zero() {
            return 0.0;
        }
        let (top, exp) = self.top_word();
        let mag = top / 2f64.powi(64) * 2f64.powi(exp.clamp(-2000, 2000) as i32);
        if self.value.is_negative() {
            -mag
        } else {
            mag
        }
    }

    fn top_word(&self) -> (f64, i64) {
        let words = self.value.mantissa_digits().unwrap_or(&[]);
        let top = words.last().copied().unwrap_or(0) as f64;
        let exp = i64::from(self.value.exponent().unwrap_or(0));
        (top, exp)
    }
}

impl PartialEq for BigReal {
    fn eq(&self, other: &Self) -> bool {
        self.value == other.value
    }
}

impl PartialOrd for BigReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.value.partial_cmp(&other.value)
    }
}

macro_rules! bin_op {
    ($trait:ident, $method:ident, $op:ident) => {
        impl $trait<&BigReal> for &BigReal {
            type Output = BigReal;
            fn $method(self, rhs: &BigReal) -> BigReal {
                let p = self.bits().max(rhs.bits());
                self.combine(rhs, self.value.$op(&rhs.value, p, RM))
            }
        }
        impl $trait<BigReal> for BigReal {
            type Output = BigReal;
            fn $method(self, rhs: BigReal) -> BigReal {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&BigReal> for BigReal {
            type Output = BigReal;
            fn $method(self, rhs: &BigReal) -> BigReal {
                (&self).$method(rhs)
            }
        }
        impl $trait<BigReal> for &BigReal {
            type Output = BigReal;
            fn $method(self, rhs: BigReal) -> BigReal {
                self.$method(&rhs)
            }
        }
        impl $trait<i64> for &BigReal {
            type Output = BigReal;
            fn $method(self, rhs: i64) -> BigReal {
                self.$method(&self.scalar(rhs))
            }
        }
        impl $trait<i64> for BigReal {
            type Output = BigReal;
            fn $method(self, rhs: i64) -> BigReal {
                (&self).$method(rhs)
            }
        }
    };
}

bin_op!(Add, add, add);
bin_op!(Sub, sub, sub);
bin_op!(Mul, mul, mul);
// Division by an exact zero yields an infinity; use `checked_div` where the
// divisor is not known to be non-zero.
bin_op!(Div, div, div);

impl Neg for &BigReal {
    type Output = BigReal;
    fn neg(self) -> BigReal {
        BigReal {
            value: self.value.clone().neg(),
            digits: self.digits,
        }
    }
}

impl Neg for BigReal {
    type Output = BigReal;
    fn neg(self) -> BigReal {
        -&self
    }
}
