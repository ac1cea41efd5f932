//! Sign/mantissa/exponent numbers that never overflow in practice.
//!
//! A [`SciNum`] stores `sign · mantissa · 10^exponent` with the mantissa in
//! `[1, 10)` as a binary64 and a 64-bit decimal exponent, so values such as
//! `10000!` stay representable while the leading digit and significand are
//! read off directly.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Addends more than this many decades smaller than the other operand are
/// dropped by [`SciNum::add`].
pub const MAX_EXPONENT_GAP: i64 = 17;

/// Relative size of `|a + b|` against the larger operand below which an
/// addition counts as a near-cancellation.
pub const CANCELLATION_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SciNum {
    sign: i8,
    mantissa: f64,
    exponent: i64,
}

/// Result of an addition together with its precision diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SumOutcome {
    pub value: SciNum,
    /// The two operands nearly cancelled.
    pub precision_loss: bool,
    /// The smaller operand was below the representable gap and ignored.
    pub truncated: bool,
}

fn pow10(k: i32) -> f64 {
    10f64.powi(k)
}

impl SciNum {
    pub const ZERO: SciNum = SciNum {
        sign: 0,
        mantissa: 1.0,
        exponent: 0,
    };

    pub const ONE: SciNum = SciNum {
        sign: 1,
        mantissa: 1.0,
        exponent: 0,
    };

    /// Builds a value from raw parts, renormalizing the mantissa if needed.
    pub fn from_parts(sign: i8, mantissa: f64, exponent: i64) -> Result<SciNum> {
        if sign == 0 || mantissa == 0.0 {
            return Ok(SciNum::ZERO);
        }
        if !mantissa.is_finite() || mantissa < 0.0 {
            return Err(Error::Domain(format!("invalid mantissa {mantissa}")));
        }
        if !(-1..=1).contains(&sign) {
            return Err(Error::Domain(format!("invalid sign {sign}")));
        }
        normalize(sign, mantissa, exponent)
    }

    pub fn from_real(v: f64) -> Result<SciNum> {
        if !v.is_finite() {
            return Err(Error::Domain(format!("non-finite value {v}")));
        }
        if v == 0.0 {
            return Ok(SciNum::ZERO);
        }
        let sign = if v < 0.0 { -1 } else { 1 };
        let a = v.abs();
        let e = a.log10().floor() as i64;
        // 10^k is exact for |k| <= 22, so divide or multiply by the exact power.
        let m = if e >= 0 {
            if e <= 22 {
                a / pow10(e as i32)
            } else {
                a / pow10(e as i32 - 22) / 1e22
            }
        } else if e >= -22 {
            a * pow10(-e as i32)
        } else {
            a * 1e22 * pow10(-e as i32 - 22)
        };
        normalize(sign, m, e)
    }

    /// Builds `sign · 10^log10_abs`.
    pub fn from_log10(sign: i8, log10_abs: f64) -> Result<SciNum> {
        if sign == 0 {
            return Ok(SciNum::ZERO);
        }
        if !log10_abs.is_finite() {
            return Err(Error::Domain(format!("non-finite log10 {log10_abs}")));
        }
        let e = log10_abs.floor();
        if e.abs() >= 9.2e18 {
            return Err(Error::Overflow(format!("log10 {log10_abs:e} exceeds the exponent field")));
        }
        normalize(sign.signum(), 10f64.powf(log10_abs - e), e as i64)
    }

    /// `sign · 10^(k + frac)` for an integer part and a small fractional part.
    fn from_split_log10(sign: i8, int_part: i64, frac: f64) -> Result<SciNum> {
        let whole = frac.floor();
        let e = int_part
            .checked_add(whole as i64)
            .ok_or_else(|| Error::Overflow("exponent overflow".into()))?;
        normalize(sign, 10f64.powf(frac - whole), e)
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    pub fn mantissa(&self) -> f64 {
        self.mantissa
    }

    pub fn exponent(&self) -> i64 {
        self.exponent
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    pub fn first_digit(&self) -> Option<u8> {
        (!self.is_zero()).then(|| self.mantissa.floor() as u8)
    }

    pub fn abs(self) -> SciNum {
        SciNum {
            sign: self.sign.abs(),
            ..self
        }
    }

    pub fn neg(self) -> SciNum {
        SciNum {
            sign: -self.sign,
            ..self
        }
    }

    /// Converts to binary64; overflows to ±∞ and underflows to zero.
    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let s = f64::from(self.sign);
        if self.exponent > 400 {
            return s * f64::INFINITY;
        }
        if self.exponent < -400 {
            return 0.0;
        }
        let e = self.exponent as i32;
        // Split the scaling so subnormal and near-max results stay accurate.
        if e > 300 {
            s * self.mantissa * pow10(300) * pow10(e - 300)
        } else if e < -300 {
            s * self.mantissa * pow10(-300) * pow10(e + 300)
        } else {
            s * self.mantissa * pow10(e)
        }
    }

    pub fn mul(self, other: SciNum) -> Result<SciNum> {
        if self.is_zero() || other.is_zero() {
            return Ok(SciNum::ZERO);
        }
        let e = self
            .exponent
            .checked_add(other.exponent)
            .ok_or_else(|| Error::Overflow("product exponent".into()))?;
        normalize(self.sign * other.sign, self.mantissa * other.mantissa, e)
    }

    pub fn div(self, other: SciNum) -> Result<SciNum> {
        if other.is_zero() {
            return Err(Error::Domain("division by zero".into()));
        }
        if self.is_zero() {
            return Ok(SciNum::ZERO);
        }
        let e = self
            .exponent
            .checked_sub(other.exponent)
            .ok_or_else(|| Error::Overflow("quotient exponent".into()))?;
        normalize(self.sign * other.sign, self.mantissa / other.mantissa, e)
    }

    pub fn mul_real(self, r: f64) -> Result<SciNum> {
        self.mul(SciNum::from_real(r)?)
    }

    pub fn add(self, other: SciNum) -> Result<SciNum> {
        Ok(self.add_tracked(other)?.value)
    }

    pub fn sub(self, other: SciNum) -> Result<SciNum> {
        self.add(other.neg())
    }

    /// Addition reporting near-cancellation and gap truncation.
    pub fn add_tracked(self, other: SciNum) -> Result<SumOutcome> {
        let plain = |value| SumOutcome {
            value,
            precision_loss: false,
            truncated: false,
        };
        if other.is_zero() {
            return Ok(plain(self));
        }
        if self.is_zero() {
            return Ok(plain(other));
        }
        let (big, small) = if self.cmp_abs(&other) == Ordering::Less {
            (other, self)
        } else {
            (self, other)
        };
        let gap = big.exponent - small.exponent;
        if gap > MAX_EXPONENT_GAP {
            return Ok(SumOutcome {
                value: big,
                precision_loss: false,
                truncated: true,
            });
        }
        let aligned = small.mantissa / pow10(gap as i32);
        let sum = f64::from(big.sign) * big.mantissa + f64::from(small.sign) * aligned;
        if sum == 0.0 {
            return Ok(SumOutcome {
                value: SciNum::ZERO,
                precision_loss: false,
                truncated: false,
            });
        }
        let precision_loss = sum.abs() < CANCELLATION_THRESHOLD * big.mantissa;
        let value = normalize(if sum < 0.0 { -1 } else { 1 }, sum.abs(), big.exponent)?;
        Ok(SumOutcome {
            value,
            precision_loss,
            truncated: false,
        })
    }

    /// Raises a positive value to a real power through base-10 logarithms.
    pub fn pow_real(self, e: f64) -> Result<SciNum> {
        if self.sign != 1 {
            return Err(Error::Domain("pow_real requires a positive base".into()));
        }
        if !e.is_finite() {
            return Err(Error::Domain(format!("non-finite exponent {e}")));
        }
        if e == 1.0 {
            return Ok(self);
        }
        if e == 0.0 {
            return Ok(SciNum::ONE);
        }
        // exponent·e split exactly into a rounded product and its FMA residual
        // so the fractional part keeps full precision for large exponents.
        let k = self.exponent as f64;
        let prod = k * e;
        let residual = k.mul_add(e, -prod);
        if prod.abs() >= 9.0e18 {
            return Err(Error::Overflow(format!("power exponent {prod:e}")));
        }
        let int_part = prod.floor();
        let frac = (prod - int_part) + residual + e * self.mantissa.log10();
        Self::from_split_log10(1, int_part as i64, frac)
    }

    /// Fractional part of `log10|x|`, which is `log10` of the mantissa.
    pub fn log10_frac(&self) -> Result<f64> {
        if self.is_zero() {
            return Err(Error::Domain("log10 of zero".into()));
        }
        let l = self.mantissa.log10();
        Ok(if l >= 1.0 { 1.0 - f64::EPSILON / 2.0 } else { l.max(0.0) })
    }

    /// `log10|x|` as a real; loses fractional precision for huge exponents.
    pub fn log10_abs(&self) -> Result<f64> {
        if self.is_zero() {
            return Err(Error::Domain("log10 of zero".into()));
        }
        Ok(self.exponent as f64 + self.mantissa.log10())
    }

    pub fn cmp_abs(&self, other: &SciNum) -> Ordering {
        match (self.is_zero(), other.is_zero()) {
            (true, true) => Ordering::Equal,
            (true, false) => Ordering::Less,
            (false, true) => Ordering::Greater,
            _ => self
                .exponent
                .cmp(&other.exponent)
                .then(self.mantissa.total_cmp(&other.mantissa)),
        }
    }

    /// `|a − b| / max(|a|, |b|)`, zero when both are zero.
    pub fn rel_diff(&self, other: &SciNum) -> f64 {
        if self.is_zero() && other.is_zero() {
            return 0.0;
        }
        let scale = if self.cmp_abs(other) == Ordering::Less {
            *other
        } else {
            *self
        };
        match self.sub(*other).and_then(|d| d.div(scale.abs())) {
            Ok(r) => r.abs().to_f64(),
            Err(_) => f64::INFINITY,
        }
    }
}

fn normalize(sign: i8, mut m: f64, mut e: i64) -> Result<SciNum> {
    if m == 0.0 {
        return Ok(SciNum::ZERO);
    }
    if !m.is_finite() || m < 0.0 {
        return Err(Error::Domain(format!("cannot normalize mantissa {m}")));
    }
    if !(1.0..10.0).contains(&m) {
        let shift = m.log10().floor() as i64;
        if shift != 0 {
            m = if shift > 0 {
                m / pow10(shift as i32)
            } else {
                m * pow10(-shift as i32)
            };
            e = e
                .checked_add(shift)
                .ok_or_else(|| Error::Overflow("normalization".into()))?;
        }
    }
    loop {
        if m >= 10.0 {
            m /= 10.0;
            e = e
                .checked_add(1)
                .ok_or_else(|| Error::Overflow("normalization".into()))?;
        } else if m < 1.0 {
            m *= 10.0;
            e = e
                .checked_sub(1)
                .ok_or_else(|| Error::Overflow("normalization".into()))?;
        } else {
            break;
        }
    }
    Ok(SciNum {
        sign,
        mantissa: m,
        exponent: e,
    })
}

impl Default for SciNum {
    fn default() -> Self {
        SciNum::ZERO
    }
}

/// Formats as `±m.mmmmmmmmmmmmmmmme±k`; seventeen significant digits make
/// the text round-trip bit-exactly.
impl fmt::Display for SciNum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "+0.0000000000000000e+0");
        }
        let s = if self.sign < 0 { '-' } else { '+' };
        let es = if self.exponent < 0 { '-' } else { '+' };
        write!(
            f,
            "{s}{:.16}e{es}{}",
            self.mantissa,
            self.exponent.unsigned_abs()
        )
    }
}

impl FromStr for SciNum {
    type Err = Error;

    fn from_str(s: &str) -> Result<SciNum> {
        let t = s.trim();
        let bad = || Error::Parse {
            offset: 0,
            message: format!("invalid scientific number {t:?}"),
        };
        let (mant, exp) = match t.find(['e', 'E']) {
            Some(i) => (&t[..i], &t[i + 1..]),
            None => (t, "0"),
        };
        let m: f64 = mant.parse().map_err(|_| bad())?;
        let e: i64 = exp.parse().map_err(|_| bad())?;
        if !m.is_finite() {
            return Err(bad());
        }
        if m == 0.0 {
            return Ok(SciNum::ZERO);
        }
        let sign = if m < 0.0 { -1 } else { 1 };
        if (1.0..10.0).contains(&m.abs()) {
            Ok(SciNum {
                sign,
                mantissa: m.abs(),
                exponent: e,
            })
        } else {
            // Plain decimal input such as "354" or "0.5e3".
            let base = SciNum::from_real(m)?;
            let exponent = base
                .exponent
                .checked_add(e)
                .ok_or_else(|| Error::Overflow("parsed exponent".into()))?;
            Ok(SciNum { exponent, ..base })
        }
    }
}

impl Serialize for SciNum {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for SciNum {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigUint;
    use proptest::prelude::*;

    fn parts(x: SciNum) -> (i8, f64, i64) {
        (x.sign(), x.mantissa(), x.exponent())
    }

    /// Leading 17 digits and decimal exponent of a big integer.
    fn big_to_sci(v: &BigUint) -> (f64, i64) {
        let s = v.to_string();
        let head: String = s.chars().take(17).collect();
        let m: f64 = format!("{}.{}", &head[..1], &head[1..]).parse().unwrap();
        (m, s.len() as i64 - 1)
    }

    #[test]
    fn from_real_examples() {
        assert_eq!(parts(SciNum::from_real(0.0).unwrap()), (0, 1.0, 0));
        assert_eq!(parts(SciNum::from_real(354.0).unwrap()), (1, 3.54, 2));
        assert_eq!(parts(SciNum::from_real(-0.002).unwrap()), (-1, 2.0, -3));
        assert!(SciNum::from_real(f64::NAN).is_err());
        assert!(SciNum::from_real(f64::INFINITY).is_err());
    }

    #[test]
    fn extreme_reals_round_trip() {
        for v in [1.7e308, f64::MIN_POSITIVE, 5e-324, 1e-310, 1.7e308, 1e23] {
            let x = SciNum::from_real(v).unwrap();
            assert!((1.0..10.0).contains(&x.mantissa()));
            let back = x.to_f64();
            assert!(((back - v) / v).abs() < 4.0 * f64::EPSILON, "{v} -> {back}");
        }
    }

    #[test]
    fn mul_carry_and_zero() {
        let a = SciNum::from_real(2e3).unwrap();
        let b = SciNum::from_real(5e2).unwrap();
        assert_eq!(parts(a.mul(b).unwrap()), (1, 1.0, 6));
        assert!(a.mul(SciNum::ZERO).unwrap().is_zero());
    }

    #[test]
    fn factorial_25_matches_big_integer() {
        let mut x = SciNum::ONE;
        let mut big = BigUint::from(1u32);
        for i in 1..=25u32 {
            x = x.mul(SciNum::from_real(f64::from(i)).unwrap()).unwrap();
            big *= i;
        }
        assert_eq!(big.to_string(), "15511210043330985984000000");
        let (m, e) = big_to_sci(&big);
        assert_eq!(x.exponent(), e);
        assert!((x.mantissa() - m).abs() / m < 1e-14);
    }

    #[test]
    fn add_examples() {
        let one = SciNum::ONE;
        assert!(one.add(one.neg()).unwrap().is_zero());
        let a = SciNum::from_real(9.5).unwrap();
        assert_eq!(parts(a.add(a).unwrap()), (1, 1.9, 1));
    }

    #[test]
    fn add_gap_truncation() {
        let big = SciNum::from_parts(1, 3.0, 40).unwrap();
        let small = SciNum::from_parts(1, 9.0, 22).unwrap();
        let out = big.add_tracked(small).unwrap();
        assert!(out.truncated);
        assert_eq!(out.value, big);
        let near = SciNum::from_parts(1, 9.0, 23).unwrap();
        assert!(!big.add_tracked(near).unwrap().truncated);
    }

    #[test]
    fn near_cancellation_is_flagged() {
        let a = SciNum::from_real(1.0 + 1e-14).unwrap();
        let out = a.add_tracked(SciNum::ONE.neg()).unwrap();
        assert!(out.precision_loss);
        assert!(!out.value.is_zero());
    }

    #[test]
    fn fibonacci_100_matches_big_integer() {
        let (mut a, mut b) = (SciNum::ONE, SciNum::ONE);
        let (mut x, mut y) = (BigUint::from(1u32), BigUint::from(1u32));
        for _ in 3..=100 {
            let c = a.add(b).unwrap();
            a = b;
            b = c;
            let z = &x + &y;
            x = y;
            y = z;
        }
        assert_eq!(y.to_string(), "354224848179261915075");
        let (m, e) = big_to_sci(&y);
        assert_eq!(b.exponent(), 20);
        assert_eq!(b.exponent(), e);
        assert!((b.mantissa() - m).abs() / m < 1e-13);
        assert!((b.mantissa() - 3.5422).abs() < 1e-4);
    }

    #[test]
    fn pow_real_examples() {
        let h = SciNum::from_real(100.0).unwrap();
        let r = h.pow_real(0.5).unwrap();
        assert_eq!(r.exponent(), 1);
        assert!((r.mantissa() - 1.0).abs() < 1e-15);
        let x = SciNum::from_parts(1, 7.123456789, 12345).unwrap();
        assert_eq!(x.pow_real(1.0).unwrap(), x);
        let two = SciNum::from_real(2.0).unwrap().pow_real(10.0).unwrap();
        assert_eq!(two.exponent(), 3);
        assert!((two.mantissa() - 1.024).abs() < 1e-14);
        assert!(SciNum::from_real(-2.0).unwrap().pow_real(0.5).is_err());
        assert!(SciNum::ZERO.pow_real(2.0).is_err());
    }

    #[test]
    fn pow_real_keeps_precision_for_large_exponents() {
        // (10^1000 · 2)^3 = 8 · 10^3000
        let x = SciNum::from_parts(1, 2.0, 1000).unwrap();
        let y = x.pow_real(3.0).unwrap();
        assert_eq!(y.exponent(), 3000);
        assert!((y.mantissa() - 8.0).abs() < 1e-13);
    }

    #[test]
    fn log10_frac_examples() {
        let a = SciNum::from_parts(1, 1.0, 7).unwrap();
        assert_eq!(a.log10_frac().unwrap(), 0.0);
        let b = SciNum::from_real(2.0).unwrap();
        assert!((b.log10_frac().unwrap() - std::f64::consts::LOG10_2).abs() < 1e-15);
        // F_100 = 354224848179261915075
        let f = SciNum::from_parts(1, 3.542_248_481_792_619, 20).unwrap();
        assert!((f.log10_frac().unwrap() - 0.549_279_022_829_864).abs() < 1e-12);
        assert!(SciNum::ZERO.log10_frac().is_err());
    }

    #[test]
    fn mul_overflow_is_reported() {
        let a = SciNum::from_parts(1, 5.0, i64::MAX - 1).unwrap();
        assert!(matches!(a.mul(a), Err(Error::Overflow(_))));
    }

    #[test]
    fn display_round_trips() {
        for v in [1.0, -0.002, 354.0, std::f64::consts::PI, 9.999999999999998] {
            let x = SciNum::from_real(v).unwrap();
            let s = x.to_string();
            assert_eq!(s.parse::<SciNum>().unwrap(), x, "{s}");
        }
        assert_eq!(SciNum::ZERO.to_string().parse::<SciNum>().unwrap(), SciNum::ZERO);
        assert_eq!(SciNum::from_real(354.0).unwrap().to_string(), "+3.5400000000000000e+2");
        assert_eq!("354".parse::<SciNum>().unwrap(), SciNum::from_real(354.0).unwrap());
    }

    fn arb_sci() -> impl Strategy<Value = SciNum> {
        (prop_oneof![Just(-1i8), Just(1i8)], 1.0f64..10.0, -1000i64..1000)
            .prop_map(|(s, m, e)| SciNum::from_parts(s, m, e).unwrap())
    }

    proptest! {
        #[test]
        fn text_round_trip_is_bit_exact(x in arb_sci()) {
            let y: SciNum = x.to_string().parse().unwrap();
            prop_assert_eq!(y.sign(), x.sign());
            prop_assert_eq!(y.exponent(), x.exponent());
            prop_assert_eq!(y.mantissa().to_bits(), x.mantissa().to_bits());
        }

        #[test]
        fn operations_stay_normalized(a in arb_sci(), b in arb_sci()) {
            for r in [a.mul(b).unwrap(), a.add(b).unwrap(), a.div(b).unwrap()] {
                if !r.is_zero() {
                    prop_assert!((1.0..10.0).contains(&r.mantissa()));
                    let d = r.first_digit().unwrap();
                    prop_assert!((1..=9).contains(&d));
                }
            }
        }

        #[test]
        fn add_commutes(a in arb_sci(), b in arb_sci()) {
            prop_assert_eq!(a.add(b).unwrap(), b.add(a).unwrap());
        }

        #[test]
        fn mul_commutes_and_associates(a in arb_sci(), b in arb_sci(), c in arb_sci()) {
            prop_assert_eq!(a.mul(b).unwrap(), b.mul(a).unwrap());
            let l = a.mul(b).unwrap().mul(c).unwrap();
            let r = a.mul(b.mul(c).unwrap()).unwrap();
            prop_assert_eq!(l.exponent() - r.exponent(), 0);
            prop_assert!((l.mantissa() - r.mantissa()).abs() <= 2.0 * 10.0 * f64::EPSILON);
        }

        #[test]
        fn agrees_with_big_integers(x in 1u128..10u128.pow(30), y in 1u128..10u128.pow(30)) {
            let sx = SciNum::from_real(x as f64).unwrap();
            let sy = SciNum::from_real(y as f64).unwrap();
            // Exact operands are those rounded to binary64.
            let bx = BigUint::from(x as f64 as u128);
            let by = BigUint::from(y as f64 as u128);
            for (got, want) in [(sx.mul(sy).unwrap(), &bx * &by), (sx.add(sy).unwrap(), &bx + &by)] {
                let (m, e) = big_to_sci(&want);
                prop_assert_eq!(got.exponent(), e);
                prop_assert!((got.mantissa() - m).abs() <= 10.0 * m * f64::EPSILON,
                    "{} vs {}e{}", got, m, e);
            }
        }
    }
}
