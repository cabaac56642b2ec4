//! Exact rationals for the parameters shared by encoder and decoder.
//!
//! Everything that must agree bit-for-bit across machines (bin edges, bin
//! centers, the helper probability) is expressed with [`Rational`]. Floats
//! coming out of a predictor are compared against these values exactly via
//! [`cmp_f64_frac`]; a finite `f64` is a dyadic rational, so no rounding is
//! involved in the comparison.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RationalError {
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("value does not fit in a 64-bit rational")]
    Overflow,
    #[error("cannot parse {0:?} as a rational")]
    Parse(String),
}

/// `num / den` in lowest terms with `den > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Rational {
    num: i64,
    den: u64,
}

fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl Rational {
    pub const ZERO: Rational = Rational { num: 0, den: 1 };
    pub const ONE: Rational = Rational { num: 1, den: 1 };

    pub fn new(num: i64, den: u64) -> Result<Self, RationalError> {
        if den == 0 {
            return Err(RationalError::ZeroDenominator);
        }
        Self::from_wide(num as i128, den as u128)
    }

    /// Reduce an `i128 / u128` pair and narrow it to 64 bits.
    fn from_wide(num: i128, den: u128) -> Result<Self, RationalError> {
        if den == 0 {
            return Err(RationalError::ZeroDenominator);
        }
        let g = gcd_u128(num.unsigned_abs(), den).max(1);
        let n = num / g as i128;
        let d = den / g;
        Ok(Rational {
            num: i64::try_from(n).map_err(|_| RationalError::Overflow)?,
            den: u64::try_from(d).map_err(|_| RationalError::Overflow)?,
        })
    }

    pub fn from_integer(n: i64) -> Self {
        Rational { num: n, den: 1 }
    }

    pub fn numer(&self) -> i64 {
        self.num
    }

    pub fn denom(&self) -> u64 {
        self.den
    }

    pub fn is_positive(&self) -> bool {
        self.num > 0
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn checked_add(self, rhs: Self) -> Result<Self, RationalError> {
        let n = self.num as i128 * rhs.den as i128 + rhs.num as i128 * self.den as i128;
        let d = self.den as u128 * rhs.den as u128;
        Self::from_wide(n, d)
    }

    pub fn checked_sub(self, rhs: Self) -> Result<Self, RationalError> {
        self.checked_add(Rational {
            num: rhs.num.checked_neg().ok_or(RationalError::Overflow)?,
            den: rhs.den,
        })
    }

    pub fn checked_mul(self, rhs: Self) -> Result<Self, RationalError> {
        let n = self.num as i128 * rhs.num as i128;
        let d = self.den as u128 * rhs.den as u128;
        Self::from_wide(n, d)
    }

    pub fn checked_div(self, rhs: Self) -> Result<Self, RationalError> {
        if rhs.num == 0 {
            return Err(RationalError::ZeroDenominator);
        }
        let sign: i128 = if rhs.num < 0 { -1 } else { 1 };
        let n = sign * self.num as i128 * rhs.den as i128;
        let d = self.den as u128 * rhs.num.unsigned_abs() as u128;
        Self::from_wide(n, d)
    }

    pub fn recip(self) -> Result<Self, RationalError> {
        Rational::ONE.checked_div(self)
    }

    /// Exact comparison of a finite float against this rational.
    pub fn cmp_f64(&self, x: f64) -> Ordering {
        cmp_f64_frac(x, self.num as i128, self.den as u128).reverse()
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        let l = self.num as i128 * other.den as i128;
        let r = other.num as i128 * self.den as i128;
        l.cmp(&r)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl From<Rational> for String {
    fn from(r: Rational) -> String {
        r.to_string()
    }
}

impl TryFrom<String> for Rational {
    type Error = RationalError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl FromStr for Rational {
    type Err = RationalError;

    /// Accepts `"num/den"`, plain integers, and decimals with an optional
    /// exponent (`"0.001"`, `"1e-5"`, `"-2.5E3"`). Decimals convert exactly.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || RationalError::Parse(s.to_string());
        let t = s.trim();
        if let Some((n, d)) = t.split_once('/') {
            let n: i64 = n.trim().parse().map_err(|_| bad())?;
            let d: u64 = d.trim().parse().map_err(|_| bad())?;
            return Rational::new(n, d);
        }

        let (mantissa, exp) = match t.find(['e', 'E']) {
            Some(i) => (&t[..i], t[i + 1..].parse::<i32>().map_err(|_| bad())?),
            None => (t, 0),
        };
        let (negative, digits) = match mantissa.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
        };
        let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad());
        }
        if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }

        let mut num: i128 = 0;
        for b in int_part.bytes().chain(frac_part.bytes()) {
            num = num
                .checked_mul(10)
                .and_then(|v| v.checked_add((b - b'0') as i128))
                .ok_or(RationalError::Overflow)?;
        }
        let scale = exp as i64 - frac_part.len() as i64;
        let pow10 = |k: u32| 10i128.checked_pow(k).ok_or(RationalError::Overflow);
        let (n, d) = if scale >= 0 {
            let k = u32::try_from(scale).map_err(|_| RationalError::Overflow)?;
            (num.checked_mul(pow10(k)?).ok_or(RationalError::Overflow)?, 1u128)
        } else {
            let k = u32::try_from(-scale).map_err(|_| RationalError::Overflow)?;
            (num, pow10(k)? as u128)
        };
        Rational::from_wide(if negative { -n } else { n }, d)
    }
}

/// Compare `a * 2^sa` with `b * 2^sb` for unsigned `a`, `b`.
fn cmp_scaled(a: u128, sa: u32, b: u128, sb: u32) -> Ordering {
    let m = sa.min(sb);
    let (sa, sb) = (sa - m, sb - m);
    // At most one side still carries a shift.
    if sa > 0 {
        if a == 0 {
            return 0u128.cmp(&b);
        }
        if sa >= a.leading_zeros() {
            return Ordering::Greater;
        }
        (a << sa).cmp(&b)
    } else if sb > 0 {
        if b == 0 {
            return a.cmp(&0);
        }
        if sb >= b.leading_zeros() {
            return Ordering::Less;
        }
        a.cmp(&(b << sb))
    } else {
        a.cmp(&b)
    }
}

/// Exact ordering of the finite float `x` relative to `num / den`.
///
/// `den` must be positive and below `2^75` so that `mantissa * den` fits in
/// 128 bits.
///
/// # Panics
///
/// Panics if `x` is NaN or infinite.
pub fn cmp_f64_frac(x: f64, num: i128, den: u128) -> Ordering {
    assert!(x.is_finite(), "cannot compare non-finite float {x}");
    debug_assert!(den > 0 && den < (1u128 << 75));

    let x_neg = x.is_sign_negative() && x != 0.0;
    let q_neg = num < 0;
    if x == 0.0 {
        return 0i128.cmp(&num);
    }
    if x_neg != q_neg {
        return if x_neg { Ordering::Less } else { Ordering::Greater };
    }

    let bits = x.abs().to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    let (mantissa, exp) = if biased == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), biased - 1075)
    };

    // |x| = mantissa * 2^exp ; compare mantissa * den * 2^exp with |num|.
    let lhs = mantissa as u128 * den;
    let rhs = num.unsigned_abs();
    let ord = if exp >= 0 {
        cmp_scaled(lhs, exp as u32, rhs, 0)
    } else {
        cmp_scaled(lhs, 0, rhs, (-exp) as u32)
    };
    if x_neg {
        ord.reverse()
    } else {
        ord
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(n: i64, d: u64) -> Rational {
        Rational::new(n, d).unwrap()
    }

    #[test]
    fn reduces_to_lowest_terms() {
        let x = r(6, 8);
        assert_eq!((x.numer(), x.denom()), (3, 4));
        assert_eq!(r(0, 5), Rational::ZERO);
        assert_eq!(r(-4, 6), r(-2, 3));
    }

    #[test]
    fn parses_decimals_exactly() {
        assert_eq!("0.001".parse::<Rational>().unwrap(), r(1, 1000));
        assert_eq!("0.00001".parse::<Rational>().unwrap(), r(1, 100_000));
        assert_eq!("0.05".parse::<Rational>().unwrap(), r(1, 20));
        assert_eq!("1e-5".parse::<Rational>().unwrap(), r(1, 100_000));
        assert_eq!("-2.5E1".parse::<Rational>().unwrap(), r(-25, 1));
        assert_eq!("3/2000".parse::<Rational>().unwrap(), r(3, 2000));
        assert_eq!(".5".parse::<Rational>().unwrap(), r(1, 2));
        assert!("abc".parse::<Rational>().is_err());
        assert!("1/0".parse::<Rational>().is_err());
        assert!(".".parse::<Rational>().is_err());
    }

    #[test]
    fn arithmetic() {
        assert_eq!(r(1, 1000).checked_div(r(1, 20)).unwrap(), r(1, 50));
        assert_eq!(r(1, 10).checked_sub(r(1, 1000)).unwrap(), r(99, 1000));
        assert_eq!(r(1, 20).recip().unwrap(), r(20, 1));
        assert!(r(i64::MAX, 1).checked_add(r(1, 1)).is_err());
    }

    #[test]
    fn float_comparison_is_exact() {
        // 0.1 as a double is slightly above 1/10.
        assert_eq!(cmp_f64_frac(0.1, 1, 10), Ordering::Greater);
        assert_eq!(cmp_f64_frac(0.5, 1, 2), Ordering::Equal);
        assert_eq!(cmp_f64_frac(0.25, 1, 3), Ordering::Less);
        assert_eq!(cmp_f64_frac(-0.5, 1, 3), Ordering::Less);
        assert_eq!(cmp_f64_frac(-0.5, -1, 2), Ordering::Equal);
        assert_eq!(cmp_f64_frac(0.0, 0, 1), Ordering::Equal);
        assert_eq!(cmp_f64_frac(f64::MIN_POSITIVE / 4.0, 0, 1), Ordering::Greater);
        assert_eq!(cmp_f64_frac(1e300, i64::MAX as i128, 1), Ordering::Greater);
        assert_eq!(cmp_f64_frac(5e-324, 1, u64::MAX as u128), Ordering::Less);
        assert_eq!(r(1, 10).cmp_f64(0.1), Ordering::Less);
    }

    proptest! {
        #[test]
        fn float_comparison_matches_bigint(x in -4.0f64..4.0, n in -1_000_000i64..1_000_000, d in 1u64..1_000_000) {
            use num_bigint::BigInt;
            use num_rational::BigRational;
            let exact = BigRational::from_float(x).unwrap();
            let q = BigRational::new(BigInt::from(n), BigInt::from(d));
            prop_assert_eq!(cmp_f64_frac(x, n as i128, d as u128), exact.cmp(&q));
        }

        #[test]
        fn display_parse_round_trip(n in any::<i64>(), d in 1u64..u64::MAX) {
            let x = Rational::new(n, d).unwrap();
            prop_assert_eq!(x.to_string().parse::<Rational>().unwrap(), x);
        }
    }
}
