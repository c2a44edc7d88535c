//! Exact rational helpers used by the contention engine and the I/O layers.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

pub fn from_u64(v: u64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn ratio(num: u64, den: u64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Parses a plain decimal literal (`12`, `3.25`, `-0.5`, `1e3`, `2.5E-2`)
/// into an exact rational. Returns `None` for anything else.
pub fn parse_decimal(text: &str) -> Option<Rational> {
    let s = text.trim();
    if s.is_empty() {
        return None;
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let exp: i32 = s[pos + 1..].parse().ok()?;
            (&s[..pos], exp)
        }
        None => (s, 0),
    };
    if exponent.unsigned_abs() > 64 {
        return None;
    }
    let (negative, digits) = match mantissa.as_bytes().first()? {
        b'-' => (true, &mantissa[1..]),
        b'+' => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (int_part, frac_part) = match digits.find('.') {
        Some(pos) => (&digits[..pos], &digits[pos + 1..]),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    if int_part.len() + frac_part.len() > 60 {
        return None;
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut numer: BigInt = all_digits.parse().ok()?;
    if negative {
        numer = -numer;
    }
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10u32);
    let value = if scale >= 0 {
        Rational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    Some(value)
}

/// Smallest integer `>= v`, for non-negative `v` that fits in `u64`.
pub fn ceil_u64(v: &Rational) -> Option<u64> {
    if v.is_negative() {
        return None;
    }
    let (q, r) = v.numer().div_rem(v.denom());
    let q = if r.is_zero() { q } else { q + BigInt::one() };
    q.to_u64()
}

/// Nearest integer, ties rounded up.
pub fn round_u64(v: &Rational) -> Option<u64> {
    let half = Rational::new(BigInt::one(), BigInt::from(2));
    (v + half).floor().to_integer().to_u64()
}

pub fn to_f64(v: &Rational) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

/// Exact decimal text when the expansion terminates (`12.5`), otherwise
/// `num/den`. Both forms read back through `parse_bandwidth`.
pub fn to_decimal(v: &Rational) -> String {
    let mut den = v.denom().clone();
    let (two, five) = (BigInt::from(2), BigInt::from(5));
    let (mut twos, mut fives) = (0usize, 0usize);
    while den.is_even() {
        den /= &two;
        twos += 1;
    }
    while (&den % &five).is_zero() {
        den /= &five;
        fives += 1;
    }
    if !den.is_one() {
        return v.to_string();
    }
    let digits = twos.max(fives);
    let scaled = (v * Rational::from_integer(num_traits::pow(BigInt::from(10), digits))).to_integer();
    let sign = if scaled.is_negative() { "-" } else { "" };
    let text = scaled.abs().to_string();
    if digits == 0 {
        return format!("{sign}{text}");
    }
    let padded = format!("{text:0>width$}", width = digits + 1);
    let (int, frac) = padded.split_at(padded.len() - digits);
    format!("{sign}{int}.{frac}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_decimals() {
        assert_eq!(to_decimal(&ratio(25, 2)), "12.5");
        assert_eq!(to_decimal(&from_u64(16)), "16");
        assert_eq!(to_decimal(&ratio(1, 40)), "0.025");
        assert_eq!(to_decimal(&-ratio(3, 4)), "-0.75");
        assert_eq!(to_decimal(&ratio(1, 3)), "1/3");
        for text in ["0.001", "3.2", "100", "7.125"] {
            assert_eq!(to_decimal(&parse_decimal(text).unwrap()), text);
        }
    }

    #[test]
    fn parses_decimals_exactly() {
        assert_eq!(parse_decimal("3.2"), Some(ratio(16, 5)));
        assert_eq!(parse_decimal("16"), Some(from_u64(16)));
        assert_eq!(parse_decimal("1e3"), Some(from_u64(1000)));
        assert_eq!(parse_decimal("2.5E-2"), Some(ratio(1, 40)));
        assert_eq!(parse_decimal(".5"), Some(ratio(1, 2)));
        assert_eq!(parse_decimal("-0.5"), Some(-ratio(1, 2)));
        assert_eq!(parse_decimal(""), None);
        assert_eq!(parse_decimal("."), None);
        assert_eq!(parse_decimal("1.2.3"), None);
        assert_eq!(parse_decimal("abc"), None);
        assert_eq!(parse_decimal("1e99999"), None);
    }

    #[test]
    fn ceil_and_round() {
        assert_eq!(ceil_u64(&ratio(10, 4)), Some(3));
        assert_eq!(ceil_u64(&ratio(8, 4)), Some(2));
        assert_eq!(round_u64(&ratio(5, 2)), Some(3));
        assert_eq!(round_u64(&ratio(9, 4)), Some(2));
        assert_eq!(ceil_u64(&-ratio(1, 2)), None);
    }
}
