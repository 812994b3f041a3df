use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::ProbError;

/// The exact rational value of a finite double.
pub fn rational_of(v: f64) -> BigRational {
    BigRational::from_float(v).unwrap_or_else(BigRational::zero)
}

/// Read a probability literal exactly: `"3/8"`, `"0.125"`, or `"1"`.
pub fn parse_probability(text: &str) -> Result<BigRational, ProbError> {
    let s = text.trim();
    let bad = || ProbError::Literal(text.to_string());
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| bad())?;
        let den: BigInt = den.trim().parse().map_err(|_| bad())?;
        if den.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(num, den));
    }
    let (int_part, frac_part) = s.split_once('.').unwrap_or((s, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    if !digits.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let num: BigInt = digits.parse().map_err(|_| bad())?;
    let mut den = BigInt::one();
    for _ in 0..frac_part.len() {
        den *= 10;
    }
    Ok(BigRational::new(num, den))
}
