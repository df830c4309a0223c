//! Exact rationals used for main terms and Cauchy–Schwarz bounds.

use num_rational::Ratio;
use num_traits::ToPrimitive;
use serde::Serializer;

pub type Rational = Ratio<i128>;

/// `q^e` as an exact integer.
pub fn int_pow(q: u64, e: u32) -> i128 {
    (q as i128).pow(e)
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Serializes as the string `"num/den"` (or `"num"` for integers).
pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}
