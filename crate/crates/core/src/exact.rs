//! Exact comparisons between integer counts and floating target levels.
//!
//! Every threshold rule in this crate reduces to a test of the form
//! `a <= b * alpha` with non-negative integer `a`, `b` and a finite `alpha`.
//! The float is decomposed into `mantissa * 2^exponent` so the comparison is
//! decided without rounding.

use std::cmp::Ordering;
use std::fmt;

/// Returns `true` iff `lhs <= rhs * alpha` holds over the reals.
///
/// `rhs` must fit in 64 bits; `alpha` must be finite and non-negative.
pub fn le_scaled(lhs: u128, rhs: u128, alpha: f64) -> bool {
    debug_assert!(alpha.is_finite() && alpha >= 0.0);
    debug_assert!(rhs <= u64::MAX as u128);
    if lhs == 0 {
        return true;
    }
    if rhs == 0 || alpha == 0.0 {
        return false;
    }
    let (mant, exp) = decompose(alpha);
    let scaled_rhs = rhs * mant as u128;
    if exp >= 0 {
        // alpha >= 2^52: the right side is astronomically large.
        return match scaled_rhs.checked_shl(exp as u32) {
            Some(v) if v >> exp == scaled_rhs => lhs <= v,
            _ => true,
        };
    }
    let shift = (-exp) as u32;
    if shift >= 128 || lhs.leading_zeros() < shift {
        // lhs * 2^shift >= 2^128 > rhs * mant
        return false;
    }
    (lhs << shift) <= scaled_rhs
}

/// [`le_scaled`] after cancelling the common factor of `lhs` and `rhs`.
///
/// Lets callers form products of counts whose raw `rhs` exceeds 64 bits.
pub fn le_scaled_reduced(lhs: u128, rhs: u128, alpha: f64) -> bool {
    let g = gcd(lhs, rhs);
    if g > 1 {
        le_scaled(lhs / g, rhs / g, alpha)
    } else {
        le_scaled(lhs, rhs, alpha)
    }
}

pub fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// `(mantissa, exponent)` with `x = mantissa * 2^exponent` for finite `x > 0`.
fn decompose(x: f64) -> (u64, i32) {
    let bits = x.to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    if biased == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), biased - 1075)
    }
}

/// A non-negative rational with 64-bit numerator and denominator.
///
/// p-values and e-values are ratios of counts; keeping the integer parts lets
/// equality and order be decided exactly.
#[derive(Debug, Clone, Copy)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    pub const ZERO: Ratio = Ratio { num: 0, den: 1 };

    pub fn new(num: u64, den: u64) -> Self {
        assert!(den > 0, "zero denominator");
        Ratio { num, den }
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn is_zero(self) -> bool {
        self.num == 0
    }
}

impl PartialEq for Ratio {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Ratio {}

impl PartialOrd for Ratio {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ratio {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num as u128 * other.den as u128).cmp(&(other.num as u128 * self.den as u128))
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decompose_roundtrips() {
        for x in [0.1, 0.05, 1.0, 0.3333, 5e-324, 2.5e-310, 123456.789] {
            let (m, e) = decompose(x);
            assert_eq!(m as f64 * 2f64.powi(e), x);
        }
    }

    #[test]
    fn le_scaled_boundaries() {
        // 0.5 is exact in binary
        assert!(le_scaled(1, 2, 0.5));
        assert!(!le_scaled(2, 2, 0.5));
        // 0.1 is slightly above 1/10 in binary, so 1 <= 10 * 0.1 holds
        assert!(le_scaled(1, 10, 0.1));
        // 0.3 is slightly below 3/10, so 3 <= 10 * 0.3 fails exactly
        assert!(!le_scaled(3, 10, 0.3));
        assert!(le_scaled(0, 0, 0.0));
        assert!(!le_scaled(1, 5, 0.0));
        assert!(!le_scaled(1, 1, 5e-324));
        assert!(le_scaled(u64::MAX as u128, 1, 1e300));
    }

    #[test]
    fn ratio_order_is_exact() {
        assert_eq!(Ratio::new(1, 3), Ratio::new(2, 6));
        assert!(Ratio::new(1, 3) < Ratio::new(334, 1000));
        assert!(Ratio::ZERO < Ratio::new(1, u64::MAX));
    }
}
