//! Numeric contract shared by the exact-rational and binary64 backends.
//!
//! Exact mode is closed under the update rule (means of rationals are
//! rational), so fixed points are decided by exact comparison. Float mode
//! pushes every tolerance into [`crate::sim::SimParams`]; nothing here
//! compares against a hidden epsilon.

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, Signed, ToPrimitive};
use rand::Rng;

pub trait Scalar:
    Clone
    + PartialEq
    + PartialOrd
    + Debug
    + Display
    + Num
    + Signed
    + ToPrimitive
    + Send
    + Sync
    + 'static
{
    /// True for the arbitrary-precision rational backend.
    const EXACT: bool;

    fn from_int(v: i64) -> Self;

    /// num / den, den > 0.
    fn from_ratio(num: i64, den: i64) -> Self;

    /// Exact embedding of a binary64 value (rationals represent it exactly).
    fn from_f64_exact(v: f64) -> Self;

    /// Parse one coordinate token from an instance file.
    fn parse_coord(s: &str) -> Result<Self, String>;

    /// Serialize so that `parse_coord(render(x)) == x` bit-for-bit.
    fn render(&self) -> String;

    /// Uniform draw from [0, 1). Exact mode draws k/2^32, so generated
    /// coordinates have denominator at most 2^32.
    fn sample_unit<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Total bits across numerator and denominator; None for floats.
    fn bit_size(&self) -> Option<u64>;
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_int(v: i64) -> Self {
        v as f64
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn from_f64_exact(v: f64) -> Self {
        v
    }

    fn parse_coord(s: &str) -> Result<Self, String> {
        f64::from_str(s).map_err(|e| e.to_string())
    }

    fn render(&self) -> String {
        // Display for f64 prints the shortest string that round-trips.
        format!("{self}")
    }

    fn sample_unit<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let k: u32 = rng.gen();
        k as f64 / 4294967296.0
    }

    fn bit_size(&self) -> Option<u64> {
        None
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_int(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den > 0);
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn from_f64_exact(v: f64) -> Self {
        BigRational::from_float(v).expect("finite float")
    }

    fn parse_coord(s: &str) -> Result<Self, String> {
        // Accepts "p/q" and plain integers.
        BigRational::from_str(s).map_err(|e| e.to_string())
    }

    fn render(&self) -> String {
        format!("{self}")
    }

    fn sample_unit<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let k: u32 = rng.gen();
        BigRational::new(BigInt::from(k), BigInt::from(1u64 << 32))
    }

    fn bit_size(&self) -> Option<u64> {
        Some(self.numer().bits() + self.denom().bits())
    }
}

/// Draw a rational uniformly from the open interval (0, hi) with denominator
/// at most 2^16. Used for the per-agent noise parameters.
pub fn sample_open_rational<R: Rng + ?Sized>(rng: &mut R, hi: &BigRational) -> BigRational {
    let den = 1u32 << 16;
    let k = rng.gen_range(1..den);
    BigRational::new(BigInt::from(k), BigInt::from(den)) * hi
}
