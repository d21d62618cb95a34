//! Scalar abstractions shared by the numeric modules.
//!
//! Three families are used across the crate:
//!
//! * [`LevelScalar`] drives the gray-level remapping code. It is implemented
//!   for `f32`, `f64` and the exact rationals [`Rational64`] / [`Rational128`],
//!   so level mappings can be evaluated either in floating point or exactly.
//! * [`Real`] is the floating-point bound used by metrics and the classifier.
//! * Calibration is written against [`nalgebra::RealField`] directly.

use std::fmt::Debug;

use num_rational::Ratio;
use num_traits::{Float, FromPrimitive, Num, ToPrimitive};

pub use num_rational::{Rational64, Ratio as Rational};

/// Exact rational with 128-bit numerator and denominator.
pub type Rational128 = Ratio<i128>;

/// Numeric type able to evaluate gray-level mapping formulas.
///
/// Only field arithmetic, ordering and a floor are needed, which is what
/// makes exact rational instantiations possible.
pub trait LevelScalar: Num + Copy + PartialOrd + Debug + Send + Sync {
    fn from_count(count: u64) -> Self;

    /// `num / den`, exact for rationals and correctly rounded for floats.
    fn from_ratio(num: i64, den: i64) -> Self;

    /// Largest integer not greater than `self`, or `None` when not finite.
    fn floor_to_i64(self) -> Option<i64>;

    /// Half-up rounding to the nearest integer.
    fn round_half_up(self) -> Option<i64> {
        (self + Self::from_ratio(1, 2)).floor_to_i64()
    }
}

macro_rules! impl_level_float {
    ($t:ty) => {
        impl LevelScalar for $t {
            fn from_count(count: u64) -> Self {
                count as $t
            }

            fn from_ratio(num: i64, den: i64) -> Self {
                num as $t / den as $t
            }

            fn floor_to_i64(self) -> Option<i64> {
                if self.is_finite() {
                    self.floor().to_i64()
                } else {
                    None
                }
            }
        }
    };
}

impl_level_float!(f32);
impl_level_float!(f64);

impl LevelScalar for Rational64 {
    fn from_count(count: u64) -> Self {
        Ratio::from_integer(i64::try_from(count).expect("count exceeds i64"))
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        Ratio::new(num, den)
    }

    fn floor_to_i64(self) -> Option<i64> {
        Some(self.floor().to_integer())
    }
}

impl LevelScalar for Rational128 {
    fn from_count(count: u64) -> Self {
        Ratio::from_integer(i128::from(count))
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        Ratio::new(i128::from(num), i128::from(den))
    }

    fn floor_to_i64(self) -> Option<i64> {
        self.floor().to_integer().to_i64()
    }
}

/// Floating-point scalar: `f32` or `f64`.
pub trait Real: Float + FromPrimitive + Debug + Default + Send + Sync + 'static {
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 converts to every Real")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Parses `"p/q"`, an integer or a plain decimal such as `"1.1"` into the
/// exact rational it denotes (`11/10`, not the nearest binary fraction).
pub fn parse_exact(text: &str) -> Option<Rational64> {
    let t = text.trim();
    if let Some((p, q)) = t.split_once('/') {
        let (p, q): (i64, i64) = (p.trim().parse().ok()?, q.trim().parse().ok()?);
        return (q != 0).then(|| Rational64::new(p, q));
    }
    let (negative, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() || !(int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit())) {
        return None;
    }
    let digits: i64 = format!("{int}{frac}").parse().ok()?;
    let scale = 10i64.checked_pow(u32::try_from(frac.len()).ok()?)?;
    let r = Rational64::new(digits, scale);
    Some(if negative { -r } else { r })
}

/// `v` rounded to 9 significant digits, the precision of every number this
/// crate writes to a file.
pub fn sig9(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{v:.8e}").parse().unwrap_or(v)
}
