//! Emulation of IEEE 754 binary16/binary32/binary64 arithmetic.
//!
//! Values are carried in an `f64` that always holds a number exactly
//! representable in the target format. Every operation computes its result
//! in binary64 and rounds once to the target format (round to nearest, ties
//! to even).
//!
//! Why a binary64 intermediate is exact enough:
//!
//! * Products of two binary16 (11-bit) or binary32 (24-bit) significands need
//!   at most 48 bits, so `a * b` in binary64 is the exact product. The
//!   exponent range of binary64 also covers every product of two binary32
//!   subnormals (2^-298).
//! * Sums may not be exact in binary64 (e.g. `2^127 + 2^-149`), but binary64
//!   has 53 >= 2 * 24 + 2 significand bits, so rounding first to binary64 and
//!   then to binary32 or binary16 yields the same result as a single correct
//!   rounding of the exact sum (double rounding is innocuous for +, -, *).
//!
//! Under flush-to-zero, tininess is detected after rounding with an
//! unbounded exponent, which is how x86 SSE with FTZ behaves.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Format {
    Binary16,
    Binary32,
    Binary64,
}

impl Format {
    /// Explicit (stored) significand bits.
    fn mantissa_bits(self) -> i32 {
        match self {
            Format::Binary16 => 10,
            Format::Binary32 => 23,
            Format::Binary64 => 52,
        }
    }

    fn min_exponent(self) -> i32 {
        match self {
            Format::Binary16 => -14,
            Format::Binary32 => -126,
            Format::Binary64 => -1022,
        }
    }

    fn max_exponent(self) -> i32 {
        match self {
            Format::Binary16 => 15,
            Format::Binary32 => 127,
            Format::Binary64 => 1023,
        }
    }

    /// Smallest positive normal number.
    pub fn min_normal(self) -> f64 {
        pow2(self.min_exponent())
    }

    /// Largest finite number.
    pub fn max_finite(self) -> f64 {
        let p = self.mantissa_bits();
        (2.0 - pow2(-p)) * pow2(self.max_exponent())
    }

    pub fn short_name(self) -> &'static str {
        match self {
            Format::Binary16 => "f16",
            Format::Binary32 => "f32",
            Format::Binary64 => "f64",
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "f16" | "binary16" | "half" => Ok(Format::Binary16),
            "f32" | "binary32" | "single" => Ok(Format::Binary32),
            "f64" | "binary64" | "double" => Ok(Format::Binary64),
            other => Err(Error::InvalidArgument(format!(
                "unknown precision `{other}` (expected f16, f32 or f64)"
            ))),
        }
    }
}

/// A target floating-point format plus its underflow semantics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Precision {
    pub format: Format,
    pub flush_to_zero: bool,
}

impl Precision {
    pub const F16: Precision = Precision::new(Format::Binary16);
    pub const F32: Precision = Precision::new(Format::Binary32);
    pub const F64: Precision = Precision::new(Format::Binary64);

    /// Flush-to-zero is on by default.
    pub const fn new(format: Format) -> Self {
        Precision {
            format,
            flush_to_zero: true,
        }
    }

    pub const fn gradual(format: Format) -> Self {
        Precision {
            format,
            flush_to_zero: false,
        }
    }

    /// The underflow threshold: smallest positive normal of the format.
    pub fn eps_uf(&self) -> f64 {
        self.format.min_normal()
    }

    pub fn round(&self, x: f64) -> f64 {
        round_to(*self, x)
    }

    pub fn mul(&self, a: f64, b: f64) -> FpOutcome {
        fp_mul(*self, a, b)
    }

    pub fn add(&self, a: f64, b: f64) -> FpOutcome {
        fp_add(*self, a, b)
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.format)?;
        if !self.flush_to_zero {
            f.write_str("-gradual")?;
        }
        Ok(())
    }
}

/// Result of one emulated operation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FpOutcome {
    pub value: f64,
    /// A non-zero result below the underflow threshold was flushed to zero.
    pub underflowed: bool,
    /// Gradual-underflow mode only: a non-zero result landed below the
    /// underflow threshold (subnormal, or lost entirely).
    pub denormal: bool,
    pub overflowed: bool,
}

impl FpOutcome {
    fn exact(value: f64) -> Self {
        FpOutcome {
            value,
            underflowed: false,
            denormal: false,
            overflowed: false,
        }
    }

    /// Any kind of underflow event (flush or gradual).
    pub fn underflow_event(&self) -> bool {
        self.underflowed || self.denormal
    }
}

pub fn eps_uf(p: Precision) -> f64 {
    p.eps_uf()
}

/// Rounds `x` to the nearest value of `p.format`. Overflow yields a signed
/// infinity.
pub fn round_to(p: Precision, x: f64) -> f64 {
    round_outcome(p, x).value
}

pub fn fp_mul(p: Precision, a: f64, b: f64) -> FpOutcome {
    debug_assert!(is_representable(p.format, a) && is_representable(p.format, b));
    if p.format == Format::Binary64 {
        return host_binary64(
            p,
            a * b,
            a != 0.0 && b != 0.0,
            a.is_finite() && b.is_finite(),
        );
    }
    round_outcome(p, a * b)
}

pub fn fp_add(p: Precision, a: f64, b: f64) -> FpOutcome {
    debug_assert!(is_representable(p.format, a) && is_representable(p.format, b));
    if p.format == Format::Binary64 {
        // A binary64 sum that lands at zero is an exact cancellation.
        return host_binary64(p, a + b, false, a.is_finite() && b.is_finite());
    }
    round_outcome(p, a + b)
}

/// True if `x` is exactly representable in `format` (ignoring FTZ).
pub fn is_representable(format: Format, x: f64) -> bool {
    !x.is_finite() || round_outcome(Precision::gradual(format), x).value == x
}

fn host_binary64(p: Precision, r: f64, operands_nonzero: bool, finite_in: bool) -> FpOutcome {
    let eps = p.eps_uf();
    let mut out = FpOutcome::exact(r);
    out.overflowed = finite_in && r.is_infinite();
    let lost = r == 0.0 && operands_nonzero;
    if lost || (r != 0.0 && r.abs() < eps) {
        if p.flush_to_zero {
            out.value = 0.0f64.copysign(r);
            out.underflowed = true;
        } else {
            out.denormal = true;
        }
    }
    out
}

fn round_outcome(p: Precision, x: f64) -> FpOutcome {
    let format = p.format;
    if x == 0.0 || !x.is_finite() {
        return FpOutcome::exact(x);
    }
    if format == Format::Binary64 {
        return host_binary64(p, x, false, true);
    }

    let mant = format.mantissa_bits();
    let emin = format.min_exponent();
    let a = x.abs();
    let bits = a.to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i32;
    let mut out = FpOutcome::exact(0.0);

    // binary64 subnormals are far below half the smallest binary32 subnormal.
    if biased == 0 {
        if p.flush_to_zero {
            out.underflowed = true;
        } else {
            out.denormal = true;
        }
        out.value = 0.0f64.copysign(x);
        return out;
    }
    let e = biased - 1023;

    if p.flush_to_zero && e < emin - 1 {
        // Even rounding up cannot reach 2^emin.
        out.underflowed = true;
        out.value = 0.0f64.copysign(x);
        return out;
    }

    let quantum_exp = if p.flush_to_zero {
        e - mant
    } else {
        e.max(emin) - mant
    };
    let scaled = a * pow2(-quantum_exp);
    let rounded = scaled.round_ties_even() * pow2(quantum_exp);

    if rounded > format.max_finite() {
        out.overflowed = true;
        out.value = f64::INFINITY.copysign(x);
        return out;
    }
    if rounded < format.min_normal() {
        if p.flush_to_zero {
            out.underflowed = true;
            out.value = 0.0f64.copysign(x);
            return out;
        }
        out.denormal = true;
    }
    out.value = rounded.copysign(x);
    out
}

/// 2^k for k in the binary64 normal exponent range.
fn pow2(k: i32) -> f64 {
    debug_assert!((-1022..=1023).contains(&k));
    f64::from_bits(((k + 1023) as u64) << 52)
}
