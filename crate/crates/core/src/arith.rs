//! Arithmetic providers.
//!
//! Every numeric kernel in the crate is generic over [`Arithmetic`]. The host
//! provider is plain `f64`; [`PrecisionContext`] emulates a binary floating
//! point system with a `t`-bit significand (round-off unit `u = 2^-t`) by
//! rounding the host result of every elementary operation once.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A floating-point system: a rounding map applied after each operation.
///
/// Implementations must satisfy `round(x) = x(1 + δ)` with `|δ| ≤ unit_roundoff()`
/// and `round(-x) = -round(x)`.
pub trait Arithmetic: Send + Sync {
    fn unit_roundoff(&self) -> f64;

    fn round(&self, x: f64) -> f64;

    #[inline]
    fn add(&self, a: f64, b: f64) -> f64 {
        self.round(a + b)
    }

    #[inline]
    fn sub(&self, a: f64, b: f64) -> f64 {
        self.round(a - b)
    }

    #[inline]
    fn mul(&self, a: f64, b: f64) -> f64 {
        self.round(a * b)
    }

    #[inline]
    fn div(&self, a: f64, b: f64) -> f64 {
        self.round(a / b)
    }

    #[inline]
    fn sqrt(&self, a: f64) -> f64 {
        self.round(a.sqrt())
    }

    #[inline]
    fn acos(&self, a: f64) -> f64 {
        self.round(a.acos())
    }

    #[inline]
    fn asin(&self, a: f64) -> f64 {
        self.round(a.asin())
    }

    /// Sequential dot product, one rounding per multiply and per add.
    fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (x, y) in a.iter().zip(b) {
            acc = self.add(acc, self.mul(*x, *y));
        }
        acc
    }
}

/// Host `f64` arithmetic with no extra rounding.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct HostArithmetic;

impl Arithmetic for HostArithmetic {
    #[inline]
    fn unit_roundoff(&self) -> f64 {
        f64::EPSILON / 2.0
    }

    #[inline(always)]
    fn round(&self, x: f64) -> f64 {
        x
    }

    #[inline]
    fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }
}

/// Emulated precision: `t` significand bits, round-to-nearest-even.
///
/// The exponent range is the host's, so there is no emulated overflow or
/// underflow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrecisionContext {
    bits: u32,
}

impl PrecisionContext {
    pub const HOST_BITS: u32 = f64::MANTISSA_DIGITS;

    pub fn new(bits: u32) -> Result<Self> {
        if !(2..=Self::HOST_BITS).contains(&bits) {
            return Err(Error::InvalidPrecision(bits));
        }
        Ok(Self { bits })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// `u = 2^-t`.
    pub fn u(&self) -> f64 {
        (-(self.bits as f64)).exp2()
    }
}

impl Arithmetic for PrecisionContext {
    fn unit_roundoff(&self) -> f64 {
        self.u()
    }

    #[inline]
    fn round(&self, x: f64) -> f64 {
        round_to_bits(x, self.bits)
    }
}

/// Round `x` to a `bits`-bit significand, ties to even.
#[inline]
pub fn round_to_bits(x: f64, bits: u32) -> f64 {
    if bits >= f64::MANTISSA_DIGITS || !x.is_finite() {
        return x;
    }
    let raw = x.to_bits();
    let sign = raw & (1 << 63);
    let magnitude = raw & !(1 << 63);
    let shift = f64::MANTISSA_DIGITS - bits;
    let mask = (1u64 << shift) - 1;
    let lsb = (magnitude >> shift) & 1;
    // Adding half − 1 + lsb and truncating is round-half-even. A carry out
    // of the significand bumps the exponent field, which is the correctly
    // rounded result.
    let kept = (magnitude + (mask >> 1) + lsb) & !mask;
    f64::from_bits(sign | kept)
}

/// `r(x)` in the given context.
pub fn round_value(ctx: &PrecisionContext, x: f64) -> f64 {
    ctx.round(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoundedOp {
    Add,
    Sub,
    Mul,
    Div,
    Sqrt,
    Acos,
    Asin,
}

/// `r(a ∘ b)` with domain checks. Unary operators ignore `b`.
///
/// Arccos and arcsin arguments within `u` of `[-1, 1]` are clamped.
pub fn rounded_op(ctx: &PrecisionContext, op: RoundedOp, a: f64, b: Option<f64>) -> Result<f64> {
    let rhs = || b.ok_or_else(|| Error::Malformed(format!("{op:?} needs two operands")));
    match op {
        RoundedOp::Add => Ok(ctx.add(a, rhs()?)),
        RoundedOp::Sub => Ok(ctx.sub(a, rhs()?)),
        RoundedOp::Mul => Ok(ctx.mul(a, rhs()?)),
        RoundedOp::Div => {
            let d = rhs()?;
            if d == 0.0 {
                return Err(Error::DivisionByZero);
            }
            Ok(ctx.div(a, d))
        }
        RoundedOp::Sqrt => {
            if a < 0.0 {
                return Err(Error::NegativeSqrt(a));
            }
            Ok(ctx.sqrt(a))
        }
        RoundedOp::Acos => {
            let tol = ctx.u();
            if a.abs() > 1.0 + tol || a.is_nan() {
                return Err(Error::ArccosDomain(a));
            }
            Ok(ctx.acos(a.clamp(-1.0, 1.0)))
        }
        RoundedOp::Asin => {
            let tol = ctx.u();
            if a.abs() > 1.0 + tol || a.is_nan() {
                return Err(Error::ArccosDomain(a));
            }
            Ok(ctx.asin(a.clamp(-1.0, 1.0)))
        }
    }
}

/// Sufficient round-off unit for correct counting, up to the unspecified
/// constant `c`:
///
/// `u_max = 1 / (c · D² · n^{5/2} · κ³ · (log₂ S + n^{3/2} · D² · κ²))`.
pub fn required_precision(n: usize, max_degree: u32, max_terms: usize, kappa: f64, c: f64) -> f64 {
    let n = n as f64;
    let d2 = (max_degree as f64).powi(2);
    let log_s = (max_terms.max(1) as f64).log2();
    let denom = c * d2 * n.powf(2.5) * kappa.powi(3) * (log_s + n.powf(1.5) * d2 * kappa * kappa);
    1.0 / denom
}
