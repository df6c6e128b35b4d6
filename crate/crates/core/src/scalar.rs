//! Scalar abstraction shared by every module.
//!
//! All numerical code is written against [`Real`], which is implemented for
//! `f32` and `f64`. Training is usually done in `f32` for speed; gradient
//! checks and metrics run in `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point type usable throughout the crate.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + LinalgScalar
    + ScalarOperand
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Short name stored in checkpoints and manifests.
    const NAME: &'static str;

    /// Size in bytes of the little-endian encoding.
    const BYTES: usize;

    /// Lower clamp of [`Real::exp_nonpos`].
    const EXP_FLOOR: f64;

    /// Converts an `f64` literal. Lossy for `f32`.
    fn lit(x: f64) -> Self;

    fn to_f64_lossy(self) -> f64;

    fn write_le(self, out: &mut Vec<u8>);

    fn read_le(bytes: &[u8]) -> Self;

    /// `exp(x)` for `x <= 0`, branch-free so loops over it vectorize.
    /// Arguments below [`Real::EXP_FLOOR`] are clamped to it, which keeps
    /// results, their squares and small products clear of subnormals.
    fn exp_nonpos(self) -> Self;

    /// `ln(1 + e)` for `e` in `[0, 1]`, branch-free.
    fn ln_1p_unit(self) -> Self;
}

// exp: x = k ln2 + r with |r| <= ln2 / 2. Adding 1.5 * 2^p rounds x log2(e)
// to the integer k and leaves k in the low mantissa bits, from which 2^k is
// assembled directly.
//
// ln(1 + e) = 2 atanh(s) with s = e / (2 + e) <= 1/3, summed as an odd
// series in s.

/// Horner evaluation of `c0 + c1 x + c2 x^2 + ...`, unrolled.
macro_rules! poly {
    ($x:expr; $c:expr) => { $c };
    ($x:expr; $c:expr, $($rest:expr),+) => { $c + $x * poly!($x; $($rest),+) };
}

impl Real for f32 {
    const NAME: &'static str = "f32";
    const BYTES: usize = 4;
    const EXP_FLOOR: f64 = -27.6;

    #[inline]
    fn lit(x: f64) -> Self {
        x as f32
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self as f64
    }

    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn read_le(bytes: &[u8]) -> Self {
        f32::from_le_bytes(bytes[..4].try_into().expect("4 bytes"))
    }

    #[inline(always)]
    fn exp_nonpos(self) -> Self {
        const SHIFT: f32 = 12582912.0;
        let x = self.max(Self::EXP_FLOOR as f32);
        let t = x * std::f32::consts::LOG2_E + SHIFT;
        let k = t - SHIFT;
        let r = x - k * 0.693_145_75 - k * 1.428_606_8e-6;
        let scale = f32::from_bits((t.to_bits() << 23).wrapping_add(127 << 23));
        poly!(r; 1.0, 1.0, 0.5, 1.0 / 6.0, 1.0 / 24.0, 1.0 / 120.0, 1.0 / 720.0, 1.0 / 5040.0) * scale
    }

    #[inline(always)]
    fn ln_1p_unit(self) -> Self {
        let s = self / (2.0 + self);
        let z = s * s;
        2.0 * s * poly!(z; 1.0, 1.0 / 3.0, 1.0 / 5.0, 1.0 / 7.0, 1.0 / 9.0, 1.0 / 11.0, 1.0 / 13.0, 1.0 / 15.0)
    }
}

impl Real for f64 {
    const NAME: &'static str = "f64";
    const BYTES: usize = 8;
    const EXP_FLOOR: f64 = -230.0;

    #[inline]
    fn lit(x: f64) -> Self {
        x
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self
    }

    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn read_le(bytes: &[u8]) -> Self {
        f64::from_le_bytes(bytes[..8].try_into().expect("8 bytes"))
    }

    #[inline(always)]
    fn exp_nonpos(self) -> Self {
        const SHIFT: f64 = 6755399441055744.0;
        let x = self.max(Self::EXP_FLOOR);
        let t = x * std::f64::consts::LOG2_E + SHIFT;
        let k = t - SHIFT;
        let r = x - k * 6.931_471_803_691_238e-1 - k * 1.908_214_929_270_587_7e-10;
        let scale = f64::from_bits((t.to_bits() << 52).wrapping_add(1023 << 52));
        poly!(
            r;
            1.0,
            1.0,
            0.5,
            1.0 / 6.0,
            1.0 / 24.0,
            1.0 / 120.0,
            1.0 / 720.0,
            1.0 / 5040.0,
            1.0 / 40320.0,
            1.0 / 362880.0,
            1.0 / 3628800.0,
            1.0 / 39916800.0,
            1.0 / 479001600.0
        ) * scale
    }

    #[inline(always)]
    fn ln_1p_unit(self) -> Self {
        let s = self / (2.0 + self);
        let z = s * s;
        2.0 * s
            * poly!(
                z;
                1.0,
                1.0 / 3.0,
                1.0 / 5.0,
                1.0 / 7.0,
                1.0 / 9.0,
                1.0 / 11.0,
                1.0 / 13.0,
                1.0 / 15.0,
                1.0 / 17.0,
                1.0 / 19.0,
                1.0 / 21.0,
                1.0 / 23.0,
                1.0 / 25.0,
                1.0 / 27.0,
                1.0 / 29.0,
                1.0 / 31.0
            )
    }
}

/// `sign(x)` with `sign(0) = 0`, used as the subgradient of `|x|`.
#[inline]
pub fn sign0<T: Real>(x: T) -> T {
    if x > T::zero() {
        T::one()
    } else if x < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_nonpos_is_accurate() {
        let mut x = 0.0f64;
        while x > f64::EXP_FLOOR {
            let rel = (x.exp_nonpos() / x.exp() - 1.0).abs();
            assert!(rel < 1e-15, "f64 {x}: {rel:e}");
            let xf = x as f32;
            if (xf as f64) > f32::EXP_FLOOR {
                let relf = (xf.exp_nonpos() as f64 / (xf as f64).exp() - 1.0).abs();
                assert!(relf < 1e-6, "f32 {xf}: {relf:e}");
            }
            x -= 0.0137;
        }
        assert_eq!(0f64.exp_nonpos(), 1.0);
        assert_eq!(0f32.exp_nonpos(), 1.0);
        let lo = (-1e6f64).exp_nonpos();
        assert!((lo / f64::EXP_FLOOR.exp() - 1.0).abs() < 1e-15);
        assert!((lo * lo * lo).is_normal());
        let lo = (-1e6f32).exp_nonpos();
        assert!((lo * lo * lo).is_normal() && lo < 1.1e-12);
    }

    #[test]
    fn ln_1p_unit_is_accurate() {
        for i in 0..=10_000 {
            let e = i as f64 / 10_000.0;
            let exact = e.ln_1p();
            let got = e.ln_1p_unit();
            assert!((got - exact).abs() <= 1e-15 * exact.max(f64::MIN_POSITIVE), "{e}: {got} vs {exact}");
            let ef = e as f32;
            let gotf = ef.ln_1p_unit() as f64;
            let exactf = (ef as f64).ln_1p();
            assert!((gotf - exactf).abs() <= 3e-7 * exactf.max(f64::MIN_POSITIVE));
        }
        for e in [1e-100, 1e-20, 1e-9] {
            assert!((e.ln_1p_unit() / e.ln_1p() - 1.0).abs() < 1e-15);
        }
    }
}
