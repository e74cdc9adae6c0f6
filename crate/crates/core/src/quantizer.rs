//! Hard and soft (tanh-staircase) quantization onto a uniform grid.
//!
//! The range `[l, u]` is split into `2^b - 1` cells of width
//! `Δ = (u - l) / (2^b - 1)`. Hard quantization rounds to the nearest grid
//! point. Soft quantization replaces each step with
//!
//! ```text
//! Q(h) = l + Δ (i + (κ(h) + 1) / 2),   κ(h) = tanh(k (h - l - (i + ½)Δ)) / tanh(½ k Δ)
//! ```
//!
//! on cell `i`, which is continuous, monotone and approaches the hard
//! staircase as the sharpness `k` grows.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantSpec<T> {
    pub lower: T,
    pub upper: T,
    pub bits: u32,
    pub sharpness: T,
}

impl<T: Scalar> QuantSpec<T> {
    pub fn new(lower: T, upper: T, bits: u32, sharpness: T) -> Result<Self> {
        let spec = Self {
            lower,
            upper,
            bits,
            sharpness,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Grid `[0, n-1]` with `⌈log₂ n⌉` bits, so every sample index of a
    /// length-`n` signal is reachable.
    pub fn for_length(n: usize, sharpness: T) -> Result<Self> {
        if n < 2 {
            return Err(Error::Config(format!(
                "quantizer needs a signal of length >= 2, got {n}"
            )));
        }
        let bits = (usize::BITS - (n - 1).leading_zeros()).max(1);
        Self::new(T::zero(), T::from_usize_lossy(n - 1), bits, sharpness)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lower < self.upper) {
            return Err(Error::Config(format!(
                "quantizer bounds must satisfy l < u (got {} and {})",
                self.lower, self.upper
            )));
        }
        if self.bits == 0 || self.bits > 30 {
            return Err(Error::Config(format!(
                "quantizer bit width must be in 1..=30, got {}",
                self.bits
            )));
        }
        if !(self.sharpness > T::zero()) || !self.sharpness.is_finite() {
            return Err(Error::Config(format!(
                "quantizer sharpness must be positive, got {}",
                self.sharpness
            )));
        }
        Ok(())
    }

    pub fn cells(&self) -> usize {
        (1usize << self.bits) - 1
    }

    /// Grid spacing `Δ`.
    pub fn step(&self) -> T {
        (self.upper - self.lower) / T::from_usize_lossy(self.cells())
    }

    /// Cell index `i` containing `h`, clamped to the grid.
    fn cell(&self, h: T) -> usize {
        let raw = ((h - self.lower) / self.step()).floor();
        let last = self.cells() - 1;
        if raw <= T::zero() {
            0
        } else {
            raw.to_usize().unwrap_or(last).min(last)
        }
    }
}

/// Nearest grid point to `h` after clamping to `[l, u]`.
pub fn quantize_hard<T: Scalar>(h: T, spec: &QuantSpec<T>) -> T {
    let h = h.max(spec.lower).min(spec.upper);
    let delta = spec.step();
    let q = spec.lower + ((h - spec.lower) / delta).round() * delta;
    q.min(spec.upper)
}

/// Differentiable staircase approximation of [`quantize_hard`].
pub fn quantize_soft<T: Scalar>(h: T, spec: &QuantSpec<T>) -> T {
    if h < spec.lower {
        return spec.lower;
    }
    if h > spec.upper {
        return spec.upper;
    }
    let delta = spec.step();
    let k = spec.sharpness;
    let half = T::lit(0.5);
    let i = spec.cell(h);
    let fi = T::from_usize_lossy(i);
    let kappa = (k * (h - spec.lower - (fi + half) * delta)).tanh() / (half * k * delta).tanh();
    let q = spec.lower + delta * (fi + (kappa + T::one()) * half);
    q.max(spec.lower).min(spec.upper)
}

/// Derivative of [`quantize_soft`]. Zero outside `[l, u]`, where the soft
/// quantizer saturates.
pub fn quantize_soft_grad<T: Scalar>(h: T, spec: &QuantSpec<T>) -> T {
    if h < spec.lower || h > spec.upper {
        return T::zero();
    }
    let delta = spec.step();
    let k = spec.sharpness;
    let half = T::lit(0.5);
    let fi = T::from_usize_lossy(spec.cell(h));
    let c = (k * (h - spec.lower - (fi + half) * delta)).cosh();
    half * delta * k / ((half * k * delta).tanh() * c * c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(k: f64) -> QuantSpec<f64> {
        QuantSpec::new(0.0, 7.0, 3, k).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(QuantSpec::new(1.0, 1.0, 3, 1.0).is_err());
        assert!(QuantSpec::new(0.0, 1.0, 0, 1.0).is_err());
        assert!(QuantSpec::new(0.0, 1.0, 2, 0.0).is_err());
        let s = QuantSpec::<f64>::for_length(128, 10.0).unwrap();
        assert_eq!((s.bits, s.upper, s.step()), (7, 127.0, 1.0));
        let s = QuantSpec::<f64>::for_length(100, 10.0).unwrap();
        assert_eq!(s.bits, 7);
        assert!(s.step() < 1.0);
    }

    #[test]
    fn hard_examples() {
        let s = spec(10.0);
        assert_eq!(s.step(), 1.0);
        assert_eq!(quantize_hard(3.4, &s), 3.0);
        assert_eq!(quantize_hard(0.0, &s), 0.0);
        assert_eq!(quantize_hard(9.0, &s), 7.0);
        assert_eq!(quantize_hard(-3.0, &s), 0.0);
        let q = quantize_hard(5.6, &s);
        assert_eq!(quantize_hard(q, &s), q);
    }

    #[test]
    fn soft_examples() {
        let s = spec(3.0);
        assert!((quantize_soft(2.5, &s) - 2.5).abs() < 1e-12);
        assert_eq!(quantize_soft(-1.0, &s), 0.0);
        assert_eq!(quantize_soft(8.0, &s), 7.0);
        let sharp = spec(1000.0);
        assert!((quantize_soft(3.4, &sharp) - 3.0).abs() < 1e-3);
        // Cell edges land exactly on grid points.
        assert!((quantize_soft(4.0, &s) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn soft_grad_at_midpoint() {
        let s = spec(1.0);
        let g = quantize_soft_grad(2.5, &s);
        assert!((g - 0.5 / 0.5f64.tanh()).abs() < 1e-12);
        assert!((g - 1.082).abs() < 1e-3);
        let eps = 1e-6;
        let fd = (quantize_soft(2.5 + eps, &s) - quantize_soft(2.5 - eps, &s)) / (2.0 * eps);
        assert!((fd - g).abs() < 1e-8);
        assert_eq!(quantize_soft_grad(7.5, &s), 0.0);
    }

    #[test]
    fn soft_grad_matches_finite_differences_and_is_nonnegative() {
        for k in [1.0, 10.0, 40.0] {
            let s = spec(k);
            let mut h = 0.013;
            while h < 7.0 {
                let g = quantize_soft_grad(h, &s);
                assert!(g >= 0.0);
                let eps = 1e-6;
                if h > eps && h < 7.0 - eps {
                    let fd = (quantize_soft(h + eps, &s) - quantize_soft(h - eps, &s)) / (2.0 * eps);
                    assert!((g - fd).abs() / g.abs().max(1.0) < 1e-5, "k={k} h={h}: {g} vs {fd}");
                }
                h += 0.0371;
            }
        }
    }

    #[test]
    fn works_in_single_precision() {
        let s = QuantSpec::<f32>::new(0.0, 7.0, 3, 1000.0).unwrap();
        assert_eq!(quantize_hard(3.4f32, &s), 3.0);
        assert!((quantize_soft(3.4f32, &s) - 3.0).abs() < 1e-3);
    }
}
