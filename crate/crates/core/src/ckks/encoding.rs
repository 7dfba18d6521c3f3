//! Canonical-embedding encoder: packs `N/2` reals into the slots of a ring
//! element and back.
//!
//! Slot `i` corresponds to evaluation at the primitive 2N-th root
//! `zeta^(5^i mod 2N)`; the exponents `5^i` pick one root per conjugate pair,
//! so real slot vectors map to real polynomials. Because every such root is
//! `mu * omega^k` for the 4s-th root `mu` (s = N/2 slots) and an s-th root
//! `omega`, both directions reduce to one twist by powers of `mu`, one
//! size-s complex FFT, and one slot permutation.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

use crate::ring::{Domain, RingParams, RnsPolynomial};
use crate::{Error, Result};

pub struct Encoder {
    slots: usize,
    // FFT with kernel e^{-2pi i jk/s} (rustfft "forward").
    fft_forward: Arc<dyn Fft<f64>>,
    // FFT with kernel e^{+2pi i jk/s} (rustfft "inverse"), unnormalized.
    fft_inverse: Arc<dyn Fft<f64>>,
    // twist[j] = mu^j with mu = e^{i pi / N}; twist_inv[j] = mu^-j.
    twist: Vec<Complex64>,
    twist_inv: Vec<Complex64>,
    // perm[i] = (5^i mod 2N - 1) / 4: slot index -> FFT bin.
    perm: Vec<usize>,
}

impl std::fmt::Debug for Encoder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Encoder").field("slots", &self.slots).finish()
    }
}

impl Encoder {
    pub fn new(ring_degree: usize) -> Self {
        assert!(ring_degree.is_power_of_two() && ring_degree >= 4);
        let slots = ring_degree / 2;
        let two_n = 2 * ring_degree;
        let mut planner = FftPlanner::new();
        let fft_forward = planner.plan_fft_forward(slots);
        let fft_inverse = planner.plan_fft_inverse(slots);

        let mut twist = Vec::with_capacity(slots);
        let mut twist_inv = Vec::with_capacity(slots);
        for j in 0..slots {
            let angle = PI * j as f64 / ring_degree as f64;
            twist.push(Complex64::from_polar(1.0, angle));
            twist_inv.push(Complex64::from_polar(1.0, -angle));
        }

        let mut perm = Vec::with_capacity(slots);
        let mut power = 1usize;
        for _ in 0..slots {
            perm.push((power - 1) / 4);
            power = power * 5 % two_n;
        }

        Self {
            slots,
            fft_forward,
            fft_inverse,
            twist,
            twist_inv,
            perm,
        }
    }

    pub fn slot_count(&self) -> usize {
        self.slots
    }

    /// Encodes at most `slots` reals (zero-padded) into a ring element at
    /// `level`, scaled by `scale` and rounded to integer coefficients.
    pub fn encode(
        &self,
        values: &[f64],
        scale: f64,
        level: usize,
        ring: &Arc<RingParams>,
    ) -> Result<RnsPolynomial> {
        if values.len() > self.slots {
            return Err(Error::SlotCapacity {
                count: values.len(),
                slots: self.slots,
            });
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(bad));
        }
        debug_assert_eq!(ring.degree(), 2 * self.slots);

        // Place slot values in their FFT bins, then invert the decode map.
        let mut buf = vec![Complex64::new(0.0, 0.0); self.slots];
        for (i, &v) in values.iter().enumerate() {
            buf[self.perm[i]] = Complex64::new(v, 0.0);
        }
        self.fft_forward.process(&mut buf);
        let inv_s = 1.0 / self.slots as f64;
        let mut coeffs = vec![0i128; 2 * self.slots];
        for (j, x) in buf.iter().enumerate() {
            let u = x * inv_s * self.twist_inv[j];
            coeffs[j] = (u.re * scale).round() as i128;
            coeffs[j + self.slots] = (u.im * scale).round() as i128;
        }
        Ok(RnsPolynomial::from_signed_coeffs_at_level(
            ring, &coeffs, level,
        ))
    }

    /// Decodes a coefficient-domain ring element into `slots` reals,
    /// dividing by `scale`.
    pub fn decode(&self, poly: &RnsPolynomial, scale: f64) -> Result<Vec<f64>> {
        let coeffs = poly.centered_coeffs_f64()?;
        debug_assert_eq!(coeffs.len(), 2 * self.slots);
        let mut buf: Vec<Complex64> = (0..self.slots)
            .map(|j| Complex64::new(coeffs[j], coeffs[j + self.slots]) * self.twist[j])
            .collect();
        self.fft_inverse.process(&mut buf);
        Ok((0..self.slots)
            .map(|i| buf[self.perm[i]].re / scale)
            .collect())
    }
}

/// Encodes and converts to the evaluation domain, the representation
/// plaintexts are kept in for ciphertext arithmetic.
pub(crate) fn encode_to_eval(
    encoder: &Encoder,
    values: &[f64],
    scale: f64,
    level: usize,
    ring: &Arc<RingParams>,
) -> Result<RnsPolynomial> {
    let mut poly = encoder.encode(values, scale, level, ring)?;
    poly.ntt_forward_in_place()?;
    Ok(poly)
}

/// Inverse of [`encode_to_eval`]: back to coefficients, then decode.
pub(crate) fn decode_from_eval(
    encoder: &Encoder,
    poly: &RnsPolynomial,
    scale: f64,
) -> Result<Vec<f64>> {
    let coeff = match poly.domain() {
        Domain::Evaluation => poly.ntt_inverse()?,
        Domain::Coefficient => poly.clone(),
    };
    encoder.decode(&coeff, scale)
}
