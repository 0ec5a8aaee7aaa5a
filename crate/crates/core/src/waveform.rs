//! Chirp probing signals, their quadrature metrics, and the DFT utilities
//! shared by the bound computations and the ToA estimator.
//!
//! Every time integral is a rectangle-rule sum over the `n_samples` sample
//! instants scaled by the sample period `T_s = 1 / (B · n_samples)`; the
//! observation window is therefore exactly one chirp duration `1 / B`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChirpKind {
    /// `s(t) = exp(j2πB(t + νt²))` sampled at `t_l = l·T_s`, `0 ≤ t < 1/B`.
    LinearChirp,
    /// `s(t) = exp(jπκt²)` with `κ = 2Bν`, sampled symmetrically about
    /// `t = 0` at `t_l = (l - (N-1)/2)·T_s`. The symmetric grid makes
    /// `∫ ṡ s* dt` vanish to rounding error.
    CenteredChirp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChirpSpec {
    /// Bandwidth B, Hz.
    pub bandwidth: f64,
    /// Frequency rate ν, 1/s.
    pub freq_rate: f64,
    pub kind: ChirpKind,
    pub n_samples: usize,
}

impl Default for ChirpSpec {
    fn default() -> Self {
        Self {
            bandwidth: 1.5e6,
            freq_rate: 1e6,
            kind: ChirpKind::LinearChirp,
            n_samples: 64,
        }
    }
}

impl ChirpSpec {
    pub fn centered(self) -> Self {
        Self {
            kind: ChirpKind::CenteredChirp,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth.is_finite() && self.bandwidth > 0.0) {
            return Err(Error::InvalidConfig("chirp bandwidth must be positive".into()));
        }
        if !self.freq_rate.is_finite() {
            return Err(Error::InvalidConfig("chirp frequency rate must be finite".into()));
        }
        if !self.n_samples.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(self.n_samples));
        }
        Ok(())
    }

    pub fn sample_period(&self) -> f64 {
        1.0 / (self.bandwidth * self.n_samples as f64)
    }

    /// Length of the (circular) observation window, `n_samples · T_s`.
    pub fn window(&self) -> f64 {
        self.sample_period() * self.n_samples as f64
    }

    fn sweep_rate(&self) -> f64 {
        2.0 * self.bandwidth * self.freq_rate
    }

    pub fn sample_time(&self, l: usize) -> f64 {
        let ts = self.sample_period();
        match self.kind {
            ChirpKind::LinearChirp => l as f64 * ts,
            ChirpKind::CenteredChirp => (l as f64 - (self.n_samples as f64 - 1.0) / 2.0) * ts,
        }
    }

    /// Analytic waveform value at time `t` (the formula is evaluated
    /// outside the nominal support as well).
    pub fn eval(&self, t: f64) -> Complex64 {
        let phase = match self.kind {
            ChirpKind::LinearChirp => 2.0 * PI * self.bandwidth * (t + self.freq_rate * t * t),
            ChirpKind::CenteredChirp => PI * self.sweep_rate() * t * t,
        };
        Complex64::from_polar(1.0, phase)
    }

    /// Analytic time derivative `s'(t)`.
    pub fn eval_derivative(&self, t: f64) -> Complex64 {
        let inst = match self.kind {
            ChirpKind::LinearChirp => 2.0 * PI * self.bandwidth * (1.0 + 2.0 * self.freq_rate * t),
            ChirpKind::CenteredChirp => 2.0 * PI * self.sweep_rate() * t,
        };
        Complex64::new(0.0, inst) * self.eval(t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledWaveform {
    pub spec: ChirpSpec,
    pub samples: Vec<Complex64>,
    /// `∂s(t - τ)/∂τ = -s'(t)` at the sample instants.
    pub derivative_samples: Vec<Complex64>,
    /// `E_s = ∫|s|² dt`.
    pub energy: f64,
    /// `W̄² = ∫|ṡ|² dt / E_s`, rad²/s².
    pub msq_bandwidth: f64,
    /// `∫ ṡ s* dt`.
    pub cross_term: Complex64,
}

impl SampledWaveform {
    pub fn sample_period(&self) -> f64 {
        self.spec.sample_period()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Returns a copy with every sample scaled by `factor` (metrics rescaled
    /// accordingly).
    pub fn scaled(&self, factor: f64) -> Self {
        let samples: Vec<_> = self.samples.iter().map(|s| s * factor).collect();
        let derivative_samples: Vec<_> = self.derivative_samples.iter().map(|s| s * factor).collect();
        Self {
            spec: self.spec,
            samples,
            derivative_samples,
            energy: self.energy * factor * factor,
            msq_bandwidth: self.msq_bandwidth,
            cross_term: self.cross_term * factor * factor,
        }
    }
}

pub fn build_waveform(spec: &ChirpSpec) -> Result<SampledWaveform> {
    spec.validate()?;
    let ts = spec.sample_period();
    let times: Vec<f64> = (0..spec.n_samples).map(|l| spec.sample_time(l)).collect();
    let samples: Vec<Complex64> = times.iter().map(|&t| spec.eval(t)).collect();
    let derivative_samples: Vec<Complex64> = times.iter().map(|&t| -spec.eval_derivative(t)).collect();
    let energy: f64 = samples.iter().map(|s| s.norm_sqr()).sum::<f64>() * ts;
    let deriv_energy: f64 = derivative_samples.iter().map(|s| s.norm_sqr()).sum::<f64>() * ts;
    let cross_term: Complex64 = derivative_samples
        .iter()
        .zip(&samples)
        .map(|(d, s)| d * s.conj())
        .sum::<Complex64>()
        * ts;
    Ok(SampledWaveform {
        spec: *spec,
        samples,
        derivative_samples,
        energy,
        msq_bandwidth: deriv_energy / energy,
        cross_term,
    })
}

/// Centred frequency index of position `i` in a centred spectrum of length `n`.
#[inline]
pub fn bin_index(i: usize, n: usize) -> i64 {
    i as i64 - (n / 2) as i64
}

/// Forward DFT `X(k) = Σ_l x_l e^{-j2πkl/N}`, returned in centred order:
/// position `i` holds bin `k = i - N/2`, so `k` runs `-N/2 … N/2 - 1`.
pub fn dft(x: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = x.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(n));
    }
    let mut buf = x.to_vec();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf.rotate_right(n / 2);
    Ok(buf)
}

/// Inverse of [`dft`]: takes a centred spectrum, returns the time sequence.
pub fn inverse_dft(spectrum: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = spectrum.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(n));
    }
    let mut buf = spectrum.to_vec();
    buf.rotate_left(n / 2);
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter_mut().for_each(|v| *v *= scale);
    Ok(buf)
}

/// Circularly delays `x` (sampled at `ts`) by `tau` through the frequency
/// domain, `Y(k) = X(k) e^{jwk}` with `w = -2πτ / (T_s N)`.
pub fn delay_sequence(x: &[Complex64], tau: f64, ts: f64) -> Result<Vec<Complex64>> {
    let n = x.len();
    let window = ts * n as f64;
    if !(tau >= 0.0 && tau < window) {
        return Err(Error::DelayRange { tau, window });
    }
    let w = -2.0 * PI * tau / window;
    let mut spec = dft(x)?;
    for (i, v) in spec.iter_mut().enumerate() {
        *v *= Complex64::from_polar(1.0, w * bin_index(i, n) as f64);
    }
    inverse_dft(&spec)
}

pub fn apply_fractional_delay(w: &SampledWaveform, tau: f64) -> Result<Vec<Complex64>> {
    delay_sequence(&w.samples, tau, w.sample_period())
}

/// Mean-square bandwidth from the DFT spectrum, `Σ(2πf_k)²|S(k)|² / Σ|S(k)|²`.
pub fn spectral_msq_bandwidth(w: &SampledWaveform) -> Result<f64> {
    let n = w.len();
    let spec = dft(&w.samples)?;
    let df = 1.0 / w.spec.window();
    let (mut num, mut den) = (0.0, 0.0);
    for (i, s) in spec.iter().enumerate() {
        let omega = 2.0 * PI * bin_index(i, n) as f64 * df;
        num += omega * omega * s.norm_sqr();
        den += s.norm_sqr();
    }
    Ok(num / den)
}
