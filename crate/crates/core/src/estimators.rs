//! Target localization from sensor snapshots: MUSIC for the direction,
//! a DFT-domain maximum-likelihood search for the delay and the complex
//! gain, then a closed-form geometric solve.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::arrays::{steering, steering_sum};
use crate::irs_schedule::{effective_gain, PhaseSchedule};
use crate::scenario::{derive_geometry, DerivedGeometry, ScenarioConfig};
use crate::signal_sim::SnapshotSet;
use crate::waveform::{bin_index, dft, SampledWaveform};
use crate::{Error, Result};

pub const DEFAULT_GRID_DOA: usize = 4096;
pub const DEFAULT_GRID_TOA: usize = 8192;

/// How frames and sensors are combined before the delay search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combining {
    /// Plain sum over frames, then over sensors.
    #[default]
    Sum,
    /// Weights each sensor and frame by the conjugate of its known response
    /// at the estimated direction.
    MaximumRatio,
}

impl std::str::FromStr for Combining {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum" => Ok(Combining::Sum),
            "maximum_ratio" | "mrc" => Ok(Combining::MaximumRatio),
            other => Err(Error::InvalidConfig(format!("unknown combining {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorOptions {
    pub grid_doa: usize,
    pub grid_toa: usize,
    /// Parabolic interpolation around the MUSIC peak.
    pub refine: bool,
    pub combining: Combining,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        Self {
            grid_doa: DEFAULT_GRID_DOA,
            grid_toa: DEFAULT_GRID_TOA,
            refine: false,
            combining: Combining::Sum,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DoaEstimate {
    pub mu_hat: f64,
    /// Pseudo-spectrum on the grid `-1 + 2i/(T_1 - 1)`.
    pub spectrum: Vec<f64>,
    pub grid_size: usize,
}

impl DoaEstimate {
    pub fn grid_point(&self, i: usize) -> f64 {
        doa_grid_point(i, self.grid_size)
    }

    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "mu,pseudo_spectrum")?;
        for (i, p) in self.spectrum.iter().enumerate() {
            writeln!(out, "{},{}", self.grid_point(i), p)?;
        }
        Ok(())
    }
}

fn doa_grid_point(i: usize, t1: usize) -> f64 {
    (-1.0 + 2.0 * i as f64 / (t1 - 1) as f64).clamp(-1.0, 1.0)
}

/// First index of the maximum (ties resolved to the lowest index).
fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Vertex offset in (-0.5, 0.5) of the parabola through three samples.
fn parabolic_offset(a: f64, b: f64, c: f64) -> f64 {
    let den = a - 2.0 * b + c;
    if den < 0.0 {
        (0.5 * (a - c) / den).clamp(-0.5, 0.5)
    } else {
        0.0
    }
}

/// Sample covariance over all frames and samples,
/// `R = (1/(N_f N)) Σ_{n,l} y(n,l) y(n,l)^H`.
pub fn sample_covariance(snapshots: &SnapshotSet) -> DMatrix<Complex64> {
    let ns = snapshots.n_sensors;
    let cols = snapshots.n_frames * snapshots.n_samples;
    // sensor s occupies data[s*cols .. (s+1)*cols]
    let x = DMatrix::from_fn(ns, cols, |s, j| snapshots.data[s * cols + j]);
    (&x * x.adjoint()) / Complex64::new(cols as f64, 0.0)
}

pub fn estimate_doa(snapshots: &SnapshotSet, grid_size: usize, refine: bool) -> Result<DoaEstimate> {
    let ns = snapshots.n_sensors;
    if ns < 2 {
        return Err(Error::InsufficientAperture(ns));
    }
    if grid_size < 2 {
        return Err(Error::InvalidConfig("DoA grid needs at least two points".into()));
    }
    let r = sample_covariance(snapshots);
    let eig = SymmetricEigen::new(r);
    let mut order: Vec<usize> = (0..ns).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let noise: Vec<Vec<Complex64>> = order[1..]
        .iter()
        .map(|&c| eig.eigenvectors.column(c).iter().copied().collect())
        .collect();

    let spectrum: Vec<f64> = (0..grid_size)
        .map(|i| {
            let b = steering(ns, doa_grid_point(i, grid_size), 0);
            let den: f64 = noise
                .iter()
                .map(|u| u.iter().zip(&b).map(|(x, y)| x.conj() * y).sum::<Complex64>().norm_sqr())
                .sum();
            1.0 / den
        })
        .collect();
    let i = argmax(&spectrum);
    let mut mu_hat = doa_grid_point(i, grid_size);
    if refine && i > 0 && i + 1 < grid_size {
        let d = parabolic_offset(spectrum[i - 1], spectrum[i], spectrum[i + 1]);
        mu_hat = (mu_hat + d * 2.0 / (grid_size - 1) as f64).clamp(-1.0, 1.0);
    }
    Ok(DoaEstimate {
        mu_hat,
        spectrum,
        grid_size,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Collapsed {
    pub y_bar: Vec<Complex64>,
    /// `1^T b_s(μ̂) · Σ_n g(n)`, the known part of the collapsed amplitude.
    pub factor: Complex64,
    /// Per-sample noise variance after summing, `N_f N_s σ²`.
    pub noise_variance: f64,
}

/// Sums over frames then sensors. `gains` are the cascade gains evaluated
/// at the estimated direction.
pub fn collapse_snapshots(snapshots: &SnapshotSet, gains: &[Complex64], mu_hat: f64) -> Result<Collapsed> {
    if gains.len() != snapshots.n_frames {
        return Err(Error::Dimension(format!(
            "{} gains for {} frames",
            gains.len(),
            snapshots.n_frames
        )));
    }
    let mut y_bar = vec![Complex64::new(0.0, 0.0); snapshots.n_samples];
    for s in 0..snapshots.n_sensors {
        for n in 0..snapshots.n_frames {
            for (acc, v) in y_bar.iter_mut().zip(snapshots.row(s, n)) {
                *acc += v;
            }
        }
    }
    let factor = steering_sum(snapshots.n_sensors, mu_hat) * gains.iter().sum::<Complex64>();
    Ok(Collapsed {
        y_bar,
        factor,
        noise_variance: (snapshots.n_frames * snapshots.n_sensors) as f64 * snapshots.noise_variance,
    })
}

/// Maximum-ratio variant of [`collapse_snapshots`]: sensor `s`, frame `n`
/// is weighted by `conj(b_s(μ̂)[s] g(n))`.
pub fn collapse_maximum_ratio(snapshots: &SnapshotSet, gains: &[Complex64], mu_hat: f64) -> Result<Collapsed> {
    if gains.len() != snapshots.n_frames {
        return Err(Error::Dimension(format!(
            "{} gains for {} frames",
            gains.len(),
            snapshots.n_frames
        )));
    }
    let b = steering(snapshots.n_sensors, mu_hat, 0);
    let mut y_bar = vec![Complex64::new(0.0, 0.0); snapshots.n_samples];
    for (s, bs) in b.iter().enumerate() {
        for (n, g) in gains.iter().enumerate() {
            let w = (bs * g).conj();
            for (acc, v) in y_bar.iter_mut().zip(snapshots.row(s, n)) {
                *acc += w * v;
            }
        }
    }
    let gain_energy: f64 = gains.iter().map(|g| g.norm_sqr()).sum();
    let factor = Complex64::new(snapshots.n_sensors as f64 * gain_energy, 0.0);
    Ok(Collapsed {
        y_bar,
        factor,
        noise_variance: factor.re * snapshots.noise_variance,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToaEstimate {
    /// Phase slope in rad/bin, on the grid `-2πm/T_2`.
    pub w_hat: f64,
    pub tau_hat: f64,
    pub beta_bar_hat: Complex64,
    /// `|Σ_k S*(k) Y(k) e^{-jw_m k}|²` for `m = 0..T_2`.
    pub objective: Vec<f64>,
    pub grid_size: usize,
}

impl ToaEstimate {
    pub fn write_csv(&self, mut out: impl Write, sample_period: f64, n_samples: usize) -> std::io::Result<()> {
        writeln!(out, "w,tau_s,objective")?;
        let t2 = self.grid_size as f64;
        for (m, j) in self.objective.iter().enumerate() {
            let tau = m as f64 * sample_period * n_samples as f64 / t2;
            writeln!(out, "{},{},{}", -2.0 * PI * m as f64 / t2, tau, j)?;
        }
        Ok(())
    }
}

fn matched_spectrum(y_bar: &[Complex64], waveform: &SampledWaveform) -> Result<(Vec<Complex64>, f64)> {
    if y_bar.len() != waveform.len() {
        return Err(Error::Dimension(format!(
            "{} samples against a {}-sample waveform",
            y_bar.len(),
            waveform.len()
        )));
    }
    let s = dft(&waveform.samples)?;
    let y = dft(y_bar)?;
    let norm: f64 = s.iter().map(|v| v.norm_sqr()).sum();
    if !(norm > 0.0) {
        return Err(Error::DegenerateWaveform);
    }
    Ok((s.iter().zip(&y).map(|(a, b)| a.conj() * b).collect(), norm))
}

/// Closed-form gain estimate `Σ_k S*(k)Y(k)e^{-jwk} / Σ_k |S(k)|²` at a given `w`.
pub fn beta_bar_at(y_bar: &[Complex64], waveform: &SampledWaveform, w: f64) -> Result<Complex64> {
    let (z, norm) = matched_spectrum(y_bar, waveform)?;
    let n = z.len();
    let acc: Complex64 = z
        .iter()
        .enumerate()
        .map(|(i, v)| v * Complex64::from_polar(1.0, -w * bin_index(i, n) as f64))
        .sum();
    Ok(acc / norm)
}

pub fn estimate_toa_beta(y_bar: &[Complex64], waveform: &SampledWaveform, grid_size: usize) -> Result<ToaEstimate> {
    if grid_size == 0 {
        return Err(Error::InvalidConfig("ToA grid must be non-empty".into()));
    }
    let (z, norm) = matched_spectrum(y_bar, waveform)?;
    let n = z.len();
    // e^{-j w_m k} = e^{j2π mk/T_2}: fold the bins modulo T_2 and take one
    // unnormalised inverse FFT of length T_2
    let mut buf = vec![Complex64::new(0.0, 0.0); grid_size];
    for (i, v) in z.iter().enumerate() {
        buf[bin_index(i, n).rem_euclid(grid_size as i64) as usize] += v;
    }
    FftPlanner::new().plan_fft_inverse(grid_size).process(&mut buf);
    let objective: Vec<f64> = buf.iter().map(|v| v.norm_sqr()).collect();
    let m = argmax(&objective);
    let w_hat = -2.0 * PI * m as f64 / grid_size as f64;
    let ts = waveform.sample_period();
    Ok(ToaEstimate {
        w_hat,
        tau_hat: -w_hat * ts * n as f64 / (2.0 * PI),
        beta_bar_hat: buf[m] / norm,
        objective,
        grid_size,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocationEstimate {
    pub x_hat: f64,
    pub y_hat: f64,
    /// False when the range circle misses the target plane; the radicand
    /// was clamped to zero.
    pub feasible: bool,
    pub radicand: f64,
}

/// Position from the direction cosine and the one-way IRS-target delay.
pub fn solve_location_from_range(mu_hat: f64, tau_i2u: f64, config: &ScenarioConfig) -> Result<LocationEstimate> {
    if !(tau_i2u >= 0.0) {
        return Err(Error::Causality(tau_i2u));
    }
    let q = config.q_irs;
    let range = config.speed_of_light * tau_i2u;
    let y_hat = q.y - range * mu_hat;
    let radicand = range * range - (q.y - y_hat).powi(2) - q.z * q.z;
    Ok(LocationEstimate {
        x_hat: radicand.max(0.0).sqrt() + q.x,
        y_hat,
        feasible: radicand >= 0.0,
        radicand,
    })
}

pub fn solve_location(
    mu_hat: f64,
    tau_tot_hat: f64,
    geom: &DerivedGeometry,
    config: &ScenarioConfig,
) -> Result<LocationEstimate> {
    solve_location_from_range(mu_hat, (tau_tot_hat - geom.tau_b2i) / 2.0, config)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimationErrors {
    pub mu: f64,
    pub tau: f64,
    /// Euclidean error in the x-y plane, m.
    pub position_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    pub mu_hat: f64,
    pub tau_hat: f64,
    pub beta_bar_hat: Complex64,
    pub x_hat: f64,
    pub y_hat: f64,
    pub feasible: bool,
    /// Set when the direction estimate rests on too little data
    /// (single-beam scans).
    #[serde(default)]
    pub low_confidence: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub errors: Option<EstimationErrors>,
}

impl EstimationResult {
    /// Attaches errors against the configured target.
    pub fn with_truth(mut self, config: &ScenarioConfig, geom: &DerivedGeometry, tau_true: f64) -> Self {
        let dx = self.x_hat - config.q_target.x;
        let dy = self.y_hat - config.q_target.y;
        self.errors = Some(EstimationErrors {
            mu: self.mu_hat - geom.mu_i2u,
            tau: self.tau_hat - tau_true,
            position_m: dx.hypot(dy),
        });
        self
    }
}

/// Full pipeline, all intermediate products included.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub doa: DoaEstimate,
    pub toa: ToaEstimate,
    pub location: LocationEstimate,
    pub result: EstimationResult,
}

/// Runs MUSIC, collapse, ML delay search and the geometric solve once.
/// Only the BS and IRS positions of `config` are used.
pub fn estimate_pipeline(
    snapshots: &SnapshotSet,
    schedule: &PhaseSchedule,
    waveform: &SampledWaveform,
    config: &ScenarioConfig,
    options: &EstimatorOptions,
) -> Result<PipelineOutput> {
    let geom = derive_geometry(config)?;
    let doa = estimate_doa(snapshots, options.grid_doa, options.refine)?;
    let gains = effective_gain(schedule, doa.mu_hat, geom.mu_b2i_aoa);
    let collapsed = match options.combining {
        Combining::Sum => collapse_snapshots(snapshots, &gains, doa.mu_hat)?,
        Combining::MaximumRatio => collapse_maximum_ratio(snapshots, &gains, doa.mu_hat)?,
    };
    let toa = estimate_toa_beta(&collapsed.y_bar, waveform, options.grid_toa)?;
    let location = solve_location(doa.mu_hat, toa.tau_hat, &geom, config)?;
    let result = EstimationResult {
        mu_hat: doa.mu_hat,
        tau_hat: toa.tau_hat,
        beta_bar_hat: toa.beta_bar_hat,
        x_hat: location.x_hat,
        y_hat: location.y_hat,
        feasible: location.feasible,
        low_confidence: false,
        errors: None,
    };
    Ok(PipelineOutput {
        doa,
        toa,
        location,
        result,
    })
}
