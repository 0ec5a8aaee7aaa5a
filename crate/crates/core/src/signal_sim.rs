//! Post-cancellation sensor snapshots
//! `y_s(n, t) = β · b_s(μ_I2U)[s] · g(n) · s(t - τ_tot) + noise`.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::arrays::steering;
use crate::irs_schedule::{effective_gain, PhaseSchedule};
use crate::scenario::{DerivedGeometry, ScenarioConfig};
use crate::waveform::{apply_fractional_delay, SampledWaveform};
use crate::{rng, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    /// Small-scale fading, CN(0, 1).
    pub alpha: Complex64,
    /// `α · √(P N_BS) · β_B2I · β_I2S`
    pub beta_target: Complex64,
    pub geom: DerivedGeometry,
}

impl ChannelRealization {
    /// Realization with a prescribed fading coefficient.
    pub fn with_alpha(config: &ScenarioConfig, geom: &DerivedGeometry, alpha: Complex64) -> Self {
        let scale = (config.tx_power * config.n_bs as f64).sqrt() * geom.beta_b2i * geom.beta_i2s;
        Self {
            alpha,
            beta_target: alpha * scale,
            geom: *geom,
        }
    }
}

/// Draws `CN(0, σ²)`.
pub(crate) fn complex_gaussian(r: &mut impl Rng, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = r.sample(StandardNormal);
    let im: f64 = r.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

pub fn draw_realization(config: &ScenarioConfig, geom: &DerivedGeometry, seed: u64) -> ChannelRealization {
    let mut r = rng::seeded(seed);
    let alpha = complex_gaussian(&mut r, 1.0);
    ChannelRealization::with_alpha(config, geom, alpha)
}

/// Snapshot tensor stored flat in `[sensor][frame][sample]` order.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSet {
    pub n_sensors: usize,
    pub n_frames: usize,
    pub n_samples: usize,
    pub data: Vec<Complex64>,
    /// Per-sample noise variance `n_0 / T_s`, W.
    pub noise_variance: f64,
    pub clean: bool,
}

impl SnapshotSet {
    pub fn zeros(n_sensors: usize, n_frames: usize, n_samples: usize, noise_variance: f64) -> Self {
        Self {
            n_sensors,
            n_frames,
            n_samples,
            data: vec![Complex64::new(0.0, 0.0); n_sensors * n_frames * n_samples],
            noise_variance,
            clean: true,
        }
    }

    #[inline]
    pub fn index(&self, s: usize, n: usize, l: usize) -> usize {
        (s * self.n_frames + n) * self.n_samples + l
    }

    #[inline]
    pub fn get(&self, s: usize, n: usize, l: usize) -> Complex64 {
        self.data[self.index(s, n, l)]
    }

    /// Samples of one sensor in one frame.
    pub fn row(&self, s: usize, n: usize) -> &[Complex64] {
        let i = self.index(s, n, 0);
        &self.data[i..i + self.n_samples]
    }

    pub fn scale(&mut self, factor: Complex64) {
        self.data.iter_mut().for_each(|v| *v *= factor);
    }

    const MAGIC: &'static [u8; 8] = b"IRSSNAP1";

    /// Header: magic, three u32 dims (sensors, frames, samples), u32 flags
    /// (bit 0 = clean), f64 noise variance; then interleaved re/im f64.
    /// Everything little-endian.
    pub fn write_binary(&self, mut out: impl Write) -> std::io::Result<()> {
        out.write_all(Self::MAGIC)?;
        for d in [self.n_sensors, self.n_frames, self.n_samples] {
            out.write_all(&(d as u32).to_le_bytes())?;
        }
        out.write_all(&(self.clean as u32).to_le_bytes())?;
        out.write_all(&self.noise_variance.to_le_bytes())?;
        for v in &self.data {
            out.write_all(&v.re.to_le_bytes())?;
            out.write_all(&v.im.to_le_bytes())?;
        }
        out.flush()
    }

    pub fn read_binary(mut input: impl Read) -> Result<Self> {
        let bad = |m: &str| Error::Parse {
            path: "<snapshot stream>".into(),
            message: m.to_string(),
        };
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic).map_err(|_| bad("truncated header"))?;
        if &magic != Self::MAGIC {
            return Err(bad("bad magic"));
        }
        let mut u = [0u8; 4];
        let mut dims = [0usize; 4];
        for d in dims.iter_mut() {
            input.read_exact(&mut u).map_err(|_| bad("truncated header"))?;
            *d = u32::from_le_bytes(u) as usize;
        }
        let mut f = [0u8; 8];
        input.read_exact(&mut f).map_err(|_| bad("truncated header"))?;
        let noise_variance = f64::from_le_bytes(f);
        let len = dims[0] * dims[1] * dims[2];
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            input.read_exact(&mut f).map_err(|_| bad("truncated data"))?;
            let re = f64::from_le_bytes(f);
            input.read_exact(&mut f).map_err(|_| bad("truncated data"))?;
            data.push(Complex64::new(re, f64::from_le_bytes(f)));
        }
        Ok(Self {
            n_sensors: dims[0],
            n_frames: dims[1],
            n_samples: dims[2],
            data,
            noise_variance,
            clean: dims[3] & 1 == 1,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_binary(std::io::BufWriter::new(file)).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_binary(std::io::BufReader::new(file))
    }
}

pub fn noise_variance(config: &ScenarioConfig) -> f64 {
    config.noise_psd / config.waveform.sample_period()
}

pub fn synthesize_snapshots(
    realization: &ChannelRealization,
    schedule: &PhaseSchedule,
    waveform: &SampledWaveform,
    config: &ScenarioConfig,
) -> Result<SnapshotSet> {
    let geom = &realization.geom;
    if schedule.n_reflectors != config.n_reflectors {
        return Err(Error::Dimension(format!(
            "schedule has {} elements, config {}",
            schedule.n_reflectors, config.n_reflectors
        )));
    }
    let delayed = apply_fractional_delay(waveform, geom.tau_tot)?;
    let bs = steering(config.n_sensors, geom.mu_i2u, 0);
    let gains = effective_gain(schedule, geom.mu_i2u, geom.mu_b2i_aoa);
    let mut out = SnapshotSet::zeros(config.n_sensors, schedule.n_frames(), waveform.len(), noise_variance(config));

    let leak = if config.residual_leakage != Complex64::new(0.0, 0.0) {
        let amp = config.residual_leakage * (config.tx_power * config.n_bs as f64).sqrt() * geom.beta_b2i;
        let direct = apply_fractional_delay(waveform, geom.tau_b2i)?;
        Some((amp, steering(config.n_sensors, geom.mu_b2i_aoa, 0), direct))
    } else {
        None
    };

    for (s, b) in bs.iter().enumerate() {
        for (n, g) in gains.iter().enumerate() {
            let a = realization.beta_target * b * g;
            let i = out.index(s, n, 0);
            let row = &mut out.data[i..i + waveform.len()];
            for (v, x) in row.iter_mut().zip(&delayed) {
                *v = a * x;
            }
            if let Some((amp, bl, direct)) = &leak {
                let c = amp * bl[s];
                for (v, x) in row.iter_mut().zip(direct) {
                    *v += c * x;
                }
            }
        }
    }
    Ok(out)
}

/// Adds i.i.d. `CN(0, n_0 / T_s)` noise.
pub fn add_noise(mut snapshots: SnapshotSet, config: &ScenarioConfig, seed: u64) -> Result<SnapshotSet> {
    if !snapshots.clean {
        return Err(Error::AlreadyNoisy);
    }
    let var = noise_variance(config);
    let mut r = rng::seeded(seed);
    for v in snapshots.data.iter_mut() {
        *v += complex_gaussian(&mut r, var);
    }
    snapshots.noise_variance = var;
    snapshots.clean = false;
    Ok(snapshots)
}
