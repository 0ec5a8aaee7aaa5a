//! Experiment configuration and the deterministic geometry derived from it.
//!
//! Conventions: the BS array lies along the y axis, the IRS (reflecting
//! elements and sensors) along the y axis of the y-o-z plane. A direction
//! cosine is the y component of the unit vector pointing from the far end of
//! a link towards the array that observes it, i.e. `(y_array - y_far) / d`.

use std::path::Path;

use nalgebra::Matrix4;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::units;
use crate::waveform::ChirpSpec;
use crate::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }

    pub fn norm(self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

fn default_c() -> f64 {
    SPEED_OF_LIGHT
}

/// Everything needed to run one experiment. All quantities in SI units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub q_bs: Vec3,
    pub q_irs: Vec3,
    pub q_target: Vec3,
    pub n_bs: usize,
    pub n_sensors: usize,
    pub n_reflectors: usize,
    pub n_frames: usize,
    /// Carrier wavelength, m.
    pub wavelength: f64,
    /// Radar cross-section, m².
    pub rcs: f64,
    /// BS transmit power, W.
    pub tx_power: f64,
    /// Noise power spectral density, W/Hz.
    pub noise_psd: f64,
    #[serde(default = "default_c")]
    pub speed_of_light: f64,
    #[serde(default)]
    pub waveform: ChirpSpec,
    /// Prior direction cosine around which the DFT scan places its beams.
    /// `None` spreads the scan uniformly over [-1, 1).
    #[serde(default)]
    pub scan_center: Option<f64>,
    /// Complex scale of the residual BS-sensor leakage after cancellation.
    #[serde(default)]
    pub residual_leakage: Complex64,
}

impl ScenarioConfig {
    /// The reference scenario used throughout the experiments.
    ///
    /// The carrier wavelength is not part of the published parameter list;
    /// 1 m is used so that the semi-passive scheme operates in its
    /// sub-metre regime at the default transmit powers.
    pub fn reference_defaults() -> Self {
        Self {
            q_bs: Vec3::new(0.0, 0.0, 0.0),
            q_irs: Vec3::new(-10.0, 50.0, 2.0),
            q_target: Vec3::new(5.0, 60.0, 0.0),
            n_bs: 6,
            n_sensors: 6,
            n_reflectors: 50,
            n_frames: 6,
            wavelength: 1.0,
            rcs: units::dbsm_to_m2(7.0),
            tx_power: units::dbm_to_watts(40.0),
            noise_psd: units::dbm_per_hz_to_w_per_hz(-150.0),
            speed_of_light: SPEED_OF_LIGHT,
            waveform: ChirpSpec::default(),
            scan_center: Some(-0.5),
            residual_leakage: Complex64::new(0.0, 0.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        for (name, v) in [
            ("q_bs", self.q_bs),
            ("q_irs", self.q_irs),
            ("q_target", self.q_target),
        ] {
            if !v.is_finite() {
                return bad(&format!("{name} has non-finite components"));
            }
        }
        if self.q_target.z != 0.0 {
            return bad("q_target.z must be 0");
        }
        for (name, n) in [
            ("n_bs", self.n_bs),
            ("n_sensors", self.n_sensors),
            ("n_reflectors", self.n_reflectors),
            ("n_frames", self.n_frames),
        ] {
            if n == 0 {
                return bad(&format!("{name} must be at least 1"));
            }
        }
        for (name, v) in [
            ("wavelength", self.wavelength),
            ("rcs", self.rcs),
            ("tx_power", self.tx_power),
            ("noise_psd", self.noise_psd),
            ("speed_of_light", self.speed_of_light),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(&format!("{name} must be positive and finite"));
            }
        }
        if let Some(c) = self.scan_center {
            if !(-1.0..=1.0).contains(&c) {
                return bad("scan_center must lie in [-1, 1]");
            }
        }
        self.waveform.validate()
    }

    /// Loads a JSON or TOML config (chosen by extension, JSON otherwise).
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let cfg: Self = load_structured(path.as_ref())?;
        cfg.validate()?;
        Ok(cfg)
    }
}

pub(crate) fn load_structured<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |message: String| Error::Parse {
        path: path.display().to_string(),
        message,
    };
    match path.extension().and_then(|e| e.to_str()) {
        Some("toml") => toml::from_str(&text).map_err(|e| parse_err(e.to_string())),
        _ => serde_json::from_str(&text).map_err(|e| parse_err(e.to_string())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedGeometry {
    pub d_b2i: f64,
    pub d_i2u: f64,
    /// Arrival direction of the BS signal at the IRS.
    pub mu_b2i_aoa: f64,
    /// Departure direction from the BS towards the IRS.
    pub mu_b2i_aod: f64,
    pub mu_i2u: f64,
    pub tau_b2i: f64,
    pub tau_i2u: f64,
    pub tau_tot: f64,
    pub beta_b2i: f64,
    pub beta_i2s: f64,
}

fn direction_cosine(dy: f64, d: f64) -> f64 {
    (dy / d).clamp(-1.0, 1.0)
}

pub fn derive_geometry(config: &ScenarioConfig) -> Result<DerivedGeometry> {
    let c = config.speed_of_light;
    let lambda = config.wavelength;
    let d_b2i = config.q_irs.sub(config.q_bs).norm();
    let d_i2u = config.q_target.sub(config.q_irs).norm();
    if !(d_b2i > 0.0) {
        return Err(Error::DegenerateGeometry("BS and IRS coincide".into()));
    }
    if !(d_i2u > 0.0) {
        return Err(Error::DegenerateGeometry("IRS and target coincide".into()));
    }
    let tau_b2i = d_b2i / c;
    let tau_i2u = d_i2u / c;
    let pi = std::f64::consts::PI;
    Ok(DerivedGeometry {
        d_b2i,
        d_i2u,
        mu_b2i_aoa: direction_cosine(config.q_irs.y - config.q_bs.y, d_b2i),
        mu_b2i_aod: direction_cosine(config.q_bs.y - config.q_irs.y, d_b2i),
        mu_i2u: direction_cosine(config.q_irs.y - config.q_target.y, d_i2u),
        tau_b2i,
        tau_i2u,
        tau_tot: tau_b2i + 2.0 * tau_i2u,
        beta_b2i: (lambda * lambda / (16.0 * pi * pi * d_b2i * d_b2i)).sqrt(),
        beta_i2s: (lambda * lambda * config.rcs / (64.0 * pi.powi(3) * d_i2u.powi(4))).sqrt(),
    })
}

/// Jacobian of the channel parameters with respect to the position
/// parameters. Rows: (τ_tot, μ_I2U, β_re, β_im); columns: (x_u, y_u, β_re, β_im).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelJacobian(pub Matrix4<f64>);

pub fn channel_jacobian(config: &ScenarioConfig, geom: &DerivedGeometry) -> ChannelJacobian {
    let c = config.speed_of_light;
    let d = geom.d_i2u;
    let dx = config.q_target.x - config.q_irs.x;
    let dy = config.q_target.y - config.q_irs.y;
    // mu = -dy / d
    let d3 = d * d * d;
    let dmu_dx = dy * dx / d3;
    let dmu_dy = -1.0 / d + dy * dy / d3;
    let mut j = Matrix4::zeros();
    j[(0, 0)] = 2.0 * dx / (c * d);
    j[(0, 1)] = 2.0 * dy / (c * d);
    j[(1, 0)] = dmu_dx;
    j[(1, 1)] = dmu_dy;
    j[(2, 2)] = 1.0;
    j[(3, 3)] = 1.0;
    ChannelJacobian(j)
}
