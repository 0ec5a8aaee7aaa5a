#![allow(dead_code)]

use std::path::PathBuf;

use irs_loc::crb::Fim;
use irs_loc::scenario::{derive_geometry, ScenarioConfig, Vec3};
use irs_loc::units;
use rand::Rng;

pub fn experiments_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../experiments")
}

/// A valid scenario with the target somewhere in front of the IRS and
/// element counts, power and chirp drawn from plausible ranges.
pub fn random_config(rng: &mut impl Rng) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::reference_defaults();
    cfg.q_irs = Vec3::new(rng.random_range(-20.0..0.0), rng.random_range(30.0..70.0), rng.random_range(0.5..5.0));
    cfg.q_target = Vec3::new(
        cfg.q_irs.x + rng.random_range(2.0..40.0),
        cfg.q_irs.y + rng.random_range(-25.0..25.0),
        0.0,
    );
    cfg.n_sensors = rng.random_range(2..=16);
    cfg.n_reflectors = rng.random_range(4..=80);
    cfg.n_frames = rng.random_range(1..=12);
    cfg.tx_power = units::dbm_to_watts(rng.random_range(20.0..50.0));
    cfg.wavelength = rng.random_range(0.1..1.0);
    // keep the echo inside the 1/B observation window
    let tau_tot = derive_geometry(&cfg).expect("valid geometry").tau_tot;
    let b_max = (0.9 / tau_tot).min(5e6);
    cfg.waveform.bandwidth = rng.random_range(0.2 * b_max..b_max);
    cfg.waveform.freq_rate = rng.random_range(0.1e6..2e6);
    cfg.waveform.n_samples = [32, 64, 128][rng.random_range(0..3)];
    cfg.validate().expect("generator produces valid configs");
    cfg
}

/// Entrywise relative error of `a` against `b`. Entries that vanish in `b`
/// are measured against `1e-6·sqrt(b_ii b_jj)` instead of zero.
pub fn fim_rel_err(a: &Fim, b: &Fim) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            let floor = 1e-6 * (b[(i, i)] * b[(j, j)]).abs().sqrt();
            let e = (a[(i, j)] - b[(i, j)]).abs() / b[(i, j)].abs().max(floor);
            worst = worst.max(e);
        }
    }
    worst
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}
