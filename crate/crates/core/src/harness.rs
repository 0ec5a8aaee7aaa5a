//! Monte-Carlo RMSE experiments, parameter sweeps, and the fully-passive
//! baseline in which the BS itself receives the echo through the IRS.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::crb::{closed_form_crb, crb_report, fim_channel, CrbReport};
use crate::estimators::{
    estimate_pipeline, estimate_toa_beta, solve_location_from_range, Combining, EstimationResult, EstimatorOptions,
    DEFAULT_GRID_DOA, DEFAULT_GRID_TOA,
};
use crate::irs_schedule::{effective_gain, make_schedule, PhaseSchedule, ScheduleKind};
use crate::rng::{derive_seed, Stream};
use crate::scenario::{channel_jacobian, derive_geometry, load_structured, DerivedGeometry, ScenarioConfig};
use crate::signal_sim::{
    add_noise, complex_gaussian, noise_variance, synthesize_snapshots, ChannelRealization,
};
use crate::waveform::{build_waveform, delay_sequence, SampledWaveform};
use crate::{rng, units, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    SemiPassiveDft,
    SemiPassiveRandom,
    FullyPassive,
    CrbCurve,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::SemiPassiveDft => "semi_passive_dft",
            Scheme::SemiPassiveRandom => "semi_passive_random",
            Scheme::FullyPassive => "fully_passive",
            Scheme::CrbCurve => "crb_curve",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "semi_passive_dft" => Ok(Scheme::SemiPassiveDft),
            "semi_passive_random" => Ok(Scheme::SemiPassiveRandom),
            "fully_passive" => Ok(Scheme::FullyPassive),
            "crb_curve" => Ok(Scheme::CrbCurve),
            other => Err(Error::InvalidExperiment(format!("unknown scheme {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVar {
    TxPowerDbm,
    NReflectors,
    NSensors,
    NFrames,
}

impl SweepVar {
    pub fn name(self) -> &'static str {
        match self {
            SweepVar::TxPowerDbm => "tx_power_dbm",
            SweepVar::NReflectors => "n_reflectors",
            SweepVar::NSensors => "n_sensors",
            SweepVar::NFrames => "n_frames",
        }
    }

    /// `base` with the swept quantity set to `value`.
    pub fn apply(self, base: &ScenarioConfig, value: f64) -> Result<ScenarioConfig> {
        let mut cfg = base.clone();
        let count = || {
            if value >= 1.0 && value.fract() == 0.0 {
                Ok(value as usize)
            } else {
                Err(Error::InvalidExperiment(format!(
                    "{} must be a positive integer, got {value}",
                    self.name()
                )))
            }
        };
        match self {
            SweepVar::TxPowerDbm => cfg.tx_power = units::dbm_to_watts(value),
            SweepVar::NReflectors => cfg.n_reflectors = count()?,
            SweepVar::NSensors => cfg.n_sensors = count()?,
            SweepVar::NFrames => cfg.n_frames = count()?,
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn default_base() -> ScenarioConfig {
    ScenarioConfig::reference_defaults()
}

fn default_grid_doa() -> usize {
    DEFAULT_GRID_DOA
}

fn default_grid_toa() -> usize {
    DEFAULT_GRID_TOA
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default = "default_base")]
    pub base: ScenarioConfig,
    /// Overrides `base.tx_power` (given in dBm) for every point.
    #[serde(default)]
    pub tx_power_dbm: Option<f64>,
    pub sweep_var: SweepVar,
    pub sweep_values: Vec<f64>,
    pub trials: usize,
    pub schemes: Vec<Scheme>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_grid_doa")]
    pub grid_doa: usize,
    #[serde(default = "default_grid_toa")]
    pub grid_toa: usize,
    #[serde(default)]
    pub refine: bool,
    #[serde(default)]
    pub combining: Combining,
}

impl ExperimentSpec {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let spec: Self = load_structured(path.as_ref())?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidExperiment(m.to_string()));
        if self.schemes.is_empty() {
            return bad("no schemes requested");
        }
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if self.sweep_values.is_empty() {
            return bad("no sweep values");
        }
        if !self.sweep_values.windows(2).all(|w| w[0] < w[1]) {
            return bad("sweep values must be strictly increasing");
        }
        if self.grid_doa < 2 || self.grid_toa < 1 {
            return bad("grid sizes too small");
        }
        self.base.validate()?;
        for &v in &self.sweep_values {
            self.point_config(v)?;
        }
        Ok(())
    }

    /// Scenario at one sweep value.
    pub fn point_config(&self, value: f64) -> Result<ScenarioConfig> {
        let mut base = self.base.clone();
        if let Some(p) = self.tx_power_dbm {
            base.tx_power = units::dbm_to_watts(p);
        }
        self.sweep_var.apply(&base, value)
    }

    pub fn options(&self) -> EstimatorOptions {
        EstimatorOptions {
            grid_doa: self.grid_doa,
            grid_toa: self.grid_toa,
            refine: self.refine,
            combining: self.combining,
        }
    }
}

/// Clean per-frame echo at the BS for the fully-passive scheme: the cascade
/// gain applies on both passes and the BS combines its receive antennas
/// towards the IRS. Returns `[frame][sample]`.
pub fn fully_passive_mean_signal(
    config: &ScenarioConfig,
    geom: &DerivedGeometry,
    schedule: &PhaseSchedule,
    waveform: &SampledWaveform,
    alpha: Complex64,
) -> Result<Vec<Vec<Complex64>>> {
    let beta_fp = alpha * (config.tx_power * config.n_bs as f64).sqrt() * geom.beta_b2i.powi(2) * geom.beta_i2s;
    let tau_fp = 2.0 * geom.tau_b2i + 2.0 * geom.tau_i2u;
    let delayed = delay_sequence(&waveform.samples, tau_fp, waveform.sample_period())?;
    let rx_gain = (config.n_sensors as f64).sqrt();
    Ok(effective_gain(schedule, geom.mu_i2u, geom.mu_b2i_aoa)
        .into_iter()
        .map(|g| {
            let a = beta_fp * g * g * rx_gain;
            delayed.iter().map(|x| a * x).collect()
        })
        .collect())
}

/// One fully-passive trial: beam-sweep direction from the most energetic
/// frame, coherent frame sum, then the same delay search and geometric solve.
pub fn fully_passive_trial(
    config: &ScenarioConfig,
    schedule: &PhaseSchedule,
    waveform: &SampledWaveform,
    alpha: Complex64,
    noise_seed: u64,
    grid_toa: usize,
) -> Result<EstimationResult> {
    let geom = derive_geometry(config)?;
    let directions = schedule
        .directions
        .as_ref()
        .ok_or_else(|| Error::InvalidExperiment("beam sweeping needs a scan schedule".into()))?;
    let mut frames = fully_passive_mean_signal(config, &geom, schedule, waveform, alpha)?;
    let var = noise_variance(config);
    let mut r = rng::seeded(noise_seed);
    for v in frames.iter_mut().flatten() {
        *v += complex_gaussian(&mut r, var);
    }
    let energy: Vec<f64> = frames.iter().map(|f| f.iter().map(|v| v.norm_sqr()).sum()).collect();
    let mut best = 0;
    for (n, &e) in energy.iter().enumerate() {
        if e > energy[best] {
            best = n;
        }
    }
    let mu_hat = directions[best];
    let mut y_bar = vec![Complex64::new(0.0, 0.0); waveform.len()];
    for f in &frames {
        for (a, v) in y_bar.iter_mut().zip(f) {
            *a += v;
        }
    }
    let toa = estimate_toa_beta(&y_bar, waveform, grid_toa)?;
    let loc = solve_location_from_range(mu_hat, (toa.tau_hat - 2.0 * geom.tau_b2i) / 2.0, config)?;
    Ok(EstimationResult {
        mu_hat,
        tau_hat: toa.tau_hat,
        beta_bar_hat: toa.beta_bar_hat,
        x_hat: loc.x_hat,
        y_hat: loc.y_hat,
        feasible: loc.feasible,
        low_confidence: schedule.n_frames() == 1,
        errors: None,
    }
    .with_truth(config, &geom, 2.0 * geom.tau_b2i + 2.0 * geom.tau_i2u))
}

/// One semi-passive trial with the given schedule kind.
pub fn semi_passive_trial(
    config: &ScenarioConfig,
    kind: ScheduleKind,
    master_seed: u64,
    trial: u64,
    options: &EstimatorOptions,
) -> Result<EstimationResult> {
    let geom = derive_geometry(config)?;
    let waveform = build_waveform(&config.waveform)?;
    let realization = crate::signal_sim::draw_realization(config, &geom, derive_seed(master_seed, trial, Stream::Fading));
    let schedule = make_schedule(
        kind,
        config.n_reflectors,
        config.n_frames,
        Some(&geom),
        derive_seed(master_seed, trial, Stream::Schedule),
        config.scan_center,
    )?;
    let clean = synthesize_snapshots(&realization, &schedule, &waveform, config)?;
    let noisy = add_noise(clean, config, derive_seed(master_seed, trial, Stream::Noise))?;
    let out = estimate_pipeline(&noisy, &schedule, &waveform, config, options)?;
    Ok(out.result.with_truth(config, &geom, geom.tau_tot))
}

pub fn run_trial(
    config: &ScenarioConfig,
    scheme: Scheme,
    master_seed: u64,
    trial: u64,
    options: &EstimatorOptions,
) -> Result<EstimationResult> {
    match scheme {
        Scheme::SemiPassiveDft => semi_passive_trial(config, ScheduleKind::DftScan, master_seed, trial, options),
        Scheme::SemiPassiveRandom => semi_passive_trial(config, ScheduleKind::Random, master_seed, trial, options),
        Scheme::FullyPassive => {
            let geom = derive_geometry(config)?;
            let waveform = build_waveform(&config.waveform)?;
            let alpha = crate::signal_sim::draw_realization(config, &geom, derive_seed(master_seed, trial, Stream::Fading)).alpha;
            let schedule = make_schedule(
                ScheduleKind::DftScan,
                config.n_reflectors,
                config.n_frames,
                Some(&geom),
                0,
                config.scan_center,
            )?;
            fully_passive_trial(
                config,
                &schedule,
                &waveform,
                alpha,
                derive_seed(master_seed, trial, Stream::Noise),
                options.grid_toa,
            )
        }
        Scheme::CrbCurve => Err(Error::InvalidExperiment("crb_curve has no trials".into())),
    }
}

/// Full bound report for one scenario and schedule kind. With `seed` the
/// fading draw and random phases come from that seed, otherwise α = 1.
/// Oracle beams with a cross-term-free waveform switch `crb_tau`/`crb_mu`
/// over to the closed forms.
pub fn scenario_crb(config: &ScenarioConfig, kind: ScheduleKind, seed: Option<u64>) -> Result<CrbReport> {
    let geom = derive_geometry(config)?;
    let waveform = build_waveform(&config.waveform)?;
    let realization = match seed {
        Some(s) => crate::signal_sim::draw_realization(config, &geom, derive_seed(s, 0, Stream::Fading)),
        None => ChannelRealization::with_alpha(config, &geom, Complex64::new(1.0, 0.0)),
    };
    let schedule = make_schedule(
        kind,
        config.n_reflectors,
        config.n_frames,
        Some(&geom),
        derive_seed(seed.unwrap_or(0), 0, Stream::Schedule),
        config.scan_center,
    )?;
    let fim = fim_channel(&realization, &schedule, &waveform, config)?;
    let mut report = crb_report(&fim, &channel_jacobian(config, &geom))?;
    let orthogonal = waveform.cross_term.norm() <= 1e-6 * waveform.energy * waveform.msq_bandwidth.sqrt();
    if kind == ScheduleKind::OracleOptimal && orthogonal {
        let cf = closed_form_crb(config, &realization, &waveform);
        report.crb_tau = cf.crb_tau;
        report.crb_mu = cf.crb_mu;
        report.closed_form_used = true;
    }
    Ok(report)
}

/// Root CRBs `(√CRB(μ), √CRB(q))` with the scan schedule at unit fading.
pub fn crb_reference(config: &ScenarioConfig) -> Result<(f64, f64)> {
    let geom = derive_geometry(config)?;
    let waveform = build_waveform(&config.waveform)?;
    let r = ChannelRealization::with_alpha(config, &geom, Complex64::new(1.0, 0.0));
    let schedule = make_schedule(
        ScheduleKind::DftScan,
        config.n_reflectors,
        config.n_frames,
        Some(&geom),
        0,
        config.scan_center,
    )?;
    let fim = fim_channel(&r, &schedule, &waveform, config)?;
    let report = crb_report(&fim, &channel_jacobian(config, &geom))?;
    Ok((report.crb_mu.sqrt(), report.crb_position.sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointStats {
    pub scheme: Scheme,
    pub sweep_value: f64,
    pub trials_ok: usize,
    pub trials_failed: usize,
    pub rmse_mu: f64,
    pub rmse_pos_m: f64,
    pub crb_mu: f64,
    pub crb_pos_m: f64,
    /// More than half of the trials failed.
    pub invalid: bool,
    pub wall_time_s: f64,
}

/// Monte-Carlo statistics for one scheme at one configuration. Trial `t`
/// always uses the seeds derived from `(master_seed, t)`, so different
/// schemes and sweep points see the same fading and noise draws.
pub fn run_monte_carlo(
    config: &ScenarioConfig,
    scheme: Scheme,
    trials: usize,
    master_seed: u64,
    options: &EstimatorOptions,
) -> Result<PointStats> {
    let start = Instant::now();
    let (crb_mu, crb_pos_m) = crb_reference(config).unwrap_or((f64::NAN, f64::NAN));
    if scheme == Scheme::CrbCurve {
        return Ok(PointStats {
            scheme,
            sweep_value: f64::NAN,
            trials_ok: 0,
            trials_failed: 0,
            rmse_mu: f64::NAN,
            rmse_pos_m: f64::NAN,
            crb_mu,
            crb_pos_m,
            invalid: false,
            wall_time_s: start.elapsed().as_secs_f64(),
        });
    }
    let outcomes: Vec<Option<(f64, f64)>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| match run_trial(config, scheme, master_seed, t, options) {
            Ok(r) if r.feasible => r.errors.map(|e| (e.mu, e.position_m)),
            _ => None,
        })
        .collect();
    let ok: Vec<(f64, f64)> = outcomes.iter().flatten().copied().collect();
    let failed = trials - ok.len();
    let rmse = |f: fn(&(f64, f64)) -> f64| {
        if ok.is_empty() {
            f64::NAN
        } else {
            (ok.iter().map(|e| f(e).powi(2)).sum::<f64>() / ok.len() as f64).sqrt()
        }
    };
    Ok(PointStats {
        scheme,
        sweep_value: f64::NAN,
        trials_ok: ok.len(),
        trials_failed: failed,
        rmse_mu: rmse(|e| e.0),
        rmse_pos_m: rmse(|e| e.1),
        crb_mu,
        crb_pos_m,
        invalid: 2 * failed > trials,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub sweep_var: SweepVar,
    /// Ordered by sweep value, then by scheme in request order.
    pub points: Vec<PointStats>,
    pub wall_time_s: f64,
}

impl SweepResult {
    /// Points of one scheme in sweep order.
    pub fn curve(&self, scheme: Scheme) -> Vec<&PointStats> {
        self.points.iter().filter(|p| p.scheme == scheme).collect()
    }

    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(
            out,
            "scheme,sweep_var,sweep_value,trials_ok,trials_failed,rmse_mu,rmse_pos_m,crb_mu,crb_pos_m"
        )?;
        for p in &self.points {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                p.scheme.name(),
                self.sweep_var.name(),
                p.sweep_value,
                p.trials_ok,
                p.trials_failed,
                p.rmse_mu,
                p.rmse_pos_m,
                p.crb_mu,
                p.crb_pos_m
            )?;
        }
        Ok(())
    }
}

pub fn run_sweep(spec: &ExperimentSpec) -> Result<SweepResult> {
    spec.validate()?;
    let start = Instant::now();
    let options = spec.options();
    let jobs: Vec<(f64, Scheme)> = spec
        .sweep_values
        .iter()
        .flat_map(|&v| spec.schemes.iter().map(move |&s| (v, s)))
        .collect();
    let points = jobs
        .par_iter()
        .map(|&(v, scheme)| {
            let cfg = spec.point_config(v)?;
            let mut p = run_monte_carlo(&cfg, scheme, spec.trials, spec.master_seed, &options)?;
            p.sweep_value = v;
            Ok(p)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        sweep_var: spec.sweep_var,
        points,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    master_seed: u64,
    threads: usize,
    spec: &'a ExperimentSpec,
    csv: String,
    wall_time_s: f64,
    points: &'a [PointStats],
}

/// Writes `sweep.csv` and `manifest.json` into `dir`; returns their paths.
pub fn emit(spec: &ExperimentSpec, result: &SweepResult, dir: impl AsRef<Path>) -> Result<(PathBuf, PathBuf)> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let csv_path = dir.join("sweep.csv");
    let file = std::fs::File::create(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
    let mut w = std::io::BufWriter::new(file);
    result
        .write_csv(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(&csv_path, e))?;

    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        master_seed: spec.master_seed,
        threads: rayon::current_num_threads(),
        spec,
        csv: "sweep.csv".into(),
        wall_time_s: result.wall_time_s,
        points: &result.points,
    };
    let man_path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Parse {
        path: man_path.display().to_string(),
        message: e.to_string(),
    })?;
    std::fs::write(&man_path, text).map_err(|e| Error::io(&man_path, e))?;
    Ok((csv_path, man_path))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(schemes: Vec<Scheme>) -> ExperimentSpec {
        ExperimentSpec {
            base: ScenarioConfig::reference_defaults(),
            tx_power_dbm: None,
            sweep_var: SweepVar::TxPowerDbm,
            sweep_values: vec![40.0, 46.0],
            trials: 4,
            schemes,
            master_seed: 3,
            grid_doa: 512,
            grid_toa: 1024,
            refine: false,
            combining: Combining::Sum,
        }
    }

    #[test]
    fn validation() {
        assert!(spec(vec![]).validate().is_err());
        let mut s = spec(vec![Scheme::CrbCurve]);
        s.sweep_values = vec![46.0, 40.0];
        assert!(s.validate().is_err());
        let mut s = spec(vec![Scheme::CrbCurve]);
        s.sweep_var = SweepVar::NSensors;
        s.sweep_values = vec![2.0, 2.5];
        assert!(s.validate().is_err());
        assert!(spec(vec![Scheme::CrbCurve]).validate().is_ok());
    }

    #[test]
    fn single_trial_rmse_is_absolute_error() {
        let cfg = ScenarioConfig::reference_defaults();
        let opts = EstimatorOptions::default();
        let p = run_monte_carlo(&cfg, Scheme::SemiPassiveDft, 1, 9, &opts).unwrap();
        let r = run_trial(&cfg, Scheme::SemiPassiveDft, 9, 0, &opts).unwrap();
        let e = r.errors.unwrap();
        assert_eq!(p.trials_ok, 1);
        assert_eq!(p.rmse_mu, e.mu.abs());
        assert_eq!(p.rmse_pos_m, e.position_m);
    }

    #[test]
    fn near_noiseless_is_sub_centimetre() {
        let mut cfg = ScenarioConfig::reference_defaults();
        cfg.noise_psd = 1e-30;
        let opts = EstimatorOptions {
            grid_doa: 8192,
            grid_toa: 8192,
            ..Default::default()
        };
        let p = run_monte_carlo(&cfg, Scheme::SemiPassiveDft, 50, 1, &opts).unwrap();
        assert_eq!(p.trials_ok, 50);
        assert!(p.rmse_pos_m < 0.01, "{}", p.rmse_pos_m);
    }

    #[test]
    fn fully_passive_receives_less_power() {
        let cfg = ScenarioConfig::reference_defaults();
        let geom = derive_geometry(&cfg).unwrap();
        let w = build_waveform(&cfg.waveform).unwrap();
        let sched = make_schedule(ScheduleKind::DftScan, cfg.n_reflectors, cfg.n_frames, Some(&geom), 0, cfg.scan_center).unwrap();
        let alpha = Complex64::new(1.0, 0.0);
        let fp = fully_passive_mean_signal(&cfg, &geom, &sched, &w, alpha).unwrap();
        let fp_power: f64 = fp.iter().flatten().map(|v| v.norm_sqr()).sum::<f64>() / (fp.len() * w.len()) as f64;
        let r = ChannelRealization::with_alpha(&cfg, &geom, alpha);
        let sp = synthesize_snapshots(&r, &sched, &w, &cfg).unwrap();
        let sp_power: f64 = sp.data.iter().map(|v| v.norm_sqr()).sum::<f64>() / sp.data.len() as f64;
        let var = noise_variance(&cfg);
        assert!(fp_power / var < sp_power / var);
    }

    #[test]
    fn fully_passive_noiseless_round_trip() {
        let mut cfg = ScenarioConfig::reference_defaults();
        cfg.noise_psd = 1e-40;
        cfg.n_frames = 50;
        cfg.scan_center = None;
        let geom = derive_geometry(&cfg).unwrap();
        let w = build_waveform(&cfg.waveform).unwrap();
        let sched = make_schedule(ScheduleKind::DftScan, cfg.n_reflectors, cfg.n_frames, Some(&geom), 0, None).unwrap();
        let r = fully_passive_trial(&cfg, &sched, &w, Complex64::new(1.0, 0.0), 1, 8192).unwrap();
        let e = r.errors.unwrap();
        // beam grid step 0.04 in μ, delay grid step window/8192
        assert!(e.mu.abs() <= 0.02 + 1e-12);
        assert!(e.tau.abs() <= w.spec.window() / 8192.0);
        assert!(!r.low_confidence);

        cfg.n_frames = 1;
        let one = make_schedule(ScheduleKind::DftScan, cfg.n_reflectors, 1, Some(&geom), 0, cfg.scan_center).unwrap();
        let r = fully_passive_trial(&cfg, &one, &w, Complex64::new(1.0, 0.0), 1, 8192).unwrap();
        assert!(r.low_confidence);
        assert_eq!(r.mu_hat, one.directions.unwrap()[0]);
    }

    #[test]
    fn sweep_is_deterministic_and_emits() {
        let s = spec(vec![Scheme::SemiPassiveDft, Scheme::FullyPassive, Scheme::CrbCurve]);
        let a = run_sweep(&s).unwrap();
        let b = run_sweep(&s).unwrap();
        let csv = |r: &SweepResult| {
            let mut v = Vec::new();
            r.write_csv(&mut v).unwrap();
            v
        };
        assert_eq!(csv(&a), csv(&b));
        assert_eq!(a.points.len(), 6);
        let dir = tempfile::tempdir().unwrap();
        let (c, m) = emit(&s, &a, dir.path()).unwrap();
        let text = std::fs::read_to_string(c).unwrap();
        assert!(text.starts_with("scheme,sweep_var,sweep_value,trials_ok,trials_failed,rmse_mu,rmse_pos_m,crb_mu,crb_pos_m\n"));
        let man: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(m).unwrap()).unwrap();
        assert_eq!(man["master_seed"], 3);
    }

    #[test]
    fn crb_reference_decreases_with_power() {
        let mut cfg = ScenarioConfig::reference_defaults();
        let (m1, p1) = crb_reference(&cfg).unwrap();
        cfg.tx_power *= 2.0;
        let (m2, p2) = crb_reference(&cfg).unwrap();
        assert!((m1 / m2 - 2f64.sqrt()).abs() < 1e-9);
        assert!((p1 / p2 - 2f64.sqrt()).abs() < 1e-9);
    }
}
