use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use irs_loc::crb::{optimal_split, SplitMode, SplitObjective};
use irs_loc::estimators::{estimate_pipeline, EstimatorOptions, DEFAULT_GRID_DOA, DEFAULT_GRID_TOA};
use irs_loc::harness::{emit, run_sweep, run_trial, scenario_crb, ExperimentSpec, Scheme};
use irs_loc::irs_schedule::{make_schedule, ScheduleKind};
use irs_loc::rng::{derive_seed, Stream};
use irs_loc::scenario::{derive_geometry, ScenarioConfig};
use irs_loc::signal_sim::{add_noise, draw_realization, synthesize_snapshots};
use irs_loc::waveform::build_waveform;
use irs_loc::{units, Error, Result};

#[derive(Parser)]
#[command(name = "irs-loc", version, about = "Semi-passive IRS target localization toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario config (JSON or TOML); defaults to the reference scenario.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the BS transmit power, dBm.
    #[arg(long)]
    tx_power_dbm: Option<f64>,
}

impl ScenarioArgs {
    fn load(&self) -> Result<ScenarioConfig> {
        let mut cfg = match &self.config {
            Some(p) => ScenarioConfig::load(p)?,
            None => ScenarioConfig::reference_defaults(),
        };
        if let Some(p) = self.tx_power_dbm {
            cfg.tx_power = units::dbm_to_watts(p);
            cfg.validate()?;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print the Cramér-Rao report for a scenario as JSON.
    Crb {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// IRS schedule: dft_scan, random or oracle_optimal.
        #[arg(long, default_value = "dft_scan")]
        scheme: String,
        /// Draw the fading coefficient from this seed instead of using α = 1.
        #[arg(long)]
        seed: Option<u64>,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one noisy trial and print the estimate as JSON.
    Estimate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// semi_passive_dft, semi_passive_random or fully_passive.
        #[arg(long, default_value = "semi_passive_dft")]
        scheme: String,
        #[arg(long, default_value_t = DEFAULT_GRID_DOA)]
        grid_doa: usize,
        #[arg(long, default_value_t = DEFAULT_GRID_TOA)]
        grid_toa: usize,
        /// Frame/sensor combining before the delay search: sum or maximum_ratio.
        #[arg(long, default_value = "sum")]
        combining: String,
        /// Directory for the result, spectra, schedule and snapshot dumps.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a Monte-Carlo sweep from an experiment file.
    Sweep {
        /// Experiment spec (JSON or TOML).
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        /// Comma-separated scheme list.
        #[arg(long, value_delimiter = ',')]
        scheme: Option<Vec<String>>,
        #[arg(long)]
        grid_doa: Option<usize>,
        #[arg(long)]
        grid_toa: Option<usize>,
        /// Override the combining rule (sum or maximum_ratio).
        #[arg(long)]
        combining: Option<String>,
    },
    /// Tabulate the optimal element split between reflectors and sensors.
    Split {
        #[arg(long, default_value_t = 6)]
        min: usize,
        #[arg(long, default_value_t = 60)]
        max: usize,
        /// Scan every split instead of using the closed forms.
        #[arg(long)]
        brute_force: bool,
    },
}

fn write_or_print(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::io(p, e)),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serialisable")
}

fn cmd_crb(scenario: &ScenarioArgs, scheme: &str, seed: Option<u64>, out: Option<&Path>) -> Result<()> {
    let cfg = scenario.load()?;
    let report = scenario_crb(&cfg, scheme.parse()?, seed)?;
    write_or_print(&to_json(&report), out)
}

fn cmd_estimate(
    scenario: &ScenarioArgs,
    seed: u64,
    scheme: &str,
    options: EstimatorOptions,
    out: Option<&Path>,
) -> Result<()> {
    let cfg = scenario.load()?;
    let scheme: Scheme = scheme.parse()?;
    let kind = match scheme {
        Scheme::SemiPassiveDft => ScheduleKind::DftScan,
        Scheme::SemiPassiveRandom => ScheduleKind::Random,
        Scheme::FullyPassive => {
            let r = run_trial(&cfg, scheme, seed, 0, &options)?;
            return write_or_print(&to_json(&r), out.map(|d| d.join("estimate.json")).as_deref());
        }
        Scheme::CrbCurve => return Err(Error::InvalidExperiment("crb_curve is not an estimator".into())),
    };
    let geom = derive_geometry(&cfg)?;
    let waveform = build_waveform(&cfg.waveform)?;
    let realization = draw_realization(&cfg, &geom, derive_seed(seed, 0, Stream::Fading));
    let schedule = make_schedule(
        kind,
        cfg.n_reflectors,
        cfg.n_frames,
        Some(&geom),
        derive_seed(seed, 0, Stream::Schedule),
        cfg.scan_center,
    )?;
    let clean = synthesize_snapshots(&realization, &schedule, &waveform, &cfg)?;
    let noisy = add_noise(clean, &cfg, derive_seed(seed, 0, Stream::Noise))?;
    let output = estimate_pipeline(&noisy, &schedule, &waveform, &cfg, &options)?;
    let result = output.result.clone().with_truth(&cfg, &geom, geom.tau_tot);
    let text = to_json(&result);
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let dump = |name: &str, f: &dyn Fn(&mut Vec<u8>) -> std::io::Result<()>| -> Result<()> {
            let p = dir.join(name);
            let mut buf = Vec::new();
            f(&mut buf).map_err(|e| Error::io(&p, e))?;
            std::fs::write(&p, buf).map_err(|e| Error::io(&p, e))
        };
        dump("music_spectrum.csv", &|b| output.doa.write_csv(b))?;
        dump("toa_objective.csv", &|b| {
            output.toa.write_csv(b, waveform.sample_period(), waveform.len())
        })?;
        dump("schedule.csv", &|b| schedule.write_csv(b))?;
        noisy.save(dir.join("snapshots.bin"))?;
        std::fs::write(dir.join("estimate.json"), &text).map_err(|e| Error::io(dir, e))?;
    }
    println!("{text}");
    Ok(())
}

struct SweepOverrides<'a> {
    seed: Option<u64>,
    trials: Option<usize>,
    schemes: Option<&'a [String]>,
    grid_doa: Option<usize>,
    grid_toa: Option<usize>,
    combining: Option<&'a str>,
}

fn cmd_sweep(config: &Path, out: &Path, o: SweepOverrides) -> Result<()> {
    let mut spec = ExperimentSpec::load(config)?;
    if let Some(s) = o.seed {
        spec.master_seed = s;
    }
    if let Some(t) = o.trials {
        spec.trials = t;
    }
    if let Some(list) = o.schemes {
        spec.schemes = list.iter().map(|s| s.parse()).collect::<Result<_>>()?;
    }
    if let Some(g) = o.grid_doa {
        spec.grid_doa = g;
    }
    if let Some(g) = o.grid_toa {
        spec.grid_toa = g;
    }
    if let Some(c) = o.combining {
        spec.combining = c.parse()?;
    }
    spec.validate()?;
    let result = run_sweep(&spec)?;
    let (csv, manifest) = emit(&spec, &result, out)?;
    eprintln!("wrote {} and {}", csv.display(), manifest.display());
    Ok(())
}

fn cmd_split(min: usize, max: usize, brute: bool) -> Result<()> {
    let mode = if brute { SplitMode::BruteForce } else { SplitMode::ClosedForm };
    println!("n_total,toa_n_r,toa_n_s,doa_n_r,doa_n_s");
    for n in min.max(3)..=max {
        let t = optimal_split(n, SplitObjective::Toa, mode)?;
        let d = optimal_split(n, SplitObjective::Doa, mode)?;
        println!("{n},{},{},{},{}", t.n_r, t.n_s, d.n_r, d.n_s);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Crb {
            scenario,
            scheme,
            seed,
            out,
        } => cmd_crb(scenario, scheme, *seed, out.as_deref()),
        Command::Estimate {
            scenario,
            seed,
            scheme,
            grid_doa,
            grid_toa,
            combining,
            out,
        } => combining.parse().and_then(|combining| {
            let options = EstimatorOptions {
                grid_doa: *grid_doa,
                grid_toa: *grid_toa,
                refine: false,
                combining,
            };
            cmd_estimate(scenario, *seed, scheme, options, out.as_deref())
        }),
        Command::Sweep {
            config,
            out,
            seed,
            trials,
            scheme,
            grid_doa,
            grid_toa,
            combining,
        } => cmd_sweep(
            config,
            out,
            SweepOverrides {
                seed: *seed,
                trials: *trials,
                schemes: scheme.as_deref(),
                grid_doa: *grid_doa,
                grid_toa: *grid_toa,
                combining: combining.as_deref(),
            },
        ),
        Command::Split { min, max, brute_force } => cmd_split(*min, *max, *brute_force),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
