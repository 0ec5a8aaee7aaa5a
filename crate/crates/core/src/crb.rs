//! Fisher information over the channel parameters
//! `u = (τ_tot, μ_I2U, Re β, Im β)`, its chain-rule transform to target
//! position, and the resulting Cramér-Rao bounds.

use std::f64::consts::PI;

use nalgebra::{Matrix4, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::arrays::{aperture_factor, centered_index};
use crate::irs_schedule::{effective_gain, effective_gain_derivative, PhaseSchedule};
use crate::scenario::{ChannelJacobian, ScenarioConfig};
use crate::signal_sim::ChannelRealization;
use crate::waveform::SampledWaveform;
use crate::{Error, Result};

pub type Fim = Matrix4<f64>;

/// Per-frame FIM contributions.
pub fn fim_channel_frames(
    realization: &ChannelRealization,
    schedule: &PhaseSchedule,
    waveform: &SampledWaveform,
    config: &ScenarioConfig,
) -> Result<Vec<Fim>> {
    if !(waveform.energy > 0.0) {
        return Err(Error::ZeroEnergy);
    }
    let geom = &realization.geom;
    let beta = realization.beta_target;
    let b2 = beta.norm_sqr();
    let n0 = config.noise_psd;
    let ns = config.n_sensors as f64;
    let es = waveform.energy;
    let w2es = waveform.msq_bandwidth * es;
    // ∫ s ṡ* dt
    let cr = waveform.cross_term;
    let g = effective_gain(schedule, geom.mu_i2u, geom.mu_b2i_aoa);
    let gd = effective_gain_derivative(schedule, geom.mu_i2u, geom.mu_b2i_aoa);
    let aperture = PI * PI * (ns - 1.0) * (ns + 1.0);
    let j = Complex64::i();

    Ok(g.iter()
        .zip(&gd)
        .map(|(&gn, &gdn)| {
            let a = gn.norm_sqr();
            let tt = 2.0 * b2 * ns * a * w2es / n0;
            let tm = 2.0 * b2 * ns / n0 * (gdn * gn.conj() * cr.conj()).re;
            let tr = 2.0 * ns * a / n0 * (beta * cr).re;
            let ti = -2.0 * ns * a / n0 * (j * beta * cr).re;
            let mm = es * b2 * ns / (6.0 * n0) * (12.0 * gdn.norm_sqr() + aperture * a);
            let mr = 2.0 * ns * es / n0 * (beta * gn.conj() * gdn).re;
            let mi = 2.0 * ns * es / n0 * (beta * gn.conj() * gdn).im;
            let bb = 2.0 * ns * a * es / n0;
            Matrix4::new(
                tt, tm, tr, ti, //
                tm, mm, mr, mi, //
                tr, mr, bb, 0.0, //
                ti, mi, 0.0, bb,
            )
        })
        .collect())
}

/// Closed-form FIM accumulated over all frames.
pub fn fim_channel(
    realization: &ChannelRealization,
    schedule: &PhaseSchedule,
    waveform: &SampledWaveform,
    config: &ScenarioConfig,
) -> Result<Fim> {
    Ok(fim_channel_frames(realization, schedule, waveform, config)?
        .into_iter()
        .fold(Fim::zeros(), |acc, f| acc + f))
}

/// Noise-free mean signal for the finite-difference oracle, evaluated from
/// the analytic waveform on the sample grid. Layout `[s][n][l]`.
///
/// `u[0]` is the delay offset from the true ToA: the observation window
/// follows the echo, so the delay integrals are shift-invariant as the
/// analytic bound assumes.
fn oracle_mean(
    u: [f64; 4],
    schedule: &PhaseSchedule,
    waveform: &SampledWaveform,
    n_sensors: usize,
    mu_incident: f64,
) -> Vec<Complex64> {
    let [tau, mu, br, bi] = u;
    let beta = Complex64::new(br, bi);
    let nr = schedule.n_reflectors;
    let spec = waveform.spec;
    let delayed: Vec<Complex64> = (0..spec.n_samples).map(|l| spec.eval(spec.sample_time(l) - tau)).collect();
    let phasor = |n: usize, i: usize, m: f64| Complex64::from_polar(1.0, PI * centered_index(n, i) * m);
    let gains: Vec<Complex64> = schedule
        .frames
        .iter()
        .map(|theta| {
            theta
                .iter()
                .enumerate()
                .map(|(i, t)| t * phasor(nr, i, mu) * phasor(nr, i, mu_incident))
                .sum()
        })
        .collect();
    let mut out = Vec::with_capacity(n_sensors * gains.len() * delayed.len());
    for s in 0..n_sensors {
        let a = beta * phasor(n_sensors, s, mu);
        for g in &gains {
            let ag = a * g;
            out.extend(delayed.iter().map(|x| ag * x));
        }
    }
    out
}

/// Finite-difference FIM before symmetrisation.
pub fn numeric_fim_oracle_raw(
    realization: &ChannelRealization,
    schedule: &PhaseSchedule,
    waveform: &SampledWaveform,
    config: &ScenarioConfig,
) -> Fim {
    let geom = &realization.geom;
    let beta = realization.beta_target;
    let u0 = [0.0, geom.mu_i2u, beta.re, beta.im];
    let hb = if beta.norm() > 0.0 { 1e-3 * beta.norm() } else { 1e-3 };
    let steps = [1e-12, 1e-7, hb, hb];
    let grads: Vec<Vec<Complex64>> = (0..4)
        .map(|i| {
            let mut up = u0;
            let mut dn = u0;
            up[i] += steps[i];
            dn[i] -= steps[i];
            let yp = oracle_mean(up, schedule, waveform, config.n_sensors, geom.mu_b2i_aoa);
            let ym = oracle_mean(dn, schedule, waveform, config.n_sensors, geom.mu_b2i_aoa);
            yp.iter().zip(&ym).map(|(p, m)| (p - m) / (2.0 * steps[i])).collect()
        })
        .collect();
    let ts = waveform.sample_period();
    let scale = 2.0 * ts / config.noise_psd;
    Fim::from_fn(|i, j| {
        grads[i].iter().zip(&grads[j]).map(|(a, b)| (a.conj() * b).re).sum::<f64>() * scale
    })
}

/// Independent finite-difference estimate of the channel FIM,
/// `F_ij = (2/n_0) ∫ Re{(∂ȳ/∂u_i)^H ∂ȳ/∂u_j} dt`, symmetrised.
pub fn numeric_fim_oracle(
    realization: &ChannelRealization,
    schedule: &PhaseSchedule,
    waveform: &SampledWaveform,
    config: &ScenarioConfig,
) -> Fim {
    let f = numeric_fim_oracle_raw(realization, schedule, waveform, config);
    (f + f.transpose()) * 0.5
}

/// `J^T F_channel J` with `J = ∂u_channel / ∂u_position`.
pub fn fim_position(fim_channel: &Fim, jacobian: &ChannelJacobian) -> Fim {
    let j = &jacobian.0;
    j.transpose() * fim_channel * j
}

/// Inverse of a symmetric PSD matrix, equilibrated by its diagonal first.
/// A numerically singular matrix is reported with its null direction.
pub fn invert_fim(f: &Fim) -> Result<Fim> {
    let mut d = [0.0; 4];
    for i in 0..4 {
        let fii = f[(i, i)];
        if !(fii > 0.0) || !fii.is_finite() {
            let mut null = [0.0; 4];
            null[i] = 1.0;
            return Err(Error::SingularFim { null_direction: null });
        }
        d[i] = 1.0 / fii.sqrt();
    }
    let dm = Matrix4::from_diagonal(&d.into());
    let m = dm * f * dm;
    let m = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(m);
    let (imin, lmin) = eig.eigenvalues.iter().enumerate().fold((0, f64::INFINITY), |acc, (i, &v)| {
        if v < acc.1 {
            (i, v)
        } else {
            acc
        }
    });
    let lmax = eig.eigenvalues.max();
    if !(lmin > 1e-12 * lmax) {
        let v = dm * eig.eigenvectors.column(imin);
        let v = v / v.norm();
        return Err(Error::SingularFim {
            null_direction: [v[0], v[1], v[2], v[3]],
        });
    }
    let inv = eig.eigenvectors * Matrix4::from_diagonal(&eig.eigenvalues.map(|x| 1.0 / x)) * eig.eigenvectors.transpose();
    Ok(dm * inv * dm)
}

fn rows(m: &Fim) -> [[f64; 4]; 4] {
    let mut out = [[0.0; 4]; 4];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = m[(i, j)];
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrbReport {
    /// s²
    pub crb_tau: f64,
    pub crb_mu: f64,
    /// m², sum of the x and y bounds.
    pub crb_position: f64,
    pub fim_channel: [[f64; 4]; 4],
    pub fim_position: [[f64; 4]; 4],
    pub closed_form_used: bool,
}

/// Position bound from an already-transformed FIM.
pub fn crb_position(fim_position: &Fim) -> Result<f64> {
    let inv = invert_fim(fim_position)?;
    Ok(inv[(0, 0)] + inv[(1, 1)])
}

pub fn crb_report(fim_ch: &Fim, jacobian: &ChannelJacobian) -> Result<CrbReport> {
    let fp = fim_position(fim_ch, jacobian);
    let inv_ch = invert_fim(fim_ch)?;
    Ok(CrbReport {
        crb_tau: inv_ch[(0, 0)],
        crb_mu: inv_ch[(1, 1)],
        crb_position: crb_position(&fp)?,
        fim_channel: rows(fim_ch),
        fim_position: rows(&fp),
        closed_form_used: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormCrb {
    pub crb_tau: f64,
    /// Infinite for a single sensor.
    pub crb_mu: f64,
}

/// Bounds under the gain-maximising schedule with a waveform whose
/// `∫ ṡ s* dt` vanishes; off-diagonal FIM terms are zero in that case.
pub fn closed_form_crb(
    config: &ScenarioConfig,
    realization: &ChannelRealization,
    waveform: &SampledWaveform,
) -> ClosedFormCrb {
    let b2 = realization.beta_target.norm_sqr();
    let ns = config.n_sensors as f64;
    let nr2 = (config.n_reflectors as f64).powi(2);
    let nf = config.n_frames as f64;
    let es = waveform.energy;
    let n0 = config.noise_psd;
    let crb_tau = n0 / (2.0 * b2 * ns * nr2 * nf * waveform.msq_bandwidth * es);
    // π² N_s (N_s² - 1) / 12 is the sensor aperture factor
    let crb_mu = n0 / (2.0 * aperture_factor(config.n_sensors) * nr2 * nf * b2 * es);
    ClosedFormCrb {
        crb_tau,
        crb_mu: if config.n_sensors < 2 { f64::INFINITY } else { crb_mu },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitObjective {
    Toa,
    Doa,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    ClosedForm,
    BruteForce,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub n_r: usize,
    pub n_s: usize,
}

/// Denominator of the bound (up to constants) for a given split; larger is better.
fn split_score(objective: SplitObjective, n_r: usize, n_s: usize) -> f64 {
    let (r, s) = (n_r as f64, n_s as f64);
    match objective {
        SplitObjective::Toa => s * r * r,
        SplitObjective::Doa => s * (s * s - 1.0) * r * r,
    }
}

pub fn optimal_split(total: usize, objective: SplitObjective, mode: SplitMode) -> Result<Split> {
    if total < 3 {
        return Err(Error::SplitTooSmall(total));
    }
    let min_s = match objective {
        SplitObjective::Toa => 1,
        SplitObjective::Doa => 2,
    };
    let max_r = total - min_s;
    let candidates: Vec<usize> = match mode {
        SplitMode::BruteForce => (1..=max_r).collect(),
        SplitMode::ClosedForm => {
            let n = total as f64;
            let r = match objective {
                SplitObjective::Toa => 2.0 * n / 3.0,
                SplitObjective::Doa => {
                    let a = (n.powi(3) - 5.0 * n) / 125.0;
                    let b = (n.powi(4) - 2.0 * n * n - 5.0).sqrt() / 25.0;
                    (a + b).cbrt() + (a - b).cbrt()
                }
            };
            let lo = (r.floor() as usize).clamp(1, max_r);
            let hi = (r.ceil() as usize).clamp(1, max_r);
            vec![lo, hi]
        }
    };
    let mut best = candidates[0];
    for &r in &candidates[1..] {
        if split_score(objective, r, total - r) > split_score(objective, best, total - best) {
            best = r;
        }
    }
    Ok(Split {
        n_r: best,
        n_s: total - best,
    })
}
