//! Per-frame IRS phase configurations and the cascade gain they induce,
//! `g(n) = b_r^T(μ_I2U) Θ(n) b_r(μ_B2I^A)`.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::arrays::steering;
use crate::scenario::DerivedGeometry;
use crate::{rng, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    DftScan,
    Random,
    OracleOptimal,
}

impl ScheduleKind {
    pub fn name(self) -> &'static str {
        match self {
            ScheduleKind::DftScan => "dft_scan",
            ScheduleKind::Random => "random",
            ScheduleKind::OracleOptimal => "oracle_optimal",
        }
    }
}

impl std::str::FromStr for ScheduleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dft_scan" | "dft" => Ok(ScheduleKind::DftScan),
            "random" => Ok(ScheduleKind::Random),
            "oracle_optimal" | "oracle" => Ok(ScheduleKind::OracleOptimal),
            other => Err(Error::InvalidConfig(format!("unknown schedule kind {other:?}"))),
        }
    }
}

/// Unit-modulus phase configurations, one column per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSchedule {
    pub kind: ScheduleKind,
    pub n_reflectors: usize,
    /// `frames[n][k]` is the reflection coefficient of element `k` in frame `n`.
    pub frames: Vec<Vec<Complex64>>,
    /// Steering direction of each frame (DFT scan only).
    pub directions: Option<Vec<f64>>,
}

impl PhaseSchedule {
    pub fn n_frames(&self) -> usize {
        self.frames.len()
    }

    /// The schedule restricted to one frame.
    pub fn single_frame(&self, n: usize) -> PhaseSchedule {
        PhaseSchedule {
            kind: self.kind,
            n_reflectors: self.n_reflectors,
            frames: vec![self.frames[n].clone()],
            directions: self.directions.as_ref().map(|d| vec![d[n]]),
        }
    }

    /// Writes the phases in radians; rows are elements, columns frames.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        let header: Vec<String> = (0..self.n_frames()).map(|n| format!("frame_{n}")).collect();
        writeln!(out, "element,{}", header.join(","))?;
        for k in 0..self.n_reflectors {
            let row: Vec<String> = self.frames.iter().map(|f| f[k].arg().to_string()).collect();
            writeln!(out, "{k},{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file)).map_err(|e| Error::io(path, e))
    }
}

fn wrap_direction(mu: f64) -> f64 {
    // direction cosines are 2-periodic in the array phase
    let w = (mu + 1.0).rem_euclid(2.0) - 1.0;
    if w >= 1.0 {
        -1.0
    } else {
        w
    }
}

/// Scan directions for `n_frames` beams of an `n_reflectors` array.
///
/// With no centre, or when there are at least as many frames as elements,
/// the grid is `-1 + 2n/N_f`, covering [-1, 1) uniformly. Otherwise the
/// frames take contiguous beams of the `N_r`-point DFT codebook
/// (`-1 + 2m/N_r`), starting at the codeword closest to `center` and growing
/// outwards alternately to the right and left, so the scan for `N_f` frames
/// is a subset of the scan for `N_f + 1`.
pub fn scan_directions(n_reflectors: usize, n_frames: usize, center: Option<f64>) -> Vec<f64> {
    let full = |n: usize| (0..n).map(|i| -1.0 + 2.0 * i as f64 / n as f64).collect::<Vec<_>>();
    let center = match center {
        Some(c) if n_frames < n_reflectors => c,
        _ => return full(n_frames),
    };
    let step = 2.0 / n_reflectors as f64;
    let nr = n_reflectors as i64;
    // nearest codeword, ties to the lower index
    let m0 = ((center + 1.0) / step - 0.5).ceil() as i64;
    (0..n_frames as i64)
        .map(|i| {
            let offset = if i % 2 == 0 { -(i / 2) } else { i / 2 + 1 };
            let m = (m0 + offset).rem_euclid(nr);
            wrap_direction(-1.0 + step * m as f64)
        })
        .collect()
}

/// Phase vector steering the cascade from incident direction `mu_incident`
/// towards `mu_target`: `conj(b_r(μ_t) ∘ b_r(μ_in))`, normalised per element.
pub fn steering_phases(n_reflectors: usize, mu_target: f64, mu_incident: f64) -> Vec<Complex64> {
    let out = steering(n_reflectors, mu_target, 0);
    let inc = steering(n_reflectors, mu_incident, 0);
    out.iter()
        .zip(&inc)
        .map(|(a, b)| {
            let v = (a * b).conj();
            v / v.norm()
        })
        .collect()
}

pub fn make_schedule(
    kind: ScheduleKind,
    n_reflectors: usize,
    n_frames: usize,
    geom: Option<&DerivedGeometry>,
    seed: u64,
    scan_center: Option<f64>,
) -> Result<PhaseSchedule> {
    if n_reflectors == 0 || n_frames == 0 {
        return Err(Error::InvalidConfig("schedule needs at least one element and one frame".into()));
    }
    let (frames, directions) = match kind {
        ScheduleKind::DftScan => {
            let mu_in = geom.map_or(0.0, |g| g.mu_b2i_aoa);
            let dirs = scan_directions(n_reflectors, n_frames, scan_center);
            let frames = dirs.iter().map(|&d| steering_phases(n_reflectors, d, mu_in)).collect();
            (frames, Some(dirs))
        }
        ScheduleKind::Random => {
            let mut r = rng::seeded(seed);
            let frames = (0..n_frames)
                .map(|_| {
                    (0..n_reflectors)
                        .map(|_| Complex64::from_polar(1.0, r.random_range(0.0..2.0 * PI)))
                        .collect()
                })
                .collect();
            (frames, None)
        }
        ScheduleKind::OracleOptimal => {
            let g = geom.ok_or(Error::MissingGeometry("oracle_optimal"))?;
            let theta = steering_phases(n_reflectors, g.mu_i2u, g.mu_b2i_aoa);
            (vec![theta; n_frames], None)
        }
    };
    Ok(PhaseSchedule {
        kind,
        n_reflectors,
        frames,
        directions,
    })
}

/// `b_r^{(order)T}(μ) Θ(n) b_r(μ_in)` for every frame.
pub(crate) fn cascade_gains(schedule: &PhaseSchedule, mu: f64, mu_incident: f64, order: u8) -> Vec<Complex64> {
    let nr = schedule.n_reflectors;
    let out = steering(nr, mu, order);
    let inc = steering(nr, mu_incident, 0);
    let pair: Vec<Complex64> = out.iter().zip(&inc).map(|(a, b)| a * b).collect();
    schedule
        .frames
        .iter()
        .map(|theta| theta.iter().zip(&pair).map(|(t, p)| t * p).sum())
        .collect()
}

pub fn effective_gain(schedule: &PhaseSchedule, mu_i2u: f64, mu_b2i_aoa: f64) -> Vec<Complex64> {
    cascade_gains(schedule, mu_i2u, mu_b2i_aoa, 0)
}

/// Derivative of the cascade gain with respect to `μ_I2U`.
pub fn effective_gain_derivative(schedule: &PhaseSchedule, mu_i2u: f64, mu_b2i_aoa: f64) -> Vec<Complex64> {
    cascade_gains(schedule, mu_i2u, mu_b2i_aoa, 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{derive_geometry, ScenarioConfig};

    fn geom() -> DerivedGeometry {
        derive_geometry(&ScenarioConfig::reference_defaults()).unwrap()
    }

    #[test]
    fn oracle_attains_full_gain() {
        let g = geom();
        let s = make_schedule(ScheduleKind::OracleOptimal, 50, 6, Some(&g), 0, None).unwrap();
        for v in effective_gain(&s, g.mu_i2u, g.mu_b2i_aoa) {
            assert!((v - Complex64::new(50.0, 0.0)).norm() < 1e-11);
        }
        for v in effective_gain_derivative(&s, g.mu_i2u, g.mu_b2i_aoa) {
            assert!(v.norm() < 1e-10);
        }
    }

    #[test]
    fn oracle_needs_geometry() {
        assert!(matches!(
            make_schedule(ScheduleKind::OracleOptimal, 4, 2, None, 0, None),
            Err(Error::MissingGeometry(_))
        ));
    }

    #[test]
    fn random_is_deterministic_and_unit_modulus() {
        let a = make_schedule(ScheduleKind::Random, 20, 5, None, 99, None).unwrap();
        let b = make_schedule(ScheduleKind::Random, 20, 5, None, 99, None).unwrap();
        assert_eq!(a, b);
        let c = make_schedule(ScheduleKind::Random, 20, 5, None, 100, None).unwrap();
        assert_ne!(a, c);
        assert!(a.frames.iter().flatten().all(|v| (v.norm() - 1.0).abs() < 1e-14));
    }

    #[test]
    fn single_element_gain_is_unit() {
        let s = make_schedule(ScheduleKind::Random, 1, 8, None, 3, None).unwrap();
        for v in effective_gain(&s, 0.3, -0.2) {
            assert!((v.norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn full_dft_scan_peaks_on_own_direction() {
        let n = 16;
        let s = make_schedule(ScheduleKind::DftScan, n, n, None, 0, None).unwrap();
        let dirs = s.directions.clone().unwrap();
        for (i, &d) in dirs.iter().enumerate() {
            let g = effective_gain(&s, d, 0.0);
            let best = (0..n).max_by(|&a, &b| g[a].norm().total_cmp(&g[b].norm())).unwrap();
            assert_eq!(best, i);
            assert!((g[i].norm() - n as f64).abs() < 1e-10);
        }
    }

    #[test]
    fn sector_scan_grows_outwards() {
        let d3 = scan_directions(50, 3, Some(-0.5));
        let d4 = scan_directions(50, 4, Some(-0.5));
        assert_eq!(&d4[..3], &d3[..]);
        let mut sorted = d4.clone();
        sorted.sort_by(f64::total_cmp);
        for w in sorted.windows(2) {
            assert!((w[1] - w[0] - 0.04).abs() < 1e-12);
        }
        assert_eq!(scan_directions(8, 8, Some(0.3)), scan_directions(8, 8, None));
        // -0.5 sits halfway between codewords 12 and 13 of a 50-element array
        assert!((scan_directions(50, 1, Some(-0.5))[0] + 0.52).abs() < 1e-12);
    }

    #[test]
    fn csv_export() {
        let s = make_schedule(ScheduleKind::Random, 3, 2, None, 1, None).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], "element,frame_0,frame_1");
        let v: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
        assert!((v - s.frames[0][0].arg()).abs() < 1e-15);
    }
}
