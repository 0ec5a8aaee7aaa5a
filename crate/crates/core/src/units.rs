//! Decibel conversions used at the configuration boundary.

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) * 1e-3
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * (watts * 1e3).log10()
}

/// dBsm to square metres.
pub fn dbsm_to_m2(dbsm: f64) -> f64 {
    10f64.powf(dbsm / 10.0)
}

/// dBm/Hz to W/Hz.
pub fn dbm_per_hz_to_w_per_hz(dbm: f64) -> f64 {
    dbm_to_watts(dbm)
}
