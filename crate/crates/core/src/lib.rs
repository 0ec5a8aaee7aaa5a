//! Simulation and analysis toolkit for target localization through a
//! semi-passive intelligent reflecting surface (IRS).
//!
//! A base station illuminates the IRS; the reflecting elements steer the
//! beam towards a target and a handful of active receive sensors mounted on
//! the IRS pick up the echo. The crate covers the whole chain:
//!
//! * [`scenario`]: configuration and derived geometry,
//! * [`arrays`]: centred uniform-linear-array steering vectors,
//! * [`waveform`]: chirp probing signals, DFT utilities and circular delays,
//! * [`irs_schedule`]: per-frame IRS phase configurations,
//! * [`signal_sim`]: synthetic sensor snapshots,
//! * [`crb`]: Fisher information and Cramér-Rao bounds,
//! * [`estimators`]: MUSIC DoA, DFT-domain ML ToA, and the position solve,
//! * [`harness`]: Monte-Carlo RMSE sweeps and baseline schemes.

pub mod arrays;
pub mod crb;
mod error;
pub mod estimators;
pub mod harness;
pub mod rng;
pub mod scenario;
pub mod irs_schedule;
pub mod signal_sim;
pub mod units;
pub mod waveform;

pub use error::{Error, Result};
pub use num_complex::Complex64;
