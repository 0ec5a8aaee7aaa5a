//! Centred uniform linear arrays with half-wavelength spacing.
//!
//! Element `i` of an `N`-element array sits at the centred index
//! `k = i - (N - 1) / 2`, and its response to direction cosine `μ` is
//! `exp(jπkμ)`. Derivatives with respect to `μ` scale each element by
//! `(jπk)^r`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector {
    pub mu: f64,
    pub order: u8,
    pub entries: Vec<Complex64>,
}

impl SteeringVector {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[inline]
pub fn centered_index(n: usize, i: usize) -> f64 {
    i as f64 - (n as f64 - 1.0) / 2.0
}

/// Unchecked steering entries; `mu` may lie slightly outside [-1, 1]
/// (finite-difference probes rely on this).
pub(crate) fn steering(n: usize, mu: f64, order: u8) -> Vec<Complex64> {
    (0..n)
        .map(|i| {
            let k = centered_index(n, i);
            let base = Complex64::from_polar(1.0, PI * k * mu);
            let scale = Complex64::new(0.0, PI * k).powu(order as u32);
            scale * base
        })
        .collect()
}

pub fn ula_steering(n: usize, mu: f64, order: u8) -> Result<SteeringVector> {
    if !(mu.abs() <= 1.0) {
        return Err(Error::Domain(mu));
    }
    if n == 0 {
        return Err(Error::InvalidConfig("array needs at least one element".into()));
    }
    if order > 2 {
        return Err(Error::InvalidConfig(format!("steering derivative order {order} > 2")));
    }
    Ok(SteeringVector {
        mu,
        order,
        entries: steering(n, mu, order),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteeringInnerProducts {
    /// b^H b
    pub b_h_b: f64,
    /// b^H ḃ
    pub b_h_bdot: Complex64,
    /// b^H b̈ (real for a centred array)
    pub b_h_bddot: f64,
}

/// Evaluates the three inner products by direct summation.
pub fn steering_inner_products(n: usize, mu: f64) -> Result<SteeringInnerProducts> {
    let b = ula_steering(n, mu, 0)?.entries;
    let bd = steering(n, mu, 1);
    let bdd = steering(n, mu, 2);
    let dot = |x: &[Complex64], y: &[Complex64]| -> Complex64 {
        x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
    };
    Ok(SteeringInnerProducts {
        b_h_b: dot(&b, &b).re,
        b_h_bdot: dot(&b, &bd),
        b_h_bddot: dot(&b, &bdd).re,
    })
}

/// Closed form of `-b^H b̈ = ‖ḃ‖² = π² N (N² - 1) / 12`.
pub fn aperture_factor(n: usize) -> f64 {
    let n = n as f64;
    PI * PI * n * (n - 1.0) * (n + 1.0) / 12.0
}

/// Sum of the steering entries, `1^T b(μ)`.
pub fn steering_sum(n: usize, mu: f64) -> Complex64 {
    steering(n, mu, 0).into_iter().sum()
}
