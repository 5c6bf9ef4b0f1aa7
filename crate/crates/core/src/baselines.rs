//! Classical measurement weighting: elevation-only (RTKLIB) and
//! C/N0-plus-elevation (goGPS).

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElevationWeightParams {
    pub a: f64,
    pub b: f64,
}

impl Default for ElevationWeightParams {
    fn default() -> Self {
        Self { a: 0.3, b: 0.3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cn0WeightParams {
    /// Value reached at `s0`.
    pub big_a: f64,
    /// Decade slope (dB-Hz).
    pub a: f64,
    pub s0: f64,
    pub s1: f64,
}

impl Default for Cn0WeightParams {
    fn default() -> Self {
        Self {
            big_a: 30.0,
            a: 20.0,
            s0: 10.0,
            s1: 50.0,
        }
    }
}

fn check_elevation(elevation: f64) -> Result<f64> {
    if elevation > 0.0 && elevation <= FRAC_PI_2 {
        Ok(elevation.sin())
    } else {
        Err(Error::InvalidElevation(elevation))
    }
}

/// `a^2 + b^2 / sin^2(el)`
pub fn rtklib_variance(elevation: f64, p: &ElevationWeightParams) -> Result<f64> {
    let s = check_elevation(elevation)?;
    Ok(p.a * p.a + p.b * p.b / (s * s))
}

pub fn rtklib_weight(elevation: f64, p: &ElevationWeightParams) -> Result<f64> {
    Ok(1.0 / rtklib_variance(elevation, p)?)
}

/// goGPS C/N0 model. Note the value grows as C/N0 falls from `s1` towards
/// `s0`; it is used directly as the diagonal weight.
pub fn gogps_weight(cn0: f64, elevation: f64, p: &Cn0WeightParams) -> Result<f64> {
    let s = check_elevation(elevation)?;
    if cn0 >= p.s1 {
        return Ok(1.0);
    }
    let k1 = |x: f64| -(x - p.s1) / p.a;
    let k2 = |x: f64| (x - p.s1) / (p.s0 - p.s1);
    let scale = 10f64.powf(k1(cn0)) * ((p.big_a / 10f64.powf(k1(p.s0)) - 1.0) * k2(cn0) + 1.0);
    Ok(scale / (s * s))
}
