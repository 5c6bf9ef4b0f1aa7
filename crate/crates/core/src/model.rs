//! Observation, epoch and solver-state types shared by every module.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use nalgebra::{MatrixXx4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodesy::EcefPosition;

/// Ranges shorter than this make the line-of-sight direction meaningless.
pub const MIN_RANGE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GnssSystem {
    Gps,
    Bds,
    Gal,
    Glo,
}

impl GnssSystem {
    pub const ALL: [GnssSystem; 4] = [
        GnssSystem::Gps,
        GnssSystem::Bds,
        GnssSystem::Gal,
        GnssSystem::Glo,
    ];

    /// RINEX-style single-letter satellite prefix.
    pub fn prefix(self) -> char {
        match self {
            GnssSystem::Gps => 'G',
            GnssSystem::Bds => 'C',
            GnssSystem::Gal => 'E',
            GnssSystem::Glo => 'R',
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GnssSystem::Gps => "GPS",
            GnssSystem::Bds => "BDS",
            GnssSystem::Gal => "GAL",
            GnssSystem::Glo => "GLO",
        }
    }
}

impl fmt::Display for GnssSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GnssSystem {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "GPS" => Ok(GnssSystem::Gps),
            "BDS" => Ok(GnssSystem::Bds),
            "GAL" => Ok(GnssSystem::Gal),
            "GLO" => Ok(GnssSystem::Glo),
            other => Err(format!("unknown system {other:?}")),
        }
    }
}

/// One satellite's measurement in an epoch.
///
/// `pseudorange` already has the ionospheric, tropospheric and satellite
/// clock terms removed, so it models `range + receiver clock + bias + noise`.
#[derive(Debug, Clone, PartialEq)]
pub struct SatelliteObservation {
    pub sat_id: String,
    pub system: GnssSystem,
    pub sat_pos: EcefPosition,
    pub pseudorange: f64,
    /// dB-Hz
    pub cn0: f64,
    /// radians
    pub elevation: f64,
    pub los_truth: Option<bool>,
    pub bias_truth: Option<f64>,
}

impl SatelliteObservation {
    pub fn validate(&self) -> Result<()> {
        let reason = if self.sat_pos.norm() < 2.0e7 || self.sat_pos.norm() > 5.0e7 {
            Some("satellite radius outside [2e7, 5e7] m")
        } else if !(1.5e7..=5.0e7).contains(&self.pseudorange) {
            Some("pseudorange outside [1.5e7, 5e7] m")
        } else if !(0.0..=65.0).contains(&self.cn0) {
            Some("C/N0 outside [0, 65] dB-Hz")
        } else if !(-std::f64::consts::FRAC_PI_2..=std::f64::consts::FRAC_PI_2)
            .contains(&self.elevation)
        {
            Some("elevation outside [-pi/2, pi/2]")
        } else {
            None
        };
        match reason {
            Some(r) => Err(Error::ConfigInvalid(format!("{}: {r}", self.sat_id))),
            None => Ok(()),
        }
    }
}

/// A measurement instant. Observation order defines the row order of the
/// measurement vector, the geometry matrix and the weight vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Epoch {
    pub t: f64,
    pub observations: Vec<SatelliteObservation>,
    pub truth_pos: Option<EcefPosition>,
}

impl Epoch {
    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn has_unique_ids(&self) -> bool {
        let mut seen = HashSet::with_capacity(self.observations.len());
        self.observations
            .iter()
            .all(|o| seen.insert(o.sat_id.as_str()))
    }
}

/// Receiver state: ECEF position and clock bias, all in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PositionState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// c * receiver clock offset
    pub clock: f64,
}

impl PositionState {
    pub const fn new(x: f64, y: f64, z: f64, clock: f64) -> Self {
        Self { x, y, z, clock }
    }

    pub fn from_position(p: EcefPosition, clock: f64) -> Self {
        Self::new(p.x, p.y, p.z, clock)
    }

    pub fn position(&self) -> EcefPosition {
        EcefPosition::new(self.x, self.y, self.z)
    }

    pub fn to_vector(self) -> Vector4<f64> {
        Vector4::new(self.x, self.y, self.z, self.clock)
    }

    pub fn from_vector(v: &Vector4<f64>) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }

    pub fn is_finite(&self) -> bool {
        self.to_vector().iter().all(|v| v.is_finite())
    }
}

/// Diagonal of the weight matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector(pub Vec<f64>);

impl WeightVector {
    /// Entries at or below this count as switched off.
    pub const ACTIVE_THRESHOLD: f64 = 1e-12;

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn active_count(&self) -> usize {
        self.0
            .iter()
            .filter(|&&w| w > Self::ACTIVE_THRESHOLD)
            .count()
    }

    pub fn validate(&self) -> Result<()> {
        match self.0.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
            Some(index) => Err(Error::InvalidWeight {
                index,
                value: self.0[index],
            }),
            None => Ok(()),
        }
    }
}

impl From<Vec<f64>> for WeightVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub state: PositionState,
    /// Corrected measurement minus predicted pseudorange at `state`.
    pub residuals: Vec<f64>,
    /// Jacobian of the predicted pseudoranges at `state`.
    pub geometry: MatrixXx4<f64>,
    /// Geometric receiver-satellite ranges at `state`.
    pub ranges: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Eigenvalue ratio of the last normal matrix.
    pub condition_estimate: f64,
    pub last_step_norm: f64,
    /// Sum of the applied steps, accumulated relative to the start point
    /// without ECEF rounding. `state` is the start plus this, rounded.
    pub offset: Vector4<f64>,
}

pub fn predicted_pseudorange(state: &PositionState, obs: &SatelliteObservation) -> Result<f64> {
    let range = obs.sat_pos.distance(state.position());
    if !(range >= MIN_RANGE) {
        return Err(Error::DegenerateGeometry { range });
    }
    Ok(range + state.clock)
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// `measured - predicted_pseudorange(state, obs)` with the range carried in
/// double-double precision. Plain f64 loses a few nanometres at orbital
/// distances, which shows up as order-dependent jitter in the solution.
pub fn pseudorange_residual(
    measured: f64,
    state: &PositionState,
    obs: &SatelliteObservation,
) -> Result<f64> {
    pseudorange_residual_at_offset(measured, state, &[0.0; 4], obs)
}

/// Residual at the state `anchor + offset`, without rounding that sum to
/// f64 first.
pub fn pseudorange_residual_at_offset(
    measured: f64,
    anchor: &PositionState,
    offset: &[f64; 4],
    obs: &SatelliteObservation,
) -> Result<f64> {
    let (mut hi, mut lo) = (0.0, 0.0);
    let axes = [
        (obs.sat_pos.x, anchor.x, offset[0]),
        (obs.sat_pos.y, anchor.y, offset[1]),
        (obs.sat_pos.z, anchor.z, offset[2]),
    ];
    for (s, a, o) in axes {
        let (d0, e0) = two_sum(s, -a);
        let (d, e1) = two_sum(d0, -o);
        let de = e0 + e1;
        let (sq, sqe) = two_prod(d, d);
        let (t, te) = two_sum(hi, sq);
        hi = t;
        lo += te + sqe + 2.0 * d * de;
    }
    let range = hi.sqrt();
    if !(range >= MIN_RANGE) {
        return Err(Error::DegenerateGeometry { range });
    }
    let (q, qe) = two_prod(range, range);
    let delta = ((hi - q) - qe + lo) / (2.0 * range);
    let (a, ae) = two_sum(measured, -range);
    Ok(((a - anchor.clock) - offset[3]) + (ae - delta))
}

/// Partial derivatives of the predicted pseudorange with respect to
/// (x, y, z, clock).
pub fn jacobian_row(state: &PositionState, obs: &SatelliteObservation) -> Result<[f64; 4]> {
    let d = state.position() - obs.sat_pos;
    let range = d.norm();
    if !(range >= MIN_RANGE) {
        return Err(Error::DegenerateGeometry { range });
    }
    Ok([d.x / range, d.y / range, d.z / range, 1.0])
}
