//! Seeded urban-canyon scenario generator.
//!
//! Satellites are placed at a fixed orbital radius along directions sampled
//! in the receiver's local frame. Non-line-of-sight satellites get a
//! depressed C/N0 and a positive range bias that is a deterministic function
//! of (C/N0, elevation), so a network fed those features can in principle
//! recover it exactly. Line-of-sight C/N0 never drops below the bias knee,
//! which makes the bias zero for every LOS satellite.

use std::f64::consts::{FRAC_PI_2, TAU};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodesy::{
    elevation_azimuth, enu_to_ecef, geodetic_to_ecef, EcefPosition, EnuVector, GeodeticPosition,
};
use crate::model::{Epoch, GnssSystem, SatelliteObservation};

/// GPS-like orbital radius used for every constellation (m).
pub const ORBIT_RADIUS: f64 = 26_560_000.0;
const PRNS_PER_SYSTEM: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Trajectory {
    Static,
    /// Horizontal random walk with per-epoch step sigma (m).
    RandomWalk {
        step_sigma: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NlosBiasModel {
    /// Bias at zero elevation and zero C/N0 (m).
    pub scale: f64,
    /// C/N0 at or above which the bias vanishes (dB-Hz).
    pub cn0_knee: f64,
    /// Additive Gaussian jitter (m). Zero keeps the bias a pure function of
    /// the features.
    pub jitter_sigma: f64,
}

impl Default for NlosBiasModel {
    fn default() -> Self {
        Self {
            scale: 30.0,
            cn0_knee: 45.0,
            jitter_sigma: 0.0,
        }
    }
}

impl NlosBiasModel {
    pub fn evaluate(&self, cn0: f64, elevation: f64) -> f64 {
        self.scale
            * (1.0 - elevation / FRAC_PI_2).max(0.0)
            * ((self.cn0_knee - cn0) / self.cn0_knee).max(0.0)
    }
}

/// Bias of the default model, `30 (1 - el/(pi/2)) max(0, (45 - cn0)/45)`.
pub fn default_nlos_bias(cn0: f64, elevation: f64) -> f64 {
    NlosBiasModel::default().evaluate(cn0, elevation)
}

/// C/N0 as `base + span * sin(el) + N(0, sigma)`, clipped per class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cn0Model {
    pub los_base: f64,
    pub los_span: f64,
    pub los_sigma: f64,
    pub los_range: [f64; 2],
    pub nlos_base: f64,
    pub nlos_span: f64,
    pub nlos_sigma: f64,
    pub nlos_range: [f64; 2],
}

impl Default for Cn0Model {
    fn default() -> Self {
        Self {
            los_base: 44.0,
            los_span: 10.0,
            los_sigma: 1.5,
            los_range: [45.0, 55.0],
            nlos_base: 20.0,
            nlos_span: 15.0,
            nlos_sigma: 3.0,
            nlos_range: [5.0, 44.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    OpenSky,
    LightUrban,
    DeepUrban,
}

impl std::str::FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "open-sky" => Ok(Preset::OpenSky),
            "light-urban" => Ok(Preset::LightUrban),
            "deep-urban" => Ok(Preset::DeepUrban),
            other => Err(format!(
                "unknown preset {other:?} (open-sky, light-urban, deep-urban)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub epochs: usize,
    /// Inclusive satellite count range per epoch.
    pub satellites_per_epoch: [usize; 2],
    /// Receiver start point, degrees / degrees / meters.
    pub origin_lat_deg: f64,
    pub origin_lon_deg: f64,
    pub origin_height: f64,
    pub trajectory: Trajectory,
    pub start_time: f64,
    pub interval: f64,
    /// Pseudorange white noise sigma (m).
    pub noise_sigma: f64,
    pub initial_clock: f64,
    pub clock_walk_sigma: f64,
    pub nlos_fraction: f64,
    /// NLOS elevations are drawn uniformly between the mask and this value.
    pub nlos_max_elevation: f64,
    pub nlos_bias: NlosBiasModel,
    pub elevation_mask: f64,
    pub cn0: Cn0Model,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            epochs: 100,
            satellites_per_epoch: [8, 15],
            origin_lat_deg: 22.3193,
            origin_lon_deg: 114.1694,
            origin_height: 10.0,
            trajectory: Trajectory::RandomWalk { step_sigma: 1.0 },
            start_time: 0.0,
            interval: 1.0,
            noise_sigma: 2.0,
            initial_clock: 1.0e5,
            clock_walk_sigma: 1.0,
            nlos_fraction: 0.3,
            nlos_max_elevation: 60f64.to_radians(),
            nlos_bias: NlosBiasModel::default(),
            elevation_mask: 5f64.to_radians(),
            cn0: Cn0Model::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn preset(preset: Preset) -> Self {
        let base = Self::default();
        match preset {
            Preset::OpenSky => Self {
                nlos_fraction: 0.0,
                elevation_mask: 15f64.to_radians(),
                satellites_per_epoch: [6, 15],
                ..base
            },
            Preset::LightUrban => base,
            Preset::DeepUrban => Self {
                nlos_fraction: 0.5,
                nlos_bias: NlosBiasModel {
                    scale: 40.0,
                    ..NlosBiasModel::default()
                },
                satellites_per_epoch: [3, 10],
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::ConfigInvalid(m.to_string()));
        let [lo, hi] = self.satellites_per_epoch;
        if lo == 0 || lo > hi {
            return bad("satellites_per_epoch must be a non-empty range starting at 1 or more");
        }
        if hi > PRNS_PER_SYSTEM * GnssSystem::ALL.len() {
            return bad("too many satellites per epoch");
        }
        if !(0.0..=1.0).contains(&self.nlos_fraction) {
            return bad("nlos_fraction must lie in [0, 1]");
        }
        let step = match self.trajectory {
            Trajectory::Static => 0.0,
            Trajectory::RandomWalk { step_sigma } => step_sigma,
        };
        if [
            self.noise_sigma,
            self.clock_walk_sigma,
            step,
            self.nlos_bias.jitter_sigma,
            self.cn0.los_sigma,
            self.cn0.nlos_sigma,
        ]
        .iter()
        .any(|s| !(*s >= 0.0 && s.is_finite()))
        {
            return bad("sigmas must be finite and non-negative");
        }
        if !(self.elevation_mask >= 0.0
            && self.elevation_mask < self.nlos_max_elevation
            && self.nlos_max_elevation < FRAC_PI_2)
        {
            return bad("need 0 <= elevation_mask < nlos_max_elevation < pi/2");
        }
        if !(self.nlos_bias.scale >= 0.0 && self.nlos_bias.cn0_knee > 0.0) {
            return bad("invalid NLOS bias model");
        }
        let c = &self.cn0;
        if !(c.los_range[0] <= c.los_range[1] && c.nlos_range[0] <= c.nlos_range[1]) {
            return bad("invalid C/N0 ranges");
        }
        if !(self.interval > 0.0) {
            return bad("interval must be positive");
        }
        Ok(())
    }
}

struct Noise {
    normal: Normal<f64>,
}

impl Noise {
    fn new() -> Self {
        Self {
            normal: Normal::new(0.0, 1.0).expect("unit normal"),
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng, sigma: f64) -> f64 {
        // Always consume a draw so the stream does not depend on sigma being zero.
        let z = self.normal.sample(rng);
        sigma * z
    }
}

/// Generates `cfg.epochs` epochs with ground truth and per-satellite labels.
pub fn generate_dataset(cfg: &ScenarioConfig) -> Result<Vec<Epoch>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = Noise::new();
    let origin = geodetic_to_ecef(GeodeticPosition::from_degrees(
        cfg.origin_lat_deg,
        cfg.origin_lon_deg,
        cfg.origin_height,
    ));

    let mut offset = EnuVector::default();
    let mut clock = cfg.initial_clock;
    let mut epochs = Vec::with_capacity(cfg.epochs);
    for i in 0..cfg.epochs {
        if i > 0 {
            if let Trajectory::RandomWalk { step_sigma } = cfg.trajectory {
                offset.east += noise.draw(&mut rng, step_sigma);
                offset.north += noise.draw(&mut rng, step_sigma);
            }
            clock += noise.draw(&mut rng, cfg.clock_walk_sigma);
        }
        let receiver = enu_to_ecef(offset, origin)?;
        let observations = generate_observations(cfg, receiver, clock, &noise, &mut rng)?;
        epochs.push(Epoch {
            t: cfg.start_time + i as f64 * cfg.interval,
            observations,
            truth_pos: Some(receiver),
        });
    }
    Ok(epochs)
}

fn generate_observations(
    cfg: &ScenarioConfig,
    receiver: EcefPosition,
    clock: f64,
    noise: &Noise,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<SatelliteObservation>> {
    let [lo, hi] = cfg.satellites_per_epoch;
    let n = rng.random_range(lo..=hi);
    let mut slots: Vec<usize> = sample(rng, PRNS_PER_SYSTEM * GnssSystem::ALL.len(), n).into_vec();
    slots.sort_unstable();

    let c = &cfg.cn0;
    let mut out = Vec::with_capacity(n);
    for slot in slots {
        let system = GnssSystem::ALL[slot / PRNS_PER_SYSTEM];
        let prn = slot % PRNS_PER_SYSTEM + 1;
        let nlos = rng.random_bool(cfg.nlos_fraction);
        let target_elevation = if nlos {
            rng.random_range(cfg.elevation_mask..cfg.nlos_max_elevation)
        } else {
            // uniform over the visible spherical cap
            rng.random_range(cfg.elevation_mask.sin()..1.0f64).asin()
        };
        let azimuth = rng.random_range(0.0..TAU);

        let sat_pos = place_satellite(receiver, target_elevation, azimuth)?;
        let (elevation, _) = elevation_azimuth(receiver, sat_pos)?;

        let (cn0, bias) = if nlos {
            let cn0 = (c.nlos_base + c.nlos_span * elevation.sin() + noise.draw(rng, c.nlos_sigma))
                .clamp(c.nlos_range[0], c.nlos_range[1]);
            let jitter = noise.draw(rng, cfg.nlos_bias.jitter_sigma);
            (
                cn0,
                (cfg.nlos_bias.evaluate(cn0, elevation) + jitter).max(0.0),
            )
        } else {
            let cn0 = (c.los_base + c.los_span * elevation.sin() + noise.draw(rng, c.los_sigma))
                .clamp(c.los_range[0], c.los_range[1]);
            (cn0, 0.0)
        };
        let pseudorange =
            sat_pos.distance(receiver) + clock + bias + noise.draw(rng, cfg.noise_sigma);

        out.push(SatelliteObservation {
            sat_id: format!("{}{:02}", system.prefix(), prn),
            system,
            sat_pos,
            pseudorange,
            cn0,
            elevation,
            los_truth: Some(!nlos),
            bias_truth: Some(bias),
        });
    }
    Ok(out)
}

/// Point at `ORBIT_RADIUS` from the Earth's center along the given look
/// direction from the receiver.
fn place_satellite(receiver: EcefPosition, elevation: f64, azimuth: f64) -> Result<EcefPosition> {
    let unit_enu = EnuVector::new(
        elevation.cos() * azimuth.sin(),
        elevation.cos() * azimuth.cos(),
        elevation.sin(),
    );
    let dir = enu_to_ecef(unit_enu, receiver)? - receiver;
    let r = receiver.to_vector();
    let u = dir.to_vector().normalize();
    let ru = r.dot(&u);
    let range = -ru + (ru * ru - r.norm_squared() + ORBIT_RADIUS * ORBIT_RADIUS).sqrt();
    Ok(EcefPosition::from_vector(&(r + u * range)))
}
