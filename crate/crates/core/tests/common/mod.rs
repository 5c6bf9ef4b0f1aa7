//! Scene builders and finite-difference helpers shared by the integration
//! tests.
#![allow(dead_code)]

use nalgebra::{Vector3, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tdl_gnss::geodesy::{geodetic_to_ecef, EcefPosition, GeodeticPosition};
use tdl_gnss::model::{
    Epoch, GnssSystem, PositionState, SatelliteObservation, SolveResult, WeightVector,
};
use tdl_gnss::synth::{generate_dataset, ScenarioConfig};
use tdl_gnss::wls::{solve_equal_weight, solve_wls, SolverConfig};

pub const EXACT_CLOCK: f64 = 1234.5;

/// Receiver on integer ECEF coordinates with satellites at integer offsets
/// whose norms are integers (Pythagorean quadruples). Every range and
/// pseudorange is exact in f64, so the truth state has zero residuals.
pub fn exact_scene(n: usize, seed: u64) -> (Epoch, PositionState) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = geodetic_to_ecef(GeodeticPosition::from_degrees(22.3193, 114.1694, 10.0));
    let receiver = EcefPosition::new(r.x.round(), r.y.round(), r.z.round());
    let up = receiver.to_vector().normalize();
    let mut observations = Vec::with_capacity(n);
    while observations.len() < n {
        let [m, a, b, c]: [i64; 4] = std::array::from_fn(|_| rng.random_range(-2300..=2300));
        let d = Vector3::new(
            (m * m + a * a - b * b - c * c) as f64,
            (2 * (m * c + a * b)) as f64,
            (2 * (a * c - m * b)) as f64,
        );
        let norm = (m * m + a * a + b * b + c * c) as f64;
        let sin_el = d.dot(&up) / norm;
        if norm < 1.6e7 || !(0.15..0.98).contains(&sin_el) {
            continue;
        }
        observations.push(SatelliteObservation {
            sat_id: format!("G{:02}", observations.len() + 1),
            system: GnssSystem::Gps,
            sat_pos: receiver + EcefPosition::from_vector(&d),
            pseudorange: norm + EXACT_CLOCK,
            cn0: 45.0,
            elevation: sin_el.asin(),
            los_truth: Some(true),
            bias_truth: Some(0.0),
        });
    }
    let epoch = Epoch {
        t: 0.0,
        observations,
        truth_pos: Some(receiver),
    };
    (epoch, PositionState::from_position(receiver, EXACT_CLOCK))
}

/// Solver settings for finite-difference work: converge well below the
/// perturbation sizes.
pub fn tight() -> SolverConfig {
    SolverConfig {
        max_iterations: 50,
        step_tolerance: 1e-8,
        ..SolverConfig::default()
    }
}

pub struct Scene {
    pub epoch: Epoch,
    pub weights: WeightVector,
    /// Equal-weight solution, used as the anchor of every re-solve.
    pub start: PositionState,
}

/// Converged light-urban epochs with at least six satellites and random
/// weights in [0.2, 1).
pub fn random_scenes(count: usize, seed: u64) -> Vec<Scene> {
    let data = generate_dataset(&ScenarioConfig {
        seed,
        epochs: count * 2,
        ..ScenarioConfig::default()
    })
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    data.into_iter()
        .filter(|e| e.len() >= 6)
        .filter_map(|epoch| {
            let start = solve_equal_weight(&epoch, &tight())
                .ok()
                .filter(|r| r.converged)?
                .state;
            let weights = WeightVector(
                (0..epoch.len())
                    .map(|_| rng.random_range(0.2..1.0))
                    .collect(),
            );
            Some(Scene {
                epoch,
                weights,
                start,
            })
        })
        .take(count)
        .collect()
}

impl Scene {
    pub fn pseudoranges(&self) -> Vec<f64> {
        self.epoch
            .observations
            .iter()
            .map(|o| o.pseudorange)
            .collect()
    }

    pub fn solve(&self, z: &[f64], w: &WeightVector) -> SolveResult {
        let mut e = self.epoch.clone();
        for (o, &v) in e.observations.iter_mut().zip(z) {
            o.pseudorange = v;
        }
        let res = solve_wls(&e, w, None, self.start, &tight()).unwrap();
        assert!(res.converged);
        res
    }

    /// Solved state minus the anchor, free of ECEF rounding.
    pub fn offset(&self, z: &[f64], w: &WeightVector) -> Vector4<f64> {
        self.solve(z, w).offset
    }

    /// Half squared 3D error computed from the unrounded offset.
    pub fn loss(&self, z: &[f64], w: &WeightVector) -> f64 {
        let off = self.offset(z, w);
        let base = self.start.position() - self.epoch.truth_pos.unwrap();
        let e = [base.x + off[0], base.y + off[1], base.z + off[2]];
        0.5 * e.iter().map(|v| v * v).sum::<f64>()
    }
}

/// Relative error with an absolute floor for tiny reference values.
pub fn rel_err(analytic: f64, fd: f64) -> f64 {
    if analytic.abs() < 1e-10 {
        (fd - analytic).abs()
    } else {
        (fd - analytic).abs() / analytic.abs()
    }
}

/// Pseudorange perturbation (m).
pub const FD_STEP: f64 = 1e-3;
/// Weight perturbation. The loss is strongly curved along single weights
/// (its slope is a near-cancelling dot product), so 1e-3 leaves ~1e-4
/// truncation error on some entries; 1e-4 brings that to ~1e-6.
pub const FD_WEIGHT_STEP: f64 = 1e-4;

pub fn central<T>(f: impl Fn(f64) -> T, h: f64) -> T
where
    T: std::ops::Sub<Output = T> + std::ops::Div<f64, Output = T>,
{
    (f(h) - f(-h)) / (2.0 * h)
}

/// JointNet whose bias head is zero and whose weight is
/// `sigmoid(slope * cn0 / 50 - offset)`: strong signals get weight near 1,
/// weak ones near 0.
pub fn cn0_gated_joint_net(slope: f64, offset: f64) -> tdl_gnss::nn::MlpModel {
    use tdl_gnss::nn::{Architecture, MlpModel};
    let mut m = MlpModel::zeroed(Architecture::JointNet);
    // h1[0] = cn0_scaled, h2[0] = h1[0]; ReLU passes both through.
    m.layers[0].weights[0] = 1.0;
    m.layers[1].weights[0] = 1.0;
    let out = &mut m.layers[2];
    out.weights[out.inputs] = slope;
    out.biases[1] = -offset;
    m
}
