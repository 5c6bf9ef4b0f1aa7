//! Solver properties over generated scenes.

mod common;

use proptest::prelude::*;
use tdl_gnss::model::{Epoch, PositionState, WeightVector};
use tdl_gnss::synth::{generate_dataset, Preset, ScenarioConfig};
use tdl_gnss::wls::{linearize, solve_equal_weight, solve_wls, SolverConfig};

fn epoch(seed: u64, preset: Preset) -> Epoch {
    let cfg = ScenarioConfig {
        seed,
        epochs: 1,
        ..ScenarioConfig::preset(preset)
    };
    generate_dataset(&cfg).unwrap().remove(0)
}

fn weighted_residual_norm(epoch: &Epoch, w: &WeightVector, state: &PositionState) -> f64 {
    let z: Vec<f64> = epoch.observations.iter().map(|o| o.pseudorange).collect();
    let (_, r) = linearize(epoch, &z, state).unwrap();
    r.iter()
        .zip(&w.0)
        .map(|(r, w)| w * r * r)
        .sum::<f64>()
        .sqrt()
}

#[test]
fn open_sky_converges_for_a_thousand_seeds() {
    let cfg = SolverConfig::default();
    let mut worst = 0;
    for seed in 0..1000 {
        let e = epoch(seed, Preset::OpenSky);
        assert!(e.len() >= 6);
        assert!(e
            .observations
            .iter()
            .all(|o| o.elevation > 15f64.to_radians()));
        let res = solve_equal_weight(&e, &cfg).unwrap();
        assert!(
            res.converged && res.iterations <= 15,
            "seed {seed}: {} iterations",
            res.iterations
        );
        worst = worst.max(res.iterations);
    }
    eprintln!("max iterations {worst}");
}

#[test]
fn zero_noise_scene_recovers_truth() {
    for seed in 0..50 {
        let cfg = ScenarioConfig {
            seed,
            epochs: 1,
            noise_sigma: 0.0,
            nlos_fraction: 0.0,
            satellites_per_epoch: [8, 8],
            ..ScenarioConfig::default()
        };
        let e = generate_dataset(&cfg).unwrap().remove(0);
        let res = solve_equal_weight(&e, &SolverConfig::default()).unwrap();
        assert!(res.converged && res.iterations <= 10);
        assert!(res.state.position().distance(e.truth_pos.unwrap()) < 1e-6);
    }
}

#[test]
fn single_biased_satellite_degrades_solution() {
    for seed in 0..50 {
        let cfg = ScenarioConfig {
            seed,
            epochs: 1,
            noise_sigma: 0.0,
            nlos_fraction: 0.0,
            satellites_per_epoch: [8, 8],
            ..ScenarioConfig::default()
        };
        let clean = generate_dataset(&cfg).unwrap().remove(0);
        let truth = clean.truth_pos.unwrap();
        let mut biased = clean.clone();
        biased.observations[(seed % 8) as usize].pseudorange += 50.0;
        let cfg = SolverConfig::default();
        let e0 = solve_equal_weight(&clean, &cfg)
            .unwrap()
            .state
            .position()
            .distance(truth);
        let e1 = solve_equal_weight(&biased, &cfg)
            .unwrap()
            .state
            .position()
            .distance(truth);
        assert!(e1 > e0, "seed {seed}: {e1} <= {e0}");
    }
}

#[test]
fn final_weighted_residual_does_not_exceed_start() {
    for seed in 0..200 {
        let e = epoch(seed, Preset::LightUrban);
        if e.len() < 5 {
            continue;
        }
        let w = WeightVector(
            (0..e.len())
                .map(|k| 0.2 + 0.7 * ((k * 37 + seed as usize) % 11) as f64 / 10.0)
                .collect(),
        );
        let truth = e.truth_pos.unwrap();
        for y0 in [
            PositionState::default(),
            PositionState::from_position(
                truth + tdl_gnss::geodesy::EcefPosition::new(300.0, -200.0, 150.0),
                0.0,
            ),
        ] {
            let res = solve_wls(&e, &w, None, y0, &SolverConfig::default()).unwrap();
            if res.converged {
                assert!(
                    weighted_residual_norm(&e, &w, &res.state)
                        <= weighted_residual_norm(&e, &w, &y0)
                );
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn weight_scaling_leaves_solution_unchanged(seed in 0u64..10_000, log_c in -3.0f64..3.0) {
        let e = epoch(seed, Preset::LightUrban);
        prop_assume!(e.len() >= 5);
        let w = WeightVector((0..e.len()).map(|k| 0.1 + 0.09 * k as f64).collect());
        let c = 10f64.powf(log_c);
        let scaled = WeightVector(w.0.iter().map(|v| v * c).collect());
        let cfg = SolverConfig::default();
        let a = solve_wls(&e, &w, None, PositionState::default(), &cfg).unwrap();
        let b = solve_wls(&e, &scaled, None, PositionState::default(), &cfg).unwrap();
        prop_assert!(a.state.position().distance(b.state.position()) < 1e-9);
    }

    #[test]
    fn permutation_permutes_residuals_only(seed in 0u64..10_000, rot in 1usize..20) {
        let e = epoch(seed, Preset::LightUrban);
        prop_assume!(e.len() >= 5);
        let n = e.len();
        let w = WeightVector((0..n).map(|k| 0.3 + 0.05 * k as f64).collect());
        // Reverse, then rotate.
        let perm: Vec<usize> = (0..n).rev().cycle().skip(rot % n).take(n).collect();
        let mut p = e.clone();
        p.observations = perm.iter().map(|&i| e.observations[i].clone()).collect();
        let pw = WeightVector(perm.iter().map(|&i| w.0[i]).collect());
        let cfg = SolverConfig::default();
        let a = solve_wls(&e, &w, None, PositionState::default(), &cfg).unwrap();
        let b = solve_wls(&p, &pw, None, PositionState::default(), &cfg).unwrap();
        prop_assert!(a.state.position().distance(b.state.position()) < 1e-9);
        for (j, &i) in perm.iter().enumerate() {
            prop_assert!((b.residuals[j] - a.residuals[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn corrections_equal_shifted_pseudoranges(seed in 0u64..10_000) {
        let e = epoch(seed, Preset::LightUrban);
        prop_assume!(e.len() >= 4);
        let b: Vec<f64> = e.observations.iter().map(|o| o.bias_truth.unwrap_or(0.0)).collect();
        let mut shifted = e.clone();
        shifted.observations.iter_mut().zip(&b).for_each(|(o, b)| o.pseudorange -= b);
        let w = WeightVector::uniform(e.len());
        let cfg = SolverConfig::default();
        let a = solve_wls(&e, &w, Some(&b), PositionState::default(), &cfg).unwrap();
        let c = solve_wls(&shifted, &w, None, PositionState::default(), &cfg).unwrap();
        prop_assert_eq!(a.state, c.state);
    }
}
