//! Network parameter gradients against finite differences, and training
//! behaviour on small problems.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tdl_gnss::nn::{
    adam_step, backward, checkpoint_from_str, checkpoint_to_string, forward, Activation, AdamState,
    Architecture, FeatureVector, ForwardCache, MlpModel, OutputGradients,
};

fn batch(rng: &mut ChaCha8Rng, n: usize) -> Vec<FeatureVector> {
    (0..n)
        .map(|_| FeatureVector {
            cn0: rng.random_range(0.1..1.1),
            elevation: rng.random_range(0.05..1.0),
            residual: rng.random_range(-0.3..0.3),
        })
        .collect()
}

fn upstream(arch: Architecture, rng: &mut ChaCha8Rng, n: usize) -> OutputGradients {
    OutputGradients {
        d_biases: arch
            .has_bias_head()
            .then(|| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()),
        d_weights: arch
            .has_weight_head()
            .then(|| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()),
    }
}

/// Linear functional of the outputs whose parameter gradient `backward` computes.
fn objective(model: &MlpModel, x: &[FeatureVector], g: &OutputGradients) -> (f64, ForwardCache) {
    let (p, cache) = forward(model, x).unwrap();
    let dot = |a: &Option<Vec<f64>>, b: &Option<Vec<f64>>| match (a, b) {
        (Some(a), Some(b)) => a.iter().zip(b).map(|(x, y)| x * y).sum(),
        _ => 0.0,
    };
    (
        dot(&p.biases, &g.d_biases) + dot(&p.weights, &g.d_weights),
        cache,
    )
}

fn relu_signs(model: &MlpModel, cache: &ForwardCache) -> Vec<bool> {
    if model.architecture.hidden_activation() != Activation::Relu {
        return Vec::new();
    }
    (0..model.layers.len() - 1)
        .flat_map(|l| cache.pre_activations(l).iter().map(|&v| v > 0.0))
        .collect()
}

fn perturbed(model: &MlpModel, layer: usize, idx: usize, is_bias: bool, d: f64) -> MlpModel {
    let mut m = model.clone();
    let slot = if is_bias {
        &mut m.layers[layer].biases[idx]
    } else {
        &mut m.layers[layer].weights[idx]
    };
    *slot += d;
    m
}

#[test]
fn parameter_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let h = 1e-3;
    for arch in [
        Architecture::BiasNet,
        Architecture::WeightNet,
        Architecture::JointNet,
    ] {
        for seed in 0..3 {
            let model = MlpModel::new(arch, seed);
            let x = batch(&mut rng, 6);
            let g = upstream(arch, &mut rng, x.len());
            let (_, cache) = objective(&model, &x, &g);
            let signs = relu_signs(&model, &cache);
            let grads = backward(&model, &cache, &g).unwrap();
            let (mut checked, mut skipped, mut worst) = (0, 0, 0.0f64);
            for (l, layer) in model.layers.iter().enumerate() {
                let n_w = layer.weights.len();
                // Sample parameters: every bias plus a strided subset of weights.
                let picks: Vec<(usize, bool)> = (0..n_w)
                    .step_by(7)
                    .map(|i| (i, false))
                    .chain((0..layer.biases.len()).map(|i| (i, true)))
                    .collect();
                for (i, is_bias) in picks {
                    let evals: Vec<(f64, bool)> = [2.0, 1.0, -1.0, -2.0]
                        .iter()
                        .map(|s| {
                            let m = perturbed(&model, l, i, is_bias, s * h);
                            let (j, c) = objective(&m, &x, &g);
                            (j, relu_signs(&m, &c) == signs)
                        })
                        .collect();
                    if evals.iter().any(|e| !e.1) {
                        skipped += 1;
                        continue;
                    }
                    let fd = (-evals[0].0 + 8.0 * evals[1].0 - 8.0 * evals[2].0 + evals[3].0)
                        / (12.0 * h);
                    let a = if is_bias {
                        grads.layers[l].biases[i]
                    } else {
                        grads.layers[l].weights[i]
                    };
                    let err = if a.abs() < 1e-10 {
                        (fd - a).abs()
                    } else {
                        (fd - a).abs() / a.abs()
                    };
                    worst = worst.max(err);
                    assert!(
                        err < 1e-6,
                        "{arch} seed {seed} layer {l} {} {i}: {a:e} vs {fd:e}",
                        if is_bias { "b" } else { "w" }
                    );
                    checked += 1;
                }
            }
            assert!(
                checked > 10 * skipped.max(1),
                "{arch}: checked {checked}, skipped {skipped}"
            );
            eprintln!("{arch} seed {seed}: {checked} checked, {skipped} at kinks, worst {worst:e}");
        }
    }
}

#[test]
fn adam_reduces_a_quadratic_objective() {
    // Fit the bias head to a constant 5 m target: loss 0.5 * sum (b - 5)^2.
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = batch(&mut rng, 16);
    let mut model = MlpModel::new(Architecture::BiasNet, 9);
    let mut adam = AdamState::new(&model, 1e-3);
    let loss = |m: &MlpModel| {
        let (p, _) = forward(m, &x).unwrap();
        p.biases
            .unwrap()
            .iter()
            .map(|b| 0.5 * (b - 5.0).powi(2))
            .sum::<f64>()
    };
    let start = loss(&model);
    for _ in 0..300 {
        let (p, cache) = forward(&model, &x).unwrap();
        let g = OutputGradients {
            d_biases: Some(p.biases.unwrap().iter().map(|b| b - 5.0).collect()),
            d_weights: None,
        };
        let grads = backward(&model, &cache, &g).unwrap();
        adam_step(&mut model, &grads, &mut adam).unwrap();
    }
    let end = loss(&model);
    assert!(end < 0.01 * start, "{start} -> {end}");
}

#[test]
fn trained_checkpoint_round_trips_bit_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let x = batch(&mut rng, 5);
    let mut model = MlpModel::new(Architecture::JointNet, 2);
    let mut adam = AdamState::new(&model, 1e-2);
    for _ in 0..10 {
        let (_, cache) = forward(&model, &x).unwrap();
        let g = upstream(Architecture::JointNet, &mut rng, x.len());
        let grads = backward(&model, &cache, &g).unwrap();
        adam_step(&mut model, &grads, &mut adam).unwrap();
    }
    let text = checkpoint_to_string(&model).unwrap();
    let back = checkpoint_from_str(&text).unwrap();
    assert_eq!(back, model);
    assert_eq!(
        forward(&back, &x).unwrap().0,
        forward(&model, &x).unwrap().0
    );
    assert_eq!(checkpoint_to_string(&back).unwrap(), text);
}
