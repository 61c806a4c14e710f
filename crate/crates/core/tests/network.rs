//! Finite-difference and behavioural checks of the network, its gradients
//! and the training loop.

use lbb::array::ArrayConfig;
use lbb::dataset::{build_dataset, LabeledDataset, Provenance, Record, Split};
use lbb::neuralnet::{
    backward, cost, sample_frequencies, train, train_generic, Arch, Gradients, MlpConfig, ModelSpec, RffConfig,
    RffModel, TrainConfig,
};
use lbb::scene::{ChannelVector, Location, Scene};
use lbb::Error;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn tiny_cfg() -> ArrayConfig {
    ArrayConfig::half_wavelength(2, 3.5e9)
}

fn tiny_spec(arch: Arch) -> ModelSpec {
    let cfg = tiny_cfg();
    ModelSpec {
        arch,
        rff: RffConfig::with_length_scale(8, 5.0, 3),
        mlp: MlpConfig::new(2, 16, &cfg),
    }
}

fn random_batch(n: usize, seed: u64) -> Vec<(Location, ChannelVector)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let l = Location::new_2d(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
            let h = ChannelVector(
                (0..4)
                    .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                    .collect(),
            );
            (l, h)
        })
        .collect()
}

/// Shifts all biases so that every ReLU starts active on the test inputs.
fn tiny_model(arch: Arch) -> RffModel<f64> {
    let mut m = RffModel::<f64>::new(tiny_cfg(), 2, &tiny_spec(arch), vec![0.0, 0.0], 5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for layer in &mut m.layers {
        for b in &mut layer.bias {
            *b = rng.random_range(-0.2..0.2);
        }
    }
    m
}

fn flatten(g: &Gradients<f64>) -> Vec<f64> {
    g.layers.iter().flat_map(|l| l.weights.iter().chain(&l.bias).copied()).collect()
}

fn perturb(model: &RffModel<f64>, k: usize, delta: f64) -> RffModel<f64> {
    let mut m = model.clone();
    let mut idx = k;
    for layer in &mut m.layers {
        if idx < layer.weights.len() {
            layer.weights[idx] += delta;
            return m;
        }
        idx -= layer.weights.len();
        if idx < layer.bias.len() {
            layer.bias[idx] += delta;
            return m;
        }
        idx -= layer.bias.len();
    }
    panic!("parameter index out of range");
}

/// `‖a − b‖ / (‖a‖ + ‖b‖)`.
fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / (na + nb).max(f64::MIN_POSITIVE)
}

fn finite_difference(model: &RffModel<f64>, batch: &[(Location, ChannelVector)], step: f64) -> Vec<f64> {
    (0..model.num_params())
        .map(|k| {
            let up = cost(&perturb(model, k, step), batch).unwrap();
            let down = cost(&perturb(model, k, -step), batch).unwrap();
            (up - down) / (2.0 * step)
        })
        .collect()
}

#[test]
fn gradients_match_central_differences() {
    let batch = random_batch(8, 1);
    for arch in [Arch::Rff, Arch::Mlp] {
        let model = tiny_model(arch);
        let analytic = flatten(&backward(&model, &batch).unwrap());
        let numeric = finite_difference(&model, &batch, 1e-6);
        let e = rel_err(&analytic, &numeric);
        assert!(e < 1e-6, "{arch:?}: relative error {e:e}");
        // Per-layer errors, so a small layer cannot hide behind a large one.
        let mut offset = 0;
        for layer in &model.layers {
            let n = layer.num_params();
            let e = rel_err(&analytic[offset..offset + n], &numeric[offset..offset + n]);
            assert!(e < 1e-6, "{arch:?}: layer relative error {e:e}");
            offset += n;
        }
    }
}

#[test]
fn single_precision_gradients_track_double_precision() {
    let batch = random_batch(8, 2);
    let model = tiny_model(Arch::Rff);
    let g64 = flatten(&backward(&model, &batch).unwrap());
    let g32: Vec<f64> = backward(&model.cast::<f32>(), &batch)
        .unwrap()
        .layers
        .iter()
        .flat_map(|l| l.weights.iter().chain(&l.bias).map(|&x| x as f64))
        .collect();
    let e = rel_err(&g64, &g32);
    assert!(e < 1e-4, "relative error {e:e}");
}

#[test]
fn cost_and_gradients_ignore_channel_scale() {
    let batch = random_batch(8, 3);
    let scaled: Vec<_> = batch
        .iter()
        .map(|(l, h)| (l.clone(), h.scaled(Complex64::from_polar(37.0, 1.1))))
        .collect();
    let model = tiny_model(Arch::Rff);
    let c0 = cost(&model, &batch).unwrap();
    let c1 = cost(&model, &scaled).unwrap();
    assert!((c0 - c1).abs() < 1e-12);
    let g0 = flatten(&backward(&model, &batch).unwrap());
    let g1 = flatten(&backward(&model, &scaled).unwrap());
    assert!(rel_err(&g0, &g1) < 1e-12);
}

#[test]
fn cost_lies_in_unit_interval() {
    for seed in 0..20 {
        let batch = random_batch(5, 100 + seed);
        let mut model = tiny_model(Arch::Rff);
        model.layers[0].bias.iter_mut().for_each(|b| *b += seed as f64 * 0.01);
        let c = cost(&model, &batch).unwrap();
        assert!((0.0..=1.0).contains(&c), "cost {c}");
    }
}

#[test]
fn dead_relu_layers_receive_zero_gradient() {
    let cfg = tiny_cfg();
    let spec = ModelSpec { mlp: MlpConfig::new(3, 16, &cfg), ..tiny_spec(Arch::Rff) };
    let mut model = RffModel::<f64>::new(cfg, 2, &spec, vec![0.0, 0.0], 5).unwrap();
    for layer in &mut model.layers[1..] {
        layer.weights.iter_mut().for_each(|w| *w = 0.0);
        layer.bias.iter_mut().for_each(|b| *b = 0.0);
    }
    let g = backward(&model, &random_batch(8, 4)).unwrap();
    for layer in &g.layers[..g.layers.len() - 1] {
        assert!(layer.weights.iter().chain(&layer.bias).all(|&x| x == 0.0));
    }
}

#[test]
fn zero_channel_in_batch_is_rejected() {
    let mut batch = random_batch(4, 5);
    batch[2].1 = ChannelVector::zeros(4);
    let model = tiny_model(Arch::Rff);
    assert!(matches!(cost(&model, &batch), Err(Error::ZeroNormChannel { index: 2 })));
    assert!(matches!(backward(&model, &batch), Err(Error::ZeroNormChannel { index: 2 })));
}

#[test]
fn forward_is_unit_norm() {
    let model = tiny_model(Arch::Rff).cast::<f32>();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..1000 {
        let l = Location::new_2d(rng.random_range(-500.0..500.0), rng.random_range(-500.0..500.0));
        let w = model.forward(&l);
        assert!((w.norm() - 1.0).abs() < 1e-9);
    }
}

fn small_dataset(n: usize, seed: u64) -> LabeledDataset {
    let scene = Scene::desk();
    build_dataset(&scene, &tiny_cfg(), n, seed).unwrap()
}

#[test]
fn frequencies_stay_frozen_during_training() {
    let ds = small_dataset(200, 1);
    let spec = tiny_spec(Arch::Rff);
    let cfg = TrainConfig { epochs: 3, batch_size: 20, ..TrainConfig::default() };
    let out = train(&ds, &Split::all_train(&ds), &spec, &cfg).unwrap();
    assert_eq!(out.model.frequencies, sample_frequencies(8, 2, spec.rff.sigma, spec.rff.seed));
}

#[test]
fn one_epoch_with_full_batch_takes_one_step() {
    let ds = small_dataset(120, 2);
    let usable = ds.usable_indices().len();
    let cfg = TrainConfig { epochs: 1, batch_size: usable, ..TrainConfig::default() };
    let out = train(&ds, &Split::all_train(&ds), &tiny_spec(Arch::Rff), &cfg).unwrap();
    assert_eq!(out.steps, 1);
    assert_eq!(out.cost_trace.len(), 1);
}

#[test]
fn training_is_identical_across_thread_counts() {
    let cfg = ArrayConfig::half_wavelength(4, 3.5e9);
    let ds16 = build_dataset(&Scene::desk(), &cfg, 300, 3).unwrap();
    let spec = ModelSpec { arch: Arch::Rff, rff: RffConfig::with_length_scale(64, 50.0, 1), mlp: MlpConfig::new(3, 64, &cfg) };
    let tc = TrainConfig { epochs: 2, batch_size: 25, ..TrainConfig::default() };
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| train(&ds16, &Split::all_train(&ds16), &spec, &tc).unwrap())
    };
    let a = run(1);
    let b = run(4);
    assert_eq!(a.model.layers, b.model.layers);
    assert_eq!(a.cost_trace, b.cost_trace);
}

#[test]
fn all_zero_training_set_is_rejected() {
    let records = (0..5)
        .map(|i| Record { location: Location::new_2d(i as f64, 0.0), channel: ChannelVector::zeros(4) })
        .collect();
    let prov = Provenance { source: "test".into(), seed: None, element_spacing: tiny_cfg().element_spacing, base_station: None };
    let ds = LabeledDataset::new(tiny_cfg(), records, prov).unwrap();
    let r = train(&ds, &Split::all_train(&ds), &tiny_spec(Arch::Rff), &TrainConfig::default());
    assert!(matches!(r, Err(Error::EmptyTrainingSet)));
}

#[test]
fn double_precision_training_reduces_cost() {
    let ds = small_dataset(400, 4);
    let tc = TrainConfig { epochs: 10, batch_size: 40, learning_rate: 3e-3, ..TrainConfig::default() };
    let out = train_generic::<f64>(&ds, &Split::all_train(&ds), &tiny_spec(Arch::Rff), &tc).unwrap();
    assert!(out.cost_trace.last().unwrap() < out.cost_trace.first().unwrap());
}

#[test]
fn desk_regime_cost_decreases() {
    let cfg = ArrayConfig::half_wavelength(4, 3.5e9);
    let ds = build_dataset(&Scene::desk(), &cfg, 4000, 1).unwrap();
    let spec = ModelSpec {
        arch: Arch::Rff,
        rff: RffConfig::with_length_scale(256, 50.0, 7),
        mlp: MlpConfig::new(4, 128, &cfg),
    };
    let out = train(&ds, &Split::all_train(&ds), &spec, &TrainConfig::default()).unwrap();
    assert_eq!(out.cost_trace.len(), 50);
    assert!(out.cost_trace[49] < out.cost_trace[0], "{:?}", out.cost_trace);
}
