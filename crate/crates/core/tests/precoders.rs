use lbb::array::{steering_vector, ArrayConfig, Direction};
use lbb::dataset::{BsPose, LabeledDataset, Provenance, Record};
use lbb::precoders::{
    correlation, direction_lbb, evaluate, spatial_map, ChannelOracle, DirectionLbb, MapCell, OrthogonalOracle,
    Precoder, PrecodingFunction,
};
use lbb::scene::{synthesize_channel, trace_paths, Building, ChannelVector, Location, Scene};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cfg() -> ArrayConfig {
    ArrayConfig::half_wavelength(4, 3.5e9)
}

fn random_channel(rng: &mut ChaCha8Rng, a: usize) -> ChannelVector {
    ChannelVector((0..a).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect())
}

#[test]
fn metric_invariances_hold_over_random_draws() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10_000 {
        let h = random_channel(&mut rng, 16);
        let w = Precoder::normalized(random_channel(&mut rng, 16).0);
        let eta = correlation(&w, &h).unwrap();
        assert!((0.0..=1.0 + 1e-12).contains(&eta));

        let c = Complex64::from_polar(rng.random_range(0.01..100.0), rng.random_range(-3.0..3.0));
        let eta_scaled = correlation(&w, &h.scaled(c)).unwrap();
        assert!((eta - eta_scaled).abs() < 1e-12);

        let phase = Complex64::from_polar(1.0, rng.random_range(-3.0..3.0));
        let w_rot = Precoder(w.0.iter().map(|z| z * phase).collect());
        assert!((eta - correlation(&w_rot, &h).unwrap()).abs() < 1e-12);

        let oracle = ChannelOracle.precode(&Location::new_2d(0.0, 0.0), &h);
        assert!((correlation(&oracle, &h).unwrap() - 1.0).abs() < 1e-12);
        let orth = OrthogonalOracle.precode(&Location::new_2d(0.0, 0.0), &h);
        assert!((orth.norm() - 1.0).abs() < 1e-12);
        assert!(correlation(&orth, &h).unwrap() < 1e-12);
    }
}

#[test]
fn direction_precoder_is_optimal_for_single_los_path() {
    let mut scene = Scene::empty([0.0, 0.0], [100.0, 100.0], [2.0, 50.0]);
    scene.max_bounces = 0;
    let bs = BsPose::of_scene(&scene);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let l = Location::new_2d(rng.random_range(5.0..100.0), rng.random_range(0.0..100.0));
        let h = synthesize_channel(&trace_paths(&scene, &cfg(), &l).unwrap(), &cfg());
        let w = direction_lbb(&cfg(), &bs, &l).unwrap();
        assert!((correlation(&w, &h).unwrap() - 1.0).abs() < 1e-9);
    }
    // A 3D location overrides the scene's user height.
    let l = Location(vec![40.0, 70.0, 20.0]);
    let h = synthesize_channel(&trace_paths(&scene, &cfg(), &l).unwrap(), &cfg());
    let w = direction_lbb(&cfg(), &bs, &l).unwrap();
    assert!((correlation(&w, &h).unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn direction_precoder_on_pure_reflection_matches_closed_form() {
    let mut scene = Scene::empty([-100.0, -100.0], [100.0, 100.0], [0.0, 5.0]);
    scene.bounds.reflectivity = 0.0;
    scene.max_bounces = 1;
    scene.buildings.push(Building { min: [-50.0, -10.0], max: [50.0, 0.0], reflectivity: 0.6 });
    scene.buildings.push(Building { min: [4.0, 2.0], max: [6.0, 30.0], reflectivity: 0.6 });
    let user = Location::new_2d(10.0, 5.0);
    let paths = trace_paths(&scene, &cfg(), &user).unwrap();
    assert_eq!(paths.len(), 1);
    assert_eq!(paths[0].bounces, 1);
    let h = synthesize_channel(&paths, &cfg());

    let bs = BsPose::of_scene(&scene);
    let w = direction_lbb(&cfg(), &bs, &user).unwrap();
    let eta = correlation(&w, &h).unwrap();

    let dz = scene.user_height - scene.bs_height;
    let a_los = steering_vector(&cfg(), &Direction::from_vector(10.0, 0.0, dz));
    let a_path = steering_vector(&cfg(), &paths[0].departure);
    let n = cfg().num_antennas() as f64;
    let closed = a_los.inner(&a_path).norm_sqr() / (n * n);
    assert!((eta - closed).abs() < 1e-12, "{eta} vs {closed}");
    assert!(eta < 1.0 - 1e-6);
}

#[test]
fn empty_scene_los_only_map_is_all_ones() {
    let mut scene = Scene::empty([0.0, 0.0], [60.0, 40.0], [1.0, 20.0]);
    scene.max_bounces = 0;
    let dir = DirectionLbb { array_cfg: cfg(), bs: BsPose::of_scene(&scene) };
    let map = spatial_map(&dir, &scene, &cfg(), 2.0).unwrap();
    let mut valued = 0;
    for c in &map.cells {
        if let MapCell::Value { eta, los } = *c {
            assert!(los);
            assert!((eta - 1.0).abs() < 1e-9);
            valued += 1;
        }
    }
    assert_eq!(valued, map.cells.len());
}

struct Fixed(Precoder);

impl PrecodingFunction for Fixed {
    fn precode(&self, _: &Location, _: &ChannelVector) -> Precoder {
        self.0.clone()
    }
}

#[test]
fn empty_scene_with_reflections_favours_direction_precoder() {
    let scene = Scene::empty([0.0, 0.0], [60.0, 40.0], [1.0, 20.0]);
    let dir = DirectionLbb { array_cfg: cfg(), bs: BsPose::of_scene(&scene) };
    let (dir_mean, n) = spatial_map(&dir, &scene, &cfg(), 2.0).unwrap().mean_where(|_, _| true);
    assert!(n > 0);
    for az in [-1.2, -0.6, 0.0, 0.3, 0.9] {
        let w = Precoder::normalized(steering_vector(&cfg(), &Direction::new(az, -0.05)).0);
        let (fixed_mean, _) = spatial_map(&Fixed(w), &scene, &cfg(), 2.0).unwrap().mean_where(|_, _| true);
        assert!(dir_mean > fixed_mean, "az {az}: {dir_mean} <= {fixed_mean}");
    }
}

#[test]
fn desk_shadow_is_worse_than_los_for_direction_precoder() {
    let scene = Scene::desk();
    let dir = DirectionLbb { array_cfg: cfg(), bs: BsPose::of_scene(&scene) };
    let map = spatial_map(&dir, &scene, &cfg(), 2.0).unwrap();
    let (los, n_los) = map.mean_where(|_, los| los);
    let (nlos, n_nlos) = map.mean_where(|_, los| !los);
    assert!(n_los > 0 && n_nlos > 0);
    assert!(nlos < los, "NLOS {nlos} vs LOS {los}");
    assert!(map.cells.iter().any(|c| *c == MapCell::NoChannel));
    assert!(map.cells.iter().any(|c| *c == MapCell::Building));
}

#[test]
fn evaluation_excludes_zero_channels_and_orders_results() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut records: Vec<Record> = (0..9)
        .map(|i| Record { location: Location::new_2d(i as f64, 1.0), channel: random_channel(&mut rng, 16) })
        .collect();
    records[3].channel = ChannelVector::zeros(16);
    records[7].channel = ChannelVector::zeros(16);
    let prov = Provenance { source: "test".into(), seed: None, element_spacing: cfg().element_spacing, base_station: None };
    let ds = LabeledDataset::new(cfg(), records, prov).unwrap();
    let all: Vec<usize> = (0..9).collect();

    let oracle = evaluate(&ChannelOracle, &ds, &all).unwrap();
    assert_eq!(oracle.excluded_count, 2);
    assert_eq!(oracle.indices, vec![0, 1, 2, 4, 5, 6, 8]);
    assert!(oracle.correlations.iter().all(|e| (e - 1.0).abs() < 1e-12));
    assert!((oracle.median - 1.0).abs() < 1e-12);

    let worst = evaluate(&OrthogonalOracle, &ds, &all).unwrap();
    assert!(worst.median < 1e-12);
    assert_eq!(worst.cdf.last().unwrap().1, 1.0);
}
