use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use log::info;
use serde_json::json;

use lbb::array::ArrayConfig;
use lbb::dataset::{build_dataset, ingest_external_files, split, BsPose, LabeledDataset, Split};
use lbb::neuralnet::{train, Arch, MlpConfig, ModelSpec, RffConfig, RffModel, TrainConfig};
use lbb::precoders::{
    evaluate, heatmap_csv, heatmap_svg, n_sweep, report_cdf_csv, spatial_map, sweep_csv, ChannelOracle,
    DirectionLbb, EvalReport, MapCell, OrthogonalOracle, PrecodingFunction, SweepConfig,
};
use lbb::scene::Scene;
use lbb::Error;

use crate::manifest::{self, RunManifest};
use crate::{
    ArchArg, ArrayArgs, BaselineArg, Cli, Command, EvalArgs, GenerateArgs, IngestArgs, ModelArgs, SweepArgs,
    TrainArgs,
};

/// Maps an error to the documented exit status: 2 configuration or usage,
/// 3 I/O, 4 data content.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(err) = cause.downcast_ref::<Error>() {
            return match err {
                Error::Io(_) => 3,
                err if err.is_data_error() => 4,
                _ => 2,
            };
        }
        if cause.is::<std::io::Error>() {
            return 3;
        }
        if cause.is::<serde_json::Error>() {
            return 4;
        }
    }
    2
}

pub fn run(cli: Cli, argv: Vec<String>) -> anyhow::Result<()> {
    let threads = cli
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if threads == 0 {
        bail!(Error::InvalidConfig("--threads must be >= 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .context("configuring the worker pool")?;
    execute(cli, argv, threads)
}

fn execute(cli: Cli, argv: Vec<String>, threads: usize) -> anyhow::Result<()> {
    let started = Instant::now();
    let manifest_path = cli.manifest.clone();
    let mut m = match &cli.command {
        Command::Generate(a) => generate(a, &argv, threads)?,
        Command::Ingest(a) => ingest(a, &argv, threads)?,
        Command::Train(a) => train_cmd(a, &argv, threads)?,
        Command::Eval(a) => eval(a, &argv, threads)?,
        Command::Sweep(a) => sweep(a, &argv, threads)?,
        Command::Replay(a) => return replay(&a.manifest_file, threads),
    };
    m.duration_seconds = started.elapsed().as_secs_f64();
    let path = manifest_path.or_else(|| m.primary.as_deref().map(manifest::default_path));
    if let Some(path) = path {
        m.save(&path)?;
        info!("manifest written to {}", path.display());
    }
    Ok(())
}

fn replay(path: &Path, threads: usize) -> anyhow::Result<()> {
    let recorded = RunManifest::load(path)?;
    let mut args = vec!["lbb".to_string()];
    args.extend(recorded.argv.iter().cloned());
    let cli = crate::parse(&args).map_err(|e| Error::InvalidConfig(format!("manifest argv: {e}")))?;
    if matches!(cli.command, Command::Replay(_)) {
        bail!(Error::InvalidConfig("a manifest cannot replay another replay".into()));
    }
    if threads != recorded.threads {
        log::warn!(
            "replaying with {threads} threads, recorded run used {}; pass --threads {} to match",
            recorded.threads,
            recorded.threads
        );
    }
    execute(cli, recorded.argv, threads)
}

fn load_scene(path: Option<&Path>) -> anyhow::Result<Scene> {
    Ok(match path {
        Some(p) => Scene::load(p).with_context(|| format!("loading scene {}", p.display()))?,
        None => Scene::desk(),
    })
}

fn array_config(a: &ArrayArgs) -> anyhow::Result<ArrayConfig> {
    let mut cfg = ArrayConfig::half_wavelength(a.side, a.carrier);
    if let Some(s) = a.spacing {
        cfg.element_spacing = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn model_spec(a: &ModelArgs, array_cfg: &ArrayConfig, rff_seed: u64) -> anyhow::Result<ModelSpec> {
    if !(a.sigma_inv > 0.0 && a.sigma_inv.is_finite()) {
        bail!(Error::InvalidConfig("--sigma-inv must be a positive length".into()));
    }
    let spec = ModelSpec {
        arch: match a.arch {
            ArchArg::Rff => Arch::Rff,
            ArchArg::Mlp => Arch::Mlp,
        },
        rff: RffConfig::with_length_scale(a.rff, a.sigma_inv, rff_seed),
        mlp: MlpConfig::new(a.depth, a.width, array_cfg),
    };
    spec.rff.validate()?;
    spec.mlp.validate()?;
    Ok(spec)
}

fn train_config(a: &ModelArgs, seed: u64) -> anyhow::Result<TrainConfig> {
    let cfg = TrainConfig {
        epochs: a.epochs,
        batch_size: a.batch,
        learning_rate: a.lr,
        rng_seed: seed,
        ..TrainConfig::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

fn write(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).map_err(Error::Io).with_context(|| format!("writing {}", path.display()))
}

fn generate(a: &GenerateArgs, argv: &[String], threads: usize) -> anyhow::Result<RunManifest> {
    let scene = load_scene(a.scene.as_deref())?;
    let cfg = array_config(&a.array)?;
    let ds = build_dataset(&scene, &cfg, a.n as usize, a.seed)?;
    ds.save(&a.out).with_context(|| format!("writing {}", a.out.display()))?;
    let zeros = ds.zero_norm_indices().len();
    println!("N={} zero_norm={zeros}", ds.len());

    let mut m = RunManifest::new("generate", argv.to_vec(), threads);
    m.config = json!({ "scene": scene, "array": cfg, "n": a.n });
    m.seed("data", a.seed);
    if let Some(p) = &a.scene {
        m.input("scene", p);
    }
    m.output("dataset", &a.out);
    m.results = json!({ "records": ds.len(), "zero_norm": zeros });
    Ok(m)
}

fn ingest(a: &IngestArgs, argv: &[String], threads: usize) -> anyhow::Result<RunManifest> {
    let cfg = array_config(&a.array)?;
    let ds = ingest_external_files(&a.channels, &a.locations, &cfg)?;
    ds.save(&a.out).with_context(|| format!("writing {}", a.out.display()))?;
    let zeros = ds.zero_norm_indices().len();
    println!("N={} zero_norm={zeros}", ds.len());

    let mut m = RunManifest::new("ingest", argv.to_vec(), threads);
    m.config = json!({ "array": cfg });
    m.input("channels", &a.channels);
    m.input("locations", &a.locations);
    m.output("dataset", &a.out);
    m.results = json!({ "records": ds.len(), "zero_norm": zeros });
    Ok(m)
}

fn load_dataset(path: &Path) -> anyhow::Result<LabeledDataset> {
    LabeledDataset::load(path).with_context(|| format!("loading dataset {}", path.display()))
}

fn train_cmd(a: &TrainArgs, argv: &[String], threads: usize) -> anyhow::Result<RunManifest> {
    let ds = load_dataset(&a.data)?;
    let rff_seed = a.rff_seed.unwrap_or(a.seed);
    let spec = model_spec(&a.model, &ds.array_cfg, rff_seed)?;
    let cfg = train_config(&a.model, a.seed)?;
    let parts = match a.test_fraction {
        Some(f) => split(&ds, f, a.split_seed)?,
        None => Split::all_train(&ds),
    };
    let outcome = train(&ds, &parts, &spec, &cfg)?;
    outcome.model.save(&a.out).with_context(|| format!("writing {}", a.out.display()))?;
    let trace_path = a.trace.clone().unwrap_or_else(|| {
        let mut s = a.out.as_os_str().to_owned();
        s.push(".cost.csv");
        PathBuf::from(s)
    });
    let mut trace = String::from("epoch,cost\n");
    for (i, c) in outcome.cost_trace.iter().enumerate() {
        trace.push_str(&format!("{},{c}\n", i + 1));
    }
    write(&trace_path, &trace)?;
    let last = outcome.cost_trace.last().copied().unwrap_or(f64::NAN);
    println!("steps={} final_cost={last:.6} seconds={:.1}", outcome.steps, outcome.seconds);

    let mut m = RunManifest::new("train", argv.to_vec(), threads);
    m.config = json!({
        "model": spec,
        "train": cfg,
        "test_fraction": a.test_fraction,
        "train_samples": parts.train_indices.len(),
    });
    m.seed("train", a.seed);
    m.seed("rff", rff_seed);
    if a.test_fraction.is_some() {
        m.seed("split", a.split_seed);
    }
    m.input("dataset", &a.data);
    m.output("model", &a.out);
    m.output("cost_trace", &trace_path);
    m.results = json!({ "steps": outcome.steps, "final_cost": last, "train_seconds": outcome.seconds });
    Ok(m)
}

enum Scorer {
    Model(RffModel<f32>),
    Direction(DirectionLbb),
    Oracle,
    Orthogonal,
}

impl Scorer {
    fn as_dyn(&self) -> &dyn PrecodingFunction {
        match self {
            Scorer::Model(m) => m,
            Scorer::Direction(d) => d,
            Scorer::Oracle => &ChannelOracle,
            Scorer::Orthogonal => &OrthogonalOracle,
        }
    }
}

fn eval(a: &EvalArgs, argv: &[String], threads: usize) -> anyhow::Result<RunManifest> {
    let mut m = RunManifest::new("eval", argv.to_vec(), threads);
    let model = match &a.model {
        Some(p) => {
            m.input("model", p);
            Some(RffModel::load(p).with_context(|| format!("loading model {}", p.display()))?)
        }
        None => None,
    };
    if let Some(p) = &a.scene {
        m.input("scene", p);
    }

    let (report, map) = if let Some(data) = &a.data {
        m.input("dataset", data);
        let ds = load_dataset(data)?;
        if let Some(model) = &model {
            if model.array_cfg != ds.array_cfg || model.dim != ds.dim {
                bail!(Error::DimensionMismatch("model and dataset disagree on array or location dimension".into()));
            }
        }
        let scorer = match (model, a.baseline) {
            (Some(model), _) => Scorer::Model(model),
            (None, Some(BaselineArg::Direction)) => {
                let bs = match (&a.scene, ds.provenance.base_station) {
                    (Some(p), _) => BsPose::of_scene(&load_scene(Some(p))?),
                    (None, Some(bs)) => bs,
                    (None, None) => bail!(Error::InvalidConfig(
                        "dataset records no base-station pose; pass --scene".into()
                    )),
                };
                Scorer::Direction(DirectionLbb { array_cfg: ds.array_cfg, bs })
            }
            (None, Some(BaselineArg::Oracle)) => Scorer::Oracle,
            (None, Some(BaselineArg::OrthogonalOracle)) => Scorer::Orthogonal,
            (None, None) => unreachable!("clap requires a precoder"),
        };
        let indices = match a.test_fraction {
            Some(f) => {
                m.seed("split", a.split_seed);
                split(&ds, f, a.split_seed)?.test_indices
            }
            None => (0..ds.len()).collect(),
        };
        (evaluate(scorer.as_dyn(), &ds, &indices)?, None)
    } else {
        let pitch = a.grid_pitch.expect("clap requires a source");
        let scene = load_scene(a.scene.as_deref())?;
        let array_cfg = match &model {
            Some(model) => model.array_cfg,
            None => array_config(&a.array)?,
        };
        let scorer = match (model, a.baseline) {
            (Some(model), _) => Scorer::Model(model),
            (None, Some(BaselineArg::Direction)) => {
                Scorer::Direction(DirectionLbb { array_cfg, bs: BsPose::of_scene(&scene) })
            }
            (None, Some(BaselineArg::Oracle)) => Scorer::Oracle,
            (None, Some(BaselineArg::OrthogonalOracle)) => Scorer::Orthogonal,
            (None, None) => unreachable!("clap requires a precoder"),
        };
        let map = spatial_map(scorer.as_dyn(), &scene, &array_cfg, pitch)?;
        let (mut etas, mut idx, mut excluded) = (Vec::new(), Vec::new(), 0);
        for (i, c) in map.cells.iter().enumerate() {
            match c {
                MapCell::Value { eta, .. } => {
                    etas.push(*eta);
                    idx.push(i);
                }
                MapCell::NoChannel => excluded += 1,
                MapCell::Building => {}
            }
        }
        if etas.is_empty() {
            bail!(Error::InvalidConfig("no grid point has a channel".into()));
        }
        let mut report = EvalReport::from_correlations(idx, etas, excluded);
        report.spatial = Some(map.clone());
        m.config = json!({ "grid_pitch": pitch, "array": array_cfg, "scene": scene });
        (report, Some(map))
    };

    let summary = report.summary();
    println!(
        "median={:.6} mean={:.6} count={} excluded={}",
        summary.median, summary.mean, summary.count, summary.excluded_count
    );
    if let Some(p) = &a.summary {
        write(p, &(serde_json::to_string_pretty(&summary)? + "\n"))?;
        m.output("summary", p);
    }
    if let Some(p) = &a.cdf {
        write(p, &report_cdf_csv(&report))?;
        m.output("cdf", p);
    }
    if let Some(map) = &map {
        if let Some(p) = &a.heatmap {
            write(p, &heatmap_svg(map))?;
            m.output("heatmap", p);
        }
        if let Some(p) = &a.heatmap_csv {
            write(p, &heatmap_csv(map))?;
            m.output("heatmap_csv", p);
        }
    }
    if m.config.is_null() {
        m.config = json!({ "baseline": a.baseline.map(|b| format!("{b:?}")), "test_fraction": a.test_fraction });
    }
    m.results = serde_json::to_value(&summary)?;
    Ok(m)
}

fn sweep(a: &SweepArgs, argv: &[String], threads: usize) -> anyhow::Result<RunManifest> {
    let scene = load_scene(a.scene.as_deref())?;
    let array_cfg = array_config(&a.array)?;
    let spec = model_spec(&a.model, &array_cfg, a.seed)?;
    let cfg = SweepConfig {
        n_values: a.n_list.clone(),
        eval_size: a.eval_size,
        data_seed: a.seed,
        eval_seed: a.eval_seed,
        spec,
        train: train_config(&a.model, a.seed)?,
    };
    if cfg.n_values.contains(&0) || cfg.eval_size == 0 {
        bail!(Error::InvalidConfig("sizes in --n-list and --eval-size must be >= 1".into()));
    }
    let rows = n_sweep(&scene, &array_cfg, &cfg)?;
    write(&a.out, &sweep_csv(&rows))?;
    for r in &rows {
        println!("N={} median={:.6} mean={:.6} seconds={:.1}", r.n, r.median, r.mean, r.train_seconds);
    }

    let mut m = RunManifest::new("sweep", argv.to_vec(), threads);
    m.config = json!({ "scene": scene, "array": array_cfg, "sweep": cfg });
    m.seed("data", a.seed);
    m.seed("eval", a.eval_seed);
    if let Some(p) = &a.scene {
        m.input("scene", p);
    }
    m.output("table", &a.out);
    m.results = serde_json::to_value(&rows)?;
    Ok(m)
}
