use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;
use tdl_gnss::dataset::{load_dataset, save_dataset, DatasetHeader};
use tdl_gnss::geodesy::ecef_to_geodetic;
use tdl_gnss::nn::{load_model, save_model};
use tdl_gnss::pipeline::{
    evaluate, export_report, export_series, network_solve, position_errors, prepare_epoch,
    solve_method, train_from, write_report, EvalConfig, Method, ModelSet, TrainConfig,
};
use tdl_gnss::synth::{generate_dataset, ScenarioConfig};
use tdl_gnss::{Epoch, Error};

use crate::config::FileConfig;
use crate::{
    Cli, Command, EvaluateArgs, InspectArgs, ModelArgs, SimulateArgs, SolveArgs, TrainArgs,
};

const DEFAULT_SEED: u64 = 0;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::ConfigInvalid(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn io_error(path: &Path, e: io::Error) -> CliError {
    CliError::Data(format!("I/O failure on {}: {e}", path.display()))
}

pub fn run(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path).map_err(CliError::Data)?,
        None => FileConfig::default(),
    };
    if let Some(n) = cli.threads.or(file.threads) {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot configure thread pool: {e}")))?;
    }
    match cli.command {
        Command::Simulate(a) => simulate(a, &file),
        Command::Train(a) => train(a, &file),
        Command::Solve(a) => solve(a, &file),
        Command::Evaluate(a) => evaluate_cmd(a, &file),
        Command::Inspect(a) => inspect(a, &file),
    }
}

fn seed_or_default(flag: Option<u64>, file: &FileConfig) -> u64 {
    flag.or(file.seed).unwrap_or_else(|| {
        info!("no --seed given, using default seed {DEFAULT_SEED}");
        DEFAULT_SEED
    })
}

fn load_data(path: &Path) -> Result<Vec<Epoch>> {
    let data = load_dataset(path)?;
    info!("{}: {} epochs", path.display(), data.epochs.len());
    Ok(data.epochs)
}

fn load_models(args: &ModelArgs) -> Result<ModelSet> {
    let mut set = ModelSet::default();
    for path in &args.checkpoints {
        let model = load_model(path)?;
        info!("{}: {} network", path.display(), model.architecture);
        set.insert(model);
    }
    Ok(set)
}

fn simulate(args: SimulateArgs, file: &FileConfig) -> Result<()> {
    let mut cfg = match args.preset {
        Some(p) => ScenarioConfig::preset(p),
        None => file.scenario.clone().unwrap_or_default(),
    };
    // A [scenario] table always carries a seed; an explicit one wins over it.
    cfg.seed = match (args.seed.or(file.seed), &file.scenario) {
        (None, Some(s)) if args.preset.is_none() => s.seed,
        (seed, _) => seed_or_default(seed, file),
    };
    if let Some(n) = args.epochs {
        cfg.epochs = n;
    }
    if let Some(s) = args.noise {
        cfg.noise_sigma = s;
    }
    if let Some(p) = args.nlos_fraction {
        cfg.nlos_fraction = p;
    }
    let epochs = generate_dataset(&cfg)?;
    save_dataset(&args.out, &DatasetHeader::new(Some(cfg)), &epochs)?;
    info!("wrote {} epochs to {}", epochs.len(), args.out.display());
    Ok(())
}

fn default_log_path(checkpoint: &Path) -> PathBuf {
    checkpoint.with_extension("log.csv")
}

fn train(args: TrainArgs, file: &FileConfig) -> Result<()> {
    let data = load_data(&args.train)?;
    let mut cfg = TrainConfig::new(args.mode);
    cfg.solver = file.solver();
    cfg.seed = seed_or_default(args.seed, file);
    cfg.epochs = args.epochs.or(file.train.epochs).unwrap_or(cfg.epochs);
    cfg.learning_rate = args
        .lr
        .or(file.train.learning_rate)
        .unwrap_or(cfg.learning_rate);
    cfg.full_batch = args.full_batch || file.train.full_batch.unwrap_or(false);
    cfg.log_every = file.train.log_every.unwrap_or(cfg.log_every);
    cfg.validate()?;

    let start = match &args.init {
        Some(path) => {
            let m = load_model(path)?;
            if m.architecture != args.mode.architecture() {
                return Err(CliError::Data(format!(
                    "{} holds a {} network but --mode {} needs a {}",
                    path.display(),
                    m.architecture,
                    args.mode,
                    args.mode.architecture()
                )));
            }
            m
        }
        None => tdl_gnss::nn::MlpModel::new(args.mode.architecture(), cfg.seed),
    };
    let (model, log) = train_from(start, &data, &cfg)?;
    save_model(&model, &args.out)?;
    let log_path = args.log.unwrap_or_else(|| default_log_path(&args.out));
    log.save(&log_path)?;
    if let Some(last) = log.entries.last() {
        info!(
            "final mean loss {:.4} over {} epochs",
            last.mean_loss, last.epochs_used
        );
    }
    info!("wrote {} and {}", args.out.display(), log_path.display());
    Ok(())
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| io_error(p, e))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

#[derive(Serialize)]
struct SolutionRecord {
    index: usize,
    t: f64,
    method: &'static str,
    converged: bool,
    iterations: usize,
    /// ECEF (m)
    position: Option<[f64; 3]>,
    latitude_deg: Option<f64>,
    longitude_deg: Option<f64>,
    height_m: Option<f64>,
    clock_m: Option<f64>,
    error2d_m: Option<f64>,
    error3d_m: Option<f64>,
    fallback: bool,
    weights: Option<Vec<f64>>,
    biases: Option<Vec<f64>>,
    error: Option<String>,
}

fn solve_one(
    method: Method,
    models: &ModelSet,
    index: usize,
    epoch: &Epoch,
    cfg: &EvalConfig,
) -> SolutionRecord {
    let mut rec = SolutionRecord {
        index,
        t: epoch.t,
        method: method.name(),
        converged: false,
        iterations: 0,
        position: None,
        latitude_deg: None,
        longitude_deg: None,
        height_m: None,
        clock_m: None,
        error2d_m: None,
        error3d_m: None,
        fallback: false,
        weights: None,
        biases: None,
        error: None,
    };
    let solved = prepare_epoch(epoch, &cfg.solver)
        .and_then(|p| solve_method(method, models, epoch, &p, cfg));
    let sol = match solved {
        Ok(s) => s,
        Err(e) => {
            rec.error = Some(e.to_string());
            return rec;
        }
    };
    let pos = sol.result.state.position();
    rec.converged = sol.result.converged;
    rec.iterations = sol.result.iterations;
    rec.position = Some(pos.to_array());
    rec.clock_m = Some(sol.result.state.clock);
    if let Ok(g) = ecef_to_geodetic(pos) {
        rec.latitude_deg = Some(g.latitude.to_degrees());
        rec.longitude_deg = Some(g.longitude.to_degrees());
        rec.height_m = Some(g.height);
    }
    if let Some(Ok((e2, e3))) = epoch.truth_pos.map(|t| position_errors(pos, t)) {
        rec.error2d_m = Some(e2);
        rec.error3d_m = Some(e3);
    }
    rec.fallback = sol.fallback;
    rec.weights = Some(sol.weights.0);
    rec.biases = sol.biases;
    rec
}

fn solve(args: SolveArgs, file: &FileConfig) -> Result<()> {
    let data = load_data(&args.test)?;
    let models = load_models(&args.models)?;
    models.for_method(args.method)?;
    let cfg = file.eval();
    cfg.solver.validate()?;
    let records: Vec<SolutionRecord> = data
        .par_iter()
        .enumerate()
        .map(|(i, e)| solve_one(args.method, &models, i, e, &cfg))
        .collect();
    let failed = records.iter().filter(|r| !r.converged).count();
    if failed > 0 {
        warn!(
            "{failed} of {} epochs did not produce a converged solution",
            records.len()
        );
    }
    let path = args.out.as_deref();
    let err = |e: io::Error| match path {
        Some(p) => io_error(p, e),
        None => CliError::Data(format!("cannot write to stdout: {e}")),
    };
    let mut out = output(path)?;
    for r in &records {
        serde_json::to_writer(&mut out, r).map_err(|e| err(e.into()))?;
        out.write_all(b"\n").map_err(err)?;
    }
    out.flush().map_err(err)
}

fn default_methods(models: &ModelSet) -> Vec<Method> {
    Method::ALL
        .into_iter()
        .filter(|&m| models.for_method(m).is_ok())
        .collect()
}

fn evaluate_cmd(args: EvaluateArgs, file: &FileConfig) -> Result<()> {
    let data = load_data(&args.test)?;
    let models = load_models(&args.models)?;
    let methods = if args.methods.is_empty() {
        default_methods(&models)
    } else {
        args.methods
    };
    let report = evaluate(&methods, &models, &data, &file.eval())?;
    for m in &report.methods {
        info!(
            "{:>13}: mean 2D {:.3} m, mean 3D {:.3} m ({} used, {} skipped, {} fallbacks)",
            m.method.name(),
            m.mean_2d,
            m.mean_3d,
            m.epochs_used,
            m.epochs_skipped,
            m.fallbacks
        );
    }
    match &args.out {
        Some(p) => export_report(&report, p, args.format)?,
        None => write_report(io::stdout().lock(), &report, args.format)
            .map_err(|e| CliError::Data(format!("cannot write to stdout: {e}")))?,
    }
    if let Some(p) = &args.series {
        export_series(&report, p)?;
    }
    Ok(())
}

fn inspect(args: InspectArgs, file: &FileConfig) -> Result<()> {
    let data = load_data(&args.test)?;
    let model = load_model(&args.checkpoint)?;
    let epoch = data.get(args.epoch).ok_or_else(|| {
        CliError::Usage(format!(
            "--epoch {} is out of range ({} epochs in {})",
            args.epoch,
            data.len(),
            args.test.display()
        ))
    })?;
    let solver = file.solver();
    let prepared = prepare_epoch(epoch, &solver)?;
    let ns = network_solve(&model, epoch, &prepared, &solver)?;
    let n = epoch.len();
    let biases = ns.predictions.biases.clone();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| ns.weights.0[b].total_cmp(&ns.weights.0[a]));

    let text =
        |v: Option<f64>, prec: usize| v.map_or_else(|| "-".to_string(), |x| format!("{x:.prec$}"));
    let mut out = io::stdout().lock();
    let mut table = String::new();
    table.push_str(&format!(
        "epoch {} (t = {}) with {} network, {} satellites\n",
        args.epoch, epoch.t, model.architecture, n
    ));
    table.push_str(&format!(
        "{:<5} {:>7} {:>6} {:>10} {:>5} {:>9} {:>9} {:>12}\n",
        "sat", "el_deg", "cn0", "resid_m", "los", "bias_m", "pred_m", "weight"
    ));
    for &k in &order {
        let o = &epoch.observations[k];
        let los = match o.los_truth {
            Some(true) => "yes",
            Some(false) => "no",
            None => "-",
        };
        table.push_str(&format!(
            "{:<5} {:>7.2} {:>6.1} {:>10.3} {:>5} {:>9} {:>9} {:>12.6e}\n",
            o.sat_id,
            o.elevation.to_degrees(),
            o.cn0,
            prepared.residuals[k],
            los,
            text(o.bias_truth, 3),
            text(biases.as_ref().map(|b| b[k]), 3),
            ns.weights.0[k],
        ));
    }
    if let Some(truth) = epoch.truth_pos {
        let (e2, e3) = position_errors(ns.result.state.position(), truth)?;
        let (w2, w3) = position_errors(prepared.ew_result.state.position(), truth)?;
        table.push_str(&format!(
            "error 2D {e2:.3} m, 3D {e3:.3} m (equal weight: 2D {w2:.3} m, 3D {w3:.3} m)\n"
        ));
    }
    out.write_all(table.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| CliError::Data(format!("cannot write to stdout: {e}")))
}
