//! Training and evaluation harness.
//!
//! Every data epoch is first solved with equal weights. That solution
//! provides the residual feature and the warm start for the network-driven
//! solve, which keeps the geometry matrix stable while gradients are taken.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use log::{debug, info};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{gogps_weight, rtklib_weight, Cn0WeightParams, ElevationWeightParams};
use crate::error::{Error, Result};
use crate::geodesy::{ecef_to_enu, EcefPosition};
use crate::grad::{bias_gradient, gradient_bundle};
use crate::model::{Epoch, PositionState, SolveResult, WeightVector};
use crate::nn::{
    adam_step, backward, forward, AdamState, Architecture, FeatureVector, ForwardCache, Gradients,
    MlpModel, OutputGradients, Predictions,
};
use crate::wls::{solve_equal_weight, solve_wls, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TrainMode {
    TdlB,
    TdlW,
    TdlBw,
}

impl TrainMode {
    pub fn architecture(self) -> Architecture {
        match self {
            TrainMode::TdlB => Architecture::BiasNet,
            TrainMode::TdlW => Architecture::WeightNet,
            TrainMode::TdlBw => Architecture::JointNet,
        }
    }

    /// 500 epochs for the single-head networks, 100 for the joint one.
    pub fn default_epochs(self) -> usize {
        match self {
            TrainMode::TdlBw => 100,
            _ => 500,
        }
    }

    pub fn method(self) -> Method {
        match self {
            TrainMode::TdlB => Method::TdlB,
            TrainMode::TdlW => Method::TdlW,
            TrainMode::TdlBw => Method::TdlBw,
        }
    }

    pub fn from_architecture(arch: Architecture) -> Self {
        match arch {
            Architecture::BiasNet => TrainMode::TdlB,
            Architecture::WeightNet => TrainMode::TdlW,
            Architecture::JointNet => TrainMode::TdlBw,
        }
    }
}

impl fmt::Display for TrainMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.method().fmt(f)
    }
}

impl FromStr for TrainMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "tdl-b" => Ok(TrainMode::TdlB),
            "tdl-w" => Ok(TrainMode::TdlW),
            "tdl-bw" => Ok(TrainMode::TdlBw),
            other => Err(format!("unknown mode {other:?} (tdl-b, tdl-w, tdl-bw)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    EqualWeight,
    RtklibWeight,
    GogpsWeight,
    TdlB,
    TdlW,
    TdlBw,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::EqualWeight,
        Method::RtklibWeight,
        Method::GogpsWeight,
        Method::TdlB,
        Method::TdlW,
        Method::TdlBw,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::EqualWeight => "equal-weight",
            Method::RtklibWeight => "rtklib",
            Method::GogpsWeight => "gogps",
            Method::TdlB => "tdl-b",
            Method::TdlW => "tdl-w",
            Method::TdlBw => "tdl-bw",
        }
    }

    pub fn architecture(self) -> Option<Architecture> {
        match self {
            Method::TdlB => Some(Architecture::BiasNet),
            Method::TdlW => Some(Architecture::WeightNet),
            Method::TdlBw => Some(Architecture::JointNet),
            _ => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                format!("unknown method {s:?} (equal-weight, rtklib, gogps, tdl-b, tdl-w, tdl-bw)")
            })
    }
}

/// Output of the equal-weight pass over one epoch.
#[derive(Debug, Clone)]
pub struct PreparedEpoch {
    pub features: Vec<FeatureVector>,
    pub residuals: Vec<f64>,
    pub warm_start: PositionState,
    pub ew_result: SolveResult,
}

pub fn prepare_epoch(epoch: &Epoch, cfg: &SolverConfig) -> Result<PreparedEpoch> {
    let ew_result = solve_equal_weight(epoch, cfg)?;
    if !ew_result.converged {
        return Err(Error::NotConverged);
    }
    let features = epoch
        .observations
        .iter()
        .zip(&ew_result.residuals)
        .map(|(o, &r)| crate::nn::featurize(o, r))
        .collect();
    Ok(PreparedEpoch {
        features,
        residuals: ew_result.residuals.clone(),
        warm_start: ew_result.state,
        ew_result,
    })
}

/// Network forward pass followed by the WLS solve it drives.
#[derive(Debug, Clone)]
pub struct NetworkSolve {
    pub result: SolveResult,
    pub weights: WeightVector,
    pub predictions: Predictions,
    pub cache: ForwardCache,
}

pub fn network_solve(
    model: &MlpModel,
    epoch: &Epoch,
    prepared: &PreparedEpoch,
    solver: &SolverConfig,
) -> Result<NetworkSolve> {
    let features: Vec<FeatureVector> = epoch
        .observations
        .iter()
        .zip(&prepared.residuals)
        .map(|(o, &r)| model.featurize(o, r))
        .collect();
    let (predictions, cache) = forward(model, &features)?;
    let weights = match &predictions.weights {
        Some(w) => WeightVector(w.clone()),
        None => WeightVector::uniform(epoch.len()),
    };
    let result = solve_wls(
        epoch,
        &weights,
        predictions.biases.as_deref(),
        prepared.warm_start,
        solver,
    )?;
    Ok(NetworkSolve {
        result,
        weights,
        predictions,
        cache,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub mode: TrainMode,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Parameter initialization seed.
    pub seed: u64,
    pub solver: SolverConfig,
    /// Accumulate over the whole dataset and take one step per training epoch.
    pub full_batch: bool,
    /// Log every n training epochs (0 disables).
    pub log_every: usize,
}

impl TrainConfig {
    pub fn new(mode: TrainMode) -> Self {
        Self {
            mode,
            epochs: mode.default_epochs(),
            learning_rate: 0.001,
            seed: 0,
            solver: SolverConfig::default(),
            full_batch: false,
            log_every: 10,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::ConfigInvalid(
                "training needs at least one epoch".into(),
            ));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::ConfigInvalid(
                "learning rate must be finite and non-negative".into(),
            ));
        }
        self.solver.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingLogEntry {
    /// 1-based training epoch.
    pub epoch: usize,
    /// Mean of the half squared 3D error over the data epochs that solved.
    pub mean_loss: f64,
    pub epochs_used: usize,
    pub epochs_skipped: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub entries: Vec<TrainingLogEntry>,
    /// Data epochs dropped before training (no truth or equal-weight failure).
    pub unusable_epochs: usize,
}

impl TrainingLog {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,mean_loss,epochs_used,epochs_skipped\n");
        for e in &self.entries {
            s.push_str(&format!(
                "{},{},{},{}\n",
                e.epoch, e.mean_loss, e.epochs_used, e.epochs_skipped
            ));
        }
        s
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

struct TrainSample<'a> {
    epoch: &'a Epoch,
    truth: EcefPosition,
    prepared: PreparedEpoch,
}

/// Loss and parameter gradient for one data epoch; `None` when the solve
/// fails or does not converge.
fn epoch_gradient(
    model: &MlpModel,
    sample: &TrainSample<'_>,
    solver: &SolverConfig,
) -> Option<(f64, Gradients)> {
    let ns = match network_solve(model, sample.epoch, &sample.prepared, solver) {
        Ok(ns) if ns.result.converged => ns,
        Ok(_) => return None,
        Err(e) => {
            debug!("t={}: solve failed: {e}", sample.epoch.t);
            return None;
        }
    };
    let bundle = gradient_bundle(
        sample.truth,
        &ns.result,
        &ns.weights,
        solver.condition_limit,
    )
    .ok()?;
    let arch = model.architecture;
    let upstream = OutputGradients {
        d_biases: arch
            .has_bias_head()
            .then(|| bias_gradient(&bundle.d_loss_d_z)),
        d_weights: arch.has_weight_head().then(|| bundle.d_loss_d_w.clone()),
    };
    let grads = backward(model, &ns.cache, &upstream).ok()?;
    let finite = grads
        .layers
        .iter()
        .all(|l| l.weights.iter().chain(&l.biases).all(|v| v.is_finite()));
    (finite && bundle.loss.is_finite()).then_some((bundle.loss, grads))
}

pub fn train(data: &[Epoch], cfg: &TrainConfig) -> Result<(MlpModel, TrainingLog)> {
    let model = MlpModel::new(cfg.mode.architecture(), cfg.seed);
    train_from(model, data, cfg)
}

/// Trains an existing model in place of a fresh initialization.
pub fn train_from(
    mut model: MlpModel,
    data: &[Epoch],
    cfg: &TrainConfig,
) -> Result<(MlpModel, TrainingLog)> {
    cfg.validate()?;
    if model.architecture != cfg.mode.architecture() {
        return Err(Error::ConfigInvalid(format!(
            "mode {} needs a {} network, got {}",
            cfg.mode,
            cfg.mode.architecture(),
            model.architecture
        )));
    }
    let prepared: Vec<Option<PreparedEpoch>> = data
        .par_iter()
        .map(|e| match e.truth_pos {
            Some(_) => prepare_epoch(e, &cfg.solver).ok(),
            None => None,
        })
        .collect();
    let samples: Vec<TrainSample<'_>> = data
        .iter()
        .zip(prepared)
        .filter_map(|(epoch, p)| {
            Some(TrainSample {
                epoch,
                truth: epoch.truth_pos?,
                prepared: p?,
            })
        })
        .collect();
    if samples.is_empty() {
        return Err(Error::NoSolvableEpochs);
    }
    let mut log = TrainingLog {
        entries: Vec::with_capacity(cfg.epochs),
        unusable_epochs: data.len() - samples.len(),
    };
    let mut adam = AdamState::new(&model, cfg.learning_rate);

    for ep in 1..=cfg.epochs {
        let mut loss_sum = 0.0;
        let mut used = 0;
        let mut batch = cfg.full_batch.then(|| Gradients::zeros_like(&model));
        for sample in &samples {
            let Some((loss, grads)) = epoch_gradient(&model, sample, &cfg.solver) else {
                continue;
            };
            loss_sum += loss;
            used += 1;
            match batch.as_mut() {
                Some(acc) => acc.accumulate(&grads),
                None => adam_step(&mut model, &grads, &mut adam)?,
            }
        }
        if let Some(mut acc) = batch {
            if used > 0 {
                acc.scale(1.0 / used as f64);
                adam_step(&mut model, &acc, &mut adam)?;
            }
        }
        let mean_loss = if used > 0 {
            loss_sum / used as f64
        } else {
            f64::NAN
        };
        if cfg.log_every > 0 && (ep == 1 || ep % cfg.log_every == 0 || ep == cfg.epochs) {
            info!(
                "{} epoch {ep}/{}: mean loss {mean_loss:.4} m^2 over {used} epochs",
                cfg.mode, cfg.epochs
            );
        }
        log.entries.push(TrainingLogEntry {
            epoch: ep,
            mean_loss,
            epochs_used: used,
            epochs_skipped: samples.len() - used,
        });
    }
    Ok((model, log))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub solver: SolverConfig,
    /// Satellites below this elevation get zero weight in the classical
    /// weighting baselines.
    pub elevation_mask: f64,
    pub rtklib: ElevationWeightParams,
    pub gogps: Cn0WeightParams,
    /// Re-solve TDL-BW with bias corrections only when too few satellites
    /// keep a usable weight.
    pub bw_fallback: bool,
    pub fallback_weight_threshold: f64,
    pub fallback_min_satellites: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            elevation_mask: 5f64.to_radians(),
            rtklib: ElevationWeightParams::default(),
            gogps: Cn0WeightParams::default(),
            bw_fallback: true,
            fallback_weight_threshold: 1e-6,
            fallback_min_satellites: 4,
        }
    }
}

/// Trained networks available to evaluation, one per architecture.
#[derive(Debug, Clone, Default)]
pub struct ModelSet {
    pub bias: Option<MlpModel>,
    pub weight: Option<MlpModel>,
    pub joint: Option<MlpModel>,
}

impl ModelSet {
    pub fn insert(&mut self, model: MlpModel) {
        match model.architecture {
            Architecture::BiasNet => self.bias = Some(model),
            Architecture::WeightNet => self.weight = Some(model),
            Architecture::JointNet => self.joint = Some(model),
        }
    }

    pub fn get(&self, arch: Architecture) -> Option<&MlpModel> {
        match arch {
            Architecture::BiasNet => self.bias.as_ref(),
            Architecture::WeightNet => self.weight.as_ref(),
            Architecture::JointNet => self.joint.as_ref(),
        }
    }

    pub fn for_method(&self, method: Method) -> Result<Option<&MlpModel>> {
        match method.architecture() {
            None => Ok(None),
            Some(arch) => self
                .get(arch)
                .map(Some)
                .ok_or_else(|| Error::MissingCheckpoint {
                    method: method.name().to_string(),
                    architecture: arch.tag().to_string(),
                }),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MethodSolution {
    pub result: SolveResult,
    pub weights: WeightVector,
    pub biases: Option<Vec<f64>>,
    /// TDL-BW fell back to bias-only corrections.
    pub fallback: bool,
}

pub fn baseline_weights(method: Method, epoch: &Epoch, cfg: &EvalConfig) -> Result<WeightVector> {
    epoch
        .observations
        .iter()
        .map(|o| {
            if o.elevation < cfg.elevation_mask || o.elevation <= 0.0 {
                return Ok(0.0);
            }
            match method {
                Method::RtklibWeight => rtklib_weight(o.elevation, &cfg.rtklib),
                Method::GogpsWeight => gogps_weight(o.cn0, o.elevation, &cfg.gogps),
                _ => Ok(1.0),
            }
        })
        .collect::<Result<Vec<_>>>()
        .map(WeightVector)
}

pub fn solve_method(
    method: Method,
    models: &ModelSet,
    epoch: &Epoch,
    prepared: &PreparedEpoch,
    cfg: &EvalConfig,
) -> Result<MethodSolution> {
    match method {
        Method::EqualWeight => Ok(MethodSolution {
            result: prepared.ew_result.clone(),
            weights: WeightVector::uniform(epoch.len()),
            biases: None,
            fallback: false,
        }),
        Method::RtklibWeight | Method::GogpsWeight => {
            let weights = baseline_weights(method, epoch, cfg)?;
            let result = solve_wls(epoch, &weights, None, prepared.warm_start, &cfg.solver)?;
            Ok(MethodSolution {
                result,
                weights,
                biases: None,
                fallback: false,
            })
        }
        Method::TdlB | Method::TdlW | Method::TdlBw => {
            let model = models
                .for_method(method)?
                .expect("learned methods carry a model");
            if method == Method::TdlBw && cfg.bw_fallback {
                let features: Vec<FeatureVector> = epoch
                    .observations
                    .iter()
                    .zip(&prepared.residuals)
                    .map(|(o, &r)| model.featurize(o, r))
                    .collect();
                let (pred, _) = forward(model, &features)?;
                let weights = pred.weights.clone().unwrap_or_default();
                let usable = weights
                    .iter()
                    .filter(|&&w| w > cfg.fallback_weight_threshold)
                    .count();
                if usable < cfg.fallback_min_satellites {
                    let biases = pred.biases.unwrap_or_default();
                    let result = solve_wls(
                        epoch,
                        &WeightVector::uniform(epoch.len()),
                        Some(&biases),
                        prepared.warm_start,
                        &cfg.solver,
                    )?;
                    return Ok(MethodSolution {
                        result,
                        weights: WeightVector::uniform(epoch.len()),
                        biases: Some(biases),
                        fallback: true,
                    });
                }
            }
            let ns = network_solve(model, epoch, prepared, &cfg.solver)?;
            Ok(MethodSolution {
                result: ns.result,
                weights: ns.weights,
                biases: ns.predictions.biases,
                fallback: false,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpochStatus {
    Solved,
    NotConverged,
    NoTruth,
    /// Equal-weight preparation or the method's own solve failed.
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochError {
    pub index: usize,
    pub t: f64,
    pub status: EpochStatus,
    pub error_2d: Option<f64>,
    pub error_3d: Option<f64>,
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: Method,
    pub mean_2d: f64,
    pub mean_3d: f64,
    pub std_2d: f64,
    pub std_3d: f64,
    pub epochs_used: usize,
    pub epochs_skipped: usize,
    pub non_converged: usize,
    pub fallbacks: usize,
    pub series: Vec<EpochError>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub total_epochs: usize,
    pub methods: Vec<MethodReport>,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Horizontal and 3D error of `solution` in the local frame at `truth`.
pub fn position_errors(solution: EcefPosition, truth: EcefPosition) -> Result<(f64, f64)> {
    let enu = ecef_to_enu(solution, truth)?;
    Ok((enu.horizontal_norm(), enu.norm()))
}

fn evaluate_epoch(
    method: Method,
    models: &ModelSet,
    index: usize,
    epoch: &Epoch,
    prepared: &Result<PreparedEpoch>,
    cfg: &EvalConfig,
) -> EpochError {
    let mut row = EpochError {
        index,
        t: epoch.t,
        status: EpochStatus::Failed,
        error_2d: None,
        error_3d: None,
        fallback: false,
    };
    let Some(truth) = epoch.truth_pos else {
        row.status = EpochStatus::NoTruth;
        return row;
    };
    let prepared = match prepared {
        Ok(p) => p,
        Err(Error::NotConverged) => {
            row.status = EpochStatus::NotConverged;
            return row;
        }
        Err(_) => return row,
    };
    match solve_method(method, models, epoch, prepared, cfg) {
        Ok(sol) => {
            row.fallback = sol.fallback;
            if !sol.result.converged {
                row.status = EpochStatus::NotConverged;
            } else if let Ok((e2, e3)) = position_errors(sol.result.state.position(), truth) {
                row.status = EpochStatus::Solved;
                row.error_2d = Some(e2);
                row.error_3d = Some(e3);
            }
        }
        Err(e) => debug!("{method} epoch {index}: {e}"),
    }
    row
}

/// Solves every epoch with every requested method. Epochs are processed in
/// parallel on the current rayon pool; aggregation order is fixed.
pub fn evaluate(
    methods: &[Method],
    models: &ModelSet,
    data: &[Epoch],
    cfg: &EvalConfig,
) -> Result<EvalReport> {
    cfg.solver.validate()?;
    for &m in methods {
        models.for_method(m)?;
    }
    let prepared: Vec<Result<PreparedEpoch>> = data
        .par_iter()
        .map(|e| prepare_epoch(e, &cfg.solver))
        .collect();

    let mut reports = Vec::with_capacity(methods.len());
    for &method in methods {
        let series: Vec<EpochError> = data
            .par_iter()
            .zip(prepared.par_iter())
            .enumerate()
            .map(|(i, (e, p))| evaluate_epoch(method, models, i, e, p, cfg))
            .collect();
        let e2: Vec<f64> = series.iter().filter_map(|r| r.error_2d).collect();
        let e3: Vec<f64> = series.iter().filter_map(|r| r.error_3d).collect();
        let (mean_2d, std_2d) = mean_std(&e2);
        let (mean_3d, std_3d) = mean_std(&e3);
        reports.push(MethodReport {
            method,
            mean_2d,
            mean_3d,
            std_2d,
            std_3d,
            epochs_used: e3.len(),
            epochs_skipped: series.len() - e3.len(),
            non_converged: series
                .iter()
                .filter(|r| r.status == EpochStatus::NotConverged)
                .count(),
            fallbacks: series.iter().filter(|r| r.fallback).count(),
            series,
        });
    }
    Ok(EvalReport {
        total_epochs: data.len(),
        methods: reports,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Jsonl,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "jsonl" => Ok(ReportFormat::Jsonl),
            other => Err(format!("unknown format {other:?} (csv, jsonl)")),
        }
    }
}

pub const REPORT_COLUMNS: [&str; 8] = [
    "method",
    "mean2d_m",
    "mean3d_m",
    "std3d_m",
    "epochs_used",
    "epochs_skipped",
    "non_converged",
    "fallbacks",
];

#[derive(Serialize)]
struct ReportRow<'a> {
    method: &'a str,
    mean2d_m: f64,
    mean3d_m: f64,
    std3d_m: f64,
    epochs_used: usize,
    epochs_skipped: usize,
    non_converged: usize,
    fallbacks: usize,
}

pub fn write_report<W: Write>(
    mut out: W,
    report: &EvalReport,
    format: ReportFormat,
) -> std::io::Result<()> {
    if format == ReportFormat::Csv {
        writeln!(out, "{}", REPORT_COLUMNS.join(","))?;
    }
    for m in &report.methods {
        match format {
            ReportFormat::Csv => writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                m.method,
                m.mean_2d,
                m.mean_3d,
                m.std_3d,
                m.epochs_used,
                m.epochs_skipped,
                m.non_converged,
                m.fallbacks
            )?,
            ReportFormat::Jsonl => {
                let row = ReportRow {
                    method: m.method.name(),
                    mean2d_m: m.mean_2d,
                    mean3d_m: m.mean_3d,
                    std3d_m: m.std_3d,
                    epochs_used: m.epochs_used,
                    epochs_skipped: m.epochs_skipped,
                    non_converged: m.non_converged,
                    fallbacks: m.fallbacks,
                };
                serde_json::to_writer(&mut out, &row)?;
                out.write_all(b"\n")?;
            }
        }
    }
    out.flush()
}

pub fn export_report(
    report: &EvalReport,
    path: impl AsRef<Path>,
    format: ReportFormat,
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_report(BufWriter::new(file), report, format).map_err(|e| Error::io(path, e))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Per-epoch errors of every method as CSV.
pub fn export_series(report: &EvalReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("method,index,t,status,error2d_m,error3d_m,fallback\n");
    for m in &report.methods {
        for r in &m.series {
            let status = match r.status {
                EpochStatus::Solved => "solved",
                EpochStatus::NotConverged => "not_converged",
                EpochStatus::NoTruth => "no_truth",
                EpochStatus::Failed => "failed",
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                m.method,
                r.index,
                r.t,
                status,
                opt(r.error_2d),
                opt(r.error_3d),
                r.fallback
            ));
        }
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
