use std::fs;
use std::path::{Path, PathBuf};

use feddw_core::feddw::{theorem1_bound, RegularizerConfig};
use feddw_core::fl::{CommMeter, RoundRecord, RunConfig, Simulation, Strategy};
use feddw_core::nn::write_model;
use feddw_core::Dataset64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::emit_config;
use crate::error::{HarnessError, Result};
use crate::heatmap::heatmap_export;

pub const SCHEMA_VERSION: u32 = 1;
pub const METRICS_FILE: &str = "metrics.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const CONFIG_FILE: &str = "config.toml";
pub const SL_FILE: &str = "global_sl.json";
pub const MODEL_STEM: &str = "model";

pub const CSV_HEADER: [&str; 8] = [
    "t",
    "accuracy",
    "loss",
    "cla_loss",
    "reg_loss",
    "sl_cr_distance",
    "participants",
    "millis",
];

/// One parsed row of `metrics.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub t: usize,
    pub accuracy: f64,
    pub loss: f64,
    pub cla_loss: f64,
    pub reg_loss: f64,
    pub sl_cr_distance: f64,
    /// Client ids joined by `;`.
    pub participants: String,
    pub millis: u64,
}

impl From<&RoundRecord> for MetricsRow {
    fn from(r: &RoundRecord) -> Self {
        let ids: Vec<String> = r.participants.iter().map(usize::to_string).collect();
        Self {
            t: r.round,
            accuracy: r.accuracy,
            loss: r.loss,
            cla_loss: r.cla_loss,
            reg_loss: r.reg_loss,
            sl_cr_distance: r.sl_cr_distance,
            participants: ids.join(";"),
            millis: r.millis,
        }
    }
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRow>> {
    let file = fs::File::open(path).map_err(|e| HarnessError::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    Ok(reader.deserialize().collect::<Result<_, _>>()?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinalMetrics {
    pub accuracy: f64,
    pub loss: f64,
    pub train_loss: f64,
    pub reg_loss: f64,
    pub sl_cr_distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommSummary {
    pub param_count: usize,
    pub classes: usize,
    pub upload_bytes_per_client_round: u64,
    pub download_bytes_per_client_round: u64,
    pub upload_bytes_total: u64,
    pub download_bytes_total: u64,
}

impl From<&CommMeter> for CommSummary {
    fn from(m: &CommMeter) -> Self {
        Self {
            param_count: m.param_count,
            classes: m.classes,
            upload_bytes_per_client_round: m.upload_per_client(),
            download_bytes_per_client_round: m.download_per_client(),
            upload_bytes_total: m.upload_bytes,
            download_bytes_total: m.download_bytes,
        }
    }
}

/// Contents of `summary.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema_version: u32,
    pub config: RunConfig,
    pub rounds_completed: usize,
    pub final_metrics: Option<FinalMetrics>,
    /// Largest per-round mean regularizer value and its ceiling `2/|C|`.
    pub max_reg_loss: f64,
    pub reg_bound: f64,
    pub failed_clients: usize,
    pub comm: CommSummary,
}

/// Where a run wrote its artifacts, plus its summary.
#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub dir: PathBuf,
    pub summary: RunSummary,
    pub records: Vec<RoundRecord>,
}

/// First 12 hex digits of the SHA-256 of the canonical config text.
pub fn config_hash(config: &RunConfig) -> Result<String> {
    let digest = Sha256::digest(emit_config(config)?.as_bytes());
    Ok(digest.iter().take(6).map(|b| format!("{b:02x}")).collect())
}

pub fn run_dir_name(config: &RunConfig) -> Result<String> {
    Ok(format!("{}-s{}", config_hash(config)?, config.seed))
}

fn prepare_dir(dir: &Path, force: bool) -> Result<()> {
    let occupied = match fs::read_dir(dir) {
        Ok(mut entries) => entries.next().is_some(),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => false,
        Err(e) => return Err(HarnessError::io(dir, e)),
    };
    if occupied {
        if !force {
            return Err(HarnessError::OutputExists(dir.to_path_buf()));
        }
        fs::remove_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

struct MetricsWriter {
    path: PathBuf,
    inner: csv::Writer<fs::File>,
}

impl MetricsWriter {
    fn create(path: PathBuf) -> Result<Self> {
        let file = fs::File::create(&path).map_err(|e| HarnessError::io(&path, e))?;
        let mut inner = csv::WriterBuilder::new().has_headers(false).from_writer(file);
        inner.write_record(CSV_HEADER)?;
        inner.flush().map_err(|e| HarnessError::io(&path, e))?;
        Ok(Self { path, inner })
    }

    /// Appends one row and flushes it, so an interrupted run leaves whole rows.
    fn append(&mut self, record: &RoundRecord) -> Result<()> {
        self.inner.serialize(MetricsRow::from(record))?;
        self.inner.flush().map_err(|e| HarnessError::io(&self.path, e))
    }
}

fn summarize(config: &RunConfig, records: &[RoundRecord], comm: &CommMeter, classes: usize) -> RunSummary {
    RunSummary {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        rounds_completed: records.len(),
        final_metrics: records.last().map(|r| FinalMetrics {
            accuracy: r.accuracy,
            loss: r.loss,
            train_loss: r.train_loss,
            reg_loss: r.reg_loss,
            sl_cr_distance: r.sl_cr_distance,
        }),
        max_reg_loss: records.iter().map(|r| r.reg_loss).fold(0.0, f64::max),
        reg_bound: theorem1_bound(classes).unwrap_or(f64::NAN),
        failed_clients: records.iter().map(|r| r.failed.len()).sum(),
        comm: CommSummary::from(comm),
    }
}

/// Runs `config` against already materialized data and writes the artifacts
/// into `<out_root>/<config-hash>-s<seed>/`.
pub fn run_with_data(
    config: &RunConfig,
    train: &Dataset64,
    test: &Dataset64,
    out_root: &Path,
    force: bool,
) -> Result<RunArtifacts> {
    let dir = out_root.join(run_dir_name(config)?);
    prepare_dir(&dir, force)?;
    let config_path = dir.join(CONFIG_FILE);
    fs::write(&config_path, emit_config(config)?).map_err(|e| HarnessError::io(&config_path, e))?;

    let classes = train.class_count();
    let mut metrics = MetricsWriter::create(dir.join(METRICS_FILE))?;
    let mut sim = Simulation::new(config, train, test)?;
    while !sim.is_finished() {
        match sim.step() {
            Ok(record) => {
                log::info!(
                    "round {}/{}: accuracy {:.4}",
                    record.round,
                    config.rounds,
                    record.accuracy
                );
                let record = record.clone();
                metrics.append(&record)?;
            }
            Err(e) => {
                let summary = summarize(config, sim.records(), sim.comm(), classes);
                write_json(&dir.join(SUMMARY_FILE), &summary)?;
                return Err(e.into());
            }
        }
    }
    let outcome = sim.finish();
    let summary = summarize(config, &outcome.records, &outcome.comm, classes);
    write_json(&dir.join(SUMMARY_FILE), &summary)?;
    write_json(&dir.join(SL_FILE), &outcome.global_sl.to_json())?;
    write_model(&outcome.model, &dir, MODEL_STEM)?;
    heatmap_export(&dir, &dir)?;
    Ok(RunArtifacts {
        dir,
        summary,
        records: outcome.records,
    })
}

/// Materializes the dataset of `config` and runs it.
pub fn run_experiment(config: &RunConfig, out_root: &Path, force: bool) -> Result<RunArtifacts> {
    let (train, test) = config.dataset.materialize::<f64>(config.seed)?;
    run_with_data(config, &train, &test, out_root, force)
}

/// Entry of `sweep.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub mu: f64,
    pub dir: PathBuf,
    pub final_accuracy: Option<f64>,
}

/// One FedDW run per μ, each in its own directory under `out_root`; the data
/// are materialized once and shared.
pub fn sweep(base: &RunConfig, mus: &[f64], out_root: &Path, force: bool) -> Result<Vec<SweepPoint>> {
    let (train, test) = base.dataset.materialize::<f64>(base.seed)?;
    let mut points = Vec::with_capacity(mus.len());
    for &mu in mus {
        let mut config = base.clone();
        let mut reg = match &base.strategy {
            Strategy::FedDw(reg) => reg.clone(),
            _ => RegularizerConfig::exact(mu),
        };
        reg.mu = mu;
        config.strategy = Strategy::FedDw(reg);
        config.model.classifier_bias = false;
        let run = run_with_data(&config, &train, &test, out_root, force)?;
        points.push(SweepPoint {
            mu,
            dir: run.dir,
            final_accuracy: run.summary.final_metrics.map(|m| m.accuracy),
        });
    }
    fs::create_dir_all(out_root).map_err(|e| HarnessError::io(out_root, e))?;
    write_json(&out_root.join("sweep.json"), &points)?;
    Ok(points)
}

pub fn read_summary(dir: &Path) -> Result<RunSummary> {
    let path = dir.join(SUMMARY_FILE);
    let text = fs::read_to_string(&path).map_err(|e| HarnessError::io(&path, e))?;
    Ok(serde_json::from_str(&text)?)
}
