use std::fs;
use std::path::{Path, PathBuf};

use feddw_core::feddw::{softmax_cr, SlMatrix, SlMatrixJson};
use feddw_core::nn::read_model;
use feddw_core::numerics::{frobenius_sq_dist, Matrix};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::experiment::{MODEL_STEM, SL_FILE};

pub const HEATMAP_FILE: &str = "heatmap.json";
pub const SL_GRID_FILE: &str = "sl_grid.csv";
pub const CR_GRID_FILE: &str = "cr_grid.csv";

/// Global SL matrix and `softmax(ω ωᵀ)` of the final model, side by side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatmapExport {
    pub classes: usize,
    pub sl: Vec<Vec<f64>>,
    pub cr_softmax: Vec<Vec<f64>>,
    /// `‖SL − softmax(CR)‖_F`.
    pub distance: f64,
}

fn rows(m: &Matrix<f64>) -> Vec<Vec<f64>> {
    m.iter_rows().map(<[f64]>::to_vec).collect()
}

fn write_grid(path: &Path, grid: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    for row in grid {
        w.write_record(row.iter().map(f64::to_string))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

fn require(path: PathBuf) -> Result<PathBuf> {
    if path.exists() {
        Ok(path)
    } else {
        Err(HarnessError::NotFound(path))
    }
}

/// Reads a finished run's SL matrix and model from `run_dir` and writes
/// `heatmap.json` plus one CSV grid per matrix into `out_dir`.
pub fn heatmap_export(run_dir: &Path, out_dir: &Path) -> Result<HeatmapExport> {
    let sl_path = require(run_dir.join(SL_FILE))?;
    require(run_dir.join(format!("{MODEL_STEM}.bin")))?;
    let text = fs::read_to_string(&sl_path).map_err(|e| HarnessError::io(&sl_path, e))?;
    let sl: SlMatrix<f64> = SlMatrix::from_json(&serde_json::from_str::<SlMatrixJson>(&text)?)?;
    let model = read_model::<f64>(run_dir, MODEL_STEM)?;
    let cr = softmax_cr(model.classifier_weights())?;
    let export = HeatmapExport {
        classes: sl.classes(),
        sl: rows(sl.omega()),
        cr_softmax: rows(&cr),
        distance: frobenius_sq_dist(sl.omega(), &cr)?.sqrt(),
    };
    fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;
    let json_path = out_dir.join(HEATMAP_FILE);
    let mut text = serde_json::to_string_pretty(&export)?;
    text.push('\n');
    fs::write(&json_path, text).map_err(|e| HarnessError::io(&json_path, e))?;
    write_grid(&out_dir.join(SL_GRID_FILE), &export.sl)?;
    write_grid(&out_dir.join(CR_GRID_FILE), &export.cr_softmax)?;
    Ok(export)
}

/// Reads back a `heatmap.json` written by [`heatmap_export`].
pub fn heatmap_import(path: &Path) -> Result<HeatmapExport> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}
