//! End-to-end runs: data, model, training, evaluation and artifacts.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::datagen::{
    gen_ortho_dataset, gen_poisson_dataset, gen_wave1, gen_wave2, gen_wave_operator_dataset, split_dataset,
    waves::curve_dataset, Dataset, FemMesh,
};
use crate::error::{Error, Result};
use crate::eval::{histogram, l2_error, summarize_errors, ErrorSummary, Histogram};
use crate::model::Model;
use crate::optim::{train, EpochRecord, OperatorProblem, RegressionProblem, TrainReport};
use crate::persist::{load_dataset, save_checkpoint, Checkpoint};
use crate::report::{self, FieldRow};

pub const CHECKPOINT_FILE: &str = "checkpoint.dokn";
pub const DATASET_FILE: &str = "dataset.dokn";
pub const CONFIG_FILE: &str = "config.toml";

/// Generates the configured dataset from scratch.
pub fn generate_dataset(cfg: &ExperimentConfig) -> Result<Dataset> {
    let d = &cfg.data;
    let ds = match cfg.kind() {
        ExperimentKind::Wave1 => {
            let (xs, ys) = gen_wave1(d.samples)?;
            curve_dataset(&xs, &ys)?
        }
        ExperimentKind::Wave2 => {
            let (xs, ys) = gen_wave2(d.samples)?;
            curve_dataset(&xs, &ys)?
        }
        ExperimentKind::WaveOperator => gen_wave_operator_dataset(d.samples, d.points, d.seed)?,
        ExperimentKind::Ortho => gen_ortho_dataset(d.samples, &FemMesh::square(d.mesh)?, d.seed)?,
        ExperimentKind::Poisson => gen_poisson_dataset(d.samples, &FemMesh::square(d.mesh)?, d.final_time, d.seed)?,
    };
    finish_dataset(cfg, ds)
}

/// Applies the configured split ratio and normalization choice.
fn finish_dataset(cfg: &ExperimentConfig, ds: Dataset) -> Result<Dataset> {
    // loaded files keep the split they were saved with
    let keep_split = ds.split.is_some() && (cfg.data.dataset.is_some() || !cfg.kind().is_operator());
    let mut ds = if keep_split { ds } else { split_dataset(ds, cfg.data.train_fraction, cfg.data.seed)? };
    if cfg.data.normalize {
        if ds.branch_norm.is_none() || ds.coord_norm.is_none() {
            ds.fit_normalizers();
        }
    } else {
        ds.clear_normalizers();
    }
    Ok(ds)
}

fn check_compatible(cfg: &ExperimentConfig, ds: &Dataset) -> Result<()> {
    let kind = cfg.kind();
    if ds.branch_inputs.cols() != kind.branch_dim() {
        return Err(Error::dims("dataset branch dimension", kind.branch_dim(), ds.branch_inputs.cols()));
    }
    if ds.coords.cols() != kind.coord_dim() {
        return Err(Error::dims("dataset coordinate dimension", kind.coord_dim(), ds.coords.cols()));
    }
    if ds.mode != kind.mode() {
        return Err(Error::Config(format!("dataset mode {:?} does not fit {kind:?}", ds.mode)));
    }
    Ok(())
}

/// Loads `data.dataset` if set, otherwise generates.
pub fn prepare_dataset(cfg: &ExperimentConfig) -> Result<Dataset> {
    let ds = match &cfg.data.dataset {
        Some(path) => finish_dataset(cfg, load_dataset(path)?)?,
        None => generate_dataset(cfg)?,
    };
    check_compatible(cfg, &ds)?;
    if ds.train_indices().is_empty() {
        return Err(Error::Empty("training split"));
    }
    Ok(ds)
}

/// Builds and trains the configured model on the training split.
pub fn train_model(cfg: &ExperimentConfig, ds: &Dataset) -> Result<(Checkpoint, TrainReport)> {
    let mut model = Model::build(cfg)?;
    let tc = cfg.train_config();
    let branch = ds.normalized_branch_inputs();
    let coords = ds.normalized_coords();
    let idx = ds.train_indices().to_vec();
    let report = match &mut model {
        Model::RbfKan(n) => train(&mut RegressionProblem::new(n, &branch, &ds.targets, idx)?, &tc)?,
        Model::Mlp(n) => train(&mut RegressionProblem::new(n, &branch, &ds.targets, idx)?, &tc)?,
        Model::DeepOKan(m) => train(&mut OperatorProblem::new(m, &branch, &coords, &ds.targets, idx)?, &tc)?,
        Model::DeepONet(m) => train(&mut OperatorProblem::new(m, &branch, &coords, &ds.targets, idx)?, &tc)?,
    };
    let ck = Checkpoint { model, branch_norm: ds.branch_norm.clone(), coord_norm: ds.coord_norm.clone() };
    Ok((ck, report))
}

/// A probed field for one test sample at one time index.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldProbe {
    pub sample: usize,
    pub time: usize,
    pub rows: Vec<FieldRow>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub sample_ids: Vec<usize>,
    pub errors: Vec<f64>,
    pub summary: ErrorSummary,
    pub histogram: Histogram,
    pub fields: Vec<FieldProbe>,
    /// Curve fits only: `(x, truth, prediction)`.
    pub curve: Vec<(f64, f64, f64)>,
}

/// Per-sample L2 errors over the test split, using the checkpoint's own input scaling.
pub fn evaluate(cfg: &ExperimentConfig, ds: &Dataset, ck: &Checkpoint) -> Result<Evaluation> {
    let branch = match &ck.branch_norm {
        Some(n) => n.apply_matrix(&ds.branch_inputs),
        None => ds.branch_inputs.clone(),
    };
    let coords = match &ck.coord_norm {
        Some(n) => n.apply_matrix(&ds.coords),
        None => ds.coords.clone(),
    };
    let ids = ds.test_indices().to_vec();
    if ids.is_empty() {
        return Err(Error::Empty("test split"));
    }
    let preds = ck.model.predict_samples(&branch, &coords, &ids)?;
    let errors =
        ids.iter().zip(preds.iter_rows()).map(|(&i, p)| l2_error(ds.target(i), p)).collect::<Result<Vec<_>>>()?;
    let summary = summarize_errors(&errors)?;
    let hist = histogram(&errors, cfg.output.histogram_bins)?;

    let mut fields = Vec::new();
    let mut curve = Vec::new();
    if cfg.kind().is_pde() {
        let steps = ds.steps();
        let times: Vec<usize> =
            if steps == 1 { vec![0] } else { cfg.output.probe_times.iter().copied().filter(|&t| t < steps).collect() };
        for &pos in cfg.output.probe_samples.iter().filter(|&&p| p < ids.len()) {
            let sample = ids[pos];
            let (truth, pred) = (ds.target(sample), preds.row(pos));
            for &time in &times {
                let rows = ds
                    .coords
                    .iter_rows()
                    .enumerate()
                    .map(|(p, xy)| FieldRow {
                        x: xy[0],
                        y: xy[1],
                        truth: truth[p * steps + time],
                        prediction: pred[p * steps + time],
                    })
                    .collect();
                fields.push(FieldProbe { sample, time, rows });
            }
        }
    } else if !cfg.kind().is_operator() {
        curve = ids
            .iter()
            .zip(preds.iter_rows())
            .map(|(&i, p)| (ds.branch_inputs[(i, 0)], ds.target(i)[0], p[0]))
            .collect();
    }
    Ok(Evaluation { sample_ids: ids, errors, summary, histogram: hist, fields, curve })
}

pub fn write_evaluation(dir: &Path, eval: &Evaluation) -> Result<()> {
    report::write_text(dir, report::ERRORS_CSV, &report::errors_csv(&eval.sample_ids, &eval.errors))?;
    report::write_text(dir, report::SUMMARY_CSV, &report::summary_csv(&eval.summary))?;
    report::write_text(dir, report::HISTOGRAM_CSV, &report::histogram_csv(&eval.histogram))?;
    for f in &eval.fields {
        report::write_text(dir, &report::field_csv_name(f.sample, f.time), &report::field_csv(&f.rows))?;
    }
    if !eval.curve.is_empty() {
        report::write_text(dir, report::CURVE_CSV, &report::curve_csv(&eval.curve))?;
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub param_count: usize,
    pub history: Vec<EpochRecord>,
    pub aborted: Option<String>,
    pub checkpoint: PathBuf,
    pub evaluation: Evaluation,
    pub wall_clock: Duration,
}

impl RunReport {
    pub fn final_rmsd(&self) -> Option<f64> {
        self.history.last().map(|r| r.rmsd)
    }
}

/// Full pipeline into `cfg.output.dir`. On divergence the loss history and
/// last finite checkpoint are still written before the error is returned.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport> {
    let ds = prepare_dataset(cfg)?;
    run_with_dataset(cfg, &ds)
}

/// As [`run_experiment`], reusing an already prepared dataset.
pub fn run_with_dataset(cfg: &ExperimentConfig, ds: &Dataset) -> Result<RunReport> {
    cfg.validate()?;
    check_compatible(cfg, ds)?;
    let start = Instant::now();
    let dir = cfg.output.dir.clone();
    report::write_text(&dir, CONFIG_FILE, &cfg.to_toml())?;
    let (ck, tr) = train_model(cfg, ds)?;
    report::write_text(&dir, report::LOSS_CSV, &report::loss_csv(&tr.history))?;
    let checkpoint = dir.join(CHECKPOINT_FILE);
    save_checkpoint(&ck, &checkpoint)?;
    if let Some(reason) = &tr.aborted {
        return Err(Error::Diverged { epoch: tr.history.len(), reason: reason.clone() });
    }
    let evaluation = evaluate(cfg, ds, &ck)?;
    write_evaluation(&dir, &evaluation)?;
    Ok(RunReport {
        param_count: ck.model.param_count(),
        history: tr.history,
        aborted: tr.aborted,
        checkpoint,
        evaluation,
        wall_clock: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ortho_preset, wave1_preset, Complexity, ModelFamily};

    #[test]
    fn zero_epoch_smoke_run() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ortho_preset(ModelFamily::Deepokan, Complexity::Low);
        cfg.training.epochs = 0;
        cfg.data.samples = 10;
        cfg.data.mesh = 4;
        cfg.output.dir = dir.path().to_path_buf();
        let r = run_experiment(&cfg).unwrap();
        assert!(r.history.is_empty());
        assert_eq!(r.evaluation.errors.len(), 2);
        let ck = crate::persist::load_checkpoint(&r.checkpoint).unwrap();
        assert_eq!(ck.model, Model::build(&cfg).unwrap());
        assert!(dir
            .path()
            .join("field_")
            .with_file_name(report::field_csv_name(r.evaluation.sample_ids[0], 0))
            .exists());
    }

    #[test]
    fn curve_run_writes_curve() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = wave1_preset(ModelFamily::Mlp);
        cfg.training.epochs = 2;
        cfg.data.samples = 50;
        cfg.output.dir = dir.path().to_path_buf();
        let r = run_experiment(&cfg).unwrap();
        assert_eq!(r.history.len(), 2);
        assert_eq!(r.evaluation.curve.len(), 50);
        let text = std::fs::read_to_string(dir.path().join(report::LOSS_CSV)).unwrap();
        assert_eq!(text.lines().count(), 3);
    }
}
