//! Versioned JSON model files and atomic file writes.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{StackedDesign, TaskId};
use crate::error::{Error, Result};
use crate::model::{Diagnostics, DualBlocks, Hyperparams, LinearParams, TrainedModel};

pub const FORMAT_NAME: &str = "mtnpsvm-model";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct TaskRows {
    id: TaskId,
    positives: Vec<Vec<f64>>,
    negatives: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct DualDoc {
    band_star: Vec<f64>,
    band: Vec<f64>,
    hinge: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    format: String,
    format_version: u32,
    hyperparams: Hyperparams,
    feature_dim: usize,
    tasks: Vec<TaskRows>,
    first: DualDoc,
    second: DualDoc,
    linear: Option<LinearParams>,
    diagnostics: Diagnostics,
}

fn rows_of(m: &DMatrix<f64>, range: std::ops::Range<usize>) -> Vec<Vec<f64>> {
    range.map(|i| m.row(i).iter().copied().collect()).collect()
}

fn dual_doc(d: &DualBlocks) -> DualDoc {
    DualDoc {
        band_star: d.band_star.iter().copied().collect(),
        band: d.band.iter().copied().collect(),
        hinge: d.hinge.iter().copied().collect(),
    }
}

fn dual_blocks(d: DualDoc) -> DualBlocks {
    DualBlocks {
        band_star: DVector::from_vec(d.band_star),
        band: DVector::from_vec(d.band),
        hinge: DVector::from_vec(d.hinge),
    }
}

fn stack(rows: &[&Vec<f64>], d: usize) -> Result<DMatrix<f64>> {
    if let Some(bad) = rows.iter().find(|r| r.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: bad.len(),
        });
    }
    Ok(DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]))
}

fn design_from_rows(tasks: &[TaskRows], d: usize) -> Result<StackedDesign> {
    let mut pos_slices = Vec::new();
    let mut neg_slices = Vec::new();
    let (mut p, mut q) = (0, 0);
    for t in tasks {
        pos_slices.push(p..p + t.positives.len());
        neg_slices.push(q..q + t.negatives.len());
        p += t.positives.len();
        q += t.negatives.len();
    }
    let pos: Vec<&Vec<f64>> = tasks.iter().flat_map(|t| &t.positives).collect();
    let neg: Vec<&Vec<f64>> = tasks.iter().flat_map(|t| &t.negatives).collect();
    Ok(StackedDesign {
        task_ids: tasks.iter().map(|t| t.id).collect(),
        pos: stack(&pos, d)?,
        neg: stack(&neg, d)?,
        pos_slices,
        neg_slices,
    })
}

pub fn to_json(model: &TrainedModel) -> Result<String> {
    let design = model.design();
    let tasks = design
        .task_ids
        .iter()
        .enumerate()
        .map(|(t, &id)| TaskRows {
            id,
            positives: rows_of(&design.pos, design.pos_slices[t].clone()),
            negatives: rows_of(&design.neg, design.neg_slices[t].clone()),
        })
        .collect();
    let doc = ModelDocument {
        format: FORMAT_NAME.to_string(),
        format_version: FORMAT_VERSION,
        hyperparams: *model.hyper(),
        feature_dim: model.feature_dim(),
        tasks,
        first: dual_doc(model.first_duals()),
        second: dual_doc(model.second_duals()),
        linear: model.linear_params().cloned(),
        diagnostics: model.diagnostics().clone(),
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

pub fn from_json(text: &str) -> Result<TrainedModel> {
    let doc: ModelDocument = serde_json::from_str(text)?;
    from_document(doc)
}

fn from_document(doc: ModelDocument) -> Result<TrainedModel> {
    if doc.format != FORMAT_NAME {
        return Err(Error::Table(format!(
            "not a model file (format {:?})",
            doc.format
        )));
    }
    if doc.format_version != FORMAT_VERSION {
        return Err(Error::FormatVersion(doc.format_version));
    }
    let design = design_from_rows(&doc.tasks, doc.feature_dim)?;
    let mut model = TrainedModel::from_duals(
        design,
        doc.hyperparams,
        dual_blocks(doc.first),
        dual_blocks(doc.second),
    )?;
    if doc.linear.is_some() {
        model.set_linear_params(doc.linear);
    }
    model.set_diagnostics(doc.diagnostics);
    Ok(model)
}

/// Writes through a temporary file in the destination directory, then renames.
pub fn atomic_write(path: &Path, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        write(&mut w)?;
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn save_model(model: &TrainedModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let json = to_json(model)?;
    atomic_write(path, |w| {
        w.write_all(json.as_bytes()).map_err(|e| Error::io(path, e))
    })
}

pub fn load_model(path: impl AsRef<Path>) -> Result<TrainedModel> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingInput(path.to_path_buf()),
        _ => Error::io(path, e),
    })?;
    let doc: ModelDocument = serde_json::from_reader(BufReader::new(file))?;
    from_document(doc)
}
