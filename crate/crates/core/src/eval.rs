//! Task-mean accuracy, grid search with k-fold cross-validation, row ranking
//! and the Friedman statistics.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::admm::AdmmSettings;
use crate::data::{kfold_split, Label, MultiTaskDataset, TaskId};
use crate::error::{Error, Result};
use crate::kernel::{KernelKind, KernelSpec};
use crate::model::{fit, predict_dataset, Hyperparams};

/// Accuracy of every task, keyed by task id.
pub fn per_task_accuracy(
    predictions: &[Label],
    labels: &[Label],
    tasks: &[TaskId],
) -> Result<BTreeMap<TaskId, f64>> {
    if predictions.len() != labels.len() || labels.len() != tasks.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            found: predictions.len().min(tasks.len()),
        });
    }
    if tasks.is_empty() {
        return Err(Error::Empty("no predictions".into()));
    }
    let mut counts: BTreeMap<TaskId, (usize, usize)> = BTreeMap::new();
    for ((p, y), &t) in predictions.iter().zip(labels).zip(tasks) {
        let e = counts.entry(t).or_default();
        e.0 += usize::from(p == y);
        e.1 += 1;
    }
    Ok(counts
        .into_iter()
        .map(|(t, (hit, n))| (t, hit as f64 / n as f64))
        .collect())
}

/// Unweighted mean of per-task accuracies (not pooled accuracy).
pub fn task_mean_accuracy(
    predictions: &[Label],
    labels: &[Label],
    tasks: &[TaskId],
) -> Result<f64> {
    let per_task = per_task_accuracy(predictions, labels, tasks)?;
    Ok(per_task.values().sum::<f64>() / per_task.len() as f64)
}

/// Task-mean accuracy of `predictions` against the labels of `dataset`,
/// both in canonical sample order.
pub fn dataset_accuracy(dataset: &MultiTaskDataset, predictions: &[Label]) -> Result<f64> {
    let (tasks, labels): (Vec<TaskId>, Vec<Label>) =
        dataset.samples().map(|(t, _, y)| (t, y)).unzip();
    task_mean_accuracy(predictions, &labels, &tasks)
}

/// Datasets in rows, algorithms in columns, accuracies in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyTable {
    row_names: Vec<String>,
    col_names: Vec<String>,
    values: Vec<Vec<f64>>,
}

impl AccuracyTable {
    pub fn new(
        row_names: Vec<String>,
        col_names: Vec<String>,
        values: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if values.is_empty() || col_names.is_empty() {
            return Err(Error::Table("table has no rows or no columns".into()));
        }
        if row_names.len() != values.len() {
            return Err(Error::Table(format!(
                "{} row names for {} rows",
                row_names.len(),
                values.len()
            )));
        }
        for (name, row) in row_names.iter().zip(&values) {
            if row.len() != col_names.len() {
                return Err(Error::Table(format!(
                    "row {name:?} has {} entries, expected {}",
                    row.len(),
                    col_names.len()
                )));
            }
            if let Some(v) = row.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::Table(format!(
                    "row {name:?}: accuracy {v} outside [0, 1]"
                )));
            }
        }
        Ok(AccuracyTable {
            row_names,
            col_names,
            values,
        })
    }

    pub fn row_names(&self) -> &[String] {
        &self.row_names
    }

    pub fn col_names(&self) -> &[String] {
        &self.col_names
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn num_rows(&self) -> usize {
        self.values.len()
    }

    pub fn num_cols(&self) -> usize {
        self.col_names.len()
    }

    /// CSV with a header row; the first column holds row names.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header = rdr.headers()?.clone();
        if header.len() < 2 {
            return Err(Error::Table(
                "header needs a name column and at least one algorithm".into(),
            ));
        }
        let col_names = header.iter().skip(1).map(str::to_string).collect();
        let mut row_names = Vec::new();
        let mut values = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let record = record?;
            let line = i + 2;
            row_names.push(record.get(0).unwrap_or_default().to_string());
            let row = record
                .iter()
                .skip(1)
                .map(|f| {
                    f.parse::<f64>().map_err(|_| Error::Parse {
                        line,
                        message: format!("not a number: {f:?}"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            values.push(row);
        }
        AccuracyTable::new(row_names, col_names, values)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["dataset".to_string()];
        header.extend(self.col_names.iter().cloned());
        w.write_record(&header)?;
        for (name, row) in self.row_names.iter().zip(&self.values) {
            let mut rec = vec![name.clone()];
            rec.extend(row.iter().map(f64::to_string));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

/// Ranks of one row: 1 for the highest value, ties share the mean of the
/// ranks they occupy.
pub fn rank_row(row: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&a, &b| row[b].total_cmp(&row[a]));
    let mut ranks = vec![0.0; row.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && row[order[end]] == row[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let shared = (start + 1 + end) as f64 / 2.0;
        for &j in &order[start..end] {
            ranks[j] = shared;
        }
        start = end;
    }
    ranks
}

pub fn rank_rows(table: &AccuracyTable) -> Vec<Vec<f64>> {
    table.values.iter().map(|r| rank_row(r)).collect()
}

/// Column means of a rank matrix.
pub fn average_ranks(ranks: &[Vec<f64>]) -> Vec<f64> {
    let k = ranks.first().map_or(0, Vec::len);
    let n = ranks.len() as f64;
    (0..k)
        .map(|j| ranks.iter().map(|r| r[j]).sum::<f64>() / n)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FriedmanStats {
    pub chi2: f64,
    pub f: f64,
}

/// Friedman chi-square and its F refinement from average ranks over `n`
/// datasets and `k` algorithms.
pub fn friedman(avg_ranks: &[f64], n: usize, k: usize) -> Result<FriedmanStats> {
    if n < 2 {
        return Err(Error::FriedmanUndefined(format!(
            "need at least 2 datasets, got {n}"
        )));
    }
    if k < 2 {
        return Err(Error::FriedmanUndefined(format!(
            "need at least 2 algorithms, got {k}"
        )));
    }
    if avg_ranks.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: avg_ranks.len(),
        });
    }
    let (nf, kf) = (n as f64, k as f64);
    let sum_sq: f64 = avg_ranks.iter().map(|r| r * r).sum();
    let chi2 = 12.0 * nf / (kf * (kf + 1.0)) * (sum_sq - kf * (kf + 1.0).powi(2) / 4.0);
    let denom = nf * (kf - 1.0) - chi2;
    if denom <= 0.0 {
        return Err(Error::FriedmanUndefined(format!(
            "N(k-1) - chi2 = {denom} is not positive"
        )));
    }
    Ok(FriedmanStats {
        chi2,
        f: (nf - 1.0) * chi2 / denom,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FriedmanReport {
    pub ranks: Vec<Vec<f64>>,
    pub average_ranks: Vec<f64>,
    pub stats: std::result::Result<FriedmanStats, String>,
}

/// Ranks the table, then runs [`friedman`] on the column means. A table the
/// statistic is undefined for still yields its ranks.
pub fn friedman_table(table: &AccuracyTable) -> FriedmanReport {
    let ranks = rank_rows(table);
    let average_ranks = average_ranks(&ranks);
    let stats =
        friedman(&average_ranks, table.num_rows(), table.num_cols()).map_err(|e| e.to_string());
    FriedmanReport {
        ranks,
        average_ranks,
        stats,
    }
}

pub fn powers_of_two(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|i| 2f64.powi(i)).collect()
}

/// Candidate values per hyperparameter. With `symmetric` set, the
/// negative-class problem reuses the positive-class values
/// (`rho2 = rho1`, `c3 = c1`, `c4 = c2`) and the `rho2`, `c3`, `c4` lists are
/// ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    pub rho1: Vec<f64>,
    pub rho2: Vec<f64>,
    pub c1: Vec<f64>,
    pub c2: Vec<f64>,
    pub c3: Vec<f64>,
    pub c4: Vec<f64>,
    pub epsilon: Vec<f64>,
    pub kernels: Vec<KernelSpec>,
    pub symmetric: bool,
}

impl Default for GridSpec {
    fn default() -> Self {
        let p = powers_of_two(-3, 3);
        GridSpec {
            rho1: p.clone(),
            rho2: p.clone(),
            c1: p.clone(),
            c2: p.clone(),
            c3: p.clone(),
            c4: p,
            epsilon: vec![0.1, 0.2, 0.3, 0.4, 0.5],
            kernels: vec![KernelSpec::linear()],
            symmetric: true,
        }
    }
}

impl GridSpec {
    /// Default parameter grid for one kernel family.
    pub fn kernel_grid(kind: KernelKind) -> Vec<KernelSpec> {
        match kind {
            KernelKind::Linear => vec![KernelSpec::linear()],
            KernelKind::Rbf => powers_of_two(-3, 3)
                .into_iter()
                .map(|w| KernelSpec { kind, delta: w })
                .collect(),
            KernelKind::Polynomial => (1..=7)
                .map(|p| KernelSpec {
                    kind,
                    delta: p as f64,
                })
                .collect(),
        }
    }

    /// A grid with exactly one cell.
    pub fn single(h: &Hyperparams) -> Self {
        GridSpec {
            rho1: vec![h.rho1],
            rho2: vec![h.rho2],
            c1: vec![h.c1],
            c2: vec![h.c2],
            c3: vec![h.c3],
            c4: vec![h.c4],
            epsilon: vec![h.epsilon],
            kernels: vec![h.kernel],
            symmetric: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut sets = vec![
            ("rho1", self.rho1.len()),
            ("c1", self.c1.len()),
            ("c2", self.c2.len()),
            ("epsilon", self.epsilon.len()),
            ("kernels", self.kernels.len()),
        ];
        if !self.symmetric {
            sets.extend([
                ("rho2", self.rho2.len()),
                ("c3", self.c3.len()),
                ("c4", self.c4.len()),
            ]);
        }
        if let Some((name, _)) = sets.iter().find(|(_, n)| *n == 0) {
            return Err(Error::InvalidParameter(format!("grid set {name} is empty")));
        }
        for cell in self.cells() {
            cell.validate()?;
        }
        Ok(())
    }

    /// Every cell in grid order (kernel outermost, epsilon innermost).
    pub fn cells(&self) -> Vec<Hyperparams> {
        // None means "tied to the positive-class value"
        let own = |v: &[f64]| -> Vec<Option<f64>> {
            if self.symmetric {
                vec![None]
            } else {
                v.iter().copied().map(Some).collect()
            }
        };
        let (rho2, c3, c4) = (own(&self.rho2), own(&self.c3), own(&self.c4));
        let mut out = Vec::new();
        for &kernel in &self.kernels {
            for &rho1 in &self.rho1 {
                for &r2 in &rho2 {
                    for &c1 in &self.c1 {
                        for &c2 in &self.c2 {
                            for &c3v in &c3 {
                                for &c4v in &c4 {
                                    for &epsilon in &self.epsilon {
                                        out.push(Hyperparams {
                                            rho1,
                                            rho2: r2.unwrap_or(rho1),
                                            c1,
                                            c2,
                                            c3: c3v.unwrap_or(c1),
                                            c4: c4v.unwrap_or(c2),
                                            epsilon,
                                            kernel,
                                        });
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvCell {
    pub hyper: Hyperparams,
    pub fold_scores: Vec<f64>,
    pub mean: f64,
    /// Folds in which either ADMM solve hit its iteration limit.
    pub unconverged_folds: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome {
    pub best: Hyperparams,
    pub best_index: usize,
    pub cells: Vec<CvCell>,
}

impl CvOutcome {
    pub fn best_cell(&self) -> &CvCell {
        &self.cells[self.best_index]
    }
}

fn penalty_sum(h: &Hyperparams) -> f64 {
    h.c1 + h.c2 + h.c3 + h.c4
}

/// Highest mean accuracy, then smaller `c1 + c2 + c3 + c4`, then smaller
/// epsilon, then earlier grid position.
fn select_best(cells: &[CvCell]) -> usize {
    let mut best = 0;
    for (i, cell) in cells.iter().enumerate().skip(1) {
        let b = &cells[best];
        let better = cell.mean > b.mean
            || (cell.mean == b.mean
                && (penalty_sum(&cell.hyper) < penalty_sum(&b.hyper)
                    || (penalty_sum(&cell.hyper) == penalty_sum(&b.hyper)
                        && cell.hyper.epsilon < b.hyper.epsilon)));
        if better {
            best = i;
        }
    }
    best
}

/// Grid search with stratified `k`-fold cross-validation. Cells and folds run
/// in parallel; results are gathered in grid order, so the outcome does not
/// depend on the thread count.
pub fn cross_validate(
    dataset: &MultiTaskDataset,
    grid: &GridSpec,
    k: usize,
    seed: u64,
    settings: &AdmmSettings,
) -> Result<CvOutcome> {
    grid.validate()?;
    settings.validate()?;
    let folds = kfold_split(dataset, k, seed)?;
    let cells = grid.cells();
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..folds.len()).map(move |f| (c, f)))
        .collect();
    let scores = jobs
        .par_iter()
        .map(|&(c, f)| {
            let (train, valid) = &folds[f];
            let model = fit(train, &cells[c], settings)?;
            let pred = predict_dataset(&model, valid)?;
            let converged = model
                .diagnostics()
                .first
                .iter()
                .chain(model.diagnostics().second.iter())
                .all(|s| s.status == crate::admm::Status::Converged);
            Ok((dataset_accuracy(valid, &pred)?, converged))
        })
        .collect::<Result<Vec<_>>>()?;

    let cells: Vec<CvCell> = cells
        .into_iter()
        .enumerate()
        .map(|(c, hyper)| {
            let chunk = &scores[c * folds.len()..(c + 1) * folds.len()];
            let fold_scores: Vec<f64> = chunk.iter().map(|s| s.0).collect();
            CvCell {
                hyper,
                mean: fold_scores.iter().sum::<f64>() / fold_scores.len() as f64,
                fold_scores,
                unconverged_folds: chunk.iter().filter(|s| !s.1).count(),
            }
        })
        .collect();
    let best_index = select_best(&cells);
    Ok(CvOutcome {
        best: cells[best_index].hyper,
        best_index,
        cells,
    })
}
