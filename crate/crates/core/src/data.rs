//! Multi-task binary classification data: loading, validation, class stacking,
//! stratified splitting and a seeded synthetic generator.
//!
//! Every dataset is kept in a canonical order: tasks by ascending id, samples
//! within a task in their original order. All dual vectors downstream are
//! indexed in the order produced by [`stack_by_class`].

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::ops::Range;
use std::path::Path;

use nalgebra::{DMatrix, DVector, RowDVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type TaskId = i64;

/// Class label. The two classes play asymmetric roles in the two dual problems,
/// so no remapping is ever applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Positive => 1.0,
            Label::Negative => -1.0,
        }
    }

    /// Parses `+1`, `1` or `-1`.
    pub fn parse(s: &str) -> Option<Label> {
        match s.trim() {
            "+1" | "1" => Some(Label::Positive),
            "-1" => Some(Label::Negative),
            _ => None,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            Label::Positive => "1",
            Label::Negative => "-1",
        }
    }
}

/// Samples of one task.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskData {
    task_id: TaskId,
    x: DMatrix<f64>,
    y: Vec<Label>,
}

impl TaskData {
    pub fn new(task_id: TaskId, x: DMatrix<f64>, y: Vec<Label>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.nrows(),
                found: y.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("task features"));
        }
        Ok(TaskData { task_id, x, y })
    }

    pub fn task_id(&self) -> TaskId {
        self.task_id
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &[Label] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn count(&self, label: Label) -> usize {
        self.y.iter().filter(|&&l| l == label).count()
    }

    fn rows_where(&self, label: Label) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.y[i] == label).collect()
    }

    fn select(&self, rows: &[usize]) -> TaskData {
        TaskData {
            task_id: self.task_id,
            x: self.x.select_rows(rows),
            y: rows.iter().map(|&i| self.y[i]).collect(),
        }
    }
}

/// `T` binary tasks over a shared feature space, ordered by task id.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiTaskDataset {
    tasks: Vec<TaskData>,
    feature_dim: usize,
}

impl MultiTaskDataset {
    pub fn new(mut tasks: Vec<TaskData>) -> Result<Self> {
        if tasks.is_empty() {
            return Err(Error::Empty("no tasks".into()));
        }
        tasks.sort_by_key(|t| t.task_id);
        for pair in tasks.windows(2) {
            if pair[0].task_id == pair[1].task_id {
                return Err(Error::DuplicateTask(pair[0].task_id));
            }
        }
        let feature_dim = tasks[0].x.ncols();
        for t in &tasks {
            if t.x.ncols() != feature_dim {
                return Err(Error::DimensionMismatch {
                    expected: feature_dim,
                    found: t.x.ncols(),
                });
            }
        }
        Ok(MultiTaskDataset { tasks, feature_dim })
    }

    pub fn tasks(&self) -> &[TaskData] {
        &self.tasks
    }

    pub fn task(&self, id: TaskId) -> Option<&TaskData> {
        self.tasks.iter().find(|t| t.task_id == id)
    }

    pub fn num_tasks(&self) -> usize {
        self.tasks.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn num_samples(&self) -> usize {
        self.tasks.iter().map(TaskData::len).sum()
    }

    pub fn task_ids(&self) -> Vec<TaskId> {
        self.tasks.iter().map(|t| t.task_id).collect()
    }

    /// Checks the training precondition: every task has both classes.
    pub fn check_trainable(&self) -> Result<()> {
        for t in &self.tasks {
            if t.count(Label::Positive) == 0 {
                return Err(Error::MissingClass {
                    task: t.task_id,
                    class: "positive",
                });
            }
            if t.count(Label::Negative) == 0 {
                return Err(Error::MissingClass {
                    task: t.task_id,
                    class: "negative",
                });
            }
        }
        Ok(())
    }

    /// Iterates `(task id, feature row, label)` in canonical order.
    pub fn samples(&self) -> impl Iterator<Item = (TaskId, RowDVector<f64>, Label)> + '_ {
        self.tasks
            .iter()
            .flat_map(|t| (0..t.len()).map(move |i| (t.task_id, t.x.row(i).into_owned(), t.y[i])))
    }
}

/// Class-stacked, task-contiguous layout of the training rows.
///
/// `pos` holds every positive row (tasks in ascending order), `neg` every
/// negative row. The bias column is not stored; it is supplied by the
/// augmented kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedDesign {
    pub task_ids: Vec<TaskId>,
    pub pos: DMatrix<f64>,
    pub neg: DMatrix<f64>,
    pub pos_slices: Vec<Range<usize>>,
    pub neg_slices: Vec<Range<usize>>,
}

impl StackedDesign {
    pub fn num_tasks(&self) -> usize {
        self.task_ids.len()
    }

    pub fn num_pos(&self) -> usize {
        self.pos.nrows()
    }

    pub fn num_neg(&self) -> usize {
        self.neg.nrows()
    }

    pub fn feature_dim(&self) -> usize {
        self.pos.ncols()
    }

    pub fn task_index(&self, id: TaskId) -> Option<usize> {
        self.task_ids.iter().position(|&t| t == id)
    }

    /// Same rows with the class roles exchanged.
    pub fn swapped(&self) -> StackedDesign {
        StackedDesign {
            task_ids: self.task_ids.clone(),
            pos: self.neg.clone(),
            neg: self.pos.clone(),
            pos_slices: self.neg_slices.clone(),
            neg_slices: self.pos_slices.clone(),
        }
    }

    /// Scatters the stacked rows back into per-task datasets (positives first).
    pub fn to_dataset(&self) -> Result<MultiTaskDataset> {
        let tasks = self
            .task_ids
            .iter()
            .enumerate()
            .map(|(t, &id)| {
                let p = self.pos_slices[t].clone();
                let q = self.neg_slices[t].clone();
                let mut x = DMatrix::zeros(p.len() + q.len(), self.feature_dim());
                x.rows_mut(0, p.len())
                    .copy_from(&self.pos.rows(p.start, p.len()));
                x.rows_mut(p.len(), q.len())
                    .copy_from(&self.neg.rows(q.start, q.len()));
                let mut y = vec![Label::Positive; p.len()];
                y.extend(std::iter::repeat_n(Label::Negative, q.len()));
                TaskData::new(id, x, y)
            })
            .collect::<Result<Vec<_>>>()?;
        MultiTaskDataset::new(tasks)
    }
}

pub fn stack_by_class(dataset: &MultiTaskDataset) -> Result<StackedDesign> {
    dataset.check_trainable()?;
    let mut pos_rows: Vec<(&TaskData, usize)> = Vec::new();
    let mut neg_rows: Vec<(&TaskData, usize)> = Vec::new();
    let mut pos_slices = Vec::with_capacity(dataset.num_tasks());
    let mut neg_slices = Vec::with_capacity(dataset.num_tasks());
    for t in dataset.tasks() {
        let start = pos_rows.len();
        pos_rows.extend(t.rows_where(Label::Positive).into_iter().map(|i| (t, i)));
        pos_slices.push(start..pos_rows.len());
        let start = neg_rows.len();
        neg_rows.extend(t.rows_where(Label::Negative).into_iter().map(|i| (t, i)));
        neg_slices.push(start..neg_rows.len());
    }
    let d = dataset.feature_dim();
    let gather = |rows: &[(&TaskData, usize)]| {
        DMatrix::from_fn(rows.len(), d, |i, j| rows[i].0.x[(rows[i].1, j)])
    };
    Ok(StackedDesign {
        task_ids: dataset.task_ids(),
        pos: gather(&pos_rows),
        neg: gather(&neg_rows),
        pos_slices,
        neg_slices,
    })
}

/// Stratified k-fold split. Each task's positives and negatives are shuffled
/// independently and dealt round-robin into `k` folds.
pub fn kfold_split(
    dataset: &MultiTaskDataset,
    k: usize,
    seed: u64,
) -> Result<Vec<(MultiTaskDataset, MultiTaskDataset)>> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!(
            "k must be at least 2, got {k}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // fold assignment per task, per sample
    let mut assignment: Vec<Vec<usize>> = Vec::with_capacity(dataset.num_tasks());
    for t in dataset.tasks() {
        let mut fold_of = vec![0; t.len()];
        for (label, name) in [(Label::Positive, "positive"), (Label::Negative, "negative")] {
            let mut rows = t.rows_where(label);
            if rows.len() < k {
                return Err(Error::TooFewForFolds {
                    folds: k,
                    task: t.task_id,
                    class: name,
                    available: rows.len(),
                });
            }
            rows.shuffle(&mut rng);
            for (pos, &i) in rows.iter().enumerate() {
                fold_of[i] = pos % k;
            }
        }
        assignment.push(fold_of);
    }

    (0..k)
        .map(|fold| {
            let mut train = Vec::with_capacity(dataset.num_tasks());
            let mut valid = Vec::with_capacity(dataset.num_tasks());
            for (t, fold_of) in dataset.tasks().iter().zip(&assignment) {
                let (v, tr): (Vec<usize>, Vec<usize>) =
                    (0..t.len()).partition(|&i| fold_of[i] == fold);
                train.push(t.select(&tr));
                valid.push(t.select(&v));
            }
            Ok((MultiTaskDataset::new(train)?, MultiTaskDataset::new(valid)?))
        })
        .collect()
}

/// Stratified hold-out split: `test_fraction` of every (task, class) group,
/// rounded to the nearest count but leaving at least one sample on each side,
/// goes to the test set.
pub fn holdout_split(
    dataset: &MultiTaskDataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(MultiTaskDataset, MultiTaskDataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for t in dataset.tasks() {
        let mut is_test = vec![false; t.len()];
        for (label, name) in [(Label::Positive, "positive"), (Label::Negative, "negative")] {
            let mut rows = t.rows_where(label);
            if rows.len() < 2 {
                return Err(Error::TooFewForFolds {
                    folds: 2,
                    task: t.task_id,
                    class: name,
                    available: rows.len(),
                });
            }
            rows.shuffle(&mut rng);
            let n_test =
                ((rows.len() as f64 * test_fraction).round() as usize).clamp(1, rows.len() - 1);
            for &i in &rows[..n_test] {
                is_test[i] = true;
            }
        }
        let (te, tr): (Vec<usize>, Vec<usize>) = (0..t.len()).partition(|&i| is_test[i]);
        train.push(t.select(&tr));
        test.push(t.select(&te));
    }
    Ok((MultiTaskDataset::new(train)?, MultiTaskDataset::new(test)?))
}

/// Configured class means of task index `t` (0-based) in [`synth_blobs`]:
/// `(+dir, -dir)` where `dir` is the first unit axis rotated by `t * rotation`
/// in the plane of the first two features.
pub fn blob_means(t: usize, d: usize, rotation: f64) -> (DVector<f64>, DVector<f64>) {
    let angle = t as f64 * rotation;
    let mut dir = DVector::zeros(d);
    dir[0] = angle.cos();
    dir[1] = angle.sin();
    (dir.clone(), -dir)
}

/// Two Gaussian blobs per task, task ids `1..=tasks`. Rows are positives first.
pub fn synth_blobs(
    tasks: usize,
    n_per_class: usize,
    d: usize,
    rotation: f64,
    noise: f64,
    seed: u64,
) -> Result<MultiTaskDataset> {
    if tasks == 0 || n_per_class == 0 {
        return Err(Error::InvalidParameter(
            "task count and samples per class must be at least 1".into(),
        ));
    }
    if d < 2 {
        return Err(Error::InvalidParameter(format!(
            "feature dimension must be at least 2, got {d}"
        )));
    }
    if !(noise > 0.0 && noise.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "noise must be positive and finite, got {noise}"
        )));
    }
    if !rotation.is_finite() {
        return Err(Error::InvalidParameter("rotation must be finite".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..tasks)
        .map(|t| {
            let (mu_pos, mu_neg) = blob_means(t, d, rotation);
            let mut x = DMatrix::zeros(2 * n_per_class, d);
            for i in 0..2 * n_per_class {
                let mean = if i < n_per_class { &mu_pos } else { &mu_neg };
                for j in 0..d {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    x[(i, j)] = mean[j] + noise * z;
                }
            }
            let mut y = vec![Label::Positive; n_per_class];
            y.extend(std::iter::repeat_n(Label::Negative, n_per_class));
            TaskData::new(t as TaskId + 1, x, y)
        })
        .collect::<Result<Vec<_>>>()?;
    MultiTaskDataset::new(data)
}

/// One parsed CSV row of a prediction input; the label is optional.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub line: usize,
    pub task: TaskId,
    pub label: Option<Label>,
    pub features: Vec<f64>,
}

fn parse_rows<R: Read>(reader: R, require_label: bool) -> Result<(Vec<FeatureRow>, usize)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let name = |i: usize| headers.get(i).map(str::to_ascii_lowercase);
    if name(0).as_deref() != Some("task") {
        return Err(Error::Parse {
            line: 1,
            message: "header must start with a `task` column".into(),
        });
    }
    let has_label = name(1).as_deref() == Some("label");
    if require_label && !has_label {
        return Err(Error::Parse {
            line: 1,
            message: "header must be `task,label,f1,...,fd`".into(),
        });
    }
    let first_feature = if has_label { 2 } else { 1 };
    let d = headers.len().saturating_sub(first_feature);
    if d == 0 {
        return Err(Error::Parse {
            line: 1,
            message: "no feature columns".into(),
        });
    }

    let mut rows = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        let line = idx + 2;
        let record = record?;
        if record.len() != headers.len() {
            return Err(Error::Parse {
                line,
                message: format!(
                    "expected {} features, found {}",
                    d,
                    record.len().saturating_sub(first_feature)
                ),
            });
        }
        let task = record[0].parse::<TaskId>().map_err(|_| Error::Parse {
            line,
            message: format!("task id {:?} is not an integer", &record[0]),
        })?;
        let label = if has_label {
            Some(Label::parse(&record[1]).ok_or_else(|| Error::InvalidLabel {
                line,
                value: record[1].to_string(),
            })?)
        } else {
            None
        };
        let features = (first_feature..record.len())
            .map(|j| {
                let v = record[j].parse::<f64>().map_err(|_| Error::Parse {
                    line,
                    message: format!("non-numeric feature {:?}", &record[j]),
                })?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::Parse {
                        line,
                        message: format!("non-finite feature {:?}", &record[j]),
                    })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(FeatureRow {
            line,
            task,
            label,
            features,
        });
    }
    if rows.is_empty() {
        return Err(Error::Empty("no data rows".into()));
    }
    Ok((rows, d))
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::MissingInput(path.to_path_buf())
        } else {
            Error::io(path, e)
        }
    })
}

/// Reads a `task,label,f1,...,fd` CSV.
pub fn read_csv<R: Read>(reader: R) -> Result<MultiTaskDataset> {
    let (rows, d) = parse_rows(reader, true)?;
    let mut grouped: BTreeMap<TaskId, Vec<FeatureRow>> = BTreeMap::new();
    for row in rows {
        grouped.entry(row.task).or_default().push(row);
    }
    let tasks = grouped
        .into_iter()
        .map(|(id, rows)| {
            let x = DMatrix::from_fn(rows.len(), d, |i, j| rows[i].features[j]);
            let y = rows
                .iter()
                .map(|r| r.label.expect("label column"))
                .collect();
            TaskData::new(id, x, y)
        })
        .collect::<Result<Vec<_>>>()?;
    MultiTaskDataset::new(tasks)
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<MultiTaskDataset> {
    read_csv(open(path.as_ref())?)
}

/// Reads a prediction input: `task,f1,...,fd` or `task,label,f1,...,fd`.
pub fn load_feature_csv(path: impl AsRef<Path>) -> Result<Vec<FeatureRow>> {
    Ok(parse_rows(open(path.as_ref())?, false)?.0)
}

pub fn write_csv<W: Write>(dataset: &MultiTaskDataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["task".to_string(), "label".to_string()];
    header.extend((1..=dataset.feature_dim()).map(|j| format!("f{j}")));
    w.write_record(&header)?;
    for (task, row, label) in dataset.samples() {
        let mut record = vec![task.to_string(), label.as_str().to_string()];
        record.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&record)?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}
