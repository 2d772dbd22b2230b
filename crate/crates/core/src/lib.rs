//! Multi-task nonparallel support vector machines.
//!
//! ```no_run
//! use mtnpsvm::{fit, predict, synth_blobs, AdmmSettings, Hyperparams};
//!
//! let data = synth_blobs(3, 40, 2, 0.3, 0.8, 7).unwrap();
//! let model = fit(&data, &Hyperparams::default(), &AdmmSettings::default()).unwrap();
//! let label = predict(&model, &[0.5, -0.2], 1).unwrap();
//! println!("{label:?}");
//! ```

pub mod admm;
pub mod cli;
pub mod data;
pub mod duals;
pub mod error;
pub mod eval;
pub mod kernel;
pub mod model;
pub mod persist;
pub mod refqp;

pub use admm::{AdmmSettings, AdmmSolution, AdmmTrace, Status, TraceRecord};
pub use data::{
    holdout_split, kfold_split, load_csv, read_csv, stack_by_class, synth_blobs, write_csv, Label,
    MultiTaskDataset, StackedDesign, TaskData, TaskId,
};
pub use duals::{assemble_first, assemble_second, BlockLayout, BoxQP, Problem, Segment};
pub use error::{Error, ErrorKind, Result};
pub use kernel::{KernelKind, KernelSpec};
pub use model::{
    count_support_vectors, decision_values, fit, kkt_report, predict, predict_dataset,
    recover_parameters, Hyperparams, KktReport, LinearParams, SupportVectors, TrainedModel,
};
pub use persist::{load_model, save_model};
