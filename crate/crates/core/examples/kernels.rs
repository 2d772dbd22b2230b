//! Compare linear, RBF and polynomial kernels on data a line cannot separate.

use mtnpsvm::eval::dataset_accuracy;
use mtnpsvm::{
    fit, predict_dataset, recover_parameters, AdmmSettings, Hyperparams, KernelSpec, Label,
    MultiTaskDataset, TaskData,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Positives inside a ring, negatives outside; ring radius varies per task.
fn rings(tasks: i64, n: usize, seed: u64) -> mtnpsvm::Result<MultiTaskDataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for t in 1..=tasks {
        let radius = 1.0 + 0.15 * t as f64;
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..2 * n {
            let inside = i % 2 == 0;
            let r = if inside {
                rng.random_range(0.0..radius * 0.8)
            } else {
                rng.random_range(radius * 1.2..radius * 2.0)
            };
            let a: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            rows.extend([r * a.cos(), r * a.sin()]);
            y.push(if inside {
                Label::Positive
            } else {
                Label::Negative
            });
        }
        out.push(TaskData::new(
            t,
            DMatrix::from_row_slice(2 * n, 2, &rows),
            y,
        )?);
    }
    MultiTaskDataset::new(out)
}

fn main() -> mtnpsvm::Result<()> {
    let train = rings(2, 40, 1)?;
    let test = rings(2, 40, 2)?;
    for kernel in [
        KernelSpec::linear(),
        KernelSpec::rbf(1.0)?,
        KernelSpec::polynomial(2)?,
    ] {
        let hyper = Hyperparams {
            kernel,
            ..Hyperparams::default()
        };
        let model = fit(&train, &hyper, &AdmmSettings::default())?;
        let acc = dataset_accuracy(&test, &predict_dataset(&model, &test)?)?;
        println!("{kernel:?}: mean task accuracy {acc:.3}");
        if let Ok(w) = recover_parameters(&model) {
            println!("  shared hyperplanes u = {:?}, v = {:?}", w.u, w.v);
        }
    }
    Ok(())
}
