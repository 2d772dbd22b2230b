//! Fit on synthetic blobs, then score a held-out split per task.

use mtnpsvm::eval::{dataset_accuracy, per_task_accuracy};
use mtnpsvm::{fit, holdout_split, predict_dataset, synth_blobs, AdmmSettings, Hyperparams};

fn main() -> mtnpsvm::Result<()> {
    let data = synth_blobs(3, 60, 2, 0.3, 0.5, 7)?;
    let (train, test) = holdout_split(&data, 0.3, 11)?;

    let hyper = Hyperparams {
        c1: 0.5,
        c3: 0.5,
        epsilon: 0.2,
        ..Hyperparams::default()
    };
    let model = fit(&train, &hyper, &AdmmSettings::default())?;

    let predicted = predict_dataset(&model, &test)?;
    let (tasks, labels): (Vec<_>, Vec<_>) = test.samples().map(|(t, _, y)| (t, y)).unzip();
    for (task, acc) in per_task_accuracy(&predicted, &labels, &tasks)? {
        println!("task {task}: accuracy {acc:.3}");
    }
    println!("task mean: {:.3}", dataset_accuracy(&test, &predicted)?);

    let diag = model.diagnostics();
    for (name, s) in [("first", diag.first), ("second", diag.second)] {
        if let Some(s) = s {
            println!(
                "{name} problem: {:?} after {} iterations",
                s.status, s.iterations
            );
        }
    }
    Ok(())
}
