//! Small grid search with 5-fold cross-validation.

use mtnpsvm::eval::{cross_validate, GridSpec};
use mtnpsvm::{synth_blobs, AdmmSettings};

fn main() -> mtnpsvm::Result<()> {
    let data = synth_blobs(3, 40, 2, 0.3, 0.5, 7)?;
    let grid = GridSpec {
        rho1: vec![0.5, 2.0],
        c1: vec![0.25, 1.0],
        c2: vec![1.0, 4.0],
        epsilon: vec![0.1, 0.3],
        ..GridSpec::default()
    };
    let outcome = cross_validate(&data, &grid, 5, 42, &AdmmSettings::default())?;

    for cell in &outcome.cells {
        let h = &cell.hyper;
        println!(
            "rho {:<5} c1 {:<5} c2 {:<5} eps {:<4} -> {:.4}",
            h.rho1, h.c1, h.c2, h.epsilon, cell.mean
        );
    }
    let best = outcome.best_cell();
    println!("best: {:?} with mean accuracy {:.4}", best.hyper, best.mean);
    Ok(())
}
