//! Support vector counts as the band widens.

use mtnpsvm::model::DEFAULT_SV_TOL;
use mtnpsvm::{count_support_vectors, fit, synth_blobs, AdmmSettings, Hyperparams};

fn main() -> mtnpsvm::Result<()> {
    let data = synth_blobs(3, 40, 2, 0.3, 0.5, 7)?;
    println!("epsilon  first(own/other)  second(own/other)");
    for epsilon in [0.0, 0.1, 0.2, 0.3, 0.4, 0.5] {
        let hyper = Hyperparams {
            epsilon,
            ..Hyperparams::default()
        };
        let model = fit(&data, &hyper, &AdmmSettings::default())?;
        let sv = count_support_vectors(&model, DEFAULT_SV_TOL);
        println!(
            "{epsilon:<8} {:>5}/{:<5}        {:>5}/{:<5}",
            sv.first.own, sv.first.other, sv.second.own, sv.second.other
        );
    }
    Ok(())
}
