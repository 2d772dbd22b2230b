//! Save a model, load it back, and check predictions are bit-identical.

use mtnpsvm::{
    decision_values, fit, load_model, save_model, synth_blobs, AdmmSettings, Hyperparams,
    KernelSpec,
};

fn main() -> mtnpsvm::Result<()> {
    let data = synth_blobs(2, 30, 2, 0.5, 0.6, 19)?;
    let hyper = Hyperparams {
        kernel: KernelSpec::rbf(1.5)?,
        ..Hyperparams::default()
    };
    let model = fit(&data, &hyper, &AdmmSettings::default())?;

    let path = std::env::temp_dir().join("mtnpsvm-example-model.json");
    save_model(&model, &path)?;
    let back = load_model(&path)?;
    println!("wrote {}", path.display());

    let mut identical = true;
    for (task, x, _) in data.samples() {
        let x: Vec<f64> = x.iter().copied().collect();
        let a = decision_values(&model, &x, task)?;
        let b = decision_values(&back, &x, task)?;
        identical &= a.0.to_bits() == b.0.to_bits() && a.1.to_bits() == b.1.to_bits();
    }
    println!("decision values identical after reload: {identical}");
    std::fs::remove_file(&path).ok();
    Ok(())
}
