//! Solve the first dual with ADMM and with projected gradient, and compare.

use mtnpsvm::admm::{objective, solve};
use mtnpsvm::refqp::projected_gradient_solve;
use mtnpsvm::{assemble_first, stack_by_class, synth_blobs, AdmmSettings, Hyperparams};

fn main() -> mtnpsvm::Result<()> {
    let data = synth_blobs(2, 25, 3, 0.4, 0.7, 3)?;
    let design = stack_by_class(&data)?;
    let (qp, layout) = assemble_first(&design, &Hyperparams::default())?;
    println!(
        "dual has {} coordinates ({} band pairs, {} hinge)",
        layout.dim(),
        layout.own(),
        layout.other()
    );

    let tight = AdmmSettings {
        delta_abs: 1e-9,
        delta_rel: 1e-9,
        max_iter: 50_000,
        ..AdmmSettings::default()
    };
    let admm = solve(&qp, &tight)?;
    let reference = projected_gradient_solve(&qp, 1e-12, 500_000)?;

    let fa = objective(&qp, &admm.split_pi);
    let fr = objective(&qp, &reference);
    println!(
        "admm      : {fa:.10} ({} iterations, {:?})",
        admm.iterations, admm.status
    );
    println!("reference : {fr:.10}");
    println!("gap       : {:.3e}", (fa - fr).abs() / fr.abs().max(1.0));
    println!("max |diff|: {:.3e}", (&admm.split_pi - &reference).amax());
    Ok(())
}
