use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mtnpsvm::{decision_values, fit, load_csv, AdmmSettings, Hyperparams};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mtnpsvm"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn synth(dir: &Path) -> PathBuf {
    let data = dir.join("d.csv");
    let o = run(&[
        "synth",
        "--tasks",
        "3",
        "--per-class",
        "40",
        "--dim",
        "2",
        "--seed",
        "7",
        "-o",
        p(&data),
    ]);
    assert_eq!(code(&o), 0, "{o:?}");
    data
}

#[test]
fn synth_writes_deterministic_rows() {
    let dir = tempfile::tempdir().unwrap();
    let a = synth(dir.path());
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text.lines().count(), 1 + 240);
    assert!(text.starts_with("task,label,f1,f2\n"));
    let b = dir.path().join("again.csv");
    run(&["synth", "--seed", "7", "-o", p(&b)]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(code(&run(&["synth", "--per-class", "0", "-o", p(&b)])), 2);
}

#[test]
fn train_then_predict_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path());
    let model = dir.path().join("m.json");
    let trace = dir.path().join("trace.csv");
    let report = dir.path().join("report.json");
    let o = run(&[
        "train",
        "-i",
        p(&data),
        "-o",
        p(&model),
        "--trace",
        p(&trace),
        "--report",
        p(&report),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("support vectors"));

    let diag: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    for problem in ["first", "second"] {
        let comp = diag["kkt"][problem]["complementarity"].as_f64().unwrap();
        assert!(comp <= 1e-6);
    }
    let trace_text = std::fs::read_to_string(&trace).unwrap();
    let mut lines = trace_text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "problem,iteration,objective,primal_residual,dual_residual,primal_threshold,dual_threshold"
    );
    assert!(lines.clone().any(|l| l.starts_with("first,1,")));
    assert!(lines.any(|l| l.starts_with("second,1,")));

    let preds = dir.path().join("p.csv");
    let o = run(&["predict", "-m", p(&model), "-i", p(&data), "-o", p(&preds)]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(&preds).unwrap();
    let truth = std::fs::read_to_string(&data).unwrap();
    let mut hits = 0;
    let mut rows = 0;
    let ds = load_csv(&data).unwrap();
    let in_memory = fit(&ds, &Hyperparams::default(), &AdmmSettings::default()).unwrap();
    for (pred, given) in text.lines().skip(1).zip(truth.lines().skip(1)) {
        let f: Vec<&str> = pred.split(',').collect();
        let g: Vec<&str> = given.split(',').collect();
        rows += 1;
        hits += usize::from(f[1] == g[1]);
        let x: Vec<f64> = g[2..].iter().map(|v| v.parse().unwrap()).collect();
        let (g1, g2) = decision_values(&in_memory, &x, f[0].parse().unwrap()).unwrap();
        assert_eq!(f[2].parse::<f64>().unwrap().to_bits(), g1.to_bits());
        assert_eq!(f[3].parse::<f64>().unwrap().to_bits(), g2.to_bits());
    }
    assert_eq!(rows, 240);
    assert!(hits as f64 / rows as f64 >= 0.95);
}

#[test]
fn train_error_codes() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path());
    let model = dir.path().join("m.json");
    let o = run(&[
        "train",
        "-i",
        p(&data),
        "-o",
        p(&model),
        "--epsilon",
        "-0.1",
    ]);
    assert_eq!(code(&o), 2);
    let missing = dir.path().join("absent.csv");
    assert_eq!(
        code(&run(&["train", "-i", p(&missing), "-o", p(&model)])),
        3
    );
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "task,label,f1\n1,0,0.5\n").unwrap();
    let o = run(&["train", "-i", p(&bad), "-o", p(&model)]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("invalid label"));
    assert!(!model.exists());
}

#[test]
fn predict_rejects_unknown_task_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path());
    let model = dir.path().join("m.json");
    run(&["train", "-i", p(&data), "-o", p(&model)]);
    let probe = dir.path().join("probe.csv");
    std::fs::write(&probe, "task,f1,f2\n1,0.1,0.2\n9,0.0,0.0\n").unwrap();
    let o = run(&["predict", "-m", p(&model), "-i", p(&probe)]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn tune_single_cell_and_reproducibility() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path());
    let one = [
        "tune",
        "-i",
        p(&data),
        "--rho1-grid",
        "2",
        "--c1-grid",
        "0.5",
        "--c2-grid",
        "1",
        "--epsilon-grid",
        "0.2",
    ];
    let o = run(&one);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.contains("best of 1 cells"));
    assert!(out.contains("rho1 2 rho2 2 c1 0.5 c2 1 c3 0.5 c4 1 epsilon 0.2"));

    let cells = |name: &str| {
        let path = dir.path().join(name);
        let o = run(&[
            "tune",
            "-i",
            p(&data),
            "--rho1-grid",
            "0.5,2",
            "--c1-grid",
            "0.5,2",
            "--c2-grid",
            "1",
            "--epsilon-grid",
            "0.1,0.3",
            "--seed",
            "3",
            "--folds",
            "4",
            "-o",
            p(&path),
        ]);
        assert_eq!(code(&o), 0);
        (std::fs::read_to_string(path).unwrap(), stdout(&o))
    };
    let (a, report) = cells("a.csv");
    let (b, _) = cells("b.csv");
    assert_eq!(a, b);
    assert_eq!(a.lines().count(), 1 + 8);
    let best: f64 = report
        .split("accuracy ")
        .nth(1)
        .unwrap()
        .split_whitespace()
        .next()
        .unwrap()
        .parse()
        .unwrap();
    for line in a.lines().skip(1) {
        let mean: f64 = line.split(',').nth(9).unwrap().parse().unwrap();
        assert!(best >= (mean * 1e4).round() / 1e4 - 1e-12);
    }
}

#[test]
fn sparsity_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path());
    let o = run(&["sparsity", "-i", p(&data)]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[0][0], 0.1);
    assert!(rows[4][1] <= rows[0][1] && rows[4][3] <= rows[0][3]);
    assert_eq!(
        code(&run(&["sparsity", "-i", p(&data), "--epsilons", ""])),
        2
    );
}

#[test]
fn friedman_reports_ranks_and_statistics() {
    let o = run(&["friedman", "-i", p(&fixture("benchmark_accuracy.csv"))]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.contains("average rank"));
    // independent hand computation of this table: chi2_F = 37.35, F_F = 9.9316
    assert!(out.contains("chi2_F = 37.3500"), "{out}");
    assert!(out.contains("F_F = 9.9316"), "{out}");

    let dir = tempfile::tempdir().unwrap();
    let single = dir.path().join("one.csv");
    std::fs::write(&single, "dataset,a,b\nx,0.9,0.8\n").unwrap();
    let o = run(&["friedman", "-i", p(&single)]);
    assert_eq!(code(&o), 3);
    assert!(stdout(&o).contains("1.000"));

    let twins = dir.path().join("twins.csv");
    std::fs::write(&twins, "dataset,a,b,c\nx,0.9,0.9,0.5\ny,0.7,0.7,0.8\n").unwrap();
    let out = stdout(&run(&["friedman", "-i", p(&twins)]));
    assert!(out.contains("  1.500   1.500   3.000"), "{out}");
}

#[test]
fn config_file_and_thread_override() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path());
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[hyper]\nepsilon = 0.4\nc1 = 2.0\n").unwrap();
    let model = dir.path().join("m.json");
    let o = run(&[
        "--config",
        p(&cfg),
        "train",
        "-i",
        p(&data),
        "-o",
        p(&model),
        "--epsilon",
        "0.3",
    ]);
    assert_eq!(code(&o), 0);
    assert!(
        stdout(&o).contains("c 2 1 1 1 epsilon 0.3"),
        "{}",
        stdout(&o)
    );

    let o = bin()
        .env("MTNPSVM_THREADS", "zero")
        .args(["train", "-i", p(&data), "-o", p(&model)])
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
    let o = bin()
        .env("MTNPSVM_THREADS", "2")
        .args(["train", "-i", p(&data), "-o", p(&model)])
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert_eq!(code(&run(&["--help"])), 0);
}
