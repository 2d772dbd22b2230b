//! Command-line front end. Flags override the `--config` TOML file, which
//! overrides built-in defaults.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::admm::{AdmmSettings, AdmmTrace};
use crate::data::{load_csv, load_feature_csv, synth_blobs, write_csv};
use crate::error::{Error, ErrorKind, Result};
use crate::eval::{cross_validate, friedman_table, AccuracyTable, GridSpec};
use crate::kernel::{KernelKind, KernelSpec};
use crate::model::{
    classify, count_support_vectors, decision_values, fit, Hyperparams, TrainedModel,
    DEFAULT_KKT_TOL, DEFAULT_SV_TOL,
};
use crate::persist::{atomic_write, load_model, save_model};

pub const THREADS_ENV: &str = "MTNPSVM_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "mtnpsvm",
    version,
    about = "Multi-task nonparallel support vector machines"
)]
pub struct Cli {
    /// TOML file with [hyper], [admm] and [grid] tables plus optional seed and folds.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a seeded synthetic multi-task dataset.
    Synth(SynthArgs),
    /// Fit a model and write it as JSON.
    Train(TrainArgs),
    /// Predict labels for a feature CSV with a task column.
    Predict(PredictArgs),
    /// Grid search with stratified k-fold cross-validation.
    Tune(TuneArgs),
    /// Support vector counts across a sweep of epsilon values.
    Sparsity(SparsityArgs),
    /// Ranks and Friedman statistics of an accuracy table.
    Friedman(FriedmanArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelArg {
    Linear,
    Rbf,
    #[serde(alias = "polynomial")]
    Poly,
}

impl From<KernelArg> for KernelKind {
    fn from(k: KernelArg) -> Self {
        match k {
            KernelArg::Linear => KernelKind::Linear,
            KernelArg::Rbf => KernelKind::Rbf,
            KernelArg::Poly => KernelKind::Polynomial,
        }
    }
}

#[derive(Debug, Default, Args)]
pub struct HyperArgs {
    #[arg(long)]
    pub rho1: Option<f64>,
    #[arg(long)]
    pub rho2: Option<f64>,
    #[arg(long)]
    pub c1: Option<f64>,
    #[arg(long)]
    pub c2: Option<f64>,
    #[arg(long)]
    pub c3: Option<f64>,
    #[arg(long)]
    pub c4: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub epsilon: Option<f64>,
    #[arg(long, value_enum)]
    pub kernel: Option<KernelArg>,
    /// RBF width or polynomial degree.
    #[arg(long)]
    pub kernel_param: Option<f64>,
}

#[derive(Debug, Default, Args)]
pub struct AdmmArgs {
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub delta_abs: Option<f64>,
    #[arg(long)]
    pub delta_rel: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
    pub tasks: u64,
    #[arg(long, default_value_t = 40, value_parser = clap::value_parser!(u64).range(1..))]
    pub per_class: u64,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// Angle (radians) between the class axes of consecutive tasks.
    #[arg(long, default_value_t = 0.3)]
    pub rotation: f64,
    #[arg(long, default_value_t = 0.5)]
    pub noise: f64,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(short, long)]
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Per-iteration ADMM trace of both problems as CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Diagnostics as JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub hyper: HyperArgs,
    #[command(flatten)]
    pub admm: AdmmArgs,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(short, long)]
    pub model: PathBuf,
    #[arg(short, long)]
    pub input: PathBuf,
    /// Defaults to standard output.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    #[arg(short, long)]
    pub input: PathBuf,
    /// Scores of every grid cell as CSV.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    pub rho1_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub rho2_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub c1_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub c2_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub c3_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub c4_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub epsilon_grid: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub kernel: Option<KernelArg>,
    /// RBF widths or polynomial degrees.
    #[arg(long, value_delimiter = ',')]
    pub kernel_grid: Option<Vec<f64>>,
    /// Search the negative-class parameters independently.
    #[arg(long)]
    pub asymmetric: bool,
    #[command(flatten)]
    pub admm: AdmmArgs,
}

#[derive(Debug, Args)]
pub struct SparsityArgs {
    #[arg(short, long)]
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.3,0.4,0.5")]
    pub epsilons: Vec<f64>,
    #[command(flatten)]
    pub hyper: HyperArgs,
    #[command(flatten)]
    pub admm: AdmmArgs,
}

#[derive(Debug, Args)]
pub struct FriedmanArgs {
    #[arg(short, long)]
    pub input: PathBuf,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct HyperFile {
    rho1: Option<f64>,
    rho2: Option<f64>,
    c1: Option<f64>,
    c2: Option<f64>,
    c3: Option<f64>,
    c4: Option<f64>,
    epsilon: Option<f64>,
    kernel: Option<KernelArg>,
    kernel_param: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct AdmmFile {
    mu: Option<f64>,
    delta_abs: Option<f64>,
    delta_rel: Option<f64>,
    max_iter: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct GridFile {
    rho1: Option<Vec<f64>>,
    rho2: Option<Vec<f64>>,
    c1: Option<Vec<f64>>,
    c2: Option<Vec<f64>>,
    c3: Option<Vec<f64>>,
    c4: Option<Vec<f64>>,
    epsilon: Option<Vec<f64>>,
    kernel: Option<KernelArg>,
    kernel_params: Option<Vec<f64>>,
    symmetric: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    seed: Option<u64>,
    folds: Option<usize>,
    hyper: HyperFile,
    admm: AdmmFile,
    grid: GridFile,
}

const DEFAULT_SEED: u64 = 7;
const DEFAULT_FOLDS: usize = 5;

fn load_config(path: Option<&Path>) -> Result<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingInput(path.to_path_buf()),
        _ => Error::io(path, e),
    })?;
    toml::from_str(&text)
        .map_err(|e| Error::InvalidParameter(format!("config {}: {e}", path.display())))
}

fn default_kernel_param(kind: KernelKind) -> f64 {
    match kind {
        KernelKind::Polynomial => 2.0,
        _ => 1.0,
    }
}

fn resolve_hyper(args: &HyperArgs, file: &HyperFile) -> Result<Hyperparams> {
    let d = Hyperparams::default();
    let kind: KernelKind = args
        .kernel
        .or(file.kernel)
        .map(Into::into)
        .unwrap_or(d.kernel.kind);
    let kernel = KernelSpec {
        kind,
        delta: args
            .kernel_param
            .or(file.kernel_param)
            .unwrap_or_else(|| default_kernel_param(kind)),
    };
    let h = Hyperparams {
        rho1: args.rho1.or(file.rho1).unwrap_or(d.rho1),
        rho2: args.rho2.or(file.rho2).unwrap_or(d.rho2),
        c1: args.c1.or(file.c1).unwrap_or(d.c1),
        c2: args.c2.or(file.c2).unwrap_or(d.c2),
        c3: args.c3.or(file.c3).unwrap_or(d.c3),
        c4: args.c4.or(file.c4).unwrap_or(d.c4),
        epsilon: args.epsilon.or(file.epsilon).unwrap_or(d.epsilon),
        kernel,
    };
    h.validate()?;
    Ok(h)
}

fn resolve_admm(args: &AdmmArgs, file: &AdmmFile) -> Result<AdmmSettings> {
    let d = AdmmSettings::default();
    let s = AdmmSettings {
        mu: args.mu.or(file.mu).unwrap_or(d.mu),
        delta_abs: args.delta_abs.or(file.delta_abs).unwrap_or(d.delta_abs),
        delta_rel: args.delta_rel.or(file.delta_rel).unwrap_or(d.delta_rel),
        max_iter: args.max_iter.or(file.max_iter).unwrap_or(d.max_iter),
    };
    s.validate()?;
    Ok(s)
}

fn resolve_grid(args: &TuneArgs, file: &GridFile) -> Result<GridSpec> {
    let d = GridSpec::default();
    let pick = |flag: &Option<Vec<f64>>, conf: &Option<Vec<f64>>, default: Vec<f64>| {
        flag.clone().or_else(|| conf.clone()).unwrap_or(default)
    };
    let kind: KernelKind = args
        .kernel
        .or(file.kernel)
        .map(Into::into)
        .unwrap_or(KernelKind::Linear);
    let kernels = match args
        .kernel_grid
        .clone()
        .or_else(|| file.kernel_params.clone())
    {
        Some(params) if kind != KernelKind::Linear => params
            .into_iter()
            .map(|delta| {
                let k = KernelSpec { kind, delta };
                k.validate().map(|_| k)
            })
            .collect::<Result<Vec<_>>>()?,
        _ => GridSpec::kernel_grid(kind),
    };
    let grid = GridSpec {
        rho1: pick(&args.rho1_grid, &file.rho1, d.rho1),
        rho2: pick(&args.rho2_grid, &file.rho2, d.rho2),
        c1: pick(&args.c1_grid, &file.c1, d.c1),
        c2: pick(&args.c2_grid, &file.c2, d.c2),
        c3: pick(&args.c3_grid, &file.c3, d.c3),
        c4: pick(&args.c4_grid, &file.c4, d.c4),
        epsilon: pick(&args.epsilon_grid, &file.epsilon, d.epsilon),
        kernels,
        symmetric: if args.asymmetric {
            false
        } else {
            file.symmetric.unwrap_or(true)
        },
    };
    grid.validate()?;
    Ok(grid)
}

/// Exit status for an error: 2 usage, 3 data, 4 solver, 5 I/O.
pub fn exit_code(err: &Error) -> u8 {
    match err.kind() {
        ErrorKind::Usage => 2,
        ErrorKind::Data => 3,
        ErrorKind::Solver => 4,
        ErrorKind::Io => 5,
    }
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value.parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        Error::InvalidParameter(format!(
            "{THREADS_ENV} must be a positive integer, got {value:?}"
        ))
    })?;
    // a second call in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

fn write_file(path: &Path, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    atomic_write(path, body)
}

fn io_err(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

fn write_trace(w: &mut dyn Write, traces: &(AdmmTrace, AdmmTrace)) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "problem",
        "iteration",
        "objective",
        "primal_residual",
        "dual_residual",
        "primal_threshold",
        "dual_threshold",
    ])?;
    for (name, trace) in [("first", &traces.0), ("second", &traces.1)] {
        for (i, r) in trace.records.iter().enumerate() {
            out.write_record([
                name.to_string(),
                (i + 1).to_string(),
                r.objective.to_string(),
                r.primal_residual.to_string(),
                r.dual_residual.to_string(),
                r.primal_threshold.to_string(),
                r.dual_threshold.to_string(),
            ])?;
        }
    }
    out.flush().map_err(io_err)?;
    Ok(())
}

fn print_train_report(out: &mut dyn Write, model: &TrainedModel) -> std::io::Result<()> {
    let h = model.hyper();
    let d = model.diagnostics();
    writeln!(
        out,
        "kernel {} rho1 {} rho2 {} c {} {} {} {} epsilon {}",
        h.kernel, h.rho1, h.rho2, h.c1, h.c2, h.c3, h.c4, h.epsilon
    )?;
    let problems = [
        ("first", d.first, d.support_vectors.first, d.kkt.first, h.c1),
        (
            "second",
            d.second,
            d.support_vectors.second,
            d.kkt.second,
            h.c3,
        ),
    ];
    for (name, summary, sv, kkt, c_band) in problems {
        if let Some(s) = summary {
            write!(
                out,
                "{name}: {:?} after {} iterations",
                s.status, s.iterations
            )?;
            if let Some(r) = s.final_record {
                write!(
                    out,
                    ", |r| {:.3e} <= {:.3e}, |s| {:.3e} <= {:.3e}, objective {:.6e}",
                    r.primal_residual,
                    r.primal_threshold,
                    r.dual_residual,
                    r.dual_threshold,
                    r.objective
                )?;
            }
            writeln!(out)?;
        }
        writeln!(out, "  support vectors: own {} other {}", sv.own, sv.other)?;
        let ok = kkt.complementarity <= DEFAULT_KKT_TOL * c_band;
        writeln!(
            out,
            "  complementarity {:.3e} ({}), box violation {:.3e}, band residual {:.3e}, hinge residual {:.3e}",
            kkt.complementarity,
            if ok { "ok" } else { "above tolerance" },
            kkt.box_violation,
            kkt.band_residual,
            kkt.hinge_residual
        )?;
    }
    Ok(())
}

fn cmd_synth(args: &SynthArgs, config: &FileConfig) -> Result<()> {
    let seed = args.seed.or(config.seed).unwrap_or(DEFAULT_SEED);
    let ds = synth_blobs(
        args.tasks as usize,
        args.per_class as usize,
        args.dim,
        args.rotation,
        args.noise,
        seed,
    )?;
    write_file(&args.output, |w| write_csv(&ds, w))
}

fn cmd_train(args: &TrainArgs, config: &FileConfig, out: &mut dyn Write) -> Result<()> {
    let hyper = resolve_hyper(&args.hyper, &config.hyper)?;
    let settings = resolve_admm(&args.admm, &config.admm)?;
    let ds = load_csv(&args.input)?;
    let model = fit(&ds, &hyper, &settings)?;
    save_model(&model, &args.output)?;
    if let (Some(path), Some(traces)) = (&args.trace, model.traces()) {
        write_file(path, |w| write_trace(w, traces))?;
    }
    if let Some(path) = &args.report {
        let json = serde_json::to_string_pretty(model.diagnostics())?;
        write_file(path, |w| {
            w.write_all(json.as_bytes()).map_err(|e| Error::io(path, e))
        })?;
    }
    print_train_report(out, &model).map_err(io_err)
}

fn cmd_predict(args: &PredictArgs, out: &mut dyn Write) -> Result<()> {
    let model = load_model(&args.model)?;
    let rows = load_feature_csv(&args.input)?;
    let mut table = Vec::with_capacity(rows.len());
    let (mut hits, mut labelled) = (0usize, 0usize);
    for row in &rows {
        let (g1, g2) =
            decision_values(&model, &row.features, row.task).map_err(|e| Error::Parse {
                line: row.line,
                message: e.to_string(),
            })?;
        let label = classify(g1, g2);
        if let Some(y) = row.label {
            labelled += 1;
            hits += usize::from(y == label);
        }
        table.push((row.task, label, g1, g2));
    }
    let emit = |w: &mut dyn Write| -> Result<()> {
        let mut csv_out = csv::Writer::from_writer(w);
        csv_out.write_record(["task", "label", "g1", "g2"])?;
        for (task, label, g1, g2) in &table {
            csv_out.write_record([
                task.to_string(),
                label.sign().to_string(),
                g1.to_string(),
                g2.to_string(),
            ])?;
        }
        csv_out.flush().map_err(io_err)?;
        Ok(())
    };
    match &args.output {
        Some(path) => {
            write_file(path, emit)?;
            if labelled > 0 {
                writeln!(out, "agreement with given labels: {hits}/{labelled}").map_err(io_err)?;
            }
            Ok(())
        }
        None => emit(out),
    }
}

fn cmd_tune(args: &TuneArgs, config: &FileConfig, out: &mut dyn Write) -> Result<()> {
    let grid = resolve_grid(args, &config.grid)?;
    let settings = resolve_admm(&args.admm, &config.admm)?;
    let folds = args.folds.or(config.folds).unwrap_or(DEFAULT_FOLDS);
    let seed = args.seed.or(config.seed).unwrap_or(DEFAULT_SEED);
    let ds = load_csv(&args.input)?;
    let cv = cross_validate(&ds, &grid, folds, seed, &settings)?;
    if let Some(path) = &args.output {
        write_file(path, |w| {
            let mut c = csv::Writer::from_writer(w);
            c.write_record([
                "rho1",
                "rho2",
                "c1",
                "c2",
                "c3",
                "c4",
                "epsilon",
                "kernel",
                "kernel_param",
                "mean_accuracy",
                "unconverged_folds",
            ])?;
            for cell in &cv.cells {
                let h = &cell.hyper;
                c.write_record([
                    h.rho1.to_string(),
                    h.rho2.to_string(),
                    h.c1.to_string(),
                    h.c2.to_string(),
                    h.c3.to_string(),
                    h.c4.to_string(),
                    h.epsilon.to_string(),
                    format!("{:?}", h.kernel.kind).to_lowercase(),
                    h.kernel.delta.to_string(),
                    cell.mean.to_string(),
                    cell.unconverged_folds.to_string(),
                ])?;
            }
            c.flush().map_err(io_err)?;
            Ok(())
        })?;
    }
    let best = cv.best_cell();
    let h = &best.hyper;
    writeln!(
        out,
        "best of {} cells ({folds}-fold, seed {seed}): mean task accuracy {:.4}",
        cv.cells.len(),
        best.mean
    )
    .map_err(io_err)?;
    writeln!(
        out,
        "rho1 {} rho2 {} c1 {} c2 {} c3 {} c4 {} epsilon {} kernel {}",
        h.rho1, h.rho2, h.c1, h.c2, h.c3, h.c4, h.epsilon, h.kernel
    )
    .map_err(io_err)
}

fn cmd_sparsity(args: &SparsityArgs, config: &FileConfig, out: &mut dyn Write) -> Result<()> {
    if args.epsilons.is_empty() {
        return Err(Error::InvalidParameter("empty epsilon sweep".into()));
    }
    let base = resolve_hyper(&args.hyper, &config.hyper)?;
    let settings = resolve_admm(&args.admm, &config.admm)?;
    let ds = load_csv(&args.input)?;
    let mut rows = Vec::with_capacity(args.epsilons.len());
    for &epsilon in &args.epsilons {
        let hyper = Hyperparams { epsilon, ..base };
        hyper.validate()?;
        let model = fit(&ds, &hyper, &settings)?;
        rows.push((epsilon, count_support_vectors(&model, DEFAULT_SV_TOL)));
    }
    let emit = |w: &mut dyn Write| -> Result<()> {
        let mut c = csv::Writer::from_writer(w);
        c.write_record([
            "epsilon",
            "first_own",
            "first_other",
            "second_own",
            "second_other",
        ])?;
        for (eps, sv) in &rows {
            c.write_record([
                eps.to_string(),
                sv.first.own.to_string(),
                sv.first.other.to_string(),
                sv.second.own.to_string(),
                sv.second.other.to_string(),
            ])?;
        }
        c.flush().map_err(io_err)?;
        Ok(())
    };
    match &args.output {
        Some(path) => write_file(path, emit),
        None => emit(out),
    }
}

fn cmd_friedman(args: &FriedmanArgs, out: &mut dyn Write) -> Result<()> {
    let file = std::fs::File::open(&args.input).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingInput(args.input.clone()),
        _ => Error::io(&args.input, e),
    })?;
    let table = AccuracyTable::read_csv(file)?;
    let report = friedman_table(&table);
    let fmt = |v: &[f64]| {
        v.iter()
            .map(|r| format!("{r:>7.3}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut text = String::new();
    let width = table
        .row_names()
        .iter()
        .map(String::len)
        .max()
        .unwrap_or(0)
        .max(12);
    text += &format!(
        "{:width$} {}\n",
        "",
        table
            .col_names()
            .iter()
            .map(|c| format!("{c:>7}"))
            .collect::<Vec<_>>()
            .join(" ")
    );
    for (name, ranks) in table.row_names().iter().zip(&report.ranks) {
        text += &format!("{name:width$} {}\n", fmt(ranks));
    }
    text += &format!("{:width$} {}\n", "average rank", fmt(&report.average_ranks));
    out.write_all(text.as_bytes()).map_err(io_err)?;
    match report.stats {
        Ok(s) => writeln!(out, "chi2_F = {:.4}\nF_F = {:.4}", s.chi2, s.f).map_err(io_err),
        Err(reason) => Err(Error::FriedmanUndefined(reason)),
    }
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    configure_threads()?;
    let config = load_config(cli.config.as_deref())?;
    match &cli.command {
        Command::Synth(a) => cmd_synth(a, &config),
        Command::Train(a) => cmd_train(a, &config, out),
        Command::Predict(a) => cmd_predict(a, out),
        Command::Tune(a) => cmd_tune(a, &config, out),
        Command::Sparsity(a) => cmd_sparsity(a, &config, out),
        Command::Friedman(a) => cmd_friedman(a, out),
    }
}

/// Parses `args`, runs the command and returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match run(&cli, &mut out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
