//! `gatlab` command-line entry point.
//!
//! Exit codes: 0 success, 1 validation error, 2 I/O error, 3 tolerance
//! breach. The default output directory is taken from `GATLAB_OUT_DIR` when
//! set, falling back to the current directory. A `--config` file of
//! `key=value` lines supplies defaults that explicit flags override.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gatlab_core::dataset::{
    self, generate, test_split_seed, ExperimentKind, ExperimentSpec, DEFAULT_M,
};
use gatlab_core::gradients::{run_grad_check, sign_condition};
use gatlab_core::graphs::{star_graph, Graph};
use gatlab_core::metrics::{box_stats, quantile, SweepSummary};
use gatlab_core::models::{load_checkpoint, save_checkpoint, Variant, VariantConfig};
use gatlab_core::plots::{boxplot, line_plot, Series};
use gatlab_core::training::{sweep, train, RunResult, TrainConfig};
use gatlab_core::Error;

/// Environment variable naming the default output directory.
const OUT_DIR_ENV: &str = "GATLAB_OUT_DIR";

/// Relative-error tolerance for `grad-check`; breaching it exits with code 3.
const GRAD_CHECK_TOL: f64 = 1e-4;

#[derive(Parser)]
#[command(name = "gatlab", version, about = "Graph-attention experiment lab")]
struct Cli {
    /// Optional key=value config file; explicit flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: $GATLAB_OUT_DIR, else the current dir).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset CSV for one experiment.
    GenData {
        #[arg(long)]
        experiment: ExperimentKind,
        #[arg(long)]
        seed: Option<u64>,
        /// Sample count M.
        #[arg(long)]
        m: Option<usize>,
        /// Output CSV path (default: <out-dir>/dataset-exp<E>-seed<S>.csv).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train one model and write checkpoint, histogram and loss-trace CSVs.
    Train(TrainArgs),
    /// Train one variant over many seeds; write per-seed CSV and SVG plots.
    Sweep {
        #[command(flatten)]
        train: TrainArgs,
        /// Number of seeds (runs seeds 0..E).
        #[arg(long)]
        seeds: Option<usize>,
    },
    /// Three-way gradient comparison: analytic vs autodiff vs finite
    /// differences.
    GradCheck {
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Zero-gradient sign-condition report for a checkpoint on a dataset.
    AnalyzeSigns {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
    /// Aggregate existing sweep CSVs into comparison plots.
    Report {
        /// Sweep CSV files produced by the sweep command.
        #[arg(long, required = true, num_args = 1..)]
        sweeps: Vec<PathBuf>,
        /// Basename for the emitted SVGs (default: report).
        #[arg(long)]
        name: Option<String>,
    },
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    variant: Variant,
    #[arg(long)]
    experiment: ExperimentKind,
    /// Initialization / shuffling seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Latent dimension d' (default: 1 for Experiment I, 2 for II).
    #[arg(long)]
    dprime: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Training set size (default 20000).
    #[arg(long)]
    m_train: Option<usize>,
    /// Test set size (default 20000).
    #[arg(long)]
    m_test: Option<usize>,
    /// Dataset generation seed (default 0).
    #[arg(long)]
    data_seed: Option<u64>,
    /// Load the training split from a CSV instead of generating it.
    #[arg(long)]
    train_data: Option<PathBuf>,
    /// Load the test split from a CSV instead of generating it.
    #[arg(long)]
    test_data: Option<PathBuf>,
    /// Record per-epoch gradient-health audit rows.
    #[arg(long)]
    audit: bool,
}

/// `key=value` per line; `#` starts a comment.
fn load_config(path: &Path) -> Result<BTreeMap<String, String>, Error> {
    let text = std::fs::read_to_string(path)?;
    let mut map = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or(Error::Parse {
            line: idx + 1,
            msg: "expected key=value".into(),
        })?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

/// Flag value if given, else the config-file entry, else `default`.
fn resolve<T: std::str::FromStr>(
    flag: Option<T>,
    cfg: &BTreeMap<String, String>,
    key: &str,
    default: T,
) -> Result<T, Error> {
    if let Some(v) = flag {
        return Ok(v);
    }
    match cfg.get(key) {
        Some(raw) => raw
            .parse()
            .map_err(|_| Error::invalid(format!("config key '{key}': bad value '{raw}'"))),
        None => Ok(default),
    }
}

struct ResolvedTrain {
    variant: Variant,
    experiment: ExperimentKind,
    cfg: VariantConfig,
    tcfg: TrainConfig,
    graph: Graph,
    train_set: Vec<dataset::Sample>,
    test_set: Vec<dataset::Sample>,
}

fn resolve_train(
    args: &TrainArgs,
    file_cfg: &BTreeMap<String, String>,
) -> Result<ResolvedTrain, Error> {
    let experiment = args.experiment;
    let dprime = resolve(args.dprime, file_cfg, "dprime", experiment.latent_dim())?;
    if dprime != experiment.latent_dim() {
        return Err(Error::invalid(format!(
            "experiment {experiment} requires d' = {}, got {dprime}",
            experiment.latent_dim()
        )));
    }
    let defaults = TrainConfig::default();
    let tcfg = TrainConfig {
        epochs: resolve(args.epochs, file_cfg, "epochs", defaults.epochs)?,
        batch_size: resolve(args.batch_size, file_cfg, "batch_size", defaults.batch_size)?,
        learning_rate: resolve(args.learning_rate, file_cfg, "learning_rate", defaults.learning_rate)?,
        seed: resolve(args.seed, file_cfg, "seed", 0)?,
        audit: args.audit || file_cfg.get("audit").map(|v| v == "true").unwrap_or(false),
        ..defaults
    };
    tcfg.validate()?;

    let graph = star_graph(3)?;
    let data_seed = resolve(args.data_seed, file_cfg, "data_seed", 0)?;
    let m_train = resolve(args.m_train, file_cfg, "m_train", DEFAULT_M)?;
    let m_test = resolve(args.m_test, file_cfg, "m_test", DEFAULT_M)?;
    let spec = ExperimentSpec::new(experiment, data_seed);
    let train_set = match &args.train_data {
        Some(p) => dataset::load(p)?,
        None => generate(&spec, &graph, m_train, data_seed)?,
    };
    let test_set = match &args.test_data {
        Some(p) => dataset::load(p)?,
        None => generate(&spec, &graph, m_test, test_split_seed(data_seed))?,
    };

    Ok(ResolvedTrain {
        variant: args.variant,
        experiment,
        cfg: VariantConfig::new(args.variant, dprime),
        tcfg,
        graph,
        train_set,
        test_set,
    })
}

fn summary_row(variant: Variant, r: &RunResult) -> String {
    match r.failed {
        Some(epoch) => format!("{:>16}  seed {:>3}  DIVERGED at epoch {epoch}", variant.cli_name(), r.seed),
        None => format!(
            "{:>16}  seed {:>3}  tpr {:.4}  me {:.6}  me_signed {:+.6}  var {:.6}  max {:.6}",
            variant.cli_name(),
            r.seed,
            r.tpr,
            r.stats.me,
            r.stats.me_signed,
            r.stats.variance,
            r.stats.max_error
        ),
    }
}

fn write(path: &Path, content: &str) -> Result<(), Error> {
    std::fs::write(path, content)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn run_train(out_dir: &Path, rt: &ResolvedTrain) -> Result<(), Error> {
    let r = train(&rt.cfg, &rt.graph, &rt.train_set, &rt.test_set, &rt.tcfg)?;
    println!("{}", summary_row(rt.variant, &r));

    let prefix = format!("{}-exp{}-seed{}", rt.variant.cli_name(), rt.experiment, r.seed);
    save_checkpoint(&out_dir.join(format!("{prefix}.ckpt")), &rt.cfg, r.seed, &r.params)?;
    println!("wrote {}", out_dir.join(format!("{prefix}.ckpt")).display());

    let mut loss_csv = String::from("epoch,loss\n");
    for (e, l) in r.loss_trace.iter().enumerate() {
        loss_csv.push_str(&format!("{e},{l:.16e}\n"));
    }
    write(&out_dir.join(format!("{prefix}-loss.csv")), &loss_csv)?;
    write(&out_dir.join(format!("{prefix}-hist.csv")), &r.histogram.to_csv())?;
    if rt.tcfg.audit {
        let mut audit_csv = String::from("epoch,fraction_dead,theta_r_grad_norm\n");
        for a in &r.audit {
            audit_csv.push_str(&format!(
                "{},{:.16e},{:.16e}\n",
                a.epoch, a.fraction_dead, a.theta_r_grad_norm
            ));
        }
        write(&out_dir.join(format!("{prefix}-audit.csv")), &audit_csv)?;
    }
    if let Some(epoch) = r.failed {
        return Err(Error::Diverged { epoch });
    }
    Ok(())
}

fn run_sweep(out_dir: &Path, rt: &ResolvedTrain, seeds: usize) -> Result<(), Error> {
    let results = sweep(&rt.cfg, &rt.graph, &rt.train_set, &rt.test_set, &rt.tcfg, seeds)?;
    let ok: Vec<&RunResult> = results.iter().filter(|r| !r.is_failed()).collect();
    for r in &results {
        println!("{}", summary_row(rt.variant, r));
    }
    if ok.is_empty() {
        return Err(Error::contract("every run in the sweep diverged"));
    }

    let summary = SweepSummary::new(
        rt.variant.cli_name().to_string(),
        ok.iter().map(|r| r.stats.me).collect(),
        ok.iter().map(|r| r.tpr).collect(),
        ok.iter().map(|r| r.stats.max_error).collect(),
        ok.iter().map(|r| r.stats.variance).collect(),
    )?;
    let prefix = format!("{}-exp{}-sweep", rt.variant.cli_name(), rt.experiment);
    write(&out_dir.join(format!("{prefix}.csv")), &summary.to_csv())?;

    let name = rt.variant.cli_name();
    let me_series = [Series { name, values: &summary.me }];
    let tpr_series = [Series { name, values: &summary.tpr }];
    write(
        &out_dir.join(format!("{prefix}-me.svg")),
        &line_plot("mean error per seed", "seed index", "me", &me_series),
    )?;
    write(
        &out_dir.join(format!("{prefix}-tpr.svg")),
        &line_plot("true-positive rate per seed", "seed index", "tpr", &tpr_series),
    )?;
    write(
        &out_dir.join(format!("{prefix}-me-box.svg")),
        &boxplot("mean error", "me", &[(name, &summary.me_box)]),
    )?;
    write(
        &out_dir.join(format!("{prefix}-tpr-box.svg")),
        &boxplot("true-positive rate", "tpr", &[(name, &summary.tpr_box)]),
    )?;

    let mut tprs = summary.tpr.clone();
    tprs.sort_by(f64::total_cmp);
    let mut mes = summary.me.clone();
    mes.sort_by(f64::total_cmp);
    println!(
        "{name}: {} ok / {} runs, median tpr {:.4}, median me {:.6}",
        ok.len(),
        results.len(),
        quantile(&tprs, 0.5),
        quantile(&mes, 0.5)
    );
    Ok(())
}

fn run_gen_data(
    out_dir: &Path,
    experiment: ExperimentKind,
    seed: u64,
    m: usize,
    out: Option<PathBuf>,
) -> Result<(), Error> {
    if m == 0 {
        return Err(Error::invalid("--m must be >= 1"));
    }
    let graph = star_graph(3)?;
    let spec = ExperimentSpec::new(experiment, seed);
    let samples = generate(&spec, &graph, m, seed)?;
    let path = out.unwrap_or_else(|| out_dir.join(format!("dataset-exp{experiment}-seed{seed}.csv")));
    dataset::save(&samples, &path)?;
    let (lo, hi) = experiment.value_range();
    println!(
        "wrote {} samples, experiment {experiment}, value range [{lo:.6}, {hi:.6}] -> {}",
        samples.len(),
        path.display()
    );
    Ok(())
}

fn run_grad_check_cmd(trials: usize, seed: u64) -> Result<bool, Error> {
    if trials == 0 {
        return Err(Error::invalid("--trials must be >= 1"));
    }
    let report = run_grad_check(trials, seed)?;
    let norm = |g: &[f64]| g.iter().map(|v| v * v).sum::<f64>().sqrt();
    println!("{:>6} {:>4} {:>14} {:>14} {:>14} {:>12}", "trial", "d'", "analytic", "autodiff", "finite-diff", "max rel err");
    for (i, t) in report.trials.iter().enumerate() {
        println!(
            "{i:>6} {:>4} {:>14.6e} {:>14.6e} {:>14.6e} {:>12.3e}",
            t.d_prime,
            norm(&t.analytic),
            norm(&t.autodiff),
            norm(&t.finite_diff),
            t.max_rel_err
        );
    }
    println!(
        "max relative error over {} trials: {:.3e} (tolerance {GRAD_CHECK_TOL:.0e})",
        trials, report.max_rel_err
    );
    Ok(report.max_rel_err <= GRAD_CHECK_TOL)
}

fn run_analyze_signs(checkpoint: &Path, data: &Path) -> Result<(), Error> {
    let (cfg, seed, params) = load_checkpoint(checkpoint)?;
    let samples = dataset::load(data)?;
    let graph = star_graph(3)?;
    println!(
        "checkpoint: variant {} (seed {seed}), d' = {}, {} samples",
        cfg.variant,
        cfg.d_prime,
        samples.len()
    );
    let mut total = 0.0;
    for (m, s) in samples.iter().enumerate() {
        let report = sign_condition(&params, &cfg, &graph, &s.x)?;
        total += report.fraction_dead;
        if m < 10 {
            let row: Vec<String> = report.dead[0]
                .iter()
                .map(|&d| if d { "dead".into() } else { "alive".into() })
                .collect();
            println!("sample {m:>5}: central node components [{}], fraction_dead {:.3}", row.join(", "), report.fraction_dead);
        }
    }
    println!(
        "mean fraction_dead over {} samples: {:.4}",
        samples.len(),
        total / samples.len() as f64
    );
    Ok(())
}

fn run_report(out_dir: &Path, sweeps: &[PathBuf], name: &str) -> Result<(), Error> {
    let mut labels = Vec::new();
    let mut mes = Vec::new();
    let mut tprs = Vec::new();
    for path in sweeps {
        let text = std::fs::read_to_string(path)?;
        let (me, tpr, _, _) = SweepSummary::from_csv(&text)?;
        if me.is_empty() {
            return Err(Error::contract(format!("{}: no data rows", path.display())));
        }
        let label = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        labels.push(label);
        mes.push(me);
        tprs.push(tpr);
    }

    let me_series: Vec<Series<'_>> = labels
        .iter()
        .zip(&mes)
        .map(|(l, v)| Series { name: l, values: v })
        .collect();
    let tpr_series: Vec<Series<'_>> = labels
        .iter()
        .zip(&tprs)
        .map(|(l, v)| Series { name: l, values: v })
        .collect();
    write(
        &out_dir.join(format!("{name}-me.svg")),
        &line_plot("mean error per seed", "seed index", "me", &me_series),
    )?;
    write(
        &out_dir.join(format!("{name}-tpr.svg")),
        &line_plot("true-positive rate per seed", "seed index", "tpr", &tpr_series),
    )?;

    let me_boxes: Vec<_> = mes.iter().map(|v| box_stats(v)).collect::<Result<_, _>>()?;
    let tpr_boxes: Vec<_> = tprs.iter().map(|v| box_stats(v)).collect::<Result<_, _>>()?;
    let me_groups: Vec<(&str, &gatlab_core::metrics::BoxStats)> =
        labels.iter().map(String::as_str).zip(me_boxes.iter()).collect();
    let tpr_groups: Vec<(&str, &gatlab_core::metrics::BoxStats)> =
        labels.iter().map(String::as_str).zip(tpr_boxes.iter()).collect();
    write(
        &out_dir.join(format!("{name}-me-box.svg")),
        &boxplot("mean error", "me", &me_groups),
    )?;
    write(
        &out_dir.join(format!("{name}-tpr-box.svg")),
        &boxplot("true-positive rate", "tpr", &tpr_groups),
    )?;

    for (label, (me, tpr)) in labels.iter().zip(mes.iter().zip(&tprs)) {
        let mut me = me.clone();
        let mut tpr = tpr.clone();
        me.sort_by(f64::total_cmp);
        tpr.sort_by(f64::total_cmp);
        println!(
            "{label}: {} seeds, median tpr {:.4}, median me {:.6}",
            me.len(),
            quantile(&tpr, 0.5),
            quantile(&me, 0.5)
        );
    }
    Ok(())
}

/// Exit code mapping: validation 1, I/O 2.
fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io(_) | Error::Parse { .. } => 2,
        _ => 1,
    }
}

fn run(cli: Cli) -> Result<bool, Error> {
    let file_cfg = match &cli.config {
        Some(p) => load_config(p)?,
        None => BTreeMap::new(),
    };
    let out_dir = cli
        .out_dir
        .or_else(|| file_cfg.get("out_dir").map(PathBuf::from))
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    if !out_dir.is_dir() {
        std::fs::create_dir_all(&out_dir)?;
    }

    match cli.command {
        Command::GenData { experiment, seed, m, out } => {
            let seed = resolve(seed, &file_cfg, "seed", 0)?;
            let m = resolve(m, &file_cfg, "m", DEFAULT_M)?;
            run_gen_data(&out_dir, experiment, seed, m, out)?;
        }
        Command::Train(args) => {
            let rt = resolve_train(&args, &file_cfg)?;
            run_train(&out_dir, &rt)?;
        }
        Command::Sweep { train, seeds } => {
            let rt = resolve_train(&train, &file_cfg)?;
            let seeds = resolve(seeds, &file_cfg, "seeds", 20)?;
            run_sweep(&out_dir, &rt, seeds)?;
        }
        Command::GradCheck { trials, seed } => {
            let trials = resolve(trials, &file_cfg, "trials", 100)?;
            let seed = resolve(seed, &file_cfg, "seed", 0)?;
            if !run_grad_check_cmd(trials, seed)? {
                return Ok(false);
            }
        }
        Command::AnalyzeSigns { checkpoint, data } => {
            run_analyze_signs(&checkpoint, &data)?;
        }
        Command::Report { sweeps, name } => {
            let name = name
                .or_else(|| file_cfg.get("name").cloned())
                .unwrap_or_else(|| "report".into());
            run_report(&out_dir, &sweeps, &name)?;
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    // clap exits with 2 on usage errors by default; remap to the documented
    // validation code 1 (help/version still exit 0)
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.exit_code() == 0 { 0 } else { 1 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        // tolerance breach (grad-check)
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
