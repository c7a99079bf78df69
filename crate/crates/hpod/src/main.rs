use std::fs;
use std::path::{Path, PathBuf};
use std::process;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hpod::error::{CliError, Result};
use hpod::io::{load_corpus, load_dataset, resolve_space, DEFAULT_LABEL_COL};
use hpod::{bench, model, report, StdClock};
use hpod_core::eval::{Method, MethodParams};
use hpod_core::pipeline::{hpod0_optimize, hpod_optimize_with_clock};
use hpod_core::{Acquisition, Algorithm, DetectorSpec, HpodOptions, InitStrategy};

#[derive(Parser)]
#[command(name = "hpod", version, about = "Meta-learned hyperparameter optimization for unsupervised outlier detection")]
struct Cli {
    /// Cap the worker pool at N threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Log progress at info level.
    #[arg(short, long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score the grid on a labeled corpus and train the meta-model.
    MetaTrain(MetaTrainArgs),
    /// Select hyperparameters for an unlabeled dataset.
    Optimize(OptimizeArgs),
    /// Leave-one-out comparison of selection methods on a labeled corpus.
    Benchmark(BenchmarkArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoArg {
    Lof,
    Iforest,
}

impl From<AlgoArg> for Algorithm {
    fn from(a: AlgoArg) -> Self {
        match a {
            AlgoArg::Lof => Algorithm::Lof,
            AlgoArg::Iforest => Algorithm::IForest,
        }
    }
}

#[derive(Args)]
struct MetaTrainArgs {
    /// Directory of labeled CSV datasets.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, value_enum)]
    algo: AlgoArg,
    /// HP-space manifest (JSON); defaults to the built-in space.
    #[arg(long)]
    space: Option<PathBuf>,
    #[arg(long, default_value = DEFAULT_LABEL_COL)]
    label_col: String,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum OptMethod {
    Hpod,
    Hpod0,
}

#[derive(Clone, Copy, ValueEnum)]
enum AcqArg {
    Ei,
    Greedy,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum InitArg {
    Meta,
    Random,
}

#[derive(Args)]
struct OptimizeArgs {
    /// meta_model.json written by `meta-train`.
    #[arg(long)]
    model: PathBuf,
    /// CSV dataset to optimize for.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 40)]
    iters: usize,
    #[arg(long, default_value_t = 10)]
    k_init: usize,
    /// Fresh random candidates per iteration, on top of the grid.
    #[arg(long, default_value_t = 2000)]
    candidates: usize,
    /// Stop after this many seconds (the running iteration completes).
    #[arg(long)]
    budget_secs: Option<f64>,
    #[arg(long)]
    seed: u64,
    #[arg(long, value_enum, default_value = "hpod")]
    method: OptMethod,
    /// Number of sampled settings for `--method hpod0`.
    #[arg(long, default_value_t = 50)]
    n_random: usize,
    #[arg(long, value_enum, default_value = "ei")]
    acquisition: AcqArg,
    #[arg(long, value_enum, default_value = "meta")]
    init: InitArg,
    /// Disable meta-surrogate transfer.
    #[arg(long)]
    no_transfer: bool,
    /// Add true-AP columns to the trace using the dataset's label column.
    #[arg(long)]
    with_labels: bool,
    #[arg(long, default_value = DEFAULT_LABEL_COL)]
    label_col: String,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, value_enum)]
    algo: AlgoArg,
    #[arg(long)]
    space: Option<PathBuf>,
    /// Comma-separated: default, random, gb, as, he, hpod0, hpod,
    /// hpod-greedy, hpod-randacq, hpod-randinit, hpod-notransfer.
    #[arg(long, default_value = "default,random,gb,as,he,hpod0,hpod")]
    methods: String,
    #[arg(long, default_value_t = 5)]
    trials: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = DEFAULT_LABEL_COL)]
    label_col: String,
    #[arg(long, default_value_t = 40)]
    iters: usize,
    #[arg(long, default_value_t = 10)]
    k_init: usize,
    #[arg(long, default_value_t = 2000)]
    candidates: usize,
    #[arg(long, default_value_t = 50)]
    n_random: usize,
    /// Members of the hyper-ensemble.
    #[arg(long, default_value_t = 10)]
    ensemble_size: usize,
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn meta_train(a: MetaTrainArgs) -> Result<()> {
    let space = resolve_space(a.algo.into(), a.space.as_deref())?;
    let corpus = load_corpus(&a.corpus, &a.label_col)?;
    let grid = space.grid()?;
    let clock = StdClock::start();
    let spec = DetectorSpec::new(space);
    let meta = bench::meta_train(&corpus, &spec, &grid, a.seed)?;
    create_dir(&a.out)?;
    model::save(&meta, &a.out.join("meta_model.json"))?;
    let mut summary = format!(
        "datasets: {}\ngrid settings: {}\nPPE rows: {}\nanchor set: {}\nPPE training MSE: {:.6}\nelapsed: {:.1}s\n",
        meta.perf.rows(),
        meta.perf.cols(),
        meta.perf.rows() * meta.perf.cols(),
        meta.anchors.settings.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" "),
        meta.ppe.train_mse.last().copied().unwrap_or(f64::NAN),
        hpod_core::pipeline::Clock::elapsed_ms(&clock) / 1000.0,
    );
    for d in &meta.datasets {
        summary.push_str(&format!("  {} ({} x {})\n", d.name, d.rows, d.cols));
    }
    let path = a.out.join("summary.txt");
    fs::write(&path, &summary).map_err(|e| CliError::io(&path, e))?;
    print!("{summary}");
    Ok(())
}

fn require(ok: bool, msg: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Config(msg.into()))
    }
}

fn optimize(a: OptimizeArgs) -> Result<()> {
    require(a.n_random >= 1, "--n-random must be at least 1")?;
    require(a.budget_secs.map_or(true, |b| b > 0.0), "--budget-secs must be positive")?;
    let meta = model::load(&a.model)?;
    require(
        (1..=meta.perf.cols()).contains(&a.k_init),
        &format!("--k-init must lie in 1..={}", meta.perf.cols()),
    )?;
    let loaded = load_dataset(&a.data, &a.label_col, a.with_labels)?;
    let ds = loaded.dataset;
    let labels = if a.with_labels { ds.y.as_deref() } else { None };
    let clock = StdClock::start();
    let (trace, method) = match a.method {
        OptMethod::Hpod => {
            let opts = HpodOptions {
                iters: a.iters,
                k_init: a.k_init,
                n_candidates: a.candidates,
                budget_secs: a.budget_secs,
                seed: a.seed,
                acquisition: match a.acquisition {
                    AcqArg::Ei => Acquisition::Ei,
                    AcqArg::Greedy => Acquisition::Greedy,
                    AcqArg::Random => Acquisition::Random,
                },
                init: match a.init {
                    InitArg::Meta => InitStrategy::Meta,
                    InitArg::Random => InitStrategy::Random,
                },
                transfer: !a.no_transfer,
            };
            (hpod_optimize_with_clock(&meta, &ds.x, labels, &opts, &clock)?, "hpod")
        }
        OptMethod::Hpod0 => (hpod0_optimize(&meta, &ds.x, labels, a.n_random, a.seed)?, "hpod0"),
    };
    create_dir(&a.out)?;
    let sel = report::selection_json(&meta.space, &trace, method, &meta.perf.datasets);
    report::write_json(&a.out.join("selected_hp.json"), &sel)?;
    report::write_trace(&a.out.join("trace.csv"), &meta.space, &trace, a.with_labels)?;
    println!("{}", serde_json::to_string(&sel["hp"]).unwrap_or_default());
    Ok(())
}

fn benchmark(a: BenchmarkArgs) -> Result<()> {
    require(a.trials >= 1, "--trials must be at least 1")?;
    require(a.n_random >= 1, "--n-random must be at least 1")?;
    require(a.ensemble_size >= 1, "--ensemble-size must be at least 1")?;
    let space = resolve_space(a.algo.into(), a.space.as_deref())?;
    let methods = a
        .methods
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.parse::<Method>().map_err(|e| CliError::Config(e.to_string())))
        .collect::<Result<Vec<_>>>()?;
    let corpus = load_corpus(&a.corpus, &a.label_col)?;
    let grid = space.grid()?;
    require((1..=grid.len()).contains(&a.k_init), &format!("--k-init must lie in 1..={}", grid.len()))?;
    let params = MethodParams {
        hpod: HpodOptions { iters: a.iters, k_init: a.k_init, n_candidates: a.candidates, ..HpodOptions::default() },
        hpod0_samples: a.n_random,
        ensemble_size: a.ensemble_size,
    };
    let spec = DetectorSpec::new(space);
    let rep = bench::loocv(&corpus, &spec, &grid, &methods, a.trials, a.seed, &params)?;
    report::write_report(&a.out, &spec.space, &rep)?;
    print!("{}", report::report_markdown(&rep, spec.algorithm.name()));
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(if cli.verbose { "info" } else { "warn" }))
        .init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    let result = match cli.command {
        Command::MetaTrain(a) => meta_train(a),
        Command::Optimize(a) => optimize(a),
        Command::Benchmark(a) => benchmark(a),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        process::exit(e.exit_code() as i32);
    }
}
