use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use coassoc_harness::experiment::{run_experiment_to_files, run_trial_metrics, TrialSetup};
use coassoc_harness::fetch::{self, Source};
use coassoc_harness::fixtures;
use coassoc_harness::{ExperimentConfig, ExperimentKind, Method, NoiseGrid};
use coassoc_refine::dataset::{self, CsvOptions, Dataset, LabelColumn};

/// Co-association label refinement experiments.
#[derive(Parser)]
#[command(name = "coassoc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Download a benchmark dataset and convert it to CSV.
    FetchData {
        /// drybean, pendigit, statlog or usps
        name: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a synthetic stand-in for a benchmark dataset as CSV.
    MakeFixture {
        /// drybean, pendigit, statlog or usps
        name: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Run an experiment grid and write per-trial rows, a summary and plot data.
    Run(RunArgs),
    /// Run a single trial and print every method's accuracy.
    RefineOnce(RefineOnceArgs),
}

#[derive(Args)]
struct DatasetArgs {
    /// CSV file, or `fixture:<name>` for a generated stand-in.
    #[arg(long)]
    dataset: String,
    /// The CSV has no header row.
    #[arg(long)]
    no_header: bool,
    /// Label column as a zero-based index or a header name (default: last).
    #[arg(long)]
    label_col: Option<String>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    data: DatasetArgs,
    /// acc-vs-peers, noise, boundary-k or batch-size
    #[arg(long)]
    experiment: ExperimentKind,
    /// Comma-separated peer counts.
    #[arg(long, value_delimiter = ',')]
    peers: Option<Vec<usize>>,
    /// Comma-separated boundary sizes.
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<usize>>,
    /// start:stop:step, or a single level.
    #[arg(long)]
    noise: Option<NoiseGrid>,
    /// Comma-separated test-batch sizes (batch-size experiment).
    #[arg(long, value_delimiter = ',')]
    batch: Option<Vec<usize>>,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    /// Training items per class and peer.
    #[arg(long, default_value_t = 3)]
    d: usize,
    #[arg(long, default_value_t = 3)]
    vote_k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    max_iters: usize,
    #[arg(long, default_value_t = 0.001)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.0)]
    pair_drop: f64,
    #[arg(long, default_value_t = 0.0)]
    peer_drop: f64,
    /// Record wall-clock time per trial (output is then not reproducible).
    #[arg(long)]
    timing: bool,
    /// Row file; the summary and plot files are written next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RefineOnceArgs {
    #[command(flatten)]
    data: DatasetArgs,
    #[arg(long)]
    peers: usize,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    #[arg(long, default_value_t = 3)]
    d: usize,
    #[arg(long, default_value_t = 3)]
    vote_k: usize,
}

fn load(args: &DatasetArgs) -> Result<(String, Dataset)> {
    if let Some(name) = args.dataset.strip_prefix("fixture:") {
        let spec = fixtures::fixture(name).with_context(|| format!("no fixture named {name:?}"))?;
        return Ok((
            spec.name.to_string(),
            dataset::z_normalize(fixtures::generate(spec, 1))?,
        ));
    }
    let path = Path::new(&args.dataset);
    let label_column = match &args.label_col {
        None => LabelColumn::Last,
        Some(s) => match s.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.clone()),
        },
    };
    let opts = CsvOptions {
        has_header: !args.no_header,
        label_column,
    };
    let raw = dataset::load_csv(path, &opts)?;
    let name = path.file_stem().map_or_else(
        || args.dataset.clone(),
        |s| s.to_string_lossy().into_owned(),
    );
    Ok((name, dataset::z_normalize(raw)?))
}

fn run(args: RunArgs) -> Result<()> {
    let (name, ds) = load(&args.data)?;
    let mut cfg = ExperimentConfig::defaults(args.experiment, name);
    if let Some(peers) = args.peers {
        cfg.peers = peers;
    }
    if let Some(k) = args.k {
        cfg.ks = k;
    }
    if let Some(noise) = args.noise {
        cfg.noise = noise;
    }
    if let Some(batch) = args.batch {
        cfg.batch_sizes = batch;
    }
    cfg.trials = args.trials;
    cfg.d = args.d;
    cfg.vote_k = args.vote_k;
    cfg.seed = args.seed;
    cfg.refine.max_iters = args.max_iters;
    cfg.refine.convergence_epsilon = args.epsilon;
    cfg.pair_drop_prob = args.pair_drop;
    cfg.peer_drop_prob = args.peer_drop;
    cfg.record_timing = args.timing;
    let files = run_experiment_to_files(&ds, &cfg, &args.out)?;
    println!("rows:    {}", files.rows.display());
    println!("summary: {}", files.summary.display());
    println!("plot:    {}", files.plot.display());
    Ok(())
}

fn refine_once(args: RefineOnceArgs) -> Result<()> {
    let (name, ds) = load(&args.data)?;
    let mut cfg = ExperimentConfig::defaults(ExperimentKind::AccVsPeers, name.clone());
    cfg.d = args.d;
    cfg.vote_k = args.vote_k;
    cfg.seed = args.seed;
    cfg.validate()?;
    if args.peers == 0 || args.k == 0 {
        bail!("--peers and --k must be positive");
    }
    let setup = TrialSetup::new(&cfg, args.peers, args.k, args.alpha, 0, None);
    let m = run_trial_metrics(&ds, &cfg, &setup)?;
    println!(
        "{name}: k_p={} k={} alpha={} seed={}",
        args.peers, args.k, args.alpha, setup.seed
    );
    for method in Method::ALL {
        println!("{:>8}  {:.4}", method.as_str(), m.get(method));
    }
    println!("sweeps    {}", m.iterations);
    Ok(())
}

fn main() -> ExitCode {
    let result = match Cli::parse().command {
        Command::FetchData { name, out } => name
            .parse::<Source>()
            .map_err(Into::into)
            .and_then(|s| fetch::fetch(s, &out).map_err(Into::into))
            .map(|path| println!("{}", path.display())),
        Command::MakeFixture { name, out, seed } => fixtures::fixture(&name)
            .with_context(|| format!("no fixture named {name:?}"))
            .and_then(|spec| {
                fixtures::write_csv(&fixtures::generate(spec, seed), &out)
                    .with_context(|| format!("cannot write {}", out.display()))
            })
            .map(|()| println!("{}", out.display())),
        Command::Run(args) => run(args),
        Command::RefineOnce(args) => refine_once(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // library errors already embed their cause in the message
            let mut msg = e.to_string();
            for cause in e.chain().skip(1) {
                let text = cause.to_string();
                if !msg.contains(&text) {
                    msg = format!("{msg}: {text}");
                }
            }
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
