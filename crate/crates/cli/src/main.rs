use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use hierfuse::config::ProjectConfig;
use hierfuse::datagen::{generate, load_dataset, save_dataset, split, Splits};
use hierfuse::eval::{emit_report, evaluate, fmt_sig6, EvalReport};
use hierfuse::pipeline::{
    split_accuracy, train, TrainConfig, TrainedModel, Variant, CHECKPOINT_FILE,
};
use hierfuse::{Error, HierarchyTree};

const DATASET_FILE: &str = "dataset.csv";
const RUNS_DIR: &str = "runs";
const DEFAULT_LAMBDAS: [f64; 5] = [0.2, 0.5, 1.0, 2.0, 4.0];

#[derive(Parser)]
#[command(
    name = "hierfuse",
    version,
    about = "Hierarchical feature fusion for domain adaptation"
)]
struct Cli {
    /// Print the configuration (defaults, or --config merged over them) and exit.
    #[arg(long, global = true)]
    print_config: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic dataset and its splits.
    Gen(Common),
    /// Train one variant over the given seeds.
    Train(TrainArgs),
    /// Evaluate a trained run directory.
    Eval(EvalArgs),
    /// Train all four level assignments over the given seeds.
    Ablate(GridArgs),
    /// Train ours and baseline at each lambda.
    Sweep(SweepArgs),
    /// Re-evaluate every completed run under --out and write all tables.
    Report(GridArgs),
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct GridArgs {
    #[command(flatten)]
    common: Common,
    /// Dataset file; generated from the config when omitted.
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
    seeds: Vec<u64>,
    /// Upper bound on concurrent training jobs.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args, Clone)]
struct TrainArgs {
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    use_da: Option<bool>,
}

#[derive(Args, Clone)]
struct SweepArgs {
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, value_delimiter = ',')]
    lambdas: Option<Vec<f64>>,
}

#[derive(Args, Clone)]
struct EvalArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Run directory holding config.echo and checkpoint.final.
    #[arg(long)]
    run: PathBuf,
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Io(String),
    Diverged(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Io(_) => 3,
            Failure::Diverged(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Io(m) | Failure::Diverged(m) => m,
        }
    }
}

/// Errors raised while training or evaluating.
fn run_failure(e: Error) -> Failure {
    match e {
        Error::NonFiniteLoss | Error::NonFiniteInput => Failure::Diverged(e.to_string()),
        Error::Io { .. } | Error::Parse { .. } | Error::SchemaMismatch(_) => {
            Failure::Io(e.to_string())
        }
        _ => Failure::Config(e.to_string()),
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn load_config(path: Option<&Path>) -> CliResult<ProjectConfig> {
    match path {
        None => Ok(ProjectConfig::default()),
        Some(p) => ProjectConfig::load(p).map_err(|e| match e {
            Error::Io { .. } => Failure::Io(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }),
    }
}

fn build_splits(cfg: &ProjectConfig) -> CliResult<Splits> {
    let gen = cfg
        .gen_config()
        .map_err(|e| Failure::Config(e.to_string()))?;
    let samples = generate(&gen).map_err(|e| Failure::Config(e.to_string()))?;
    let mut s = split(
        &samples,
        (cfg.split.n_train_target, cfg.split.n_val_target),
        cfg.split.seed,
    )
    .map_err(|e| Failure::Config(e.to_string()))?;
    s.meta.gen_seed = Some(gen.seed);
    s.meta.tree = Some(gen.tree);
    s.meta.config_echo = cfg.data_echo();
    Ok(s)
}

/// Dataset from `path`, or generated from the config.
fn obtain_splits(cfg: &ProjectConfig, path: Option<&Path>) -> CliResult<(Splits, HierarchyTree)> {
    let splits = match path {
        Some(p) => load_dataset(p).map_err(|e| Failure::Io(e.to_string()))?,
        None => build_splits(cfg)?,
    };
    let tree = match &splits.meta.tree {
        Some(t) => t.clone(),
        None => cfg.tree().map_err(|e| Failure::Config(e.to_string()))?,
    };
    Ok((splits, tree))
}

fn run_name(t: &TrainConfig) -> String {
    format!(
        "{}_{}_lambda{}_seed{}",
        t.variant_name(),
        if t.use_da { "da" } else { "noda" },
        fmt_sig6(t.lambda),
        t.seed
    )
}

fn pool(jobs: usize) -> CliResult<rayon::ThreadPool> {
    if jobs == 0 {
        return Err(Failure::Config("--jobs must be >= 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Failure::Config(e.to_string()))
}

struct RunOutcome {
    model: TrainedModel,
    val_acc: f64,
}

/// Trains one configuration, or loads it when its run directory is complete.
fn train_or_resume(
    t: &TrainConfig,
    splits: &Splits,
    tree: &HierarchyTree,
    out: &Path,
) -> CliResult<RunOutcome> {
    let dir = out.join(RUNS_DIR).join(run_name(t));
    let model = if dir.join(CHECKPOINT_FILE).exists() {
        let m = TrainedModel::load_run(&dir).map_err(run_failure)?;
        if m.config != *t {
            return Err(Failure::Config(format!(
                "{} holds a run with a different configuration",
                dir.display()
            )));
        }
        m
    } else {
        let m = train(t, splits, tree).map_err(run_failure)?;
        m.save_run(&dir).map_err(run_failure)?;
        m
    };
    let val_acc = split_accuracy(&model, &splits.val_target).map_err(run_failure)?;
    Ok(RunOutcome { model, val_acc })
}

fn run_grid(
    configs: &[TrainConfig],
    splits: &Splits,
    tree: &HierarchyTree,
    out: &Path,
    jobs: usize,
) -> CliResult<Vec<RunOutcome>> {
    let results: Vec<CliResult<RunOutcome>> = pool(jobs)?.install(|| {
        configs
            .par_iter()
            .map(|t| train_or_resume(t, splits, tree, out))
            .collect()
    });
    results.into_iter().collect()
}

fn evaluate_all(
    runs: &[RunOutcome],
    splits: &Splits,
    tree: &HierarchyTree,
    cfg: &ProjectConfig,
    out: &Path,
) -> CliResult<Vec<EvalReport>> {
    let pairs = cfg
        .eval_pairs(tree)
        .map_err(|e| Failure::Config(e.to_string()))?;
    let reports = runs
        .iter()
        .map(|r| evaluate(&r.model, splits, tree, &pairs).map_err(run_failure))
        .collect::<CliResult<Vec<_>>>()?;
    emit_report(&reports, out).map_err(run_failure)?;
    Ok(reports)
}

fn mean_spread(v: &[f64]) -> String {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return format!("{:.2}", 100.0 * mean);
    }
    let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    format!("{:.2} ± {:.2}", 100.0 * mean, 100.0 * sd)
}

fn check_seeds(seeds: &[u64]) -> CliResult<()> {
    if seeds.is_empty() {
        return Err(Failure::Config(
            "--seeds must name at least one seed".into(),
        ));
    }
    Ok(())
}

fn prepare(grid: &GridArgs) -> CliResult<(ProjectConfig, Splits, HierarchyTree)> {
    check_seeds(&grid.seeds)?;
    let cfg = load_config(grid.common.config.as_deref())?;
    let (splits, tree) = obtain_splits(&cfg, grid.dataset.as_deref())?;
    std::fs::create_dir_all(&grid.common.out).map_err(|e| Failure::Io(e.to_string()))?;
    Ok((cfg, splits, tree))
}

fn cmd_gen(args: &Common) -> CliResult<()> {
    let cfg = load_config(args.config.as_deref())?;
    let splits = build_splits(&cfg)?;
    std::fs::create_dir_all(&args.out).map_err(|e| Failure::Io(e.to_string()))?;
    let path = args.out.join(DATASET_FILE);
    save_dataset(&splits, &path).map_err(|e| Failure::Io(e.to_string()))?;
    let n_classes = splits.meta.tree.as_ref().map_or(0, HierarchyTree::n_fine);
    println!("classes: {n_classes}");
    println!(
        "source: {}, target: {}",
        splits.train_source.len(),
        splits.n_target()
    );
    println!(
        "target splits: train {}, val {}, test {}",
        splits.train_target.len(),
        splits.val_target.len(),
        splits.test_target.len()
    );
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_train(args: &TrainArgs) -> CliResult<()> {
    let (cfg, splits, tree) = prepare(&args.grid)?;
    let mut base = cfg.train.clone();
    if let Some(v) = &args.variant {
        base.level_assignment = v
            .parse::<Variant>()
            .map_err(|e| Failure::Config(e.to_string()))?
            .levels();
    }
    if let Some(da) = args.use_da {
        base.use_da = da;
    }
    let configs: Vec<TrainConfig> = args
        .grid
        .seeds
        .iter()
        .map(|&seed| TrainConfig {
            seed,
            ..base.clone()
        })
        .collect();
    let runs = run_grid(
        &configs,
        &splits,
        &tree,
        &args.grid.common.out,
        args.grid.jobs,
    )?;
    let reports = evaluate_all(&runs, &splits, &tree, &cfg, &args.grid.common.out)?;
    let val: Vec<f64> = runs.iter().map(|r| r.val_acc).collect();
    let test: Vec<f64> = reports.iter().map(|r| r.top1).collect();
    println!(
        "{} ({} seeds): val top-1 {} %, test top-1 {} %",
        base.variant_name(),
        runs.len(),
        mean_spread(&val),
        mean_spread(&test)
    );
    Ok(())
}

fn cmd_ablate(args: &GridArgs) -> CliResult<()> {
    let (cfg, splits, tree) = prepare(args)?;
    let configs: Vec<TrainConfig> = Variant::ALL
        .iter()
        .flat_map(|&v| {
            let base = cfg.train.clone().with_variant(v);
            args.seeds.iter().map(move |&seed| TrainConfig {
                seed,
                use_da: true,
                ..base.clone()
            })
        })
        .collect();
    let runs = run_grid(&configs, &splits, &tree, &args.common.out, args.jobs)?;
    let reports = evaluate_all(&runs, &splits, &tree, &cfg, &args.common.out)?;
    for v in Variant::ALL {
        let acc: Vec<f64> = reports
            .iter()
            .filter(|r| r.variant == v.name())
            .map(|r| r.top1)
            .collect();
        println!("{:<18} test top-1 {} %", v.name(), mean_spread(&acc));
    }
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> CliResult<()> {
    let lambdas = args
        .lambdas
        .clone()
        .unwrap_or_else(|| DEFAULT_LAMBDAS.to_vec());
    if lambdas.is_empty() || lambdas.iter().any(|&l| !(l.is_finite() && l > 0.0)) {
        return Err(Failure::Config(
            "lambdas must be positive; train with --use-da false for the no-adaptation case".into(),
        ));
    }
    let (cfg, splits, tree) = prepare(&args.grid)?;
    let mut configs = Vec::new();
    for &lambda in &lambdas {
        for v in [Variant::Baseline, Variant::Ours] {
            for &seed in &args.grid.seeds {
                configs.push(TrainConfig {
                    seed,
                    lambda,
                    use_da: true,
                    ..cfg.train.clone().with_variant(v)
                });
            }
        }
    }
    let runs = run_grid(
        &configs,
        &splits,
        &tree,
        &args.grid.common.out,
        args.grid.jobs,
    )?;
    let reports = evaluate_all(&runs, &splits, &tree, &cfg, &args.grid.common.out)?;
    for &lambda in &lambdas {
        let line: Vec<String> = [Variant::Baseline, Variant::Ours]
            .iter()
            .map(|v| {
                let acc: Vec<f64> = reports
                    .iter()
                    .filter(|r| r.variant == v.name() && r.lambda == lambda)
                    .map(|r| r.top1)
                    .collect();
                format!("{} {} %", v.name(), mean_spread(&acc))
            })
            .collect();
        println!("lambda {}: {}", fmt_sig6(lambda), line.join(", "));
    }
    Ok(())
}

fn cmd_eval(args: &EvalArgs) -> CliResult<()> {
    let cfg = load_config(args.common.config.as_deref())?;
    if !args.run.join(CHECKPOINT_FILE).exists() {
        return Err(Failure::Io(format!(
            "no {CHECKPOINT_FILE} in {}",
            args.run.display()
        )));
    }
    let model = TrainedModel::load_run(&args.run).map_err(|e| Failure::Io(e.to_string()))?;
    let (splits, tree) = obtain_splits(&cfg, args.dataset.as_deref())?;
    std::fs::create_dir_all(&args.common.out).map_err(|e| Failure::Io(e.to_string()))?;
    let val_acc = split_accuracy(&model, &splits.val_target).map_err(run_failure)?;
    let reports = evaluate_all(
        &[RunOutcome { model, val_acc }],
        &splits,
        &tree,
        &cfg,
        &args.common.out,
    )?;
    let r = &reports[0];
    println!(
        "{} seed {}: test top-1 {:.2} %",
        r.variant,
        r.seed,
        100.0 * r.top1
    );
    for (c, a) in r.per_class_accuracy.iter().enumerate() {
        println!("  {:<8} {}", tree.fine_name(c), fmt_sig6(*a));
    }
    for e in &r.m_table {
        println!(
            "  M({0},{0}) (M({0},{1})): {2:.0}%({3:.0}%)",
            e.c1,
            e.c2,
            100.0 * e.m_self,
            100.0 * e.m_pair
        );
    }
    Ok(())
}

fn cmd_report(args: &GridArgs) -> CliResult<()> {
    let (cfg, splits, tree) = prepare(args)?;
    let runs_dir = args.common.out.join(RUNS_DIR);
    let mut dirs: Vec<PathBuf> = match std::fs::read_dir(&runs_dir) {
        Ok(rd) => rd
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.join(CHECKPOINT_FILE).exists())
            .collect(),
        Err(_) => Vec::new(),
    };
    dirs.sort();
    let runs = dirs
        .iter()
        .map(|d| {
            let model = TrainedModel::load_run(d).map_err(run_failure)?;
            let val_acc = split_accuracy(&model, &splits.val_target).map_err(run_failure)?;
            Ok(RunOutcome { model, val_acc })
        })
        .collect::<CliResult<Vec<_>>>()?;
    evaluate_all(&runs, &splits, &tree, &cfg, &args.common.out)?;
    println!(
        "{} runs reported under {}",
        runs.len(),
        args.common.out.display()
    );
    Ok(())
}

fn print_config(cli: &Cli) -> CliResult<()> {
    let path = match &cli.command {
        Some(Command::Gen(c)) => c.config.clone(),
        Some(Command::Train(t)) => t.grid.common.config.clone(),
        Some(Command::Ablate(g)) | Some(Command::Report(g)) => g.common.config.clone(),
        Some(Command::Sweep(s)) => s.grid.common.config.clone(),
        Some(Command::Eval(e)) => e.common.config.clone(),
        None => None,
    };
    print!("{}", load_config(path.as_deref())?.to_toml());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = if cli.print_config {
        print_config(&cli)
    } else {
        match &cli.command {
            Some(Command::Gen(a)) => cmd_gen(a),
            Some(Command::Train(a)) => cmd_train(a),
            Some(Command::Eval(a)) => cmd_eval(a),
            Some(Command::Ablate(a)) => cmd_ablate(a),
            Some(Command::Sweep(a)) => cmd_sweep(a),
            Some(Command::Report(a)) => cmd_report(a),
            None => Err(Failure::Config("no command given; see --help".into())),
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
