use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use irfs_core::advisor::{Trainer, TrainerMode};
use irfs_core::dataio::{bundled_spambase_path, load_csv, LabelColumn, DEFAULT_TRAIN_RATIO};
use irfs_core::harness::{
    default_k, read_metrics_csv, read_summary, render_svg, run_baselines, run_exploration,
    write_run, write_summary, BaselineMethod, BaselineResult, ExplorationConfig, RunSummary,
    METRICS_FILE, SUMMARY_FILE, SVG_FILE,
};
use irfs_core::reward::{EqualShare, RewardScheme};
use irfs_core::staterep::StateMethod;
use irfs_core::Dataset;

#[derive(Parser)]
#[command(name = "irfs", version, about = "Multi-agent feature selection with trainer advice")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run exploration and write metrics.csv and summary.json.
    Run(RunArgs),
    /// Score the classical selectors on a dataset.
    Baseline(BaselineArgs),
    /// Rebuild the summary and plot from an existing run directory.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct DataArgs {
    /// CSV file; defaults to the bundled Spambase copy.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Label column: a header name, a zero-based index or `last`.
    #[arg(long)]
    label: Option<String>,
    #[arg(long)]
    split_ratio: Option<f64>,
    /// Seed of the train/test shuffle; defaults to `--seed`.
    #[arg(long)]
    split_seed: Option<u64>,
}

/// Every `run` option. The same names (snake_case) are accepted in the JSON
/// file given by `--config`; flags win over the file.
#[derive(Args, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunOptions {
    /// CSV file; defaults to the bundled Spambase copy.
    #[arg(long)]
    #[serde(default)]
    data: Option<PathBuf>,
    /// Label column: a header name, a zero-based index or `last`.
    #[arg(long)]
    #[serde(default)]
    label: Option<String>,
    #[arg(long)]
    #[serde(default)]
    split_ratio: Option<f64>,
    /// Seed of the train/test shuffle; defaults to `--seed`.
    #[arg(long)]
    #[serde(default)]
    split_seed: Option<u64>,
    /// Number of exploration steps.
    #[arg(long)]
    #[serde(default)]
    steps: Option<usize>,
    /// none, kbest, dtree or hybrid.
    #[arg(long)]
    #[serde(default)]
    trainer: Option<TrainerMode>,
    #[arg(long)]
    #[serde(default)]
    transfer_point: Option<usize>,
    /// Trainer order for hybrid mode, e.g. `kbest,dtree`.
    #[arg(long, value_parser = parse_order)]
    #[serde(default)]
    hybrid_order: Option<[Trainer; 2]>,
    /// 1 = importance-weighted, 2 = mean.
    #[arg(long, value_parser = parse_state)]
    #[serde(default)]
    state: Option<StateMethod>,
    /// equal, prs1 or prs2.
    #[arg(long)]
    #[serde(default)]
    reward: Option<RewardScheme>,
    /// divided or identical.
    #[arg(long, value_parser = parse_share)]
    #[serde(default)]
    equal_share: Option<EqualShare>,
    #[arg(long)]
    #[serde(default)]
    beta: Option<f64>,
    #[arg(long)]
    #[serde(default)]
    lambda: Option<f64>,
    #[arg(long)]
    #[serde(default)]
    gamma: Option<f64>,
    #[arg(long)]
    #[serde(default)]
    lr: Option<f64>,
    #[arg(long)]
    #[serde(default)]
    exploit_prob: Option<f64>,
    #[arg(long)]
    #[serde(default)]
    batch_size: Option<usize>,
    #[arg(long)]
    #[serde(default)]
    hidden: Option<usize>,
    #[arg(long)]
    #[serde(default)]
    memory_capacity: Option<usize>,
    #[arg(long)]
    #[serde(default)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    #[serde(default)]
    out: Option<PathBuf>,
    /// Also write accuracy.svg.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(default)]
    svg: Option<bool>,
    /// Add the baseline table to summary.json.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(default)]
    baselines: Option<bool>,
    /// Subset size for the baselines; defaults to half the features.
    #[arg(long)]
    #[serde(default)]
    k: Option<usize>,
    /// Save the trained agents under `<out>/agents`.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(default)]
    checkpoint: Option<bool>,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// JSON file with default values for any of the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    options: RunOptions,
}

#[derive(Args, Debug)]
struct BaselineArgs {
    #[command(flatten)]
    data: DataArgs,
    /// kbest, dtrfe or mrmr; repeat for several. Defaults to all three.
    #[arg(long)]
    method: Vec<BaselineMethod>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the results as JSON here as well.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Run directory containing metrics.csv.
    #[arg(long = "in")]
    input: PathBuf,
    /// Skip writing accuracy.svg.
    #[arg(long)]
    no_svg: bool,
}

fn parse_state(s: &str) -> Result<StateMethod, String> {
    let v: u8 = s.parse().map_err(|_| format!("state method must be 1 or 2, got {s:?}"))?;
    StateMethod::try_from(v)
}

fn parse_share(s: &str) -> Result<EqualShare, String> {
    match s.to_ascii_lowercase().as_str() {
        "divided" => Ok(EqualShare::Divided),
        "identical" => Ok(EqualShare::Identical),
        other => Err(format!("unknown equal share {other:?}")),
    }
}

fn parse_order(s: &str) -> Result<[Trainer; 2], String> {
    let parse = |t: &str| match t.trim().to_ascii_lowercase().as_str() {
        "kbest" => Ok(Trainer::KBest),
        "dtree" => Ok(Trainer::DTree),
        other => Err(format!("unknown trainer {other:?}")),
    };
    match s.split(',').collect::<Vec<_>>().as_slice() {
        [a, b] => Ok([parse(a)?, parse(b)?]),
        _ => Err("expected two comma-separated trainers".into()),
    }
}

macro_rules! merge {
    ($flags:ident, $file:ident; $($field:ident),* $(,)?) => {
        RunOptions { $($field: $flags.$field.or($file.$field)),* }
    };
}

impl RunOptions {
    fn merged_over(self, file: RunOptions) -> RunOptions {
        let flags = self;
        merge!(flags, file;
            data, label, split_ratio, split_seed, steps, trainer, transfer_point, hybrid_order,
            state, reward, equal_share, beta, lambda, gamma, lr, exploit_prob, batch_size,
            hidden, memory_capacity, seed, out, svg, baselines, k, checkpoint,
        )
    }

    fn exploration(&self) -> ExplorationConfig {
        let d = ExplorationConfig::default();
        ExplorationConfig {
            steps: self.steps.unwrap_or(d.steps),
            transfer_point: self.transfer_point.unwrap_or(d.transfer_point),
            hybrid_order: self.hybrid_order.unwrap_or(d.hybrid_order),
            trainer: self.trainer.unwrap_or(d.trainer),
            state_method: self.state.unwrap_or(d.state_method),
            reward_scheme: self.reward.unwrap_or(d.reward_scheme),
            equal_share: self.equal_share.unwrap_or(d.equal_share),
            beta: self.beta.unwrap_or(d.beta),
            lambda: self.lambda.unwrap_or(d.lambda),
            gamma: self.gamma.unwrap_or(d.gamma),
            lr: self.lr.unwrap_or(d.lr),
            exploit_prob: self.exploit_prob.unwrap_or(d.exploit_prob),
            batch_size: self.batch_size.unwrap_or(d.batch_size),
            hidden: self.hidden.unwrap_or(d.hidden),
            memory_capacity: self.memory_capacity.unwrap_or(d.memory_capacity),
            seed: self.seed.unwrap_or(d.seed),
            ..d
        }
    }

    fn data_args(&self) -> DataArgs {
        DataArgs {
            data: self.data.clone(),
            label: self.label.clone(),
            split_ratio: self.split_ratio,
            split_seed: self.split_seed,
        }
    }
}

fn load_dataset(args: &DataArgs, seed: u64) -> Result<(Dataset, String)> {
    let path = args.data.clone().unwrap_or_else(bundled_spambase_path);
    let label: LabelColumn = args.label.as_deref().unwrap_or("last").parse().expect("infallible");
    let dataset = load_csv(&path, &label).with_context(|| format!("loading {}", path.display()))?;
    if dataset.dropped_rows() > 0 {
        log::warn!("dropped {} rows with missing values", dataset.dropped_rows());
    }
    let dataset = dataset
        .split(args.split_ratio.unwrap_or(DEFAULT_TRAIN_RATIO), args.split_seed.unwrap_or(seed))
        .context("splitting dataset")?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    log::info!(
        "{name}: {} rows, {} features, {} classes",
        dataset.n_samples(),
        dataset.n_features(),
        dataset.n_classes()
    );
    Ok((dataset, name))
}

fn print_summary(summary: &RunSummary) {
    println!("steps      {}", summary.steps);
    println!("best acc   {:.4} (step {})", summary.best_acc, summary.best_step);
    println!("ave acc    {:.4}", summary.ave_acc);
    for w in &summary.windows {
        println!(
            "  [{:>5}, {:>5})  best {:.4}  ave {:.4}",
            w.start,
            w.start + w.len,
            w.best_acc,
            w.ave_acc
        );
    }
    let flips: Vec<String> = summary
        .flips_histogram
        .iter()
        .map(|(k, v)| format!("{k}:{v}"))
        .collect();
    println!("flips      {}", flips.join(" "));
    print_baselines(&summary.baselines);
}

fn print_baselines(results: &[BaselineResult]) {
    for b in results {
        println!("{:<7} k={:<3} acc {:.4}  {:?}", b.method.to_string(), b.k, b.acc, b.selected);
    }
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let file = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => RunOptions::default(),
    };
    let opts = args.options.merged_over(file);
    let config = opts.exploration();
    let out = opts.out.clone().unwrap_or_else(|| PathBuf::from("irfs-out"));
    let (dataset, name) = load_dataset(&opts.data_args(), config.seed)?;
    let run = run_exploration(&dataset, &config)?;
    let baselines = if opts.baselines.unwrap_or(true) {
        let k = opts.k.unwrap_or_else(|| default_k(dataset.n_features()));
        run_baselines(&dataset, &BaselineMethod::ALL, k)?
    } else {
        Vec::new()
    };
    let summary = write_run(&out, &run, Some(&name), baselines, opts.svg.unwrap_or(false))?;
    if opts.checkpoint.unwrap_or(false) {
        irfs_core::agents::save_checkpoint(&run.agents, out.join("agents"))?;
    }
    print_summary(&summary);
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_baseline(args: BaselineArgs) -> Result<()> {
    let (dataset, _) = load_dataset(&args.data, args.seed)?;
    let methods = if args.method.is_empty() {
        BaselineMethod::ALL.to_vec()
    } else {
        args.method.clone()
    };
    let k = args.k.unwrap_or_else(|| default_k(dataset.n_features()));
    let results = run_baselines(&dataset, &methods, k)?;
    print_baselines(&results);
    if let Some(out) = &args.out {
        std::fs::write(out, serde_json::to_string_pretty(&results)? + "\n")
            .with_context(|| format!("writing {}", out.display()))?;
    }
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<()> {
    let dir: &Path = &args.input;
    let metrics = dir.join(METRICS_FILE);
    if !metrics.exists() {
        bail!("{} not found", metrics.display());
    }
    let rows = read_metrics_csv(&metrics)?;
    let mut summary = RunSummary::from_rows(&rows)?;
    if dir.join(SUMMARY_FILE).exists() {
        let old = read_summary(dir)?;
        summary.dataset = old.dataset;
        summary.config = old.config;
        summary.baselines = old.baselines;
        if old.best_step == summary.best_step {
            summary.best_subset = old.best_subset;
        }
    }
    write_summary(dir, &summary)?;
    if !args.no_svg {
        let title = summary.dataset.as_deref().unwrap_or("exploration");
        std::fs::write(dir.join(SVG_FILE), render_svg(&rows, title))?;
    }
    print_summary(&summary);
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Run(a) => cmd_run(a),
        Command::Baseline(a) => cmd_baseline(a),
        Command::Report(a) => cmd_report(a),
    }
}
