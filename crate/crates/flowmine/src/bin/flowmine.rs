//! Command-line front end for the mining pipeline.
//!
//! Subcommands mirror the pipeline stages; every stage reads a JSON config
//! (all fields optional) with flag overrides on top. Progress lines go to
//! standard error; the evaluation table goes to standard output.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use flowmine::error::Error;
use flowmine::pipeline::{
    cmd_eval, cmd_mine, cmd_run, cmd_simulate, cmd_slice, cmd_train, default_model_files,
    default_trace_files, subtrace_files_from_index, PipelineConfig,
};

#[derive(Parser)]
#[command(
    name = "flowmine",
    version,
    about = "Mine message-flow patterns from concurrent execution traces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// JSON config file; flags below override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Flow definition files (overrides the config list).
    #[arg(long = "flows", num_args = 1..)]
    flows: Vec<String>,

    /// Output directory.
    #[arg(long)]
    out: Option<String>,

    #[arg(long)]
    seed: Option<u64>,

    /// Flow instances launched per initiator.
    #[arg(long)]
    instances: Option<u32>,

    #[arg(long = "delay-min")]
    delay_min: Option<u32>,

    #[arg(long = "delay-max")]
    delay_max: Option<u32>,

    /// Number of distinct address values.
    #[arg(long = "addr-pool")]
    addr_pool: Option<u64>,

    /// Number of traces to simulate (distinct seeds).
    #[arg(long)]
    traces: Option<u32>,

    /// Slicing method: none | address | causality | address+causality.
    #[arg(long)]
    slicing: Option<String>,

    /// Model backend: count | lstm.
    #[arg(long)]
    model: Option<String>,

    #[arg(long)]
    theta: Option<f64>,

    #[arg(long = "theta-prime")]
    theta_prime: Option<f64>,

    /// Maximum pattern length W.
    #[arg(long = "max-len")]
    max_len: Option<usize>,

    /// Comma-separated filters: causality,initiating.
    #[arg(long, value_delimiter = ',')]
    filters: Option<Vec<String>>,

    /// LSTM hidden width.
    #[arg(long)]
    hidden: Option<usize>,

    /// LSTM training epochs.
    #[arg(long)]
    epochs: Option<usize>,

    /// LSTM learning rate.
    #[arg(long)]
    lr: Option<f64>,

    /// Worker count for per-length training.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate traces from the configured flows.
    Simulate(ConfigArgs),
    /// Slice trace files into sub-traces.
    Slice {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Trace files; defaults to this config's simulated traces.
        trace_files: Vec<PathBuf>,
    },
    /// Train per-length models on sub-trace files.
    Train {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Sub-trace files; defaults to the slice index contents.
        subtrace_files: Vec<PathBuf>,
    },
    /// Extract patterns from trained model files.
    Mine {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Model files; defaults to the trained suite in the output dir.
        model_files: Vec<PathBuf>,
    },
    /// Classify mined patterns against the flows' ground truth.
    Eval {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Mined-pattern file; defaults to patterns.jsonl in the output dir.
        pattern_file: Option<PathBuf>,
    },
    /// Run the whole pipeline: simulate, slice, train, mine, eval.
    Run(ConfigArgs),
}

fn build_config(args: &ConfigArgs) -> Result<PipelineConfig, Error> {
    let mut cfg = match &args.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if !args.flows.is_empty() {
        cfg.flows = args.flows.clone();
    }
    if let Some(out) = &args.out {
        cfg.out = out.clone();
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(instances) = args.instances {
        cfg.instances_per_initiator = instances;
    }
    if let Some(d) = args.delay_min {
        cfg.delay_min = d;
    }
    if let Some(d) = args.delay_max {
        cfg.delay_max = d;
    }
    if let Some(p) = args.addr_pool {
        cfg.address_pool = p;
    }
    if let Some(t) = args.traces {
        cfg.trace_count = t;
    }
    if let Some(s) = &args.slicing {
        cfg.slicing = s.parse()?;
    }
    if let Some(m) = &args.model {
        cfg.model = m.parse()?;
    }
    if let Some(t) = args.theta {
        cfg.theta = t;
    }
    if let Some(t) = args.theta_prime {
        cfg.theta_prime = t;
    }
    if let Some(w) = args.max_len {
        cfg.max_len = w;
    }
    if let Some(filters) = &args.filters {
        cfg.filters.causality = false;
        cfg.filters.initiating = false;
        for f in filters {
            match f.as_str() {
                "causality" => cfg.filters.causality = true,
                "initiating" => cfg.filters.initiating = true,
                "" => {}
                other => {
                    return Err(Error::Config(format!(
                        "unknown filter `{other}` (expected causality, initiating)"
                    )))
                }
            }
        }
    }
    if let Some(h) = args.hidden {
        cfg.hyperparams.hidden = h;
    }
    if let Some(e) = args.epochs {
        cfg.hyperparams.epochs = e;
    }
    if let Some(lr) = args.lr {
        cfg.hyperparams.lr = lr;
    }
    if let Some(j) = args.jobs {
        cfg.jobs = j;
    }
    Ok(cfg)
}

fn exit_code_of(err: &Error) -> u8 {
    match err {
        // Usage and configuration problems.
        Error::Config(_) | Error::InvalidParams(_) | Error::UnknownSliceMethod(_) => 1,
        // Bad or missing input data.
        Error::Io { .. }
        | Error::Json { .. }
        | Error::TraceParse { .. }
        | Error::InvalidFlow { .. }
        | Error::UnknownFlow(_)
        | Error::EmptyFlowSet
        | Error::EmptyEventField { .. }
        | Error::PossiblyUnbounded { .. }
        | Error::UniverseTooLarge { .. }
        | Error::MissingModel { .. }
        | Error::EmptyWindows
        | Error::TrainingDiverged { .. } => 2,
        // Broken internal invariants.
        Error::UnknownPlace { .. }
        | Error::NotEnabled { .. }
        | Error::UnknownTransition { .. }
        | Error::InstanceStuck { .. }
        | Error::InconsistentWindow { .. }
        | Error::WrongPrefixLength { .. }
        | Error::OutOfVocabulary { .. } => 3,
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Simulate(args) => {
            let cfg = build_config(&args)?;
            cmd_simulate(&cfg)?;
        }
        Command::Slice { cfg, trace_files } => {
            let cfg = build_config(&cfg)?;
            let files =
                if trace_files.is_empty() { default_trace_files(&cfg) } else { trace_files };
            cmd_slice(&cfg, &files)?;
        }
        Command::Train { cfg, subtrace_files } => {
            let cfg = build_config(&cfg)?;
            let files = if subtrace_files.is_empty() {
                subtrace_files_from_index(&cfg)?
            } else {
                subtrace_files
            };
            cmd_train(&cfg, &files)?;
        }
        Command::Mine { cfg, model_files } => {
            let cfg = build_config(&cfg)?;
            let files =
                if model_files.is_empty() { default_model_files(&cfg) } else { model_files };
            cmd_mine(&cfg, &files)?;
        }
        Command::Eval { cfg, pattern_file } => {
            let cfg = build_config(&cfg)?;
            let file = pattern_file.unwrap_or_else(|| cfg.out_dir().join("patterns.jsonl"));
            let (_, report) = cmd_eval(&cfg, &file)?;
            print!("{}", report.render_table());
        }
        Command::Run(args) => {
            let cfg = build_config(&args)?;
            let (_, report) = cmd_run(&cfg)?;
            print!("{}", report.render_table());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_of(&err))
        }
    }
}
