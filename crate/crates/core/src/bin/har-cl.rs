use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cl_har::bench::{self, RunConfig, DEFAULT_EMBED_PER_CLASS};
use cl_har::data::{check_data, HarData};
use cl_har::{Error, Result};

#[derive(Parser)]
#[command(
    name = "har-cl",
    version,
    about = "Continual-learning benchmark on UCI HAR inertial signals"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (method, seed) pair of a scenario and write result files.
    Run(RunArgs),
    /// Merge result bundles into a method-by-metric table.
    Report {
        /// Bundle directories (or summary.json files).
        #[arg(required = true)]
        bundles: Vec<PathBuf>,
        #[arg(long, default_value = "report.csv")]
        out: PathBuf,
    },
    /// Write penultimate-layer activations of the pretrained model.
    ExportEmbeddings {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = DEFAULT_EMBED_PER_CLASS)]
        per_class: usize,
        /// Output CSV file.
        #[arg(long, default_value = "embeddings.csv")]
        file: PathBuf,
    },
    /// Verify the dataset layout and row counts.
    CheckData {
        #[arg(long, env = "HAR_DATA_DIR")]
        data_dir: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Flat key = value configuration file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, env = "HAR_DATA_DIR")]
    data_dir: Option<PathBuf>,
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    case: Option<String>,
    /// Comma-separated: ewc, lwf, ewclwf, plain.
    #[arg(long)]
    method: Option<String>,
    /// Comma-separated seeds or ranges, e.g. `1-5`.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    epochs: Option<String>,
    #[arg(long)]
    lr: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    temperature: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    /// single or literal.
    #[arg(long)]
    combine_mode: Option<String>,
    /// round-mean or final-round.
    #[arg(long)]
    accuracy_mode: Option<String>,
    /// task-boundary or per-round.
    #[arg(long)]
    consolidation: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Any other configuration key, as key=value (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    extra: Vec<String>,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut c = RunConfig::default();
        if let Some(path) = &self.config {
            c.apply_file(path)?;
        }
        for kv in &self.extra {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Usage(format!("--set expects KEY=VALUE, got '{kv}'")))?;
            c.set(k, v)?;
        }
        let flags = [
            ("scenario", &self.scenario),
            ("case", &self.case),
            ("methods", &self.method),
            ("seeds", &self.seeds),
            ("epochs", &self.epochs),
            ("lr", &self.lr),
            ("alpha", &self.alpha),
            ("temperature", &self.temperature),
            ("lambda", &self.lambda),
            ("combine_mode", &self.combine_mode),
            ("accuracy_mode", &self.accuracy_mode),
            ("consolidation", &self.consolidation),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                c.set(k, v)?;
            }
        }
        if let Some(d) = &self.data_dir {
            c.data_dir = Some(d.clone());
        }
        if let Some(o) = &self.out {
            c.out = o.clone();
        }
        c.resolve()
    }
}

fn main_inner(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => {
            let config = args.resolve()?;
            let bundle = bench::run(&config)?;
            println!(
                "wrote {} runs to {}",
                bundle.runs.len(),
                config.out.display()
            );
        }
        Command::Report { bundles, out } => {
            let loaded = bundles
                .iter()
                .map(|p| bench::load_bundle(p))
                .collect::<Result<Vec<_>>>()?;
            let table = bench::report(&loaded)?;
            bench::write_report(&table, &out)?;
            print!("{}", table.to_markdown());
        }
        Command::ExportEmbeddings {
            run,
            per_class,
            file,
        } => {
            let config = run.resolve()?;
            let data = HarData::load(config.data_dir()?, config.channels)?;
            let n = bench::export_embeddings(&config, &data, per_class, &file)?;
            println!("wrote {n} embeddings to {}", file.display());
        }
        Command::CheckData { data_dir } => {
            let s = check_data(&data_dir)?;
            println!(
                "train {} + test {} = {} windows",
                s.train_rows,
                s.test_rows,
                s.total()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("har-cl: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
