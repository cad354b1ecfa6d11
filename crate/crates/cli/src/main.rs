use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use toma_cli::{cmd_analyze, cmd_discretize, cmd_evaluate, cmd_order, emit, CliError, JobConfig};

#[derive(Parser)]
#[command(name = "toma", version, about = "Multi-aspect evaluation of ranked lists")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dump the distance order over all label tuples of a schema.
    Order(Flags),
    /// Score runs under TOMA, CAM and MM.
    Evaluate(Flags),
    /// Correlation, discriminative power and audits over score files.
    Analyze(Flags),
    /// Turn a `docid score` signal table into grades.
    Discretize(Flags),
}

/// Every flag overrides the config key named in its help text.
#[derive(Args)]
struct Flags {
    /// INI-style job config
    #[arg(long)]
    config: Option<PathBuf>,
    /// input.schema
    #[arg(long)]
    schema: Option<String>,
    /// input.qrels
    #[arg(long)]
    qrels: Option<String>,
    /// input.runs: run files or directories, repeatable
    #[arg(long, num_args = 1..)]
    runs: Vec<String>,
    /// order.metric: euclidean, manhattan or chebyshev
    #[arg(long)]
    metric: Option<String>,
    /// order.weights: distinct, binary or a comma-separated list
    #[arg(long)]
    weights: Option<String>,
    /// measure.kind: ndcg or ap
    #[arg(long)]
    measure: Option<String>,
    /// measure.depth: a cutoff or `full`
    #[arg(long)]
    depth: Option<String>,
    /// measure.families: any of eucl, manh, cheb, cam, mm
    #[arg(long)]
    families: Option<String>,
    /// baseline.mm_variant: canonical or table
    #[arg(long)]
    mm_variant: Option<String>,
    /// analysis.seed
    #[arg(long)]
    seed: Option<String>,
    /// analysis.scores: score TSV files, repeatable
    #[arg(long, num_args = 1..)]
    scores: Vec<String>,
    /// discretize.signals
    #[arg(long)]
    signals: Option<String>,
    /// output.dir; stdout when absent
    #[arg(long)]
    out: Option<String>,
}

impl Flags {
    fn into_config(self) -> Result<JobConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => JobConfig::load(path)?,
            None => JobConfig::default(),
        };
        let single = [
            ("input.schema", self.schema),
            ("input.qrels", self.qrels),
            ("order.metric", self.metric),
            ("order.weights", self.weights),
            ("measure.kind", self.measure),
            ("measure.depth", self.depth),
            ("measure.families", self.families),
            ("baseline.mm_variant", self.mm_variant),
            ("analysis.seed", self.seed),
            ("discretize.signals", self.signals),
            ("output.dir", self.out),
        ];
        for (key, value) in single {
            if let Some(value) = value {
                cfg.set(key, value);
            }
        }
        for (key, values) in [("input.runs", self.runs), ("analysis.scores", self.scores)] {
            if !values.is_empty() {
                cfg.set(key, values.join(" "));
            }
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (flags, command): (Flags, fn(&JobConfig) -> _) = match cli.command {
        Command::Order(f) => (f, cmd_order),
        Command::Evaluate(f) => (f, cmd_evaluate),
        Command::Analyze(f) => (f, cmd_analyze),
        Command::Discretize(f) => (f, cmd_discretize),
    };
    let cfg = flags.into_config()?;
    let report = command(&cfg)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    emit(&report.outputs, cfg.path("output.dir").as_deref())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
