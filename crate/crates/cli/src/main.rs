use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::LevelFilter;
use sentiprice_core::corpus::BucketRange;
use sentiprice_core::pipeline::{self, CommandReport, PipelineConfig, PipelineError};
use sentiprice_core::synth::SyntheticSpec;

#[derive(Parser)]
#[command(name = "sentiprice", version, about = "Social-media sentiment and used-car price study")]
struct Cli {
    /// More log output (-v info, -vv debug). RUST_LOG takes precedence.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate every input and print per-source counts.
    Ingest(RunArgs),
    /// Full pipeline: score, partition, aggregate, regress, report.
    Run(RunArgs),
    /// Salient-term selection and dataset sizes only.
    SelectTerms(RunArgs),
    /// Regression grid from a precomputed series file.
    Regress {
        #[command(flatten)]
        run: RunArgs,
        /// CSV with columns dataset,bucket,mean,n_docs.
        #[arg(long)]
        series: PathBuf,
    },
    /// Write a synthetic fixture with known ground truth.
    Synth(SynthArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(short, long, env = "SENTIPRICE_CONFIG")]
    config: PathBuf,
    #[arg(long)]
    alpha: Option<f64>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Facebook bucket range, e.g. 2011-04-H2..2011-09-H2.
    #[arg(long)]
    fb_range: Option<BucketRange>,
    #[arg(long)]
    market_range: Option<BucketRange>,
}

impl RunArgs {
    fn config(&self) -> Result<PipelineConfig, PipelineError> {
        let mut cfg = PipelineConfig::load(&self.config)?;
        if let Some(a) = self.alpha {
            cfg.alpha = a;
        }
        if let Some(t) = self.threads {
            cfg.threads = t;
        }
        if let Some(o) = &self.out_dir {
            cfg.out_dir = o.clone();
        }
        if let Some(r) = self.fb_range {
            cfg.fb_range = r;
        }
        if let Some(r) = self.market_range {
            cfg.market_range = r;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Scenario {
    /// Planted coefficient on the geo dataset.
    Recovery,
    /// Shock-driven prices with opposing geo and interest sentiment.
    SignPattern,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(short, long)]
    out: PathBuf,
    /// TOML spec; flags below override its fields.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "recovery", conflicts_with = "spec")]
    scenario: Scenario,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_docs: Option<usize>,
    #[arg(long)]
    n_baseline_docs: Option<usize>,
    #[arg(long)]
    n_listings: Option<usize>,
    #[arg(long)]
    noise_sigma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    beta_s: Option<f64>,
}

impl SynthArgs {
    fn spec(&self) -> Result<SyntheticSpec, PipelineError> {
        let mut spec = match (&self.spec, self.scenario) {
            (Some(p), _) => pipeline::read_synth_spec(p)?,
            (None, Scenario::Recovery) => SyntheticSpec::default(),
            (None, Scenario::SignPattern) => SyntheticSpec::sign_pattern(SyntheticSpec::default().seed),
        };
        if let Some(s) = self.seed {
            spec.seed = s;
        }
        if let Some(n) = self.n_docs {
            spec.n_docs = n;
        }
        if let Some(n) = self.n_baseline_docs {
            spec.n_baseline_docs = n;
        }
        if let Some(n) = self.n_listings {
            spec.n_listings = n;
        }
        if let Some(s) = self.noise_sigma {
            spec.noise_sigma = s;
        }
        if let Some(b) = self.beta_s {
            spec.planted_beta.insert("S".into(), b);
        }
        spec.validate().map_err(PipelineError::Synth)?;
        Ok(spec)
    }
}

fn dispatch(command: Command) -> Result<CommandReport, PipelineError> {
    match command {
        Command::Ingest(a) => pipeline::cmd_ingest(&a.config()?),
        Command::Run(a) => pipeline::cmd_run(&a.config()?),
        Command::SelectTerms(a) => pipeline::cmd_select_terms(&a.config()?),
        Command::Regress { run, series } => pipeline::cmd_regress(&run.config()?, &series),
        Command::Synth(a) => pipeline::cmd_synth(&a.spec()?, &a.out),
    }
}

fn main() -> ExitCode {
    // Usage errors share exit code 1 with other input errors; clap's own
    // default of 2 is reserved for a fully failed regression grid.
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { pipeline::EXIT_INPUT as u8 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => LevelFilter::Warn,
        1 => LevelFilter::Info,
        _ => LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .format_timestamp(None)
        .init();

    let code = match dispatch(cli.command) {
        Ok(report) => {
            print!("{}", report.summary);
            if report.exit_code() != pipeline::EXIT_OK {
                eprintln!("error: every regression cell failed; see {}", report.out_dir.display());
            }
            report.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
