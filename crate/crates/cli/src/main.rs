use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use collab_cli::config::PeriodPreset;
use collab_cli::{AnalysisConfig, CliError, H0Setting, PeriodSpec, Stage};
use collab_core::corpus::AggregationKey;
use collab_ingest::{FetchMode, HttpTransport, OfflineTransport, UreqTransport};

#[derive(Parser)]
#[command(
    name = "collab",
    version,
    about = "International co-production clusters and coupling distances from OpenAlex"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Download (or replay from cache) the works of every discipline.
    Harvest(RunArgs),
    /// Count, cluster and index harvested records.
    Analyze(RunArgs),
    /// Render the dendrogram figures from analysis outputs.
    Report(RunArgs),
    /// Harvest, analyze and report in one go.
    All(RunArgs),
    /// Check a config and print diagnostics as JSON.
    Validate(RunArgs),
    /// Print the JSON Schema of the config file.
    Schema,
}

#[derive(Args)]
struct RunArgs {
    /// JSON config file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated root concept ids.
    #[arg(long, value_delimiter = ',')]
    disciplines: Option<Vec<String>>,
    /// paper-4 or paper-10.
    #[arg(long)]
    periods: Option<PeriodPreset>,
    /// country or institution.
    #[arg(long)]
    key: Option<AggregationKey>,
    #[arg(long)]
    top_n: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    h_star: Option<f64>,
    /// auto or 1.0.
    #[arg(long)]
    h0: Option<H0Setting>,
    #[arg(long)]
    min_volume: Option<u64>,
    #[arg(long)]
    journal_only: bool,
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Serve every request from the cache; never touch the network.
    #[arg(long)]
    offline: bool,
    #[arg(long)]
    workers: Option<usize>,
}

impl RunArgs {
    fn config(&self) -> Result<AnalysisConfig, CliError> {
        let mut c = match &self.config {
            Some(path) => AnalysisConfig::load(path)?,
            None => AnalysisConfig::default(),
        };
        if let Some(d) = &self.disciplines {
            c.disciplines = d.clone();
        }
        if let Some(p) = self.periods {
            c.periods = PeriodSpec::Preset(p);
        }
        if let Some(k) = self.key {
            c.key = k;
        }
        if let Some(n) = self.top_n {
            c.top_n = n;
        }
        if let Some(h) = self.h_star {
            c.h_star = h;
        }
        if let Some(h) = self.h0 {
            c.h0 = h;
        }
        if let Some(m) = self.min_volume {
            c.min_volume = m;
        }
        if self.journal_only {
            c.journal_only = true;
        }
        if let Some(d) = &self.cache_dir {
            c.cache_dir = d.clone();
        }
        if let Some(d) = &self.out_dir {
            c.out_dir = d.clone();
        }
        if let Some(w) = self.workers {
            c.workers = w;
        }
        Ok(c)
    }

    fn transport(&self) -> (Arc<dyn HttpTransport>, FetchMode) {
        if self.offline {
            (Arc::new(OfflineTransport::default()), FetchMode::Offline)
        } else {
            (Arc::new(UreqTransport::new(Duration::from_secs(60))), FetchMode::Online)
        }
    }
}

fn execute(command: Command) -> Result<(), CliError> {
    let (stage, args) = match command {
        Command::Harvest(a) => (Stage::Harvest, a),
        Command::Analyze(a) => (Stage::Analyze, a),
        Command::Report(a) => (Stage::Report, a),
        Command::All(a) => (Stage::All, a),
        Command::Schema => {
            print!("{}", collab_cli::config::CONFIG_SCHEMA);
            return Ok(());
        }
        Command::Validate(a) => {
            let config = a.config()?;
            let diagnostics = config.validate();
            println!(
                "{}",
                serde_json::to_string_pretty(&diagnostics).expect("diagnostics serialize")
            );
            return if diagnostics.is_empty() {
                Ok(())
            } else {
                Err(CliError::Config(diagnostics))
            };
        }
    };
    let config = args.config()?;
    let (transport, mode) = args.transport();
    let manifest = collab_cli::run_stage(stage, &config, transport, mode)?;
    eprintln!(
        "wrote {} files to {} (config {})",
        manifest.outputs.len(),
        config.out_dir.display(),
        &manifest.config_hash[..12]
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", serde_json::to_string(&e.report()).expect("report serializes"));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
