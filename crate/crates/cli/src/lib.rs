//! Experiment driver behind the `polarnet` binary.
//!
//! Every output file is a pure function of the configuration (after
//! command-line overrides): CSV rows and JSON objects carry the config hash
//! and the build's version string, and thread count never changes results.

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use polarnet::estimator::EstimatorMode;
use serde_json::Value;

pub use config::{ExperimentConfig, Overrides};

pub const VERSION: &str = env!("POLARNET_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Precondition(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Precondition(_) => 3,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<polarnet::Error> for CliError {
    fn from(e: polarnet::Error) -> Self {
        use polarnet::Error as E;
        match e {
            E::Config(_) | E::Dimension(_) | E::Size(_) => CliError::Config(e.to_string()),
            E::Precondition(_) => CliError::Precondition(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "polarnet", version = VERSION, about = "Polar codes for compound MACs and interference networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-index bit-channel statistics (single channel or MAC path).
    Analyze(Common),
    /// Rate-region vertices and inequalities.
    Region(Common),
    /// Build a compound code and check achievability.
    Build(Common),
    /// Block and bit error rates by Monte Carlo.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Spec file written by `build`; the code is rebuilt from the config when absent.
        #[arg(long)]
        spec: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long)]
    pub config: PathBuf,
    /// Master seed; overrides the config.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Closed forms and full enumeration only.
    #[arg(long, conflicts_with = "mc")]
    pub exact: bool,
    /// Always sample.
    #[arg(long)]
    pub mc: bool,
}

/// Loaded configuration plus output settings.
pub struct Context {
    pub config: ExperimentConfig,
    pub hash: String,
    pub version: &'static str,
    pub out_dir: PathBuf,
}

impl Context {
    pub fn new(mut config: ExperimentConfig, overrides: &Overrides, out_dir: PathBuf) -> Self {
        config.apply(overrides);
        let hash = config.hash();
        Self { config, hash, version: VERSION, out_dir }
    }

    pub fn load(path: &Path, overrides: &Overrides, out_dir: PathBuf) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Ok(Self::new(ExperimentConfig::parse(&text)?, overrides, out_dir))
    }

    /// Prefixes every line of a CSV with the hash and version columns.
    pub fn tag_csv(&self, csv: &str) -> String {
        let mut out = String::with_capacity(csv.len() + 64 * csv.lines().count());
        for (i, line) in csv.lines().enumerate() {
            if i == 0 {
                out.push_str("config_hash,version,");
            } else {
                out.push_str(&self.hash);
                out.push(',');
                out.push_str(self.version);
                out.push(',');
            }
            out.push_str(line);
            out.push('\n');
        }
        out
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<(), CliError> {
        std::fs::create_dir_all(&self.out_dir).map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", self.out_dir.display())))?;
        let path = self.out_dir.join(format!("{}{name}", self.config.output_prefix));
        std::fs::write(&path, contents).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
        eprintln!("wrote {}", path.display());
        Ok(())
    }

    /// Writes a JSON object with `config_hash` and `version` added in front.
    pub fn write_json(&self, name: &str, body: Value) -> Result<(), CliError> {
        let mut obj = serde_json::Map::new();
        obj.insert("config_hash".into(), Value::String(self.hash.clone()));
        obj.insert("version".into(), Value::String(self.version.into()));
        match body {
            Value::Object(m) => obj.extend(m),
            other => {
                obj.insert("result".into(), other);
            }
        }
        let text = serde_json::to_string_pretty(&Value::Object(obj)).map_err(|e| CliError::Runtime(e.to_string()))?;
        self.write(name, &(text + "\n"))
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let (common, spec) = match &cli.command {
        Command::Analyze(c) | Command::Region(c) | Command::Build(c) => (c, None),
        Command::Simulate { common, spec } => (common, spec.as_deref()),
    };
    if let Some(t) = common.threads {
        if t == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        // Fails only if a pool already exists, which is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let overrides = Overrides {
        seed: common.seed,
        mode: if common.exact {
            Some(EstimatorMode::Exact)
        } else if common.mc {
            Some(EstimatorMode::MonteCarlo)
        } else {
            None
        },
    };
    let ctx = Context::load(&common.config, &overrides, common.out_dir.clone())?;
    let start = Instant::now();
    match &cli.command {
        Command::Analyze(_) => commands::analyze(&ctx)?,
        Command::Region(_) => commands::region(&ctx)?,
        Command::Build(_) => commands::build(&ctx)?,
        Command::Simulate { .. } => commands::simulate_cmd(&ctx, spec)?,
    }
    eprintln!("config {} done in {:.2?}", ctx.hash, start.elapsed());
    Ok(())
}

/// Parses arguments, runs, and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
