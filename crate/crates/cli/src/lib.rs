//! Command-line front end. Every command resolves its arguments into a
//! [`RunConfig`], writes it next to its outputs as `run_config.json`, and can
//! be replayed from that file with `qansatz rerun`.

mod commands;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use qansatz::{Error, ErrorClass, Result};
use serde::{Deserialize, Serialize};

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "QANSATZ_OUT";
pub const RUN_CONFIG_FILE: &str = "run_config.json";
pub const RUN_CONFIG_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "qansatz", version, about = "Topology-aware ansatz generation and QNN training")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory (default: $QANSATZ_OUT/<command>, else ./out/<command>).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Invocation,
}

#[derive(Debug, Subcommand)]
pub enum Invocation {
    #[command(flatten)]
    Run(Command),
    /// Replay a saved run_config.json.
    Rerun {
        config: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Command {
    /// Generate and score a sub-circuit library.
    Gen(GenArgs),
    /// Score a library or a QASM circuit.
    Eval(EvalArgs),
    /// Combine library entries into an ansatz, optionally stitched.
    Build(BuildArgs),
    /// Insert two-qubit stitches between the blocks of an ansatz.
    Stitch(StitchArgs),
    /// Remove small-angle rotations from a trained ansatz.
    Prune(PruneArgs),
    /// Train a QNN, optionally growing and pruning the ansatz.
    Train(TrainArgs),
    /// Routing cost of an ansatz against shuffled and baseline circuits.
    Compare(CompareArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Gen(_) => "gen",
            Command::Eval(_) => "eval",
            Command::Build(_) => "build",
            Command::Stitch(_) => "stitch",
            Command::Prune(_) => "prune",
            Command::Train(_) => "train",
            Command::Compare(_) => "compare",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct MetricArgs {
    #[arg(long, default_value_t = 5000)]
    pub fidelity_pairs: usize,
    #[arg(long, default_value_t = 75)]
    pub bins: usize,
    #[arg(long, default_value_t = 300)]
    pub mw_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct GenArgs {
    /// Built-in topology name or topology JSON file.
    #[arg(long, default_value = "tshape5")]
    pub topology: String,
    /// Comma-separated template names.
    #[arg(long, value_delimiter = ',', default_value = "path2")]
    pub templates: Vec<String>,
    #[arg(long, default_value_t = 500)]
    pub count: usize,
    #[arg(long, default_value_t = 4)]
    pub depth_limit: usize,
    /// Also draw fixed H and SX gates.
    #[arg(long)]
    pub fixed_gates: bool,
    #[command(flatten)]
    pub metric: MetricArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct EvalArgs {
    /// Library JSON or a `.qasm` file.
    pub input: PathBuf,
    #[command(flatten)]
    pub metric: MetricArgs,
    /// Also write the fidelity histograms as JSON.
    #[arg(long)]
    pub histograms: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct BuildArgs {
    #[arg(long)]
    pub library: PathBuf,
    #[arg(long, default_value = "tshape5")]
    pub topology: String,
    /// Logical qubits of the ansatz.
    #[arg(long, default_value_t = 4)]
    pub qubits: usize,
    /// exp, ent, mixed or random.
    #[arg(long, default_value = "exp")]
    pub policy: String,
    /// Share of EXP picks under the mixed policy.
    #[arg(long, default_value_t = 0.5)]
    pub mixed_ratio: f64,
    /// balanced or decreasing_size.
    #[arg(long, default_value = "balanced")]
    pub placement: String,
    #[arg(long, default_value_t = 6)]
    pub depth_threshold: usize,
    /// cnot, crx or swap.
    #[arg(long)]
    pub stitch: Option<String>,
    /// idle or block_end.
    #[arg(long, default_value = "idle")]
    pub stitch_placement: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct StitchArgs {
    #[arg(long)]
    pub ansatz: PathBuf,
    #[arg(long, default_value = "cnot")]
    pub kind: String,
    #[arg(long, default_value = "idle")]
    pub placement: String,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct PruneArgs {
    #[arg(long)]
    pub ansatz: PathBuf,
    /// JSON array of trained angles.
    #[arg(long)]
    pub params: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct TrainArgs {
    /// `blobs:L`, `circles:L`, `moons:L`, `csv:PATH` or `images:DIR[:C1,C2,..]`.
    #[arg(long)]
    pub dataset: String,
    #[arg(long)]
    pub ansatz: PathBuf,
    /// Starting angles (default: uniform in [-pi/8, pi/8]).
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Library to grow from; required with --grow.
    #[arg(long)]
    pub library: Option<PathBuf>,
    #[arg(long)]
    pub grow: bool,
    #[arg(long)]
    pub prune: bool,
    #[arg(long, default_value_t = 30)]
    pub epochs: usize,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0.05)]
    pub lr: f64,
    #[arg(long, default_value_t = 3)]
    pub patience: usize,
    #[arg(long, default_value_t = 0.005)]
    pub min_delta: f64,
    #[arg(long, default_value_t = 4)]
    pub growth_cap: usize,
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0.02)]
    pub max_drop: f64,
    #[arg(long, default_value_t = 0)]
    pub finetune_epochs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Seed of the dataset split and generator (default: --seed).
    #[arg(long)]
    pub data_seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct CompareArgs {
    #[arg(long)]
    pub ansatz: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// The fully resolved invocation written beside every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub version: u32,
    pub output: PathBuf,
    #[serde(flatten)]
    pub command: Command,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config: RunConfig = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if config.version != RUN_CONFIG_VERSION {
            return Err(Error::Config(format!("unsupported run config version {}", config.version)));
        }
        Ok(config)
    }
}

/// Process exit code for an error: 2 configuration, 3 data, 4 numerical.
pub fn exit_code(err: &Error) -> i32 {
    match err.class() {
        ErrorClass::Config => 2,
        ErrorClass::Data => 3,
        ErrorClass::Numerical => 4,
    }
}

fn default_output(name: &str) -> PathBuf {
    std::env::var_os(OUT_ENV).map_or_else(|| PathBuf::from("out"), PathBuf::from).join(name)
}

/// Resolves and runs a parsed command line, returning the output directory.
pub fn run(cli: Cli) -> Result<PathBuf> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::Config("--threads must be positive".into()));
        }
        // A pool that is already set up (as in tests) is reused.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let config = match cli.command {
        Invocation::Run(command) => {
            let output = cli.out.unwrap_or_else(|| default_output(command.name()));
            RunConfig {
                version: RUN_CONFIG_VERSION,
                output,
                command: commands::resolve(command)?,
            }
        }
        Invocation::Rerun { config } => {
            let mut saved = RunConfig::load(&config)?;
            if let Some(out) = cli.out {
                saved.output = out;
            }
            saved
        }
    };
    execute(&config)?;
    Ok(config.output)
}

/// Runs a resolved configuration, writing `run_config.json` first.
pub fn execute(config: &RunConfig) -> Result<()> {
    let out = &config.output;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    write(out, RUN_CONFIG_FILE, &serde_json::to_string_pretty(config)?)?;
    commands::execute(&config.command, out)
}

pub(crate) fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::io(path, e))
}

pub(crate) fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}
