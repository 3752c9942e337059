//! `metavqe` command-line driver.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

mod config;
mod plotdata;
mod run;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::ExperimentConfig;

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }
}

#[derive(Parser)]
#[command(name = "metavqe", version, about = "Meta-VQE workbench: train, test and compare on Hamiltonian families")]
struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train and evaluate the requested algorithms, writing CSV/JSON artifacts.
    Run(Experiment),
    /// Print exact ground energies over the test sweep.
    Exact(Experiment),
    /// Turn profile CSVs into whitespace-separated plot data.
    Plotdata {
        /// Profile CSVs written by `run`.
        #[arg(required = true)]
        profiles: Vec<PathBuf>,
        /// `exact.csv` from `run` or `exact`, adds an exact energy column.
        #[arg(long)]
        exact: Option<PathBuf>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Parse and check a config file, then print it in canonical form.
    ValidateConfig {
        file: PathBuf,
        #[arg(long)]
        full: bool,
    },
}

#[derive(Args)]
struct Experiment {
    /// Flat `key = value` config file; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Allow registers above 10 qubits; alone it selects n = 14.
    #[arg(long)]
    full: bool,
    /// Shorthand for `--encoding gaussian-squared`.
    #[arg(long)]
    gaussian_squared: bool,
    /// Any config key, as `key=value`; may repeat.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    hamiltonian: Option<String>,
    #[arg(long)]
    sweep: Option<String>,
    #[arg(long)]
    fixed: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long = "l1", alias = "L1")]
    l1: Option<String>,
    #[arg(long = "l2", alias = "L2")]
    l2: Option<String>,
    #[arg(long)]
    field: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    meta_start: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    meta_stop: Option<String>,
    #[arg(long)]
    train_points: Option<String>,
    #[arg(long)]
    test_points: Option<String>,
    #[arg(long)]
    algorithms: Option<String>,
    #[arg(long)]
    encoding: Option<String>,
    #[arg(long)]
    train_init: Option<String>,
    #[arg(long)]
    train_scale: Option<String>,
    #[arg(long)]
    train_restarts: Option<String>,
    #[arg(long)]
    ansatz: Option<String>,
    #[arg(long)]
    generators: Option<String>,
    #[arg(long)]
    repetitions: Option<String>,
    #[arg(long)]
    share_repetitions: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    vqe_seeds: Option<String>,
    #[arg(long)]
    restarts: Option<String>,
    #[arg(long)]
    max_iterations: Option<String>,
    #[arg(long)]
    gradient_tolerance: Option<String>,
    #[arg(long)]
    function_tolerance: Option<String>,
    #[arg(long)]
    history: Option<String>,
    #[arg(long)]
    output_dir: Option<String>,
}

impl Experiment {
    fn config(&self) -> Result<ExperimentConfig, Failure> {
        let mut c = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
                ExperimentConfig::parse(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?
            }
            None => ExperimentConfig::default(),
        };
        let flags = [
            ("model", &self.model),
            ("hamiltonian", &self.hamiltonian),
            ("sweep", &self.sweep),
            ("fixed", &self.fixed),
            ("n", &self.n),
            ("L1", &self.l1),
            ("L2", &self.l2),
            ("field", &self.field),
            ("meta_start", &self.meta_start),
            ("meta_stop", &self.meta_stop),
            ("train_points", &self.train_points),
            ("test_points", &self.test_points),
            ("algorithms", &self.algorithms),
            ("encoding", &self.encoding),
            ("train_init", &self.train_init),
            ("train_scale", &self.train_scale),
            ("train_restarts", &self.train_restarts),
            ("ansatz", &self.ansatz),
            ("generators", &self.generators),
            ("repetitions", &self.repetitions),
            ("share_repetitions", &self.share_repetitions),
            ("seed", &self.seed),
            ("vqe_seeds", &self.vqe_seeds),
            ("restarts", &self.restarts),
            ("max_iterations", &self.max_iterations),
            ("gradient_tolerance", &self.gradient_tolerance),
            ("function_tolerance", &self.function_tolerance),
            ("history", &self.history),
            ("output_dir", &self.output_dir),
        ];
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Failure::Usage(format!("--set expects KEY=VALUE, got `{kv}`")))?;
            c.set(k.trim(), v).map_err(Failure::Usage)?;
        }
        for (key, value) in flags {
            if let Some(v) = value {
                c.set(key, v).map_err(Failure::Usage)?;
            }
        }
        if self.gaussian_squared {
            c.set("encoding", "gaussian-squared").map_err(Failure::Usage)?;
        }
        Ok(c)
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run(e) => run::cmd_run(&e.config()?, e.full),
        Command::Exact(e) => run::cmd_exact(&e.config()?, e.full),
        Command::Plotdata {
            profiles,
            exact,
            output_dir,
        } => {
            let dir = output_dir.unwrap_or_else(|| ExperimentConfig::default().output_dir());
            for path in plotdata::cmd_plotdata(&profiles, exact.as_deref(), &dir)? {
                println!("{}", path.display());
            }
            Ok(())
        }
        Command::ValidateConfig { file, full } => {
            let text = fs::read_to_string(&file)
                .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", file.display())))?;
            let c = ExperimentConfig::parse(&text).map_err(|e| Failure::Usage(format!("{}: {e}", file.display())))?;
            run::resolve(&c, full)?;
            print!("{}", c.to_text());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if threads == 0 {
            eprintln!("metavqe: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("metavqe: cannot size the worker pool: {e}");
            return ExitCode::from(1);
        }
    }
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Usage(m) => eprintln!("metavqe: error: {m}"),
                Failure::Runtime(m) => eprintln!("metavqe: runtime failure: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}
