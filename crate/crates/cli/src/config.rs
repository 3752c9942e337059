//! Experiment configuration: a flat `key = value` text file.
//!
//! Blank lines and `#` comments are ignored. Every key is optional and
//! unknown keys are rejected. List values are comma separated. An empty value
//! resets a key to its default.
//!
//! | key | default | meaning |
//! |-----|---------|---------|
//! | `model` | `xxz` | `xxz` or `file` |
//! | `hamiltonian` | | family file, required for `model = file` |
//! | `sweep` | `delta` / sole file parameter | swept Hamiltonian parameter |
//! | `fixed` | | `name:value` pairs for the other file parameters |
//! | `n` | 8 (14 with `--full`) | qubits; taken from the file for `model = file` |
//! | `L1`, `L2` | 2, 2 | encoding and processing layers |
//! | `field` | 0.75 | XXZ transverse field |
//! | `meta_start`, `meta_stop` | -1.1, 1.1 | sweep range, both ends included |
//! | `train_points`, `test_points` | 20, 100 | grid sizes |
//! | `algorithms` | `meta,ga,vqe,opt-meta,opt-ga` | any of those plus `exact` |
//! | `encoding` | `linear` | `linear`, `gaussian` or `gaussian-squared` |
//! | `train_init` | `auto` | `zeros`, `random` or `auto` (random for `layered`, zeros for `ucc`) |
//! | `train_scale` | 0.1 | half-width of the uniform noise added to the registry start |
//! | `train_restarts` | 6 | random training starts, lowest loss kept |
//! | `ansatz` | `layered` | `layered` or `ucc` |
//! | `generators` | | generator file, required for `ansatz = ucc` |
//! | `repetitions` | 1 | UCC repetitions |
//! | `share_repetitions` | `false` | reuse UCC angles across repetitions |
//! | `seed` | 0 | optimizer seed and default VQE seed |
//! | `vqe_seeds` | `seed` | seeds of the random-init VQE baseline |
//! | `restarts` | 1 | random restarts per point, best kept |
//! | `max_iterations` | 1000 | L-BFGS iteration cap |
//! | `gradient_tolerance` | 1e-6 | gradient-norm stop |
//! | `function_tolerance` | 1e-10 | relative objective-change stop |
//! | `history` | 10 | L-BFGS memory |
//! | `output_dir` | `$METAVQE_OUTPUT_DIR` or `metavqe-out` | artifact directory |

use std::fmt::Write as _;
use std::path::PathBuf;

use metavqe::workflows::{Algorithm, TrainInit};
use metavqe::{AngleEncoding, GaussianForm, OptimizerConfig};

pub const OUTPUT_DIR_ENV: &str = "METAVQE_OUTPUT_DIR";
pub const DEFAULT_OUTPUT_DIR: &str = "metavqe-out";
/// Largest `n` accepted without `--full`.
pub const CI_QUBIT_LIMIT: usize = 10;
pub const FULL_QUBITS: usize = 14;

pub const KEYS: [&str; 29] = [
    "model",
    "hamiltonian",
    "sweep",
    "fixed",
    "n",
    "L1",
    "L2",
    "field",
    "meta_start",
    "meta_stop",
    "train_points",
    "test_points",
    "algorithms",
    "encoding",
    "train_init",
    "train_scale",
    "train_restarts",
    "ansatz",
    "generators",
    "repetitions",
    "share_repetitions",
    "seed",
    "vqe_seeds",
    "restarts",
    "max_iterations",
    "gradient_tolerance",
    "function_tolerance",
    "history",
    "output_dir",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Model {
    Xxz,
    File,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AnsatzKind {
    Layered,
    Ucc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitKind {
    Auto,
    Zeros,
    Random,
}

impl InitKind {
    fn name(&self) -> &'static str {
        match self {
            InitKind::Auto => "auto",
            InitKind::Zeros => "zeros",
            InitKind::Random => "random",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    Exact,
    Run(Algorithm),
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Exact => "exact",
            Task::Run(a) => a.name(),
        }
    }

    fn parse(s: &str) -> Option<Self> {
        if s == "exact" {
            Some(Task::Exact)
        } else {
            Algorithm::parse(s).map(Task::Run)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub model: Model,
    pub hamiltonian: Option<PathBuf>,
    pub sweep: Option<String>,
    pub fixed: Vec<(String, f64)>,
    pub n: Option<usize>,
    pub l1: usize,
    pub l2: usize,
    pub field: f64,
    pub meta_start: f64,
    pub meta_stop: f64,
    pub train_points: usize,
    pub test_points: usize,
    pub algorithms: Vec<Task>,
    pub encoding: AngleEncoding,
    pub train_init: InitKind,
    pub train_scale: f64,
    pub train_restarts: usize,
    pub ansatz: AnsatzKind,
    pub generators: Option<PathBuf>,
    pub repetitions: usize,
    pub share_repetitions: bool,
    pub seed: u64,
    pub vqe_seeds: Vec<u64>,
    pub restarts: usize,
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    pub function_tolerance: f64,
    pub history: usize,
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let opt = OptimizerConfig::default();
        Self {
            model: Model::Xxz,
            hamiltonian: None,
            sweep: None,
            fixed: Vec::new(),
            n: None,
            l1: 2,
            l2: 2,
            field: 0.75,
            meta_start: -1.1,
            meta_stop: 1.1,
            train_points: 20,
            test_points: 100,
            algorithms: Algorithm::ALL.iter().map(|&a| Task::Run(a)).collect(),
            encoding: AngleEncoding::Linear,
            train_init: InitKind::Auto,
            train_scale: 0.1,
            train_restarts: 6,
            ansatz: AnsatzKind::Layered,
            generators: None,
            repetitions: 1,
            share_repetitions: false,
            seed: opt.seed,
            vqe_seeds: Vec::new(),
            restarts: 1,
            max_iterations: opt.max_iterations,
            gradient_tolerance: opt.gradient_tolerance,
            function_tolerance: opt.function_tolerance,
            history: opt.history,
            output_dir: None,
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("`{key}`: cannot parse `{value}`"))
}

fn finite(key: &str, value: &str) -> Result<f64, String> {
    let v: f64 = num(key, value)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{key}` must be finite"))
    }
}

fn list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn encoding_name(e: AngleEncoding) -> &'static str {
    match e {
        AngleEncoding::Gaussian(GaussianForm::Squared) => "gaussian-squared",
        AngleEncoding::Gaussian(GaussianForm::Linear) => "gaussian",
        _ => "linear",
    }
}

impl ExperimentConfig {
    /// Sets one key from its text form; an empty value restores the default.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let value = value.trim();
        if value.is_empty() {
            return self.reset(key);
        }
        match key {
            "model" => {
                self.model = match value {
                    "xxz" => Model::Xxz,
                    "file" => Model::File,
                    _ => return Err(format!("`model` must be `xxz` or `file`, got `{value}`")),
                }
            }
            "hamiltonian" => self.hamiltonian = Some(PathBuf::from(value)),
            "sweep" => self.sweep = Some(value.to_string()),
            "fixed" => {
                self.fixed = list(value)
                    .map(|pair| {
                        let (name, v) = pair
                            .split_once(':')
                            .ok_or_else(|| format!("`fixed` entries are `name:value`, got `{pair}`"))?;
                        Ok((name.trim().to_string(), finite("fixed", v.trim())?))
                    })
                    .collect::<Result<_, String>>()?
            }
            "n" => self.n = Some(num(key, value)?),
            "L1" => self.l1 = num(key, value)?,
            "L2" => self.l2 = num(key, value)?,
            "field" => self.field = finite(key, value)?,
            "meta_start" => self.meta_start = finite(key, value)?,
            "meta_stop" => self.meta_stop = finite(key, value)?,
            "train_points" => self.train_points = num(key, value)?,
            "test_points" => self.test_points = num(key, value)?,
            "algorithms" => {
                let mut tasks = Vec::new();
                for name in list(value) {
                    let t = Task::parse(name).ok_or_else(|| {
                        format!("unknown algorithm `{name}` (expected meta, ga, vqe, opt-meta, opt-ga, exact)")
                    })?;
                    if !tasks.contains(&t) {
                        tasks.push(t);
                    }
                }
                self.algorithms = tasks;
            }
            "encoding" => {
                self.encoding = match value {
                    "linear" => AngleEncoding::Linear,
                    "gaussian" => AngleEncoding::Gaussian(GaussianForm::Linear),
                    "gaussian-squared" => AngleEncoding::Gaussian(GaussianForm::Squared),
                    _ => {
                        return Err(format!(
                            "`encoding` must be linear, gaussian or gaussian-squared, got `{value}`"
                        ))
                    }
                }
            }
            "train_init" => {
                self.train_init = match value {
                    "auto" => InitKind::Auto,
                    "zeros" => InitKind::Zeros,
                    "random" => InitKind::Random,
                    _ => return Err(format!("`train_init` must be auto, zeros or random, got `{value}`")),
                }
            }
            "train_scale" => self.train_scale = finite(key, value)?,
            "train_restarts" => self.train_restarts = num(key, value)?,
            "ansatz" => {
                self.ansatz = match value {
                    "layered" => AnsatzKind::Layered,
                    "ucc" => AnsatzKind::Ucc,
                    _ => return Err(format!("`ansatz` must be `layered` or `ucc`, got `{value}`")),
                }
            }
            "generators" => self.generators = Some(PathBuf::from(value)),
            "repetitions" => self.repetitions = num(key, value)?,
            "share_repetitions" => self.share_repetitions = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "vqe_seeds" => self.vqe_seeds = list(value).map(|s| num(key, s)).collect::<Result<_, _>>()?,
            "restarts" => self.restarts = num(key, value)?,
            "max_iterations" => self.max_iterations = num(key, value)?,
            "gradient_tolerance" => self.gradient_tolerance = finite(key, value)?,
            "function_tolerance" => self.function_tolerance = finite(key, value)?,
            "history" => self.history = num(key, value)?,
            "output_dir" => self.output_dir = Some(PathBuf::from(value)),
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    fn reset(&mut self, key: &str) -> Result<(), String> {
        if !KEYS.contains(&key) {
            return Err(format!("unknown key `{key}`"));
        }
        let d = Self::default();
        let text = d.to_text();
        let line = text
            .lines()
            .find_map(|l| l.split_once(" = ").filter(|(k, _)| *k == key))
            .map(|(_, v)| v.to_string())
            .unwrap_or_default();
        match key {
            "hamiltonian" => self.hamiltonian = None,
            "sweep" => self.sweep = None,
            "fixed" => self.fixed.clear(),
            "n" => self.n = None,
            "generators" => self.generators = None,
            "vqe_seeds" => self.vqe_seeds.clear(),
            "output_dir" => self.output_dir = None,
            _ => self.set(key, &line)?,
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut c = Self::default();
        let mut seen = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected `key = value`", k + 1))?;
            let key = key.trim();
            if seen.contains(&key) {
                return Err(format!("line {}: duplicate key `{key}`", k + 1));
            }
            seen.push(key);
            c.set(key, value).map_err(|e| format!("line {}: {e}", k + 1))?;
        }
        Ok(c)
    }

    /// Canonical text form; `parse(to_text())` returns an equal config.
    pub fn to_text(&self) -> String {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let join = |items: Vec<String>| items.join(",");
        let mut out = String::new();
        let mut put = |k: &str, v: String| writeln!(out, "{k} = {v}").expect("write to String");
        put("model", if self.model == Model::Xxz { "xxz" } else { "file" }.into());
        put("hamiltonian", path(&self.hamiltonian));
        put("sweep", self.sweep.clone().unwrap_or_default());
        put("fixed", join(self.fixed.iter().map(|(n, v)| format!("{n}:{v:?}")).collect()));
        put("n", self.n.map(|n| n.to_string()).unwrap_or_default());
        put("L1", self.l1.to_string());
        put("L2", self.l2.to_string());
        put("field", format!("{:?}", self.field));
        put("meta_start", format!("{:?}", self.meta_start));
        put("meta_stop", format!("{:?}", self.meta_stop));
        put("train_points", self.train_points.to_string());
        put("test_points", self.test_points.to_string());
        put("algorithms", join(self.algorithms.iter().map(|t| t.name().to_string()).collect()));
        put("encoding", encoding_name(self.encoding).into());
        put("train_init", self.train_init.name().into());
        put("train_scale", format!("{:?}", self.train_scale));
        put("train_restarts", self.train_restarts.to_string());
        put("ansatz", if self.ansatz == AnsatzKind::Layered { "layered" } else { "ucc" }.into());
        put("generators", path(&self.generators));
        put("repetitions", self.repetitions.to_string());
        put("share_repetitions", self.share_repetitions.to_string());
        put("seed", self.seed.to_string());
        put("vqe_seeds", join(self.vqe_seeds.iter().map(u64::to_string).collect()));
        put("restarts", self.restarts.to_string());
        put("max_iterations", self.max_iterations.to_string());
        put("gradient_tolerance", format!("{:?}", self.gradient_tolerance));
        put("function_tolerance", format!("{:?}", self.function_tolerance));
        put("history", self.history.to_string());
        put("output_dir", path(&self.output_dir));
        out
    }

    pub fn optimizer(&self) -> OptimizerConfig {
        OptimizerConfig {
            max_iterations: self.max_iterations,
            gradient_tolerance: self.gradient_tolerance,
            function_tolerance: self.function_tolerance,
            history: self.history,
            seed: self.seed,
            ..OptimizerConfig::default()
        }
    }

    /// Training start; `auto` avoids the all-zeros point for the layered
    /// ansatz, where it is a product eigenstate with vanishing gradient.
    pub fn train_init(&self) -> TrainInit {
        match (self.train_init, self.ansatz) {
            (InitKind::Zeros, _) | (InitKind::Auto, AnsatzKind::Ucc) => TrainInit::Registry,
            _ => TrainInit::Random {
                seed: self.seed,
                scale: self.train_scale,
                restarts: self.train_restarts,
            },
        }
    }

    pub fn vqe_seeds(&self) -> Vec<u64> {
        if self.vqe_seeds.is_empty() {
            vec![self.seed]
        } else {
            self.vqe_seeds.clone()
        }
    }

    pub fn wants(&self, task: Task) -> bool {
        self.algorithms.contains(&task)
    }

    pub fn algorithms(&self) -> Vec<Algorithm> {
        self.algorithms
            .iter()
            .filter_map(|t| match t {
                Task::Run(a) => Some(*a),
                Task::Exact => None,
            })
            .collect()
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
    }

    /// Checks that do not need the input files.
    pub fn validate(&self, full: bool) -> Result<(), String> {
        if self.algorithms.is_empty() {
            return Err("`algorithms` is empty".into());
        }
        if self.model == Model::File && self.hamiltonian.is_none() {
            return Err("`model = file` needs `hamiltonian`".into());
        }
        if self.model == Model::Xxz {
            if self.sweep.as_deref().is_some_and(|s| s != "delta") {
                return Err("the XXZ model sweeps `delta` only".into());
            }
            if !self.fixed.is_empty() {
                return Err("`fixed` applies to `model = file`; use `field` for XXZ".into());
            }
            if let Some(n) = self.n {
                if n < 2 {
                    return Err("the XXZ chain needs n >= 2".into());
                }
            }
        }
        if let Some(n) = self.n {
            if n > CI_QUBIT_LIMIT && !full {
                return Err(format!("n = {n} exceeds {CI_QUBIT_LIMIT}; pass --full for large runs"));
            }
            if n > metavqe::MAX_QUBITS {
                return Err(format!("n = {n} exceeds the {} qubit limit", metavqe::MAX_QUBITS));
            }
        }
        if self.ansatz == AnsatzKind::Ucc && self.generators.is_none() {
            return Err("`ansatz = ucc` needs `generators`".into());
        }
        if self.ansatz == AnsatzKind::Layered
            && (self.wants(Task::Run(Algorithm::Meta)) || self.wants(Task::Run(Algorithm::OptMeta)))
            && self.l1 == 0
        {
            return Err("meta-VQE needs L1 >= 1".into());
        }
        if self.ansatz == AnsatzKind::Ucc && self.repetitions == 0 {
            return Err("`repetitions` must be at least 1".into());
        }
        if self.train_points == 0 || self.test_points == 0 {
            return Err("`train_points` and `test_points` must be at least 1".into());
        }
        if self.meta_stop < self.meta_start {
            return Err("`meta_stop` is below `meta_start`".into());
        }
        if self.restarts == 0 {
            return Err("`restarts` must be at least 1".into());
        }
        if self.train_scale <= 0.0 {
            return Err("`train_scale` must be positive".into());
        }
        if self.train_restarts == 0 {
            return Err("`train_restarts` must be at least 1".into());
        }
        self.optimizer().validate().map_err(|e| e.to_string())
    }
}
