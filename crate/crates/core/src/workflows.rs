//! Meta-VQE training and testing, GA-VQE, per-point VQE and warm-started VQE.
//!
//! The training loss is the plain sum of energies over the training grid,
//! `L(params) = sum_i <psi(lambda_i, params)| H(lambda_i) |psi(lambda_i, params)>`,
//! and its gradient is the sum of per-point parameter-shift gradients. Per-point
//! work runs on the rayon pool and is always reduced in grid order, so results
//! do not depend on the thread count.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{build_ucc_circuit, meta_ansatz, processing_ansatz, AngleEncoding, Circuit, GeneratorSet};
use crate::exact::ground_energy;
use crate::gradient::{param_shift_gradient, GradientResult};
use crate::optimizer::{minimize, random_init, OptTrace, OptimizerConfig, Termination};
use crate::pauli::{HamiltonianFamily, PauliSum};
use crate::{Error, Result};

/// Exact energies below this magnitude report absolute error as relative error.
pub const REL_ERR_FLOOR: f64 = 1e-6;

/// `count` points from `start` to `stop` inclusive, `start + i (stop - start) / (count - 1)`.
pub fn equispaced(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![start],
        _ => {
            let step = (stop - start) / (count - 1) as f64;
            (0..count)
                .map(|i| if i == count - 1 { stop } else { start + i as f64 * step })
                .collect()
        }
    }
}

/// Values of the swept Hamiltonian parameter, plus fixed values for the others.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingGrid {
    pub symbol: String,
    pub points: Vec<f64>,
    pub constants: Vec<(String, f64)>,
}

impl TrainingGrid {
    pub fn new(symbol: impl Into<String>, points: Vec<f64>, constants: Vec<(String, f64)>) -> Result<Self> {
        let symbol = symbol.into();
        if points.is_empty() {
            return Err(Error::InvalidArgument("grid needs at least one point".into()));
        }
        if points.iter().chain(constants.iter().map(|(_, v)| v)).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("grid values must be finite".into()));
        }
        if points.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidArgument("grid points must be sorted ascending".into()));
        }
        if constants.iter().any(|(name, _)| *name == symbol) {
            return Err(Error::InvalidArgument(format!("`{symbol}` is both swept and fixed")));
        }
        Ok(Self {
            symbol,
            points,
            constants,
        })
    }

    pub fn equispaced(
        symbol: impl Into<String>,
        start: f64,
        stop: f64,
        count: usize,
        constants: Vec<(String, f64)>,
    ) -> Result<Self> {
        Self::new(symbol, equispaced(start, stop, count), constants)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Value of `name` at a swept `point`.
    pub fn lookup(&self, point: f64, name: &str) -> Option<f64> {
        if name == self.symbol {
            Some(point)
        } else {
            self.constants.iter().find(|(n, _)| n == name).map(|&(_, v)| v)
        }
    }

    /// Same sweep with different points.
    pub fn with_points(&self, points: Vec<f64>) -> Result<Self> {
        Self::new(self.symbol.clone(), points, self.constants.clone())
    }

    fn family_values(&self, family: &HamiltonianFamily, point: f64) -> Result<Vec<f64>> {
        family
            .parameter_names()
            .iter()
            .map(|name| {
                self.lookup(point, name)
                    .ok_or_else(|| Error::Binding(format!("Hamiltonian parameter `{name}` has no value")))
            })
            .collect()
    }

    pub fn hamiltonian(&self, family: &HamiltonianFamily, point: f64) -> Result<PauliSum> {
        family.at(&self.family_values(family, point)?)
    }
}

/// A circuit bound to one grid point.
#[derive(Clone, Debug)]
struct PointProblem {
    meta: Vec<f64>,
    hamiltonian: PauliSum,
}

fn prepare(circuit: &Circuit, family: &HamiltonianFamily, grid: &TrainingGrid) -> Result<Vec<PointProblem>> {
    if circuit.nqubits() != family.nqubits() {
        return Err(Error::Dimension {
            expected: family.nqubits(),
            found: circuit.nqubits(),
        });
    }
    grid.points
        .iter()
        .map(|&p| {
            Ok(PointProblem {
                meta: circuit.meta_values(|s| grid.lookup(p, s))?,
                hamiltonian: grid.hamiltonian(family, p)?,
            })
        })
        .collect()
}

/// The summed-energy loss over a fixed grid, with Hamiltonians built once.
#[derive(Clone, Debug)]
pub struct MetaObjective<'a> {
    circuit: &'a Circuit,
    points: Vec<PointProblem>,
}

impl<'a> MetaObjective<'a> {
    pub fn new(circuit: &'a Circuit, family: &HamiltonianFamily, grid: &TrainingGrid) -> Result<Self> {
        Ok(Self {
            circuit,
            points: prepare(circuit, family, grid)?,
        })
    }

    /// Loss and gradient at `params`.
    pub fn evaluate(&self, params: &[f64]) -> Result<GradientResult> {
        let parts: Vec<GradientResult> = self
            .points
            .par_iter()
            .map(|p| param_shift_gradient(self.circuit, &p.hamiltonian, &p.meta, params))
            .collect::<Result<_>>()?;
        let mut total = GradientResult {
            value: 0.0,
            gradient: vec![0.0; params.len()],
            evaluations: 0,
        };
        for part in parts {
            total.value += part.value;
            total.evaluations += part.evaluations;
            total.gradient.iter_mut().zip(&part.gradient).for_each(|(a, b)| *a += b);
        }
        Ok(total)
    }

    /// Per-point energies at `params`, in grid order.
    pub fn energies(&self, params: &[f64]) -> Result<Vec<f64>> {
        self.points
            .par_iter()
            .map(|p| self.circuit.run(&p.meta, params)?.expectation(&p.hamiltonian))
            .collect()
    }
}

/// Summed energy over `grid` and its gradient.
pub fn meta_loss(
    circuit: &Circuit,
    family: &HamiltonianFamily,
    grid: &TrainingGrid,
    params: &[f64],
) -> Result<GradientResult> {
    MetaObjective::new(circuit, family, grid)?.evaluate(params)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainResult {
    pub algorithm: String,
    pub parameter_names: Vec<String>,
    pub params: Vec<f64>,
    pub initial_params: Vec<f64>,
    pub final_loss: f64,
    pub grid: TrainingGrid,
    pub config: OptimizerConfig,
    pub trace: OptTrace,
}

impl TrainResult {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Starting point of a summed-loss training run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrainInit {
    /// The registry's initial values: zeros, or alpha, delta = 0 and beta, gamma = 1 for Gaussian angles.
    Registry,
    /// Registry values plus uniform(-scale, scale) noise, `restarts` times; the lowest loss wins.
    Random { seed: u64, scale: f64, restarts: usize },
}

impl TrainInit {
    /// Start of restart `restart`.
    pub fn start(&self, circuit: &Circuit, restart: usize) -> Vec<f64> {
        let mut x = circuit.registry().initial_values();
        if let TrainInit::Random { seed, scale, .. } = self {
            let noise = random_init(x.len(), point_seed(*seed, 0, restart));
            for (v, r) in x.iter_mut().zip(noise) {
                *v += r * scale / PI;
            }
        }
        x
    }

    pub fn restarts(&self) -> usize {
        match self {
            TrainInit::Registry => 1,
            TrainInit::Random { restarts, .. } => *restarts,
        }
    }
}

/// Trains from every start of `init` and keeps the lowest final loss.
pub fn train_with(
    algorithm: &str,
    circuit: &Circuit,
    family: &HamiltonianFamily,
    grid: &TrainingGrid,
    config: &OptimizerConfig,
    init: &TrainInit,
) -> Result<TrainResult> {
    if let TrainInit::Random { scale, restarts, .. } = init {
        if !(scale.is_finite() && *scale > 0.0) || *restarts == 0 {
            return Err(Error::InvalidArgument(format!(
                "random training start needs scale > 0 and restarts >= 1, got {scale} and {restarts}"
            )));
        }
    }
    let mut best: Option<TrainResult> = None;
    for r in 0..init.restarts() {
        let result = train_from(algorithm, circuit, family, grid, config, init.start(circuit, r))?;
        if best.as_ref().map_or(true, |b| result.final_loss < b.final_loss) {
            best = Some(result);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Minimizes the summed loss from the registry's initial values.
pub fn train(
    algorithm: &str,
    circuit: &Circuit,
    family: &HamiltonianFamily,
    grid: &TrainingGrid,
    config: &OptimizerConfig,
) -> Result<TrainResult> {
    train_from(algorithm, circuit, family, grid, config, circuit.registry().initial_values())
}

/// Minimizes the summed loss from `x0`.
pub fn train_from(
    algorithm: &str,
    circuit: &Circuit,
    family: &HamiltonianFamily,
    grid: &TrainingGrid,
    config: &OptimizerConfig,
    x0: Vec<f64>,
) -> Result<TrainResult> {
    if x0.len() != circuit.num_params() {
        return Err(Error::Dimension {
            expected: circuit.num_params(),
            found: x0.len(),
        });
    }
    let objective = MetaObjective::new(circuit, family, grid)?;
    let m = minimize(
        |x| {
            let r = objective.evaluate(x)?;
            Ok((r.value, r.gradient))
        },
        &x0,
        config,
    )?;
    Ok(TrainResult {
        algorithm: algorithm.to_string(),
        parameter_names: circuit.registry().names(),
        params: m.x,
        initial_params: x0,
        final_loss: m.value,
        grid: grid.clone(),
        config: config.clone(),
        trace: m.trace,
    })
}

/// Trains the layered meta-VQE (`l1 >= 1` encoding layers, `l2` processing layers).
pub fn train_meta_vqe(
    family: &HamiltonianFamily,
    grid: &TrainingGrid,
    l1: usize,
    l2: usize,
    encoding: AngleEncoding,
    config: &OptimizerConfig,
) -> Result<(Circuit, TrainResult)> {
    if l1 == 0 {
        return Err(Error::InvalidArgument("meta-VQE needs at least one encoding layer".into()));
    }
    let circuit = meta_ansatz(family.nqubits(), l1, l2, &grid.symbol, encoding)?;
    let result = train("meta", &circuit, family, grid, config)?;
    Ok((circuit, result))
}

/// Trains the globally averaged VQE: `layers` plain layers on the summed loss.
pub fn train_ga_vqe(
    family: &HamiltonianFamily,
    grid: &TrainingGrid,
    layers: usize,
    config: &OptimizerConfig,
) -> Result<(Circuit, TrainResult)> {
    let circuit = processing_ansatz(family.nqubits(), layers)?;
    let result = train("ga", &circuit, family, grid, config)?;
    Ok((circuit, result))
}

/// Exact ground energies at every grid point.
pub fn exact_energies(family: &HamiltonianFamily, grid: &TrainingGrid) -> Result<Vec<f64>> {
    grid.points
        .par_iter()
        .map(|&p| ground_energy(&grid.hamiltonian(family, p)?))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub meta_value: f64,
    pub energy: f64,
    pub exact: f64,
    pub abs_err: f64,
    /// `abs_err / |exact|`, or `abs_err` itself when `rel_is_abs`.
    pub rel_err: f64,
    /// Set when `|exact| < REL_ERR_FLOOR`.
    pub rel_is_abs: bool,
    pub algorithm: String,
    pub n: usize,
    pub l1: usize,
    pub l2: usize,
    pub seed: u64,
    pub termination: String,
}

/// Metadata stamped on every row of a profile.
#[derive(Clone, Debug, PartialEq)]
pub struct ProfileMeta {
    pub algorithm: String,
    pub n: usize,
    pub l1: usize,
    pub l2: usize,
    pub seed: u64,
}

impl ProfileMeta {
    fn row(&self, meta_value: f64, energy: f64, exact: f64, termination: &str) -> ProfileRow {
        let abs_err = (energy - exact).abs();
        let rel_is_abs = exact.abs() < REL_ERR_FLOOR;
        ProfileRow {
            meta_value,
            energy,
            exact,
            abs_err,
            rel_err: if rel_is_abs { abs_err } else { abs_err / exact.abs() },
            rel_is_abs,
            algorithm: self.algorithm.clone(),
            n: self.n,
            l1: self.l1,
            l2: self.l2,
            seed: self.seed,
            termination: termination.to_string(),
        }
    }
}

pub const PROFILE_HEADER: &str = "meta_value,energy,exact,abs_err,rel_err,algorithm,n,L1,L2,seed,termination";

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EnergyProfile {
    pub rows: Vec<ProfileRow>,
}

fn fmt_f(v: f64) -> String {
    format!("{v:.11e}")
}

impl EnergyProfile {
    pub fn energies(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.energy).collect()
    }

    pub fn meta_values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.meta_value).collect()
    }

    pub fn abs_errors(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.abs_err).collect()
    }

    pub fn extend(&mut self, other: EnergyProfile) {
        self.rows.extend(other.rows);
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{PROFILE_HEADER}\n");
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                fmt_f(r.meta_value),
                fmt_f(r.energy),
                fmt_f(r.exact),
                fmt_f(r.abs_err),
                fmt_f(r.rel_err),
                r.algorithm,
                r.n,
                r.l1,
                r.l2,
                r.seed,
                r.termination
            )
            .expect("write to String");
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == PROFILE_HEADER => {}
            _ => {
                return Err(Error::Parse {
                    line: 1,
                    message: format!("expected header `{PROFILE_HEADER}`"),
                })
            }
        }
        let mut rows = Vec::new();
        for (k, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse { line: k + 1, message };
            let f: Vec<&str> = line.trim().split(',').collect();
            if f.len() != 11 {
                return Err(err(format!("expected 11 fields, found {}", f.len())));
            }
            let num = |i: usize| f[i].parse::<f64>().map_err(|_| err(format!("bad number `{}`", f[i])));
            let int = |i: usize| f[i].parse::<u64>().map_err(|_| err(format!("bad integer `{}`", f[i])));
            let exact = num(2)?;
            rows.push(ProfileRow {
                meta_value: num(0)?,
                energy: num(1)?,
                exact,
                abs_err: num(3)?,
                rel_err: num(4)?,
                rel_is_abs: exact.abs() < REL_ERR_FLOOR,
                algorithm: f[5].to_string(),
                n: int(6)? as usize,
                l1: int(7)? as usize,
                l2: int(8)? as usize,
                seed: int(9)?,
                termination: f[10].to_string(),
            });
        }
        Ok(Self { rows })
    }
}

/// Energies of a trained circuit at every test point, with errors against `exact`.
pub fn evaluate_profile(
    circuit: &Circuit,
    params: &[f64],
    family: &HamiltonianFamily,
    test: &TrainingGrid,
    exact: &[f64],
    meta: &ProfileMeta,
    termination: Termination,
) -> Result<EnergyProfile> {
    if exact.len() != test.len() {
        return Err(Error::Dimension {
            expected: test.len(),
            found: exact.len(),
        });
    }
    let energies = MetaObjective::new(circuit, family, test)?.energies(params)?;
    Ok(EnergyProfile {
        rows: test
            .points
            .iter()
            .zip(energies)
            .zip(exact)
            .map(|((&p, e), &x)| meta.row(p, e, x, termination.as_str()))
            .collect(),
    })
}

/// Starting point of each per-point minimization.
#[derive(Clone, Debug, PartialEq)]
pub enum Init {
    /// The registry's initial values (zeros for plain and linear angles).
    Registry,
    Zeros,
    /// Uniform(-pi, pi) from a seed derived from `seed`, the point index and the restart.
    Random { seed: u64, restarts: usize },
    WarmStart(Vec<f64>),
}

/// Seed for restart `restart` at test point `index`.
pub fn point_seed(seed: u64, index: usize, restart: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (restart as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F)
}

/// One independent VQE per test point. The circuit's meta symbols (if any) are
/// bound to the point, so passing the trained meta-VQE circuit with
/// `Init::WarmStart` gives opt-meta-VQE.
///
/// A point whose objective turns non-finite keeps its starting energy and
/// records `non-finite-objective`; other errors are returned.
pub fn run_vqe_per_point(
    circuit: &Circuit,
    family: &HamiltonianFamily,
    test: &TrainingGrid,
    exact: &[f64],
    init: &Init,
    config: &OptimizerConfig,
    meta: &ProfileMeta,
) -> Result<EnergyProfile> {
    if exact.len() != test.len() {
        return Err(Error::Dimension {
            expected: test.len(),
            found: exact.len(),
        });
    }
    let size = circuit.num_params();
    if let Init::WarmStart(v) = init {
        if v.len() != size {
            return Err(Error::Dimension {
                expected: size,
                found: v.len(),
            });
        }
    }
    let problems = prepare(circuit, family, test)?;
    let rows = problems
        .par_iter()
        .enumerate()
        .map(|(idx, p)| -> Result<ProfileRow> {
            let starts: Vec<Vec<f64>> = match init {
                Init::Registry => vec![circuit.registry().initial_values()],
                Init::Zeros => vec![vec![0.0; size]],
                Init::Random { seed, restarts } => (0..(*restarts).max(1))
                    .map(|r| random_init(size, point_seed(*seed, idx, r)))
                    .collect(),
                Init::WarmStart(v) => vec![v.clone()],
            };
            let mut best: Option<(f64, String)> = None;
            for x0 in starts {
                let outcome = minimize(
                    |x| {
                        let r = param_shift_gradient(circuit, &p.hamiltonian, &p.meta, x)?;
                        Ok((r.value, r.gradient))
                    },
                    &x0,
                    config,
                );
                let (energy, reason) = match outcome {
                    Ok(m) => (m.value, m.trace.termination.as_str().to_string()),
                    Err(Error::NonFiniteObjective { .. }) => (
                        circuit.run(&p.meta, &x0)?.expectation(&p.hamiltonian)?,
                        Termination::NonFiniteObjective.as_str().to_string(),
                    ),
                    Err(e) => return Err(e),
                };
                if best.as_ref().map_or(true, |(e, _)| energy < *e) {
                    best = Some((energy, reason));
                }
            }
            let (energy, reason) = best.expect("at least one start");
            Ok(meta.row(test.points[idx], energy, exact[idx], &reason))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EnergyProfile { rows })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Meta,
    Ga,
    Vqe,
    OptMeta,
    OptGa,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Meta,
        Algorithm::Ga,
        Algorithm::Vqe,
        Algorithm::OptMeta,
        Algorithm::OptGa,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Meta => "meta",
            Algorithm::Ga => "ga",
            Algorithm::Vqe => "vqe",
            Algorithm::OptMeta => "opt-meta",
            Algorithm::OptGa => "opt-ga",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.name() == s)
    }
}

/// Circuit family used by a protocol run.
#[derive(Clone, Debug, PartialEq)]
pub enum AnsatzSpec {
    /// `l1` encoding plus `l2` processing layers; baselines use `l1 + l2` plain layers.
    Layered { l1: usize, l2: usize },
    /// Pauli-exponential ansatz over file-supplied generators.
    Ucc {
        generators: GeneratorSet,
        repetitions: usize,
        share_across_repetitions: bool,
    },
}

impl AnsatzSpec {
    pub fn meta_circuit(&self, n: usize, symbol: &str, encoding: AngleEncoding) -> Result<Circuit> {
        match self {
            AnsatzSpec::Layered { l1, l2 } => {
                if *l1 == 0 {
                    return Err(Error::InvalidArgument("meta-VQE needs at least one encoding layer".into()));
                }
                meta_ansatz(n, *l1, *l2, symbol, encoding)
            }
            AnsatzSpec::Ucc {
                generators,
                repetitions,
                share_across_repetitions,
            } => build_ucc_circuit(generators, *repetitions, *share_across_repetitions, encoding, symbol),
        }
    }

    pub fn plain_circuit(&self, n: usize) -> Result<Circuit> {
        match self {
            AnsatzSpec::Layered { l1, l2 } => processing_ansatz(n, l1 + l2),
            AnsatzSpec::Ucc {
                generators,
                repetitions,
                share_across_repetitions,
            } => build_ucc_circuit(generators, *repetitions, *share_across_repetitions, AngleEncoding::Plain, ""),
        }
    }

    fn layers(&self) -> (usize, usize) {
        match self {
            AnsatzSpec::Layered { l1, l2 } => (*l1, *l2),
            AnsatzSpec::Ucc { repetitions, .. } => (0, *repetitions),
        }
    }
}

/// A full comparison run: train, test and per-point baselines.
#[derive(Clone, Debug, PartialEq)]
pub struct Protocol {
    pub train: TrainingGrid,
    pub test: TrainingGrid,
    pub ansatz: AnsatzSpec,
    pub encoding: AngleEncoding,
    /// Starting point of the meta-VQE and GA-VQE training runs.
    pub train_init: TrainInit,
    pub algorithms: Vec<Algorithm>,
    /// One random-init VQE profile per seed.
    pub vqe_seeds: Vec<u64>,
    pub restarts: usize,
    pub optimizer: OptimizerConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolOutput {
    pub exact: Vec<f64>,
    pub profiles: Vec<(Algorithm, EnergyProfile)>,
    pub training: Vec<(Algorithm, TrainResult)>,
    /// Registry sizes of the meta and plain circuits.
    pub meta_params: usize,
    pub plain_params: usize,
}

impl ProtocolOutput {
    pub fn profile(&self, algorithm: Algorithm) -> Option<&EnergyProfile> {
        self.profiles.iter().find(|(a, _)| *a == algorithm).map(|(_, p)| p)
    }

    pub fn training(&self, algorithm: Algorithm) -> Option<&TrainResult> {
        self.training.iter().find(|(a, _)| *a == algorithm).map(|(_, t)| t)
    }
}

/// Runs the requested algorithms on `family`, training meta/GA when a
/// warm-started variant needs them.
pub fn run_protocol(family: &HamiltonianFamily, protocol: &Protocol) -> Result<ProtocolOutput> {
    let exact = exact_energies(family, &protocol.test)?;
    run_protocol_with_exact(family, protocol, exact)
}

/// [`run_protocol`] with exact test energies supplied by the caller.
pub fn run_protocol_with_exact(family: &HamiltonianFamily, protocol: &Protocol, exact: Vec<f64>) -> Result<ProtocolOutput> {
    if exact.len() != protocol.test.len() {
        return Err(Error::Dimension {
            expected: protocol.test.len(),
            found: exact.len(),
        });
    }
    let n = family.nqubits();
    let wants = |a: Algorithm| protocol.algorithms.contains(&a);
    let (l1, l2) = protocol.ansatz.layers();
    let profile_meta = |a: Algorithm, seed: u64| ProfileMeta {
        algorithm: a.name().to_string(),
        n,
        l1,
        l2,
        seed,
    };
    let seed = protocol.optimizer.seed;
    let meta_circuit = protocol.ansatz.meta_circuit(n, &protocol.train.symbol, protocol.encoding)?;
    let plain_circuit = protocol.ansatz.plain_circuit(n)?;
    let mut out = ProtocolOutput {
        exact,
        profiles: Vec::new(),
        training: Vec::new(),
        meta_params: meta_circuit.num_params(),
        plain_params: plain_circuit.num_params(),
    };

    if wants(Algorithm::Meta) || wants(Algorithm::OptMeta) {
        let trained = train_with("meta", &meta_circuit, family, &protocol.train, &protocol.optimizer, &protocol.train_init)?;
        if wants(Algorithm::Meta) {
            let p = evaluate_profile(
                &meta_circuit,
                &trained.params,
                family,
                &protocol.test,
                &out.exact,
                &profile_meta(Algorithm::Meta, seed),
                trained.trace.termination,
            )?;
            out.profiles.push((Algorithm::Meta, p));
        }
        if wants(Algorithm::OptMeta) {
            let p = run_vqe_per_point(
                &meta_circuit,
                family,
                &protocol.test,
                &out.exact,
                &Init::WarmStart(trained.params.clone()),
                &protocol.optimizer,
                &profile_meta(Algorithm::OptMeta, seed),
            )?;
            out.profiles.push((Algorithm::OptMeta, p));
        }
        out.training.push((Algorithm::Meta, trained));
    }

    if wants(Algorithm::Ga) || wants(Algorithm::OptGa) {
        let trained = train_with("ga", &plain_circuit, family, &protocol.train, &protocol.optimizer, &protocol.train_init)?;
        if wants(Algorithm::Ga) {
            let p = evaluate_profile(
                &plain_circuit,
                &trained.params,
                family,
                &protocol.test,
                &out.exact,
                &profile_meta(Algorithm::Ga, seed),
                trained.trace.termination,
            )?;
            out.profiles.push((Algorithm::Ga, p));
        }
        if wants(Algorithm::OptGa) {
            let p = run_vqe_per_point(
                &plain_circuit,
                family,
                &protocol.test,
                &out.exact,
                &Init::WarmStart(trained.params.clone()),
                &protocol.optimizer,
                &profile_meta(Algorithm::OptGa, seed),
            )?;
            out.profiles.push((Algorithm::OptGa, p));
        }
        out.training.push((Algorithm::Ga, trained));
    }

    if wants(Algorithm::Vqe) {
        let mut combined = EnergyProfile::default();
        for &s in &protocol.vqe_seeds {
            combined.extend(run_vqe_per_point(
                &plain_circuit,
                family,
                &protocol.test,
                &out.exact,
                &Init::Random {
                    seed: s,
                    restarts: protocol.restarts,
                },
                &protocol.optimizer,
                &profile_meta(Algorithm::Vqe, s),
            )?);
        }
        out.profiles.push((Algorithm::Vqe, combined));
    }

    out.profiles.sort_by_key(|(a, _)| *a);
    Ok(out)
}

/// Median of a non-empty slice (mean of the middle pair for even lengths).
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub algorithm: String,
    pub points: usize,
    pub median_abs_err: f64,
    pub max_abs_err: f64,
    pub median_rel_err: f64,
    pub max_rel_err: f64,
}

impl ErrorSummary {
    pub fn of(algorithm: &str, profile: &EnergyProfile) -> Self {
        let abs: Vec<f64> = profile.rows.iter().map(|r| r.abs_err).collect();
        let rel: Vec<f64> = profile.rows.iter().map(|r| r.rel_err).collect();
        let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
        Self {
            algorithm: algorithm.to_string(),
            points: abs.len(),
            median_abs_err: if abs.is_empty() { 0.0 } else { median(&abs) },
            max_abs_err: max(&abs),
            median_rel_err: if rel.is_empty() { 0.0 } else { median(&rel) },
            max_rel_err: max(&rel),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::parse_hamiltonian;

    #[test]
    fn equispaced_endpoints() {
        let g = equispaced(-1.1, 1.1, 20);
        assert_eq!(g.len(), 20);
        assert_eq!(g[0], -1.1);
        assert_eq!(g[19], 1.1);
        assert!((g[1] - g[0] - 2.2 / 19.0).abs() < 1e-15);
        assert_eq!(equispaced(0.3, 5.0, 1), [0.3]);
        assert!(equispaced(0.0, 1.0, 0).is_empty());
    }

    #[test]
    fn grid_validation() {
        assert!(TrainingGrid::new("d", vec![], vec![]).is_err());
        assert!(TrainingGrid::new("d", vec![1.0, 0.0], vec![]).is_err());
        assert!(TrainingGrid::new("d", vec![f64::NAN], vec![]).is_err());
        assert!(TrainingGrid::new("d", vec![0.0], vec![("d".into(), 1.0)]).is_err());
        let g = TrainingGrid::new("delta", vec![0.0, 1.0], vec![("field".into(), 0.75)]).unwrap();
        assert_eq!(g.lookup(0.5, "field"), Some(0.75));
        assert_eq!(g.lookup(0.5, "delta"), Some(0.5));
        assert_eq!(g.lookup(0.5, "other"), None);
    }

    #[test]
    fn missing_family_parameter_is_a_binding_error() {
        let fam = HamiltonianFamily::xxz(2).unwrap();
        let g = TrainingGrid::new("delta", vec![0.0], vec![]).unwrap();
        assert!(matches!(g.hamiltonian(&fam, 0.0), Err(Error::Binding(_))));
    }

    #[test]
    fn relative_error_floor() {
        let m = ProfileMeta {
            algorithm: "x".into(),
            n: 2,
            l1: 0,
            l2: 1,
            seed: 0,
        };
        let r = m.row(0.0, 1e-3, 1e-8, "max-iterations");
        assert!(r.rel_is_abs);
        assert_eq!(r.rel_err, r.abs_err);
        let r = m.row(0.0, -1.5, -2.0, "max-iterations");
        assert!(!r.rel_is_abs);
        assert!((r.rel_err - 0.25).abs() < 1e-15);
    }

    #[test]
    fn profile_csv_round_trip() {
        let m = ProfileMeta {
            algorithm: "opt-meta".into(),
            n: 8,
            l1: 2,
            l2: 2,
            seed: 11,
        };
        let p = EnergyProfile {
            rows: vec![m.row(-1.1, -14.0, -14.8, "gradient-converged"), m.row(0.5, -9.0, -10.0, "max-iterations")],
        };
        let text = p.to_csv();
        assert!(text.starts_with(PROFILE_HEADER));
        let back = EnergyProfile::from_csv(&text).unwrap();
        assert_eq!(back.to_csv(), text);
        assert!(EnergyProfile::from_csv("a,b\n").is_err());
        assert!(EnergyProfile::from_csv(&format!("{PROFILE_HEADER}\n1,2,3\n")).is_err());
    }

    #[test]
    fn single_qubit_family_per_point_vqe() {
        // H(l) = l Z on one qubit; a plain RY rotation reaches -|l|.
        let fam = HamiltonianFamily::parse("qubits 1\nparam l\n1 Z0\n").unwrap();
        let mut b = crate::CircuitBuilder::new(1).unwrap();
        let t = b.angle("t", AngleEncoding::Plain, None).unwrap();
        let z = b.angle("z", AngleEncoding::Plain, None).unwrap();
        b.rz(0, z).unwrap().ry(0, t).unwrap();
        let c = b.build();
        let test = TrainingGrid::new("l", vec![-1.5, -0.2, 0.7, 2.0], vec![]).unwrap();
        let exact = exact_energies(&fam, &test).unwrap();
        let meta = ProfileMeta {
            algorithm: "vqe".into(),
            n: 1,
            l1: 0,
            l2: 1,
            seed: 0,
        };
        // Zeros is a stationary point for l > 0, so start slightly off it.
        let init = Init::WarmStart(vec![0.1, 0.0]);
        let p = run_vqe_per_point(&c, &fam, &test, &exact, &init, &OptimizerConfig::default(), &meta).unwrap();
        for r in &p.rows {
            assert!((r.energy + r.meta_value.abs()).abs() < 1e-9, "{r:?}");
        }
        let h = parse_hamiltonian("qubits 1\n1 Z0\n").unwrap();
        assert_eq!(fam.at(&[1.0]).unwrap(), h);
    }

    #[test]
    fn warm_start_length_checked() {
        let fam = HamiltonianFamily::xxz(2).unwrap();
        let c = processing_ansatz(2, 1).unwrap();
        let test = TrainingGrid::new("delta", vec![0.0], vec![("field".into(), 0.0)]).unwrap();
        let meta = ProfileMeta {
            algorithm: "vqe".into(),
            n: 2,
            l1: 0,
            l2: 1,
            seed: 0,
        };
        let r = run_vqe_per_point(&c, &fam, &test, &[0.0], &Init::WarmStart(vec![0.0]), &OptimizerConfig::default(), &meta);
        assert!(matches!(r, Err(Error::Dimension { .. })));
    }

    #[test]
    fn median_and_summary() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(Algorithm::parse("opt-ga"), Some(Algorithm::OptGa));
        assert_eq!(Algorithm::parse("exact"), None);
    }
}
