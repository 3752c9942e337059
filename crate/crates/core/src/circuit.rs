//! Parameter expressions, the parameter registry and ansatz builders.
//!
//! A [`Circuit`] is a gate list whose angles are [`ParamExpr`]s over two kinds of
//! inputs: *meta symbols* (Hamiltonian parameters, supplied at bind time) and
//! *variational parameters* (registered in a [`ParamRegistry`], whose order fixes
//! the layout of the optimisation vector).
//!
//! # Generator file format
//!
//! ```text
//! qubits 4
//! reference 0011
//! t0 Y0 X2
//! t1 X1 Y3
//! t0 Y1 X3     # reusing a name shares the angle
//! ```

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::pauli::{PauliMasks, PauliString};
use crate::statevector::{bitstring_index, Gate, Statevector};
use crate::{Error, Result, MAX_QUBITS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamHandle(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MetaSymbol(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Partition {
    /// Parameters of angles that depend on a meta symbol.
    Encoding,
    /// Plain variational angles.
    Processing,
}

/// Exponent shape of the Gaussian encoding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum GaussianForm {
    /// `alpha * exp(beta * (gamma - x)) + delta`
    #[default]
    Linear,
    /// `alpha * exp(beta * (gamma - x)^2) + delta`
    Squared,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ParamExpr {
    Const(f64),
    Var(ParamHandle),
    /// `w * x + phi`
    Linear {
        w: ParamHandle,
        x: MetaSymbol,
        phi: ParamHandle,
    },
    /// `alpha * exp(beta * g(gamma - x)) + delta` with `g` set by `form`.
    Gaussian {
        alpha: ParamHandle,
        beta: ParamHandle,
        gamma: ParamHandle,
        delta: ParamHandle,
        x: MetaSymbol,
        form: GaussianForm,
    },
}

/// Up to four `(handle, d angle / d param)` pairs.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Partials {
    items: [(usize, f64); 4],
    len: usize,
}

impl Partials {
    fn push(&mut self, handle: ParamHandle, d: f64) {
        self.items[self.len] = (handle.0, d);
        self.len += 1;
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamHandle, f64)> + '_ {
        self.items[..self.len].iter().map(|&(h, d)| (ParamHandle(h), d))
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Partial with respect to `handle`, summed over repeated occurrences.
    pub fn get(&self, handle: ParamHandle) -> f64 {
        self.iter().filter(|&(h, _)| h == handle).map(|(_, d)| d).sum()
    }
}

impl ParamExpr {
    /// Angle value.
    pub fn eval(&self, meta: &[f64], params: &[f64]) -> f64 {
        self.eval_with_partials(meta, params).0
    }

    /// Angle value together with its exact partial derivatives.
    ///
    /// Handles and symbols must be in range; [`Circuit`] checks this when binding.
    pub fn eval_with_partials(&self, meta: &[f64], params: &[f64]) -> (f64, Partials) {
        let mut p = Partials::default();
        let value = match *self {
            ParamExpr::Const(v) => v,
            ParamExpr::Var(h) => {
                p.push(h, 1.0);
                params[h.0]
            }
            ParamExpr::Linear { w, x, phi } => {
                let xv = meta[x.0];
                p.push(w, xv);
                p.push(phi, 1.0);
                params[w.0] * xv + params[phi.0]
            }
            ParamExpr::Gaussian {
                alpha,
                beta,
                gamma,
                delta,
                x,
                form,
            } => {
                let (a, b, g, d) = (params[alpha.0], params[beta.0], params[gamma.0], params[delta.0]);
                let u = g - meta[x.0];
                match form {
                    GaussianForm::Linear => {
                        let e = (b * u).exp();
                        p.push(alpha, e);
                        p.push(beta, a * u * e);
                        p.push(gamma, a * b * e);
                        p.push(delta, 1.0);
                        a * e + d
                    }
                    GaussianForm::Squared => {
                        let e = (b * u * u).exp();
                        p.push(alpha, e);
                        p.push(beta, a * u * u * e);
                        p.push(gamma, 2.0 * a * b * u * e);
                        p.push(delta, 1.0);
                        a * e + d
                    }
                }
            }
        };
        (value, p)
    }

    fn handles(&self) -> Vec<ParamHandle> {
        match *self {
            ParamExpr::Const(_) => vec![],
            ParamExpr::Var(h) => vec![h],
            ParamExpr::Linear { w, phi, .. } => vec![w, phi],
            ParamExpr::Gaussian {
                alpha, beta, gamma, delta, ..
            } => vec![alpha, beta, gamma, delta],
        }
    }

    fn symbol(&self) -> Option<MetaSymbol> {
        match *self {
            ParamExpr::Linear { x, .. } | ParamExpr::Gaussian { x, .. } => Some(x),
            _ => None,
        }
    }

    pub fn is_parameterized(&self) -> bool {
        !matches!(self, ParamExpr::Const(_))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamInfo {
    pub name: String,
    pub partition: Partition,
    pub initial: f64,
}

/// Ordered, uniquely named variational parameters.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamRegistry {
    entries: Vec<ParamInfo>,
    by_name: HashMap<String, usize>,
}

impl ParamRegistry {
    pub fn register(&mut self, name: impl Into<String>, partition: Partition, initial: f64) -> Result<ParamHandle> {
        let name = name.into();
        if self.by_name.contains_key(&name) {
            return Err(Error::InvalidArgument(format!("parameter `{name}` registered twice")));
        }
        let h = ParamHandle(self.entries.len());
        self.by_name.insert(name.clone(), h.0);
        self.entries.push(ParamInfo {
            name,
            partition,
            initial,
        });
        Ok(h)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<ParamHandle> {
        self.by_name.get(name).map(|&k| ParamHandle(k))
    }

    pub fn entries(&self) -> &[ParamInfo] {
        &self.entries
    }

    pub fn names(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.name.clone()).collect()
    }

    /// Initial values in registry order.
    pub fn initial_values(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.initial).collect()
    }

    pub fn count(&self, partition: Partition) -> usize {
        self.entries.iter().filter(|e| e.partition == partition).count()
    }
}

/// How a fresh gate angle is parameterised.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum AngleEncoding {
    /// One free angle.
    Plain,
    /// `w x + phi`, initialised at `w = phi = 0`.
    #[default]
    Linear,
    /// Gaussian in the meta symbol, initialised at `alpha = delta = 0`, `beta = gamma = 1`.
    Gaussian(GaussianForm),
}

impl AngleEncoding {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "plain" => Some(Self::Plain),
            "linear" => Some(Self::Linear),
            "gaussian" => Some(Self::Gaussian(GaussianForm::Linear)),
            "gaussian-squared" => Some(Self::Gaussian(GaussianForm::Squared)),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Plain => "plain",
            Self::Linear => "linear",
            Self::Gaussian(GaussianForm::Linear) => "gaussian",
            Self::Gaussian(GaussianForm::Squared) => "gaussian-squared",
        }
    }

    /// Variational parameters per encoded angle.
    pub fn params_per_angle(&self) -> usize {
        match self {
            Self::Plain => 1,
            Self::Linear => 2,
            Self::Gaussian(_) => 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CircuitGate {
    Ry { target: usize, angle: ParamExpr },
    Rz { target: usize, angle: ParamExpr },
    Cnot { control: usize, target: usize },
    PauliExp {
        string: PauliString,
        masks: PauliMasks,
        angle: ParamExpr,
    },
}

impl CircuitGate {
    pub fn angle(&self) -> Option<&ParamExpr> {
        match self {
            CircuitGate::Ry { angle, .. } | CircuitGate::Rz { angle, .. } | CircuitGate::PauliExp { angle, .. } => {
                Some(angle)
            }
            CircuitGate::Cnot { .. } => None,
        }
    }

    fn numeric(&self, angle: f64) -> Gate {
        match *self {
            CircuitGate::Ry { target, .. } => Gate::Ry { target, angle },
            CircuitGate::Rz { target, .. } => Gate::Rz { target, angle },
            CircuitGate::Cnot { control, target } => Gate::Cnot { control, target },
            CircuitGate::PauliExp { masks, .. } => Gate::PauliExp { masks, angle },
        }
    }
}

/// A gate bound to numbers, plus the chain-rule factors of its angle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundGate {
    pub gate: Gate,
    pub partials: Partials,
    pub parameterized: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    nqubits: usize,
    reference: usize,
    gates: Vec<CircuitGate>,
    registry: ParamRegistry,
    meta_symbols: Vec<String>,
}

impl Circuit {
    pub fn nqubits(&self) -> usize {
        self.nqubits
    }

    pub fn gates(&self) -> &[CircuitGate] {
        &self.gates
    }

    pub fn registry(&self) -> &ParamRegistry {
        &self.registry
    }

    pub fn num_params(&self) -> usize {
        self.registry.len()
    }

    pub fn meta_symbols(&self) -> &[String] {
        &self.meta_symbols
    }

    /// Basis index the circuit starts from.
    pub fn reference(&self) -> usize {
        self.reference
    }

    pub fn initial_state(&self) -> Statevector {
        Statevector::from_index(self.nqubits, self.reference).expect("reference validated at build time")
    }

    /// Number of gates whose angle depends on a variational parameter.
    pub fn parameterized_sites(&self) -> usize {
        self.gates
            .iter()
            .filter(|g| g.angle().is_some_and(ParamExpr::is_parameterized))
            .count()
    }

    /// Meta values ordered like [`Self::meta_symbols`], looked up by name.
    pub fn meta_values(&self, lookup: impl Fn(&str) -> Option<f64>) -> Result<Vec<f64>> {
        self.meta_symbols
            .iter()
            .map(|s| lookup(s).ok_or_else(|| Error::Binding(format!("meta symbol `{s}` is unbound"))))
            .collect()
    }

    fn check_inputs(&self, meta: &[f64], params: &[f64]) -> Result<()> {
        if meta.len() != self.meta_symbols.len() {
            return Err(Error::Binding(format!(
                "circuit has meta symbols {:?} but {} values were supplied",
                self.meta_symbols,
                meta.len()
            )));
        }
        if params.len() != self.registry.len() {
            return Err(Error::Dimension {
                expected: self.registry.len(),
                found: params.len(),
            });
        }
        if let Some(v) = meta.iter().chain(params).find(|v| !v.is_finite()) {
            return Err(Error::Binding(format!("non-finite input value {v}")));
        }
        Ok(())
    }

    /// Numeric gate list with angle partials.
    pub fn bind(&self, meta: &[f64], params: &[f64]) -> Result<Vec<BoundGate>> {
        self.check_inputs(meta, params)?;
        Ok(self
            .gates
            .iter()
            .map(|g| match g.angle() {
                Some(expr) => {
                    let (angle, partials) = expr.eval_with_partials(meta, params);
                    BoundGate {
                        gate: g.numeric(angle),
                        partials,
                        parameterized: expr.is_parameterized(),
                    }
                }
                None => BoundGate {
                    gate: g.numeric(0.0),
                    partials: Partials::default(),
                    parameterized: false,
                },
            })
            .collect())
    }

    /// Binds every expression and runs the circuit from its reference state.
    pub fn run(&self, meta: &[f64], params: &[f64]) -> Result<Statevector> {
        let bound = self.bind(meta, params)?;
        let mut state = self.initial_state();
        for b in &bound {
            state.apply_unchecked(&b.gate);
        }
        Ok(state)
    }
}

/// Incremental circuit construction.
#[derive(Clone, Debug)]
pub struct CircuitBuilder {
    nqubits: usize,
    reference: usize,
    gates: Vec<CircuitGate>,
    registry: ParamRegistry,
    meta_symbols: Vec<String>,
    encoding_layers: usize,
    processing_layers: usize,
}

impl CircuitBuilder {
    pub fn new(nqubits: usize) -> Result<Self> {
        if nqubits == 0 || nqubits > MAX_QUBITS {
            return Err(Error::InvalidSize(format!("circuits hold 1..={MAX_QUBITS} qubits, got {nqubits}")));
        }
        Ok(Self {
            nqubits,
            reference: 0,
            gates: Vec::new(),
            registry: ParamRegistry::default(),
            meta_symbols: Vec::new(),
            encoding_layers: 0,
            processing_layers: 0,
        })
    }

    pub fn nqubits(&self) -> usize {
        self.nqubits
    }

    /// Start from a computational basis state (qubit-0-first bitstring).
    pub fn reference(mut self, bits: &str) -> Result<Self> {
        self.reference = bitstring_index(self.nqubits, bits)?;
        Ok(self)
    }

    /// Handle for a named meta symbol, declaring it on first use.
    pub fn meta_symbol(&mut self, name: &str) -> MetaSymbol {
        match self.meta_symbols.iter().position(|s| s == name) {
            Some(k) => MetaSymbol(k),
            None => {
                self.meta_symbols.push(name.to_string());
                MetaSymbol(self.meta_symbols.len() - 1)
            }
        }
    }

    pub fn param(&mut self, name: impl Into<String>, partition: Partition, initial: f64) -> Result<ParamHandle> {
        self.registry.register(name, partition, initial)
    }

    pub fn registry(&self) -> &ParamRegistry {
        &self.registry
    }

    /// Registers the parameters for a fresh angle named `prefix`.
    ///
    /// `Plain` ignores `symbol`; the encoded forms require one.
    pub fn angle(&mut self, prefix: &str, encoding: AngleEncoding, symbol: Option<MetaSymbol>) -> Result<ParamExpr> {
        let need_symbol = || {
            symbol.ok_or_else(|| Error::InvalidArgument(format!("angle `{prefix}` is encoded but no meta symbol was given")))
        };
        Ok(match encoding {
            AngleEncoding::Plain => ParamExpr::Var(self.param(prefix, Partition::Processing, 0.0)?),
            AngleEncoding::Linear => {
                let x = need_symbol()?;
                let w = self.param(format!("{prefix}.w"), Partition::Encoding, 0.0)?;
                let phi = self.param(format!("{prefix}.phi"), Partition::Encoding, 0.0)?;
                ParamExpr::Linear { w, x, phi }
            }
            AngleEncoding::Gaussian(form) => {
                let x = need_symbol()?;
                let alpha = self.param(format!("{prefix}.alpha"), Partition::Encoding, 0.0)?;
                let beta = self.param(format!("{prefix}.beta"), Partition::Encoding, 1.0)?;
                let gamma = self.param(format!("{prefix}.gamma"), Partition::Encoding, 1.0)?;
                let delta = self.param(format!("{prefix}.delta"), Partition::Encoding, 0.0)?;
                ParamExpr::Gaussian {
                    alpha,
                    beta,
                    gamma,
                    delta,
                    x,
                    form,
                }
            }
        })
    }

    fn check_expr(&self, expr: &ParamExpr) -> Result<()> {
        if let Some(h) = expr.handles().into_iter().find(|h| h.0 >= self.registry.len()) {
            return Err(Error::Binding(format!("parameter handle {} is not registered", h.0)));
        }
        if let Some(s) = expr.symbol().filter(|s| s.0 >= self.meta_symbols.len()) {
            return Err(Error::Binding(format!("meta symbol {} is not declared", s.0)));
        }
        Ok(())
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.nqubits {
            return Err(Error::QubitRange {
                index: q,
                nqubits: self.nqubits,
                line: None,
            });
        }
        Ok(())
    }

    pub fn ry(&mut self, target: usize, angle: ParamExpr) -> Result<&mut Self> {
        self.check_qubit(target)?;
        self.check_expr(&angle)?;
        self.gates.push(CircuitGate::Ry { target, angle });
        Ok(self)
    }

    pub fn rz(&mut self, target: usize, angle: ParamExpr) -> Result<&mut Self> {
        self.check_qubit(target)?;
        self.check_expr(&angle)?;
        self.gates.push(CircuitGate::Rz { target, angle });
        Ok(self)
    }

    pub fn cnot(&mut self, control: usize, target: usize) -> Result<&mut Self> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(Error::InvalidArgument(format!("CNOT on a single qubit {control}")));
        }
        self.gates.push(CircuitGate::Cnot { control, target });
        Ok(self)
    }

    pub fn pauli_exp(&mut self, string: PauliString, angle: ParamExpr) -> Result<&mut Self> {
        if string.span() > self.nqubits {
            self.check_qubit(string.span() - 1)?;
        }
        self.check_expr(&angle)?;
        let masks = string.masks();
        self.gates.push(CircuitGate::PauliExp { string, masks, angle });
        Ok(self)
    }

    /// First-neighbour CNOT ring `(0,1), (1,2), ..., (n-2,n-1), (n-1,0)`.
    pub fn cnot_ring(&mut self) -> Result<&mut Self> {
        let n = self.nqubits;
        for i in 0..n {
            self.cnot(i, (i + 1) % n)?;
        }
        Ok(self)
    }

    pub fn build(self) -> Circuit {
        Circuit {
            nqubits: self.nqubits,
            reference: self.reference,
            gates: self.gates,
            registry: self.registry,
            meta_symbols: self.meta_symbols,
        }
    }
}

fn check_layered_size(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidSize(format!("layered ansatz needs at least 2 qubits, got {n}")));
    }
    Ok(())
}

/// Appends `layers` encoding layers: per qubit `RZ(f) RY(f)` with encoded angles
/// in `symbol`, then the CNOT ring. Linear encoding adds `4 n` parameters per layer.
pub fn build_encoding_layers(
    b: &mut CircuitBuilder,
    layers: usize,
    symbol: &str,
    encoding: AngleEncoding,
) -> Result<()> {
    check_layered_size(b.nqubits())?;
    let x = b.meta_symbol(symbol);
    let offset = b.encoding_layers;
    b.encoding_layers += layers;
    for l in offset..offset + layers {
        for q in 0..b.nqubits() {
            let rz = b.angle(&format!("enc{l}.q{q}.rz"), encoding, Some(x))?;
            let ry = b.angle(&format!("enc{l}.q{q}.ry"), encoding, Some(x))?;
            b.rz(q, rz)?.ry(q, ry)?;
        }
        b.cnot_ring()?;
    }
    Ok(())
}

/// Appends `layers` processing layers: per qubit `RZ(t) RY(t)`, then the CNOT ring
/// (`2 n` parameters per layer).
pub fn build_processing_layers(b: &mut CircuitBuilder, layers: usize) -> Result<()> {
    check_layered_size(b.nqubits())?;
    let offset = b.processing_layers;
    b.processing_layers += layers;
    for l in offset..offset + layers {
        for q in 0..b.nqubits() {
            let rz = b.angle(&format!("proc{l}.q{q}.rz"), AngleEncoding::Plain, None)?;
            let ry = b.angle(&format!("proc{l}.q{q}.ry"), AngleEncoding::Plain, None)?;
            b.rz(q, rz)?.ry(q, ry)?;
        }
        b.cnot_ring()?;
    }
    Ok(())
}

/// Meta-VQE layered ansatz: `encoding_layers` encoded layers then `processing_layers`
/// plain layers, starting from `|0...0>`.
pub fn meta_ansatz(
    n: usize,
    encoding_layers: usize,
    processing_layers: usize,
    symbol: &str,
    encoding: AngleEncoding,
) -> Result<Circuit> {
    let mut b = CircuitBuilder::new(n)?;
    build_encoding_layers(&mut b, encoding_layers, symbol, encoding)?;
    build_processing_layers(&mut b, processing_layers)?;
    Ok(b.build())
}

/// Layered ansatz with plain angles only (GA-VQE and standard VQE).
pub fn processing_ansatz(n: usize, layers: usize) -> Result<Circuit> {
    let mut b = CircuitBuilder::new(n)?;
    build_processing_layers(&mut b, layers)?;
    Ok(b.build())
}

/// Generators read from a generator file.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorSet {
    pub nqubits: usize,
    pub reference: String,
    /// `(angle name, Pauli word)` in file order.
    pub generators: Vec<(String, PauliString)>,
}

impl GeneratorSet {
    pub fn parse(text: &str) -> Result<Self> {
        let mut nqubits = None;
        let mut reference = None;
        let mut generators = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line_no = k + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse { line: line_no, message };
            let mut tokens = line.split_whitespace();
            let head = tokens.next().expect("non-empty");
            let rest: Vec<&str> = tokens.collect();
            match head {
                "qubits" => {
                    let n: usize = match rest.as_slice() {
                        [t] => t.parse().map_err(|_| err("`qubits` expects an integer".into()))?,
                        _ => return Err(err("`qubits` expects one integer".into())),
                    };
                    if n == 0 || n > MAX_QUBITS {
                        return Err(err(format!("qubit count must be in 1..={MAX_QUBITS}")));
                    }
                    nqubits = Some(n);
                }
                "reference" => {
                    let n = nqubits.ok_or_else(|| err("`reference` before `qubits`".into()))?;
                    match rest.as_slice() {
                        [bits] => {
                            bitstring_index(n, bits).map_err(|e| err(e.to_string()))?;
                            reference = Some(bits.to_string());
                        }
                        _ => return Err(err("`reference` expects one bitstring".into())),
                    }
                }
                name => {
                    let n = nqubits.ok_or_else(|| err("generator before `qubits` header".into()))?;
                    if rest.is_empty() {
                        return Err(err(format!("generator `{name}` has no Pauli operators")));
                    }
                    let string: PauliString = rest.join(" ").parse().map_err(|e: Error| match e {
                        Error::Parse { message, .. } => err(message),
                        other => other,
                    })?;
                    if string.span() > n {
                        return Err(Error::QubitRange {
                            index: string.span() - 1,
                            nqubits: n,
                            line: Some(line_no),
                        });
                    }
                    generators.push((name.to_string(), string));
                }
            }
        }
        let nqubits = nqubits.ok_or_else(|| Error::Parse {
            line: 0,
            message: "missing `qubits <n>` header".into(),
        })?;
        let reference = reference.unwrap_or_else(|| "0".repeat(nqubits));
        Ok(Self {
            nqubits,
            reference,
            generators,
        })
    }
}

/// Pauli-exponential ansatz: the reference basis state followed by
/// `repetitions` blocks of `exp(-i t_g P_g / 2)`.
///
/// Generators with the same name share one angle inside a block; with
/// `share_across_repetitions` the blocks also share angles, otherwise block `r`
/// gets fresh angles suffixed `.r<r>`. Encoded angles use `symbol`.
pub fn build_ucc_circuit(
    set: &GeneratorSet,
    repetitions: usize,
    share_across_repetitions: bool,
    encoding: AngleEncoding,
    symbol: &str,
) -> Result<Circuit> {
    if repetitions == 0 {
        return Err(Error::InvalidArgument("UCC ansatz needs at least one repetition".into()));
    }
    let mut b = CircuitBuilder::new(set.nqubits)?.reference(&set.reference)?;
    let x = match encoding {
        AngleEncoding::Plain => None,
        _ => Some(b.meta_symbol(symbol)),
    };
    let mut angles: HashMap<String, ParamExpr> = HashMap::new();
    for r in 0..repetitions {
        for (name, string) in &set.generators {
            let key = if share_across_repetitions || repetitions == 1 {
                name.clone()
            } else {
                format!("{name}.r{r}")
            };
            let expr = match angles.get(&key) {
                Some(e) => *e,
                None => {
                    let e = b.angle(&key, encoding, x)?;
                    angles.insert(key, e);
                    e
                }
            };
            b.pauli_exp(string.clone(), expr)?;
        }
    }
    Ok(b.build())
}
