//! Pauli strings, real-weighted Pauli sums and Hamiltonian families.
//!
//! # Hamiltonian file format
//!
//! UTF-8 text, LF or CRLF line endings. `#` starts a comment, blank lines are
//! ignored. A `qubits <n>` header must precede the first term. Each term line is
//! a real coefficient (decimal or scientific notation) followed by zero or more
//! `<P><idx>` tokens with `P` one of `X`, `Y`, `Z`:
//!
//! ```text
//! qubits 2
//! 1.0 Z0
//! -0.5 X0 X1
//! 2.5e-1          # constant (identity) term
//! ```
//!
//! Duplicate operator strings are merged by adding coefficients and terms that
//! cancel to exactly zero are dropped. The XXZ chain on two sites lists the bond
//! (0, 1) twice under periodic closure, so its two-body weights come out doubled.
//!
//! Family files additionally accept `param <name>` lines. Terms after such a
//! line are multiplied by the named scalar; terms before the first `param` line
//! form the fixed part of the Hamiltonian.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::statevector::Statevector;
use crate::{Error, Result, C64, MAX_QUBITS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn letter(self) -> char {
        match self {
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    fn from_letter(c: char) -> Option<Self> {
        match c {
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }
}

/// Bit-mask form of a Pauli word.
///
/// `P|b> = i^y_count * (-1)^popcount(b & z) |b ^ x>`, where `x` marks X/Y
/// support and `z` marks Y/Z support.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct PauliMasks {
    pub x: u64,
    pub z: u64,
    pub y_count: u32,
}

impl PauliMasks {
    /// `i^y_count` as a complex number.
    #[inline]
    pub fn y_phase(&self) -> C64 {
        match self.y_count % 4 {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        }
    }

    /// `(-1)^popcount(b & z)`.
    #[inline]
    pub fn sign(&self, b: usize) -> f64 {
        if (b as u64 & self.z).count_ones() & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Highest qubit touched plus one, or 0 for the identity.
    pub fn span(&self) -> usize {
        64 - (self.x | self.z).leading_zeros() as usize
    }
}

/// Tensor product of single-qubit Paulis; identity on absent qubits.
///
/// Operators are kept sorted by qubit index, which fixes the canonical order
/// used for printing and merging.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct PauliString {
    ops: Vec<(usize, Pauli)>,
}

impl PauliString {
    pub fn new(ops: impl IntoIterator<Item = (usize, Pauli)>) -> Result<Self> {
        let mut ops: Vec<(usize, Pauli)> = ops.into_iter().collect();
        ops.sort();
        for pair in ops.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(Error::InvalidArgument(format!(
                    "qubit {} appears twice in a Pauli string",
                    pair[0].0
                )));
            }
        }
        if let Some(&(q, _)) = ops.last() {
            if q >= 64 {
                return Err(Error::QubitRange {
                    index: q,
                    nqubits: 64,
                    line: None,
                });
            }
        }
        Ok(Self { ops })
    }

    pub fn identity() -> Self {
        Self::default()
    }

    pub fn single(qubit: usize, pauli: Pauli) -> Self {
        Self {
            ops: vec![(qubit, pauli)],
        }
    }

    pub fn two(a: (usize, Pauli), b: (usize, Pauli)) -> Result<Self> {
        Self::new([a, b])
    }

    pub fn ops(&self) -> &[(usize, Pauli)] {
        &self.ops
    }

    pub fn is_identity(&self) -> bool {
        self.ops.is_empty()
    }

    /// Number of qubits needed to hold this string.
    pub fn span(&self) -> usize {
        self.ops.last().map_or(0, |&(q, _)| q + 1)
    }

    pub fn masks(&self) -> PauliMasks {
        let mut m = PauliMasks::default();
        for &(q, p) in &self.ops {
            let bit = 1u64 << q;
            match p {
                Pauli::X => m.x |= bit,
                Pauli::Z => m.z |= bit,
                Pauli::Y => {
                    m.x |= bit;
                    m.z |= bit;
                    m.y_count += 1;
                }
            }
        }
        m
    }

    fn parse_tokens<'a>(tokens: impl Iterator<Item = &'a str>) -> std::result::Result<Self, String> {
        let mut ops = Vec::new();
        for tok in tokens {
            let mut chars = tok.chars();
            let letter = chars.next().ok_or_else(|| "empty operator token".to_string())?;
            let pauli = Pauli::from_letter(letter)
                .ok_or_else(|| format!("unknown operator `{tok}` (expected X, Y or Z followed by an index)"))?;
            let index: usize = chars
                .as_str()
                .parse()
                .map_err(|_| format!("bad qubit index in `{tok}`"))?;
            ops.push((index, pauli));
        }
        Self::new(ops).map_err(|e| e.to_string())
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ops.is_empty() {
            return f.write_str("I");
        }
        for (k, (q, p)) in self.ops.iter().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{}{}", p.letter(), q)?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "I" || s.is_empty() {
            return Ok(Self::identity());
        }
        Self::parse_tokens(s.split_whitespace()).map_err(|message| Error::Parse { line: 0, message })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PauliTerm {
    pub coefficient: f64,
    pub string: PauliString,
}

impl PauliTerm {
    pub fn new(coefficient: f64, string: PauliString) -> Self {
        Self { coefficient, string }
    }
}

/// Hermitian operator `sum_k c_k P_k` with real `c_k`, in canonical form.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliSum {
    nqubits: usize,
    terms: Vec<PauliTerm>,
    compiled: Vec<(f64, PauliMasks)>,
}

impl PauliSum {
    pub fn zero(nqubits: usize) -> Result<Self> {
        Self::from_terms(nqubits, [])
    }

    /// Builds a canonical sum: duplicates merged, exact zeros dropped, terms sorted.
    pub fn from_terms(nqubits: usize, terms: impl IntoIterator<Item = PauliTerm>) -> Result<Self> {
        if nqubits == 0 || nqubits > MAX_QUBITS {
            return Err(Error::InvalidSize(format!(
                "a Pauli sum needs 1..={MAX_QUBITS} qubits, got {nqubits}"
            )));
        }
        let mut merged: BTreeMap<PauliString, f64> = BTreeMap::new();
        for term in terms {
            if !term.coefficient.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "non-finite coefficient {} on {}",
                    term.coefficient, term.string
                )));
            }
            if term.string.span() > nqubits {
                return Err(Error::QubitRange {
                    index: term.string.span() - 1,
                    nqubits,
                    line: None,
                });
            }
            *merged.entry(term.string).or_insert(0.0) += term.coefficient;
        }
        let terms: Vec<PauliTerm> = merged
            .into_iter()
            .filter(|&(_, c)| c != 0.0)
            .map(|(string, coefficient)| PauliTerm { coefficient, string })
            .collect();
        let compiled = terms.iter().map(|t| (t.coefficient, t.string.masks())).collect();
        Ok(Self {
            nqubits,
            terms,
            compiled,
        })
    }

    pub fn nqubits(&self) -> usize {
        self.nqubits
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub(crate) fn compiled(&self) -> &[(f64, PauliMasks)] {
        &self.compiled
    }

    /// Coefficient of `string`, zero when absent.
    pub fn coefficient(&self, string: &PauliString) -> f64 {
        self.terms
            .binary_search_by(|t| t.string.cmp(string))
            .map_or(0.0, |k| self.terms[k].coefficient)
    }

    /// `self + scale * other` in canonical form.
    pub fn add_scaled(&self, other: &PauliSum, scale: f64) -> Result<PauliSum> {
        if other.nqubits != self.nqubits {
            return Err(Error::Dimension {
                expected: self.nqubits,
                found: other.nqubits,
            });
        }
        let extra = other
            .terms
            .iter()
            .map(|t| PauliTerm::new(scale * t.coefficient, t.string.clone()));
        PauliSum::from_terms(self.nqubits, self.terms.iter().cloned().chain(extra))
    }

    /// Returns `H v` without forming the dense matrix.
    pub fn matvec(&self, v: &Statevector) -> Result<Statevector> {
        if v.nqubits() != self.nqubits {
            return Err(Error::Dimension {
                expected: self.nqubits,
                found: v.nqubits(),
            });
        }
        let mut out = vec![C64::new(0.0, 0.0); v.len()];
        self.apply_into(v.amplitudes(), &mut out);
        Statevector::from_amplitudes(self.nqubits, out)
    }

    /// Writes `H v` into `out`. Both slices must have length `2^nqubits`.
    pub(crate) fn apply_into(&self, v: &[C64], out: &mut [C64]) {
        debug_assert_eq!(v.len(), 1 << self.nqubits);
        debug_assert_eq!(out.len(), v.len());
        let gather = |(j, slot): (usize, &mut C64)| {
            let mut acc = C64::new(0.0, 0.0);
            for &(c, m) in &self.compiled {
                let src = j ^ m.x as usize;
                acc += m.y_phase() * (c * m.sign(src)) * v[src];
            }
            *slot = acc;
        };
        if v.len() >= PARALLEL_LEN {
            out.par_iter_mut().enumerate().for_each(gather);
        } else {
            out.iter_mut().enumerate().for_each(gather);
        }
    }

    /// `<v|H|v>` as a complex number; the imaginary part is roundoff.
    pub(crate) fn expectation_complex(&self, v: &[C64]) -> C64 {
        let term = |&(c, m): &(f64, PauliMasks)| -> C64 {
            let x = m.x as usize;
            let mut acc = C64::new(0.0, 0.0);
            if x == 0 {
                let mut re = 0.0;
                for (b, a) in v.iter().enumerate() {
                    re += m.sign(b) * a.norm_sqr();
                }
                acc.re = re;
            } else {
                for (b, a) in v.iter().enumerate() {
                    acc += v[b ^ x].conj() * (m.sign(b) * a);
                }
                acc *= m.y_phase();
            }
            acc * c
        };
        if v.len() >= PARALLEL_LEN {
            let parts: Vec<C64> = self.compiled.par_iter().map(term).collect();
            parts.into_iter().sum()
        } else {
            self.compiled.iter().map(term).sum()
        }
    }
}

pub(crate) const PARALLEL_LEN: usize = 1 << 15;

impl fmt::Display for PauliSum {
    /// Prints the sum in the Hamiltonian file format; `parse_hamiltonian`
    /// reads it back term for term.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "qubits {}", self.nqubits)?;
        for t in &self.terms {
            if t.string.is_identity() {
                writeln!(f, "{:?}", t.coefficient)?;
            } else {
                writeln!(f, "{:?} {}", t.coefficient, t.string)?;
            }
        }
        Ok(())
    }
}

/// Periodic XXZ chain `sum_i (X_i X_{i+1} + Y_i Y_{i+1} + delta Z_i Z_{i+1}) + field sum_i Z_i`.
pub fn build_xxz(n: usize, delta: f64, field: f64) -> Result<PauliSum> {
    if n < 2 {
        return Err(Error::InvalidSize(format!("the XXZ chain needs at least 2 sites, got {n}")));
    }
    let mut terms = Vec::with_capacity(4 * n);
    for i in 0..n {
        let j = (i + 1) % n;
        for (p, c) in [(Pauli::X, 1.0), (Pauli::Y, 1.0), (Pauli::Z, delta)] {
            terms.push(PauliTerm::new(c, PauliString::two((i, p), (j, p))?));
        }
        terms.push(PauliTerm::new(field, PauliString::single(i, Pauli::Z)));
    }
    PauliSum::from_terms(n, terms)
}

/// Parses the Hamiltonian file format described in the module docs.
pub fn parse_hamiltonian(text: &str) -> Result<PauliSum> {
    let parsed = parse_sections(text, false)?;
    let (_, terms) = parsed.sections.into_iter().next().unwrap_or_default();
    PauliSum::from_terms(parsed.nqubits, terms)
}

struct ParsedSections {
    nqubits: usize,
    /// `("", base terms)` followed by one entry per `param` line.
    sections: Vec<(String, Vec<PauliTerm>)>,
}

fn parse_sections(text: &str, allow_params: bool) -> Result<ParsedSections> {
    let mut nqubits: Option<usize> = None;
    let mut sections: Vec<(String, Vec<PauliTerm>)> = vec![(String::new(), Vec::new())];
    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse {
            line: line_no,
            message,
        };
        let mut tokens = line.split_whitespace();
        let head = tokens.next().expect("non-empty line");
        if head == "qubits" {
            if nqubits.is_some() {
                return Err(err("duplicate `qubits` header".into()));
            }
            let n: usize = tokens
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| err("`qubits` expects a positive integer".into()))?;
            if tokens.next().is_some() {
                return Err(err("trailing tokens after `qubits <n>`".into()));
            }
            if n == 0 || n > MAX_QUBITS {
                return Err(err(format!("qubit count must be in 1..={MAX_QUBITS}")));
            }
            nqubits = Some(n);
            continue;
        }
        let n = nqubits.ok_or_else(|| err("missing `qubits <n>` header before the first term".into()))?;
        if head == "param" {
            if !allow_params {
                return Err(err("`param` sections are only valid in family files".into()));
            }
            let name = tokens
                .next()
                .ok_or_else(|| err("`param` expects a name".into()))?;
            if tokens.next().is_some() {
                return Err(err("trailing tokens after `param <name>`".into()));
            }
            if sections.iter().any(|(s, _)| s == name) {
                return Err(err(format!("parameter `{name}` declared twice")));
            }
            sections.push((name.to_string(), Vec::new()));
            continue;
        }
        let coefficient = parse_coefficient(head).map_err(err)?;
        let string = PauliString::parse_tokens(tokens).map_err(err)?;
        if string.span() > n {
            return Err(Error::QubitRange {
                index: string.span() - 1,
                nqubits: n,
                line: Some(line_no),
            });
        }
        sections
            .last_mut()
            .expect("base section")
            .1
            .push(PauliTerm::new(coefficient, string));
    }
    let nqubits = nqubits.ok_or_else(|| Error::Parse {
        line: 0,
        message: "missing `qubits <n>` header".into(),
    })?;
    Ok(ParsedSections { nqubits, sections })
}

fn parse_coefficient(tok: &str) -> std::result::Result<f64, String> {
    let lower = tok.to_ascii_lowercase();
    if lower.ends_with('j') || lower.ends_with('i') && !lower.ends_with("inf") {
        return Err(format!("complex coefficient `{tok}` (only real weights are allowed)"));
    }
    let value: f64 = tok
        .parse()
        .map_err(|_| format!("expected a real coefficient, found `{tok}`"))?;
    if !value.is_finite() {
        return Err(format!("non-finite coefficient `{tok}`"));
    }
    Ok(value)
}

/// `H(lambda) = base + sum_k lambda_k H_k`: a Hamiltonian affine in named parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianFamily {
    nqubits: usize,
    base: PauliSum,
    components: Vec<(String, PauliSum)>,
}

impl HamiltonianFamily {
    pub fn new(base: PauliSum, components: Vec<(String, PauliSum)>) -> Result<Self> {
        let nqubits = base.nqubits();
        for (k, (name, h)) in components.iter().enumerate() {
            if h.nqubits() != nqubits {
                return Err(Error::Dimension {
                    expected: nqubits,
                    found: h.nqubits(),
                });
            }
            if name.is_empty() || components[..k].iter().any(|(other, _)| other == name) {
                return Err(Error::InvalidArgument(format!("bad or duplicate parameter name `{name}`")));
            }
        }
        Ok(Self {
            nqubits,
            base,
            components,
        })
    }

    /// XXZ chain with parameters `["delta", "field"]`.
    pub fn xxz(n: usize) -> Result<Self> {
        let hopping = build_xxz(n, 0.0, 0.0)?;
        let zz = build_xxz(n, 1.0, 0.0)?.add_scaled(&hopping, -1.0)?;
        let field = build_xxz(n, 0.0, 1.0)?.add_scaled(&hopping, -1.0)?;
        Self::new(hopping, vec![("delta".into(), zz), ("field".into(), field)])
    }

    /// Parses a family file (Hamiltonian format plus `param <name>` sections).
    pub fn parse(text: &str) -> Result<Self> {
        let parsed = parse_sections(text, true)?;
        let n = parsed.nqubits;
        let mut sections = parsed.sections.into_iter();
        let (_, base) = sections.next().expect("base section");
        let base = PauliSum::from_terms(n, base)?;
        let components = sections
            .map(|(name, terms)| Ok((name, PauliSum::from_terms(n, terms)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(base, components)
    }

    pub fn nqubits(&self) -> usize {
        self.nqubits
    }

    pub fn parameter_names(&self) -> Vec<&str> {
        self.components.iter().map(|(n, _)| n.as_str()).collect()
    }

    pub fn base(&self) -> &PauliSum {
        &self.base
    }

    pub fn components(&self) -> &[(String, PauliSum)] {
        &self.components
    }

    /// Evaluates the family at `values`, ordered like [`Self::parameter_names`].
    pub fn at(&self, values: &[f64]) -> Result<PauliSum> {
        if values.len() != self.components.len() {
            return Err(Error::Dimension {
                expected: self.components.len(),
                found: values.len(),
            });
        }
        let mut terms: Vec<PauliTerm> = self.base.terms().to_vec();
        for ((_, h), &lambda) in self.components.iter().zip(values) {
            if !lambda.is_finite() {
                return Err(Error::InvalidArgument(format!("non-finite parameter value {lambda}")));
            }
            terms.extend(
                h.terms()
                    .iter()
                    .map(|t| PauliTerm::new(lambda * t.coefficient, t.string.clone())),
            );
        }
        PauliSum::from_terms(self.nqubits, terms)
    }
}
