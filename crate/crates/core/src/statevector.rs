//! Dense statevector simulation.
//!
//! Rotation conventions: `RY(t) = exp(-i t Y / 2)`, `RZ(t) = exp(-i t Z / 2)` and
//! `PauliExp(P, t) = exp(-i t P / 2)`. Global phase is not tracked.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::pauli::{PauliMasks, PauliString, PauliSum, PARALLEL_LEN};
use crate::{Error, Result, C64, MAX_QUBITS};

/// A gate with a numeric angle, ready to apply.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gate {
    Ry { target: usize, angle: f64 },
    Rz { target: usize, angle: f64 },
    Cnot { control: usize, target: usize },
    PauliExp { masks: PauliMasks, angle: f64 },
}

impl Gate {
    pub fn pauli_exp(string: &PauliString, angle: f64) -> Self {
        Gate::PauliExp {
            masks: string.masks(),
            angle,
        }
    }

    pub fn angle(&self) -> Option<f64> {
        match *self {
            Gate::Ry { angle, .. } | Gate::Rz { angle, .. } | Gate::PauliExp { angle, .. } => Some(angle),
            Gate::Cnot { .. } => None,
        }
    }

    /// Same gate with a different angle; CNOT is returned unchanged.
    pub fn with_angle(self, new: f64) -> Self {
        match self {
            Gate::Ry { target, .. } => Gate::Ry { target, angle: new },
            Gate::Rz { target, .. } => Gate::Rz { target, angle: new },
            Gate::PauliExp { masks, .. } => Gate::PauliExp { masks, angle: new },
            g @ Gate::Cnot { .. } => g,
        }
    }

    /// Inverse gate (negated angle; CNOT is self-inverse).
    pub fn inverse(self) -> Self {
        match self.angle() {
            Some(a) => self.with_angle(-a),
            None => self,
        }
    }

    pub fn validate(&self, nqubits: usize) -> Result<()> {
        let check = |q: usize| {
            if q < nqubits {
                Ok(())
            } else {
                Err(Error::QubitRange {
                    index: q,
                    nqubits,
                    line: None,
                })
            }
        };
        match *self {
            Gate::Ry { target, .. } | Gate::Rz { target, .. } => check(target),
            Gate::Cnot { control, target } => {
                check(control)?;
                check(target)?;
                if control == target {
                    return Err(Error::InvalidArgument(format!(
                        "CNOT control and target are both qubit {control}"
                    )));
                }
                Ok(())
            }
            Gate::PauliExp { masks, .. } => match masks.span() {
                0 => Ok(()),
                s => check(s - 1),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Statevector {
    nqubits: usize,
    amps: Vec<C64>,
}

fn check_size(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::InvalidSize(format!(
            "statevectors hold 1..={MAX_QUBITS} qubits, got {n}"
        )));
    }
    Ok(())
}

impl Statevector {
    /// `|0...0>` on `n` qubits.
    pub fn zeros(n: usize) -> Result<Self> {
        Self::from_index(n, 0)
    }

    /// Computational basis state with amplitude index `index`.
    pub fn from_index(n: usize, index: usize) -> Result<Self> {
        check_size(n)?;
        if index >> n != 0 {
            return Err(Error::InvalidArgument(format!("basis index {index} needs more than {n} qubits")));
        }
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
        amps[index] = C64::new(1.0, 0.0);
        Ok(Self { nqubits: n, amps })
    }

    /// Basis state from a bitstring written qubit 0 first: `"101"` on 3 qubits is index 5.
    pub fn basis_state(n: usize, bits: &str) -> Result<Self> {
        Self::from_index(n, bitstring_index(n, bits)?)
    }

    pub fn from_amplitudes(n: usize, amps: Vec<C64>) -> Result<Self> {
        check_size(n)?;
        if amps.len() != 1 << n {
            return Err(Error::Dimension {
                expected: 1 << n,
                found: amps.len(),
            });
        }
        Ok(Self { nqubits: n, amps })
    }

    pub fn nqubits(&self) -> usize {
        self.nqubits
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Statevector) -> Result<C64> {
        if other.nqubits != self.nqubits {
            return Err(Error::Dimension {
                expected: self.nqubits,
                found: other.nqubits,
            });
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.nqubits)?;
        self.apply_unchecked(gate);
        Ok(())
    }

    pub fn apply_all<'a>(&mut self, gates: impl IntoIterator<Item = &'a Gate>) -> Result<()> {
        for g in gates {
            self.apply(g)?;
        }
        Ok(())
    }

    /// Applies a gate already validated against this register.
    pub(crate) fn apply_unchecked(&mut self, gate: &Gate) {
        match *gate {
            Gate::Ry { target, angle } => {
                let (s, c) = (0.5 * angle).sin_cos();
                for_each_pair(&mut self.amps, target, move |a0, a1| {
                    let (x0, x1) = (*a0, *a1);
                    *a0 = x0 * c - x1 * s;
                    *a1 = x0 * s + x1 * c;
                });
            }
            Gate::Rz { target, angle } => {
                let (s, c) = (0.5 * angle).sin_cos();
                let (f0, f1) = (C64::new(c, -s), C64::new(c, s));
                for_each_pair(&mut self.amps, target, move |a0, a1| {
                    *a0 *= f0;
                    *a1 *= f1;
                });
            }
            Gate::Cnot { control, target } => {
                let (cm, tm) = (1usize << control, 1usize << target);
                for i in 0..self.amps.len() {
                    if i & cm != 0 && i & tm == 0 {
                        self.amps.swap(i, i | tm);
                    }
                }
            }
            Gate::PauliExp { masks, angle } => apply_pauli_exp(&mut self.amps, masks, angle),
        }
    }

    /// `<psi|H|psi>`; the imaginary part is roundoff for a Hermitian `H`.
    pub fn expectation(&self, h: &PauliSum) -> Result<f64> {
        if h.nqubits() != self.nqubits {
            return Err(Error::Dimension {
                expected: self.nqubits,
                found: h.nqubits(),
            });
        }
        let e = h.expectation_complex(&self.amps);
        debug_assert!(
            e.im.abs() < 1e-10 * (1.0 + e.re.abs()),
            "expectation has imaginary part {}",
            e.im
        );
        Ok(e.re)
    }

    /// Human-readable amplitude table (registers up to 6 qubits).
    pub fn dump(&self) -> Result<String> {
        if self.nqubits > 6 {
            return Err(Error::TooLarge {
                nqubits: self.nqubits,
                limit: 6,
                method: "amplitude dump",
            });
        }
        let mut out = String::new();
        for (i, a) in self.amps.iter().enumerate() {
            let bits: String = (0..self.nqubits)
                .map(|q| if i >> q & 1 == 1 { '1' } else { '0' })
                .collect();
            writeln!(out, "|{bits}> {:+.12e} {:+.12e}i", a.re, a.im).expect("write to String");
        }
        Ok(out)
    }
}

/// Index of a qubit-0-first bitstring.
pub fn bitstring_index(n: usize, bits: &str) -> Result<usize> {
    if bits.chars().count() != n {
        return Err(Error::Dimension {
            expected: n,
            found: bits.chars().count(),
        });
    }
    bits.chars().enumerate().try_fold(0usize, |acc, (q, c)| match c {
        '0' => Ok(acc),
        '1' => Ok(acc | 1 << q),
        other => Err(Error::InvalidArgument(format!("bitstring contains `{other}`"))),
    })
}

fn for_each_pair<F>(amps: &mut [C64], target: usize, f: F)
where
    F: Fn(&mut C64, &mut C64) + Sync + Send,
{
    let half = 1usize << target;
    let body = |block: &mut [C64]| {
        let (lo, hi) = block.split_at_mut(half);
        for (a0, a1) in lo.iter_mut().zip(hi) {
            f(a0, a1);
        }
    };
    if amps.len() >= PARALLEL_LEN && amps.len() > 2 * half {
        amps.par_chunks_mut(2 * half).for_each(body);
    } else {
        amps.chunks_mut(2 * half).for_each(body);
    }
}

fn apply_pauli_exp(amps: &mut [C64], m: PauliMasks, angle: f64) {
    let (s, c) = (0.5 * angle).sin_cos();
    let x = m.x as usize;
    if x == 0 {
        // Diagonal word: each amplitude picks up exp(-i t sign / 2).
        for (b, a) in amps.iter_mut().enumerate() {
            *a *= C64::new(c, -s * m.sign(b));
        }
        return;
    }
    // Pair b with b ^ x; the lowest X/Y bit decides which member is visited.
    let pivot = 1usize << x.trailing_zeros();
    let minus_i_s = C64::new(0.0, -s) * m.y_phase();
    for b in 0..amps.len() {
        if b & pivot != 0 {
            continue;
        }
        let bp = b ^ x;
        let (v, vp) = (amps[b], amps[bp]);
        amps[b] = v * c + minus_i_s * (m.sign(bp) * vp);
        amps[bp] = vp * c + minus_i_s * (m.sign(b) * v);
    }
}
