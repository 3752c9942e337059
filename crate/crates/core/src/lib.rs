//! Statevector workbench for the meta variational quantum eigensolver.
//!
//! A meta-VQE circuit splits into an *encoding* block, whose rotation angles
//! depend on a Hamiltonian parameter through trainable expressions, and a
//! *processing* block of plain variational rotations. Training minimises the
//! summed energy over a grid of Hamiltonian parameters; the trained circuit then
//! produces an energy profile for any parameter value, or serves as a warm start
//! for per-point VQE runs.
//!
//! The crate is organised bottom-up:
//!
//! - [`pauli`]: Pauli strings, Hermitian Pauli sums, the periodic XXZ chain,
//!   Hamiltonian families and the text file format.
//! - [`statevector`]: dense simulation kernels and expectation values.
//! - [`circuit`]: parameter expressions, the registry and ansatz builders.
//! - [`gradient`]: parameter-shift and finite-difference gradients.
//! - [`optimizer`]: L-BFGS with a strong Wolfe line search and a seeded initializer.
//! - [`exact`]: dense and Lanczos ground-state oracles.
//! - [`workflows`]: meta-VQE, GA-VQE, per-point VQE and warm-started VQE.
//!
//! Qubit `q` is bit `q` of the amplitude index (qubit 0 is least significant).
//! Bitstrings are written qubit 0 first.

pub mod circuit;
pub mod error;
pub mod exact;
pub mod gradient;
pub mod optimizer;
pub mod pauli;
pub mod statevector;
pub mod workflows;

pub use circuit::{
    AngleEncoding, Circuit, CircuitBuilder, GaussianForm, MetaSymbol, ParamExpr, ParamHandle,
    ParamRegistry, Partition,
};
pub use error::{Error, Result};
pub use exact::{ground_energy, ground_state_dense, ground_state_lanczos, SpectrumResult};
pub use gradient::{finite_diff_gradient, param_shift_gradient, GradientResult};
pub use optimizer::{minimize, random_init, Minimum, OptTrace, OptimizerConfig, Termination};
pub use pauli::{build_xxz, HamiltonianFamily, Pauli, PauliString, PauliSum, PauliTerm};
pub use statevector::{Gate, Statevector};
pub use workflows::{EnergyProfile, ProfileRow, TrainResult, TrainingGrid};

/// Complex amplitude type used throughout.
pub type C64 = num_complex::Complex64;

/// Largest register the simulator accepts.
pub const MAX_QUBITS: usize = 24;
