//! Benchmark fixtures shared by the criterion targets.

use metavqe::circuit::{meta_ansatz, processing_ansatz};
use metavqe::{random_init, AngleEncoding, Circuit, PauliSum};

/// XXZ chain at a representative point of the sweep.
pub fn xxz(n: usize) -> PauliSum {
    metavqe::build_xxz(n, 0.4, 0.75).expect("n >= 2")
}

/// Meta ansatz with L1 = L2 = 2 and seeded parameters.
pub fn meta_circuit(n: usize) -> (Circuit, Vec<f64>) {
    let c = meta_ansatz(n, 2, 2, "delta", AngleEncoding::Linear).expect("valid size");
    let p = random_init(c.num_params(), 7);
    (c, p)
}

/// Four plain layers with seeded parameters.
pub fn plain_circuit(n: usize) -> (Circuit, Vec<f64>) {
    let c = processing_ansatz(n, 4).expect("valid size");
    let p = random_init(c.num_params(), 7);
    (c, p)
}
