//! Energy gradients with respect to the variational parameters.
//!
//! The parameter-shift rule is applied per gate site: every rotation here is
//! `exp(-i t P / 2)` with `P^2 = I`, so `dE/dt = (E(t + pi/2) - E(t - pi/2)) / 2`.
//! Site derivatives are then chained through the angle expression partials and
//! accumulated per registry handle, which handles shared parameters and
//! meta-dependent encodings alike.

use std::f64::consts::FRAC_PI_2;

use crate::circuit::Circuit;
use crate::pauli::PauliSum;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct GradientResult {
    /// Energy at the supplied parameters.
    pub value: f64,
    /// Gradient in registry order.
    pub gradient: Vec<f64>,
    /// Number of shifted-circuit energy evaluations performed.
    pub evaluations: usize,
}

fn check_dims(circuit: &Circuit, h: &PauliSum) -> Result<()> {
    if circuit.nqubits() != h.nqubits() {
        return Err(Error::Dimension {
            expected: circuit.nqubits(),
            found: h.nqubits(),
        });
    }
    Ok(())
}

/// Exact gradient by the parameter-shift rule: two shifted evaluations per
/// parameterized gate site.
pub fn param_shift_gradient(circuit: &Circuit, h: &PauliSum, meta: &[f64], params: &[f64]) -> Result<GradientResult> {
    check_dims(circuit, h)?;
    let bound = circuit.bind(meta, params)?;
    let mut gradient = vec![0.0; params.len()];
    let mut evaluations = 0;
    let mut state = circuit.initial_state();
    for (site, b) in bound.iter().enumerate() {
        if b.parameterized {
            let angle = b.gate.angle().expect("parameterized gates carry an angle");
            let mut shifted = [0.0; 2];
            for (slot, shift) in shifted.iter_mut().zip([FRAC_PI_2, -FRAC_PI_2]) {
                let mut s = state.clone();
                s.apply_unchecked(&b.gate.with_angle(angle + shift));
                for rest in &bound[site + 1..] {
                    s.apply_unchecked(&rest.gate);
                }
                *slot = s.expectation(h)?;
                evaluations += 1;
            }
            let d_angle = 0.5 * (shifted[0] - shifted[1]);
            for (handle, d) in b.partials.iter() {
                gradient[handle.0] += d_angle * d;
            }
        }
        state.apply_unchecked(&b.gate);
    }
    Ok(GradientResult {
        value: state.expectation(h)?,
        gradient,
        evaluations,
    })
}

/// Central finite differences, `O(step^2)` accurate.
pub fn finite_diff_gradient(
    circuit: &Circuit,
    h: &PauliSum,
    meta: &[f64],
    params: &[f64],
    step: f64,
) -> Result<GradientResult> {
    check_dims(circuit, h)?;
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidArgument(format!("finite-difference step must be positive, got {step}")));
    }
    let energy = |p: &[f64]| -> Result<f64> { circuit.run(meta, p)?.expectation(h) };
    let value = energy(params)?;
    let mut work = params.to_vec();
    let mut gradient = Vec::with_capacity(params.len());
    for k in 0..params.len() {
        work[k] = params[k] + step;
        let plus = energy(&work)?;
        work[k] = params[k] - step;
        let minus = energy(&work)?;
        work[k] = params[k];
        gradient.push((plus - minus) / (2.0 * step));
    }
    Ok(GradientResult {
        value,
        gradient,
        evaluations: 2 * params.len(),
    })
}
