//! Ground-state oracles: dense Hermitian diagonalization for small registers and
//! matrix-free Lanczos with full reorthogonalization for larger ones.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::pauli::PauliSum;
use crate::statevector::Statevector;
use crate::{Error, Result, C64, MAX_QUBITS};

/// Largest register handled by [`ground_state_dense`].
pub const DENSE_LIMIT: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Dense,
    Lanczos,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumResult {
    pub energy: f64,
    pub state: Option<Statevector>,
    pub method: Method,
    /// `||H v - E v||` for the returned pair.
    pub residual: f64,
    /// Krylov steps taken (zero for the dense path).
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LanczosConfig {
    pub max_krylov: usize,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for LanczosConfig {
    fn default() -> Self {
        Self {
            max_krylov: 300,
            tolerance: 1e-9,
            seed: 0x5eed,
        }
    }
}

/// Dense matrix of `h`, row `i` column `j` = `<i|H|j>`.
pub fn dense_matrix(h: &PauliSum) -> Result<DMatrix<C64>> {
    let n = h.nqubits();
    if n > DENSE_LIMIT {
        return Err(Error::TooLarge {
            nqubits: n,
            limit: DENSE_LIMIT,
            method: "dense (use Lanczos)",
        });
    }
    let dim = 1usize << n;
    let mut m = DMatrix::<C64>::zeros(dim, dim);
    for &(c, masks) in h.compiled() {
        let phase = masks.y_phase() * c;
        for col in 0..dim {
            let row = col ^ masks.x as usize;
            m[(row, col)] += phase * masks.sign(col);
        }
    }
    Ok(m)
}

fn residual(h: &PauliSum, v: &Statevector, energy: f64) -> f64 {
    let hv = h.matvec(v).expect("dimensions match");
    hv.amplitudes()
        .iter()
        .zip(v.amplitudes())
        .map(|(a, b)| (a - b * energy).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Smallest eigenpair by dense diagonalization (at most [`DENSE_LIMIT`] qubits).
pub fn ground_state_dense(h: &PauliSum) -> Result<SpectrumResult> {
    let m = dense_matrix(h)?;
    let n = h.nqubits();
    let real = m.iter().all(|z| z.im == 0.0);
    let amps: Vec<C64> = if real {
        let eig = m.map(|z| z.re).symmetric_eigen();
        let k = argmin(eig.eigenvalues.as_slice());
        eig.eigenvectors.column(k).iter().map(|&x| C64::new(x, 0.0)).collect()
    } else {
        let eig = m.symmetric_eigen();
        let k = argmin(eig.eigenvalues.as_slice());
        eig.eigenvectors.column(k).iter().copied().collect()
    };
    let mut state = Statevector::from_amplitudes(n, amps)?;
    normalize(state.amplitudes_mut());
    // Rayleigh quotient of the returned vector; equals the eigenvalue to roundoff.
    let energy = state.expectation(h)?;
    let residual = residual(h, &state, energy);
    Ok(SpectrumResult {
        energy,
        state: Some(state),
        method: Method::Dense,
        residual,
        iterations: 0,
    })
}

fn argmin(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k)
        .expect("non-empty spectrum")
}

fn normalize(v: &mut [C64]) {
    let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|a| *a /= norm);
}

fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Lowest eigenpair by Lanczos with full reorthogonalization and a seeded
/// random start vector.
pub fn ground_state_lanczos(h: &PauliSum, config: &LanczosConfig) -> Result<SpectrumResult> {
    let n = h.nqubits();
    if n > MAX_QUBITS {
        return Err(Error::TooLarge {
            nqubits: n,
            limit: MAX_QUBITS,
            method: "Lanczos",
        });
    }
    if !(config.tolerance > 0.0) || config.max_krylov == 0 {
        return Err(Error::InvalidArgument("Lanczos needs tolerance > 0 and max_krylov >= 1".into()));
    }
    let dim = 1usize << n;
    let max_k = config.max_krylov.min(dim);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut v: Vec<C64> = (0..dim)
        .map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect();
    normalize(&mut v);

    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(max_k);
    let mut alphas: Vec<f64> = Vec::with_capacity(max_k);
    let mut betas: Vec<f64> = Vec::with_capacity(max_k);
    let mut w = vec![C64::new(0.0, 0.0); dim];
    let mut best = (f64::INFINITY, f64::INFINITY);

    for k in 0..max_k {
        h.apply_into(&v, &mut w);
        let alpha = inner(&v, &w).re;
        basis.push(std::mem::take(&mut v));
        alphas.push(alpha);
        // Full reorthogonalization, applied twice for stability.
        for _ in 0..2 {
            for q in &basis {
                let c = inner(q, &w);
                w.iter_mut().zip(q).for_each(|(wi, qi)| *wi -= c * qi);
            }
        }
        let beta = w.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();

        let exhausted = beta <= 1e-12 * alpha.abs().max(1.0) || k + 1 == dim;
        if !(k < 50 || k % 5 == 0 || exhausted || k + 1 == max_k) {
            betas.push(beta);
            v = w.iter().map(|a| a / beta).collect();
            continue;
        }
        let (theta, y) = tridiagonal_ground(&alphas, &betas);
        let estimate = beta * y[k].abs();
        if estimate < config.tolerance || exhausted || k + 1 == max_k {
            let mut ritz = vec![C64::new(0.0, 0.0); dim];
            for (q, &c) in basis.iter().zip(y.iter()) {
                ritz.iter_mut().zip(q).for_each(|(r, qi)| *r += qi * c);
            }
            normalize(&mut ritz);
            let state = Statevector::from_amplitudes(n, ritz)?;
            let energy = state.expectation(h)?;
            let res = residual(h, &state, energy);
            if res < config.tolerance || exhausted {
                return Ok(SpectrumResult {
                    energy,
                    state: Some(state),
                    method: Method::Lanczos,
                    residual: res,
                    iterations: k + 1,
                });
            }
            best = (theta, res);
            if k + 1 == max_k {
                break;
            }
        }
        betas.push(beta);
        v = w.iter().map(|a| a / beta).collect();
    }
    Err(Error::Convergence {
        estimate: best.0,
        residual: best.1,
        iterations: max_k,
    })
}

/// Lowest eigenpair of the symmetric tridiagonal matrix with diagonal `alphas`
/// and off-diagonal `betas` (`betas.len() == alphas.len() - 1`).
fn tridiagonal_ground(alphas: &[f64], betas: &[f64]) -> (f64, DVector<f64>) {
    let k = alphas.len();
    let mut t = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alphas[i];
        if i + 1 < k {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let eig = t.symmetric_eigen();
    let j = argmin(eig.eigenvalues.as_slice());
    (eig.eigenvalues[j], eig.eigenvectors.column(j).into_owned())
}

/// Ground energy via the dense path up to 8 qubits and Lanczos beyond.
pub fn ground_energy(h: &PauliSum) -> Result<f64> {
    if h.nqubits() <= 8 {
        Ok(ground_state_dense(h)?.energy)
    } else {
        Ok(ground_state_lanczos(h, &LanczosConfig::default())?.energy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::{build_xxz, parse_hamiltonian};

    #[test]
    fn single_z() {
        let h = parse_hamiltonian("qubits 1\n1 Z0\n").unwrap();
        let r = ground_state_dense(&h).unwrap();
        assert!((r.energy + 1.0).abs() < 1e-14);
        let s = r.state.unwrap();
        assert!((s.amplitudes()[1].norm() - 1.0).abs() < 1e-14);
        assert!(r.residual < 1e-10);
    }

    #[test]
    fn open_two_site_chain_at_origin() {
        let h = parse_hamiltonian("qubits 2\n1 X0 X1\n1 Y0 Y1\n").unwrap();
        let r = ground_state_dense(&h).unwrap();
        assert!((r.energy + 2.0).abs() < 1e-12);
    }

    #[test]
    fn dense_rejects_large_registers() {
        let h = build_xxz(11, 0.0, 0.0).unwrap();
        assert!(matches!(ground_state_dense(&h), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn dense_matrix_of_y_is_hermitian_and_imaginary() {
        let h = parse_hamiltonian("qubits 1\n1 Y0\n").unwrap();
        let m = dense_matrix(&h).unwrap();
        assert_eq!(m[(0, 1)], C64::new(0.0, -1.0));
        assert_eq!(m[(1, 0)], C64::new(0.0, 1.0));
    }

    #[test]
    fn lanczos_matches_dense_on_xxz() {
        let h = build_xxz(6, 0.4, 0.75).unwrap();
        let d = ground_state_dense(&h).unwrap().energy;
        let l = ground_state_lanczos(&h, &LanczosConfig::default()).unwrap();
        assert!((d - l.energy).abs() < 1e-8);
        assert!(l.residual < 1e-9);
    }

    #[test]
    fn lanczos_convergence_error() {
        let h = build_xxz(8, 0.4, 0.75).unwrap();
        let cfg = LanczosConfig {
            max_krylov: 3,
            ..LanczosConfig::default()
        };
        assert!(matches!(ground_state_lanczos(&h, &cfg), Err(Error::Convergence { .. })));
    }

    #[test]
    fn lanczos_exhausts_tiny_space() {
        let h = parse_hamiltonian("qubits 1\n0.3 X0\n-1 Z0\n").unwrap();
        let r = ground_state_lanczos(&h, &LanczosConfig::default()).unwrap();
        assert!((r.energy + (0.09f64 + 1.0).sqrt()).abs() < 1e-12);
    }
}
