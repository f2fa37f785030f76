//! Shared oracles for the integration suite, independent of the library's
//! implementation paths.

use num_complex::Complex64;
use qpix_core::frqi::Statevector;
use qpix_core::mps::{right_canonicalize, Mps};
use qpix_core::tensors::Tensor;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn random_state(n: usize, rng: &mut ChaCha8Rng) -> Statevector {
    let amps: Vec<Complex64> = (0..1usize << n)
        .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    Statevector::normalized(n, amps).unwrap()
}

/// Random MPS with a chi-capped, boundary-consistent bond profile.
pub fn random_mps(n: usize, chi: usize, rng: &mut ChaCha8Rng) -> Mps {
    let mut tensors = Vec::new();
    let mut left = 1usize;
    for k in 0..n {
        let right = if k == n - 1 {
            1
        } else {
            chi.min(1 << (k + 1)).min(1 << (n - k - 1))
        };
        let data = (0..left * 2 * right)
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        tensors.push(Tensor::new(vec![left, 2, right], data).unwrap());
        left = right;
    }
    Mps::new(tensors).unwrap()
}

pub fn random_canonical_mps(n: usize, chi: usize, rng: &mut ChaCha8Rng) -> Mps {
    right_canonicalize(&random_mps(n, chi, rng)).unwrap()
}

/// Squared Schmidt coefficients across the cut, descending, computed from
/// the dense state through the reduced density matrix and a local Jacobi
/// eigenvalue iteration.
pub fn dense_schmidt_sq(state: &Statevector, cut: usize) -> Vec<f64> {
    let n = state.n_qubits();
    let rows = 1usize << cut;
    let cols = 1usize << (n - cut);
    let mut rho = vec![c(0.0, 0.0); rows * rows];
    for i in 0..rows {
        for j in 0..rows {
            let mut acc = c(0.0, 0.0);
            for k in 0..cols {
                acc += state.amps()[i * cols + k] * state.amps()[j * cols + k].conj();
            }
            rho[i * rows + j] = acc;
        }
    }
    hermitian_eigenvalues(&mut rho, rows)
}

/// Classical (largest-off-diagonal) Jacobi sweep returning eigenvalues in
/// descending order. Destroys the input buffer.
pub fn hermitian_eigenvalues(m: &mut [Complex64], dim: usize) -> Vec<f64> {
    for _ in 0..20_000 {
        let mut off = 0.0;
        let mut pq = (0, 1);
        for p in 0..dim {
            for q in 0..dim {
                if p != q && m[p * dim + q].norm() > off {
                    off = m[p * dim + q].norm();
                    pq = (p.min(q), p.max(q));
                }
            }
        }
        if off < 1e-15 {
            break;
        }
        let (p, q) = pq;
        let hpq = m[p * dim + q];
        let phase = hpq / hpq.norm();
        let tau = (m[q * dim + q].re - m[p * dim + p].re) / (2.0 * hpq.norm());
        let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
        let cs = 1.0 / (1.0 + t * t).sqrt();
        let sn = cs * t;
        let jpp = c(cs, 0.0);
        let jpq = phase * sn;
        let jqp = -phase.conj() * sn;
        let jqq = c(cs, 0.0);
        for i in 0..dim {
            let x = m[i * dim + p];
            let y = m[i * dim + q];
            m[i * dim + p] = x * jpp + y * jqp;
            m[i * dim + q] = x * jpq + y * jqq;
        }
        for i in 0..dim {
            let x = m[p * dim + i];
            let y = m[q * dim + i];
            m[p * dim + i] = jpp.conj() * x + jqp.conj() * y;
            m[q * dim + i] = jpq.conj() * x + jqq.conj() * y;
        }
    }
    let mut vals: Vec<f64> = (0..dim).map(|i| m[i * dim + i].re.max(0.0)).collect();
    vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
    vals
}
