//! SVD, Hermitian eigendecomposition, and unitary completion.
//!
//! The SVD uses one-sided Jacobi rotations: deterministic given the input
//! bits, and accurate enough for the 1e-12 reconstruction tolerances required
//! downstream. The eigensolver is a cyclic two-sided Jacobi on Hermitian
//! matrices.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tensors::{matmul, Tensor};

const MAX_SWEEPS: usize = 60;
const JACOBI_EPS: f64 = 1e-14;

/// Thin singular value decomposition of a rank-2 tensor.
///
/// Returns `(u, s, vh)` with `m = u · diag(s) · vh`, singular values sorted
/// descending, `u` having orthonormal columns and `vh` orthonormal rows.
/// `k = min(rows, cols)` columns/rows are produced.
pub fn svd(m: &Tensor) -> Result<(Tensor, Vec<f64>, Tensor)> {
    if m.rank() != 2 {
        return Err(Error::Shape(format!(
            "svd requires rank-2 input, got rank {}",
            m.rank()
        )));
    }
    let (rows, cols) = (m.shape()[0], m.shape()[1]);
    if rows >= cols {
        svd_tall(m)
    } else {
        // m = (m†)† : factor the adjoint and swap roles.
        let (u_a, s, vh_a) = svd_tall(&m.adjoint()?)?;
        let u = vh_a.adjoint()?;
        let vh = u_a.adjoint()?;
        Ok((u, s, vh))
    }
}

/// One-sided Jacobi on a matrix with rows >= cols.
fn svd_tall(m: &Tensor) -> Result<(Tensor, Vec<f64>, Tensor)> {
    let (rows, cols) = (m.shape()[0], m.shape()[1]);

    // Column-major copies of the working matrix and the accumulated V.
    let mut a: Vec<Vec<Complex64>> = (0..cols)
        .map(|j| (0..rows).map(|i| m.data()[i * cols + j]).collect())
        .collect();
    let mut v: Vec<Vec<Complex64>> = (0..cols)
        .map(|j| {
            let mut col = vec![Complex64::new(0.0, 0.0); cols];
            col[j] = Complex64::new(1.0, 0.0);
            col
        })
        .collect();

    let mut sweeps = 0;
    loop {
        let mut rotated = false;
        for p in 0..cols.saturating_sub(1) {
            for q in p + 1..cols {
                let app: f64 = a[p].iter().map(|z| z.norm_sqr()).sum();
                let aqq: f64 = a[q].iter().map(|z| z.norm_sqr()).sum();
                let apq: Complex64 = a[p]
                    .iter()
                    .zip(a[q].iter())
                    .map(|(x, y)| x.conj() * y)
                    .sum();
                let off = apq.norm();
                if off <= JACOBI_EPS * (app * aqq).sqrt() || off == 0.0 {
                    continue;
                }
                rotated = true;

                // Phase-rotate so the 2x2 Gram block becomes real symmetric,
                // then apply a classic Jacobi rotation.
                let phase = apq / off; // e^{i arg(apq)}
                let tau = (aqq - app) / (2.0 * off);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                let sp = phase.conj() * sn; // s · e^{-i phi}

                for i in 0..rows {
                    let x = a[p][i];
                    let y = a[q][i];
                    a[p][i] = cs * x - sp * y;
                    a[q][i] = sn * x + phase.conj() * cs * y;
                }
                for i in 0..cols {
                    let x = v[p][i];
                    let y = v[q][i];
                    v[p][i] = cs * x - sp * y;
                    v[q][i] = sn * x + phase.conj() * cs * y;
                }
            }
        }
        sweeps += 1;
        if !rotated {
            break;
        }
        if sweeps >= MAX_SWEEPS {
            return Err(Error::NonConvergence(
                "one-sided Jacobi SVD failed to converge".into(),
                sweeps,
            ));
        }
    }

    // Singular values are the column norms; sort descending (stable).
    let norms: Vec<f64> = a
        .iter()
        .map(|col| col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap());

    let s: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let s_max = s.first().copied().unwrap_or(0.0);
    let zero_tol = s_max * (rows.max(cols) as f64) * f64::EPSILON;

    // U columns: normalized A columns, with zero-norm columns replaced by an
    // orthonormal completion so U always has orthonormal columns.
    let mut u_cols: Vec<Vec<Complex64>> = Vec::with_capacity(cols);
    let mut pending: Vec<usize> = Vec::new();
    for (slot, &j) in order.iter().enumerate() {
        if norms[j] > zero_tol && norms[j] > 0.0 {
            let inv = 1.0 / norms[j];
            u_cols.push(a[j].iter().map(|z| z * inv).collect());
        } else {
            u_cols.push(vec![Complex64::new(0.0, 0.0); rows]);
            pending.push(slot);
        }
    }
    if !pending.is_empty() {
        let filled: Vec<usize> = (0..cols).filter(|i| !pending.contains(i)).collect();
        let mut basis: Vec<Vec<Complex64>> = filled.iter().map(|&i| u_cols[i].clone()).collect();
        for &slot in &pending {
            let next = complete_one_column(rows, &basis);
            u_cols[slot] = next.clone();
            basis.push(next);
        }
    }

    let mut u = Tensor::zeros(vec![rows, cols]);
    for (j, col) in u_cols.iter().enumerate() {
        for i in 0..rows {
            u.data_mut()[i * cols + j] = col[i];
        }
    }
    // vh rows are the adjoints of the sorted V columns.
    let mut vh = Tensor::zeros(vec![cols, cols]);
    for (slot, &j) in order.iter().enumerate() {
        for i in 0..cols {
            vh.data_mut()[slot * cols + i] = v[j][i].conj();
        }
    }
    Ok((u, s, vh))
}

/// Picks the canonical basis vector with the largest residual against
/// `basis`, orthogonalizes twice, and normalizes.
fn complete_one_column(dim: usize, basis: &[Vec<Complex64>]) -> Vec<Complex64> {
    let mut best_idx = 0usize;
    let mut best_norm = -1.0f64;
    for cand in 0..dim {
        let mut residual_sq = 1.0;
        for col in basis {
            residual_sq -= col[cand].norm_sqr();
        }
        if residual_sq > best_norm + 1e-15 {
            best_norm = residual_sq;
            best_idx = cand;
        }
    }
    let mut vec_out = vec![Complex64::new(0.0, 0.0); dim];
    vec_out[best_idx] = Complex64::new(1.0, 0.0);
    for _ in 0..2 {
        for col in basis {
            let overlap: Complex64 = col
                .iter()
                .zip(vec_out.iter())
                .map(|(b, x)| b.conj() * x)
                .sum();
            for (xi, bi) in vec_out.iter_mut().zip(col.iter()) {
                *xi -= overlap * bi;
            }
        }
    }
    let norm = vec_out.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for x in &mut vec_out {
        *x /= norm;
    }
    vec_out
}

/// Eigendecomposition of a Hermitian matrix via cyclic Jacobi rotations.
///
/// Returns `(eigenvalues, v)` with eigenvalues ascending and `h = v · diag(λ) · v†`.
pub fn eigh(h: &Tensor) -> Result<(Vec<f64>, Tensor)> {
    if h.rank() != 2 || h.shape()[0] != h.shape()[1] {
        return Err(Error::Shape("eigh requires a square rank-2 input".into()));
    }
    let n = h.shape()[0];
    let scale = h.max_abs().max(1.0);
    for i in 0..n {
        for j in 0..n {
            let diff = (h.data()[i * n + j] - h.data()[j * n + i].conj()).norm();
            if diff > 1e-12 * scale {
                return Err(Error::Precondition(format!(
                    "eigh input not Hermitian: |H[{i}][{j}] - conj(H[{j}][{i}])| = {diff:e}"
                )));
            }
        }
    }

    let mut m: Vec<Complex64> = h.data().to_vec();
    let mut v: Vec<Complex64> = Tensor::identity(n).into_data();

    let frob = |m: &[Complex64]| -> f64 { m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() };
    let total = frob(&m).max(f64::MIN_POSITIVE);

    let mut sweeps = 0;
    loop {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in 0..n {
                if p != q {
                    off += m[p * n + q].norm_sqr();
                }
            }
        }
        if off.sqrt() <= JACOBI_EPS * total {
            break;
        }
        if sweeps >= MAX_SWEEPS {
            return Err(Error::NonConvergence(
                "Hermitian Jacobi eigensolver failed to converge".into(),
                sweeps,
            ));
        }
        sweeps += 1;

        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let hpq = m[p * n + q];
                let abs = hpq.norm();
                if abs <= JACOBI_EPS * total / (n as f64) {
                    continue;
                }
                let hpp = m[p * n + p].re;
                let hqq = m[q * n + q].re;
                let phase = hpq / abs; // e^{i phi}
                let tau = (hqq - hpp) / (2.0 * abs);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;

                // Column rotation J = [[c, s·e^{i phi}], [-s·e^{-i phi}, c]]
                // chosen so J† H J zeroes the (p, q) entry.
                let jpp = Complex64::new(cs, 0.0);
                let jpq = phase * sn;
                let jqp = -phase.conj() * sn;
                let jqq = Complex64::new(cs, 0.0);

                // M <- J† M J : first columns, then rows.
                for i in 0..n {
                    let x = m[i * n + p];
                    let y = m[i * n + q];
                    m[i * n + p] = x * jpp + y * jqp;
                    m[i * n + q] = x * jpq + y * jqq;
                }
                for i in 0..n {
                    let x = m[p * n + i];
                    let y = m[q * n + i];
                    m[p * n + i] = jpp.conj() * x + jqp.conj() * y;
                    m[q * n + i] = jpq.conj() * x + jqq.conj() * y;
                }
                for i in 0..n {
                    let x = v[i * n + p];
                    let y = v[i * n + q];
                    v[i * n + p] = x * jpp + y * jqp;
                    v[i * n + q] = x * jpq + y * jqq;
                }
            }
        }
    }

    let mut pairs: Vec<(f64, usize)> = (0..n).map(|i| (m[i * n + i].re, i)).collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let eigenvalues: Vec<f64> = pairs.iter().map(|&(l, _)| l).collect();
    let mut vecs = Tensor::zeros(vec![n, n]);
    for (slot, &(_, j)) in pairs.iter().enumerate() {
        for i in 0..n {
            vecs.data_mut()[i * n + slot] = v[i * n + j];
        }
    }
    Ok((eigenvalues, vecs))
}

/// Extends a set of orthonormal columns to a full square unitary.
///
/// The leading columns of the output equal the input exactly; the free
/// columns are filled by deterministic Gram-Schmidt against the canonical
/// basis (largest-residual candidate first, ties broken by lowest index).
pub fn qr_unitary_completion(cols: &Tensor) -> Result<Tensor> {
    if cols.rank() != 2 {
        return Err(Error::Shape(
            "qr_unitary_completion requires rank-2 input".into(),
        ));
    }
    let (rows, k) = (cols.shape()[0], cols.shape()[1]);
    if k > rows {
        return Err(Error::Precondition(format!(
            "column count {k} exceeds row count {rows}"
        )));
    }
    // Orthonormality check: ||C†C - I||_max <= 1e-10.
    let gram = matmul(&cols.adjoint()?, cols)?;
    for i in 0..k {
        for j in 0..k {
            let expected = if i == j { 1.0 } else { 0.0 };
            let dev = (gram.data()[i * k + j] - Complex64::new(expected, 0.0)).norm();
            if dev > 1e-10 {
                return Err(Error::Precondition(format!(
                    "input columns not orthonormal: gram deviation {dev:e} at ({i},{j})"
                )));
            }
        }
    }

    let mut basis: Vec<Vec<Complex64>> = (0..k)
        .map(|j| (0..rows).map(|i| cols.data()[i * k + j]).collect())
        .collect();
    for _ in k..rows {
        let next = complete_one_column(rows, &basis);
        basis.push(next);
    }

    let mut u = Tensor::zeros(vec![rows, rows]);
    for (j, col) in basis.iter().enumerate() {
        for i in 0..rows {
            u.data_mut()[i * rows + j] = col[i];
        }
    }
    // Leading columns must match the input bit-for-bit.
    for j in 0..k {
        for i in 0..rows {
            u.data_mut()[i * rows + j] = cols.data()[i * k + j];
        }
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Tensor {
        let data = (0..rows * cols)
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        Tensor::new(vec![rows, cols], data).unwrap()
    }

    fn reconstruct(u: &Tensor, s: &[f64], vh: &Tensor) -> Tensor {
        let k = s.len();
        let mut us = u.clone();
        let cols = u.shape()[1];
        for i in 0..u.shape()[0] {
            for j in 0..k {
                us.data_mut()[i * cols + j] *= s[j];
            }
        }
        matmul(&us, vh).unwrap()
    }

    fn max_entry_diff(a: &Tensor, b: &Tensor) -> f64 {
        a.data()
            .iter()
            .zip(b.data())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    /// Eigenvalues of a Hermitian matrix by a test-local real/imag Jacobi
    /// iteration, independent of the svd implementation path.
    fn eigenvalues_oracle(h: &Tensor) -> Vec<f64> {
        let n = h.shape()[0];
        let mut m: Vec<Complex64> = h.data().to_vec();
        for _ in 0..200 {
            let mut off = 0.0;
            let mut pq = (0, 1);
            for p in 0..n {
                for q in 0..n {
                    if p != q && m[p * n + q].norm() > off {
                        off = m[p * n + q].norm();
                        pq = (p.min(q), p.max(q));
                    }
                }
            }
            if off < 1e-14 {
                break;
            }
            let (p, q) = pq;
            let hpq = m[p * n + q];
            let phase = hpq / hpq.norm();
            let tau = (m[q * n + q].re - m[p * n + p].re) / (2.0 * hpq.norm());
            let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
            let cs = 1.0 / (1.0 + t * t).sqrt();
            let sn = cs * t;
            let jpp = Complex64::new(cs, 0.0);
            let jpq = phase * sn;
            let jqp = -phase.conj() * sn;
            let jqq = Complex64::new(cs, 0.0);
            for i in 0..n {
                let x = m[i * n + p];
                let y = m[i * n + q];
                m[i * n + p] = x * jpp + y * jqp;
                m[i * n + q] = x * jpq + y * jqq;
            }
            for i in 0..n {
                let x = m[p * n + i];
                let y = m[q * n + i];
                m[p * n + i] = jpp.conj() * x + jqp.conj() * y;
                m[q * n + i] = jpq.conj() * x + jqq.conj() * y;
            }
        }
        let mut vals: Vec<f64> = (0..n).map(|i| m[i * n + i].re).collect();
        vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
        vals
    }

    #[test]
    fn svd_identity_has_unit_singular_values() {
        let (_, s, _) = svd(&Tensor::identity(2)).unwrap();
        assert_eq!(s.len(), 2);
        assert!((s[0] - 1.0).abs() < 1e-15 && (s[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn svd_handles_rank_deficiency() {
        let m = Tensor::new(
            vec![2, 2],
            vec![c(3.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
        )
        .unwrap();
        let (u, s, vh) = svd(&m).unwrap();
        assert!((s[0] - 3.0).abs() < 1e-14);
        assert!(s[1].abs() < 1e-14);
        // Orthonormal factors even with a zero singular value.
        let gram_u = matmul(&u.adjoint().unwrap(), &u).unwrap();
        let gram_v = matmul(&vh, &vh.adjoint().unwrap()).unwrap();
        assert!(max_entry_diff(&gram_u, &Tensor::identity(2)) < 1e-12);
        assert!(max_entry_diff(&gram_v, &Tensor::identity(2)) < 1e-12);
        assert!(max_entry_diff(&reconstruct(&u, &s, &vh), &m) < 1e-12);
    }

    #[test]
    fn svd_random_complex_reconstructs_and_matches_eigen_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for trial in 0..10 {
            let m = random_matrix(8, 6, &mut rng);
            let (u, s, vh) = svd(&m).unwrap();
            // Reconstruction within 1e-12 relative Frobenius error.
            let rec = reconstruct(&u, &s, &vh);
            let mut err = 0.0f64;
            for (x, y) in rec.data().iter().zip(m.data()) {
                err += (x - y).norm_sqr();
            }
            let rel = err.sqrt() / m.frobenius_norm();
            assert!(rel < 1e-12, "trial {trial}: reconstruction error {rel:e}");
            // Ordering.
            for w in s.windows(2) {
                assert!(w[0] >= w[1] - 1e-15);
            }
            // Singular values match sqrt(eigenvalues of m†m) from the oracle.
            let mtm = matmul(&m.adjoint().unwrap(), &m).unwrap();
            let evs = eigenvalues_oracle(&mtm);
            for (sv, ev) in s.iter().zip(evs.iter()) {
                assert!(
                    (sv * sv - ev).abs() < 1e-10,
                    "trial {trial}: s^2 {} vs eigenvalue {}",
                    sv * sv,
                    ev
                );
            }
            // Orthonormality.
            let gram_u = matmul(&u.adjoint().unwrap(), &u).unwrap();
            assert!(max_entry_diff(&gram_u, &Tensor::identity(6)) < 1e-12);
            let gram_v = matmul(&vh, &vh.adjoint().unwrap()).unwrap();
            assert!(max_entry_diff(&gram_v, &Tensor::identity(6)) < 1e-12);
        }
    }

    #[test]
    fn svd_wide_matrix_transposes_correctly() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let m = random_matrix(3, 7, &mut rng);
        let (u, s, vh) = svd(&m).unwrap();
        assert_eq!(u.shape(), &[3, 3]);
        assert_eq!(s.len(), 3);
        assert_eq!(vh.shape(), &[3, 7]);
        assert!(max_entry_diff(&reconstruct(&u, &s, &vh), &m) < 1e-12);
    }

    #[test]
    fn svd_truncation_is_best_rank_k_on_3x3() {
        // Truncated-SVD error must match sum of discarded squared singular
        // values and never be beaten by an ALS search over rank-k factors.
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..5 {
            let m = random_matrix(3, 3, &mut rng);
            let (u, s, vh) = svd(&m).unwrap();
            for k in 1..3usize {
                let sk: Vec<f64> = s
                    .iter()
                    .enumerate()
                    .map(|(i, &x)| if i < k { x } else { 0.0 })
                    .collect();
                let approx = reconstruct(&u, &sk, &vh);
                let err_sq: f64 = approx
                    .data()
                    .iter()
                    .zip(m.data())
                    .map(|(x, y)| (x - y).norm_sqr())
                    .sum();
                let tail: f64 = s[k..].iter().map(|x| x * x).sum();
                assert!(
                    (err_sq - tail).abs() < 1e-10,
                    "rank-{k} error {err_sq} vs tail {tail}"
                );

                // ALS search from several random starts: best found error
                // must not beat the SVD truncation error.
                for start in 0..4 {
                    let mut srng = ChaCha8Rng::seed_from_u64(1000 + start);
                    let mut b = random_matrix(3, k, &mut srng);
                    let mut ct = random_matrix(k, 3, &mut srng);
                    for _ in 0..200 {
                        b = least_squares_left(&m, &ct);
                        ct = least_squares_right(&m, &b);
                    }
                    let fit = matmul(&b, &ct).unwrap();
                    let als_err: f64 = fit
                        .data()
                        .iter()
                        .zip(m.data())
                        .map(|(x, y)| (x - y).norm_sqr())
                        .sum();
                    assert!(
                        err_sq <= als_err + 1e-9,
                        "ALS found better rank-{k} fit: {als_err} < {err_sq}"
                    );
                }
            }
        }
    }

    // Solve min ||M - B C|| for B given C (normal equations, 3x3 scale).
    fn least_squares_left(m: &Tensor, ct: &Tensor) -> Tensor {
        let gram = matmul(ct, &ct.adjoint().unwrap()).unwrap();
        let rhs = matmul(m, &ct.adjoint().unwrap()).unwrap();
        solve_small(&gram, &rhs)
    }

    fn least_squares_right(m: &Tensor, b: &Tensor) -> Tensor {
        let gram = matmul(&b.adjoint().unwrap(), b).unwrap();
        let rhs = matmul(&b.adjoint().unwrap(), m).unwrap();
        solve_small_left(&gram, &rhs)
    }

    // X such that X·G = R, i.e. X = R G^{-1} (G is k x k Hermitian PSD).
    fn solve_small(g: &Tensor, r: &Tensor) -> Tensor {
        let k = g.shape()[0];
        let ginv = invert_small(g, k);
        matmul(r, &ginv).unwrap()
    }

    // X such that G·X = R.
    fn solve_small_left(g: &Tensor, r: &Tensor) -> Tensor {
        let k = g.shape()[0];
        let ginv = invert_small(g, k);
        matmul(&ginv, r).unwrap()
    }

    fn invert_small(g: &Tensor, k: usize) -> Tensor {
        // Gauss-Jordan with partial pivoting; k <= 2 here. Regularize
        // slightly for near-singular Gram matrices.
        let mut a: Vec<Complex64> = g.data().to_vec();
        for i in 0..k {
            a[i * k + i] += Complex64::new(1e-12, 0.0);
        }
        let mut inv = Tensor::identity(k).into_data();
        for col in 0..k {
            let mut piv = col;
            for row in col + 1..k {
                if a[row * k + col].norm() > a[piv * k + col].norm() {
                    piv = row;
                }
            }
            for j in 0..k {
                a.swap(col * k + j, piv * k + j);
                inv.swap(col * k + j, piv * k + j);
            }
            let d = a[col * k + col];
            for j in 0..k {
                a[col * k + j] /= d;
                inv[col * k + j] /= d;
            }
            for row in 0..k {
                if row != col {
                    let f = a[row * k + col];
                    for j in 0..k {
                        let acj = a[col * k + j];
                        let icj = inv[col * k + j];
                        a[row * k + j] -= f * acj;
                        inv[row * k + j] -= f * icj;
                    }
                }
            }
        }
        Tensor::new(vec![k, k], inv).unwrap()
    }

    #[test]
    fn eigh_recovers_known_spectrum() {
        // H = V diag(-1, 2, 5) V† for a hand-built unitary V.
        let d = [-1.0, 2.0, 5.0];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = random_matrix(3, 3, &mut rng);
        let (v, _, _) = svd(&m).unwrap(); // orthonormal columns
        let mut h = Tensor::zeros(vec![3, 3]);
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = c(0.0, 0.0);
                for k in 0..3 {
                    acc += v.data()[i * 3 + k] * d[k] * v.data()[j * 3 + k].conj();
                }
                h.data_mut()[i * 3 + j] = acc;
            }
        }
        let (vals, vecs) = eigh(&h).unwrap();
        for (got, want) in vals.iter().zip(d.iter()) {
            assert!((got - want).abs() < 1e-11, "{got} vs {want}");
        }
        // H·vecs = vecs·diag(vals)
        let hv = matmul(&h, &vecs).unwrap();
        for j in 0..3 {
            for i in 0..3 {
                let want = vecs.data()[i * 3 + j] * vals[j];
                assert!((hv.data()[i * 3 + j] - want).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn eigh_rejects_non_hermitian() {
        let m = Tensor::new(
            vec![2, 2],
            vec![c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
        )
        .unwrap();
        assert!(matches!(eigh(&m), Err(Error::Precondition(_))));
    }

    #[test]
    fn completion_of_basis_column_gives_identity_up_to_phase() {
        let e1 = Tensor::new(vec![2, 1], vec![c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let u = qr_unitary_completion(&e1).unwrap();
        assert!((u.data()[0] - c(1.0, 0.0)).norm() < 1e-15);
        assert!(u.data()[2].norm() < 1e-15);
        assert!(u.data()[1].norm() < 1e-15);
        assert!((u.data()[3].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn completion_of_full_unitary_is_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let m = random_matrix(4, 4, &mut rng);
        let (u, _, _) = svd(&m).unwrap();
        let completed = qr_unitary_completion(&u).unwrap();
        assert_eq!(completed, u);
    }

    #[test]
    fn completion_extends_random_isometry() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let m = random_matrix(8, 3, &mut rng);
            let (iso, _, _) = svd(&m).unwrap();
            let u = qr_unitary_completion(&iso).unwrap();
            // Leading columns preserved exactly.
            for j in 0..3 {
                for i in 0..8 {
                    assert_eq!(u.data()[i * 8 + j], iso.data()[i * 3 + j]);
                }
            }
            // Unitarity to 1e-10 (Gram-Schmidt oracle check).
            let gram = matmul(&u.adjoint().unwrap(), &u).unwrap();
            assert!(max_entry_diff(&gram, &Tensor::identity(8)) < 1e-10);
        }
    }

    #[test]
    fn completion_rejects_non_orthonormal_input() {
        let bad = Tensor::new(vec![2, 1], vec![c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert!(matches!(
            qr_unitary_completion(&bad),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn completion_is_unitary_for_many_random_isometries() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..1000 {
            let rows = rng.gen_range(2..6);
            let cols = rng.gen_range(1..=rows);
            let m = random_matrix(rows, cols, &mut rng);
            let (iso, _, _) = svd(&m).unwrap();
            let u = qr_unitary_completion(&iso).unwrap();
            let gram = matmul(&u.adjoint().unwrap(), &u).unwrap();
            assert!(max_entry_diff(&gram, &Tensor::identity(rows)) < 1e-10);
        }
    }
}
