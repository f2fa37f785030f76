//! Matrix-product-state representation: statevector-to-MPS conversion with
//! bond truncation, dense reconstruction, right-canonicalization, inner
//! products, and bipartite entanglement entropy.
//!
//! Site tensors are rank-3 with shape (left bond, physical, right bond) and
//! boundary bonds of extent 1. The truncation sweep runs left-to-right with
//! SVDs keeping the largest singular values by count, followed by a
//! right-canonicalization pass that restores the isometry condition on every
//! tensor.

mod format;

pub use format::{read_qpxm, write_qpxm, CompressedImage};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::frqi::{decode_frqi, encode_frqi, Statevector};
use crate::imaging::{join_patches, snake_flatten, snake_unflatten, split_patches, Image, PatchLayout};
use crate::tensors::{contract, matmul, svd, Tensor};

/// Dense-reconstruction guard: refuse to materialize more amplitudes than
/// this by default.
pub const DENSE_CAP: usize = 1 << 24;

/// Relative cutoff under which singular values are treated as numerically
/// zero during sweeps.
pub(crate) const RELATIVE_ZERO: f64 = 1e-13;

/// Chain of rank-3 tensors.
#[derive(Clone, Debug)]
pub struct Mps {
    tensors: Vec<Tensor>,
}

impl Mps {
    /// Validates bond matching and boundary extents.
    pub fn new(tensors: Vec<Tensor>) -> Result<Self> {
        if tensors.is_empty() {
            return Err(Error::Shape("an MPS needs at least one site".into()));
        }
        for (k, t) in tensors.iter().enumerate() {
            if t.rank() != 3 {
                return Err(Error::Shape(format!(
                    "site {k} has rank {}, expected 3",
                    t.rank()
                )));
            }
        }
        if tensors[0].shape()[0] != 1 || tensors[tensors.len() - 1].shape()[2] != 1 {
            return Err(Error::Shape("boundary bonds must have extent 1".into()));
        }
        for k in 0..tensors.len() - 1 {
            if tensors[k].shape()[2] != tensors[k + 1].shape()[0] {
                return Err(Error::Dimension(format!(
                    "bond mismatch between sites {k} and {}: {} vs {}",
                    k + 1,
                    tensors[k].shape()[2],
                    tensors[k + 1].shape()[0]
                )));
            }
        }
        Ok(Mps { tensors })
    }

    /// Product state from per-site vectors.
    pub fn product_state(site_vectors: &[Vec<Complex64>]) -> Result<Self> {
        let tensors = site_vectors
            .iter()
            .map(|v| Tensor::new(vec![1, v.len(), 1], v.clone()))
            .collect::<Result<Vec<_>>>()?;
        Mps::new(tensors)
    }

    /// |0...0⟩ on `n` qubits.
    pub fn zero_state(n: usize) -> Self {
        let site = Tensor::new(
            vec![1, 2, 1],
            vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        )
        .unwrap();
        Mps {
            tensors: vec![site; n],
        }
    }

    pub fn site_count(&self) -> usize {
        self.tensors.len()
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn tensor(&self, k: usize) -> &Tensor {
        &self.tensors[k]
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor] {
        &mut self.tensors
    }

    pub fn phys_dims(&self) -> Vec<usize> {
        self.tensors.iter().map(|t| t.shape()[1]).collect()
    }

    /// Largest virtual bond extent.
    pub fn max_bond(&self) -> usize {
        self.tensors
            .iter()
            .map(|t| t.shape()[2])
            .max()
            .unwrap_or(1)
    }

    /// Bond extent to the right of site `k`.
    pub fn bond(&self, k: usize) -> usize {
        self.tensors[k].shape()[2]
    }

    /// Maximum deviation from the right-isometry condition over all sites.
    pub fn isometry_deviation(&self) -> f64 {
        let mut worst = 0.0f64;
        for t in &self.tensors {
            let (l, d, r) = (t.shape()[0], t.shape()[1], t.shape()[2]);
            let m = t.reshape(vec![l, d * r]).unwrap();
            let gram = matmul(&m, &m.adjoint().unwrap()).unwrap();
            for i in 0..l {
                for j in 0..l {
                    let expected = if i == j { 1.0 } else { 0.0 };
                    let dev = (gram.data()[i * l + j] - Complex64::new(expected, 0.0)).norm();
                    worst = worst.max(dev);
                }
            }
        }
        worst
    }
}

/// Outcome of compressing one statevector.
#[derive(Clone, Debug)]
pub struct Truncation {
    pub mps: Mps,
    /// 1 − |⟨ψ_exact|ψ_mps⟩|².
    pub error: f64,
    /// Sum of squared singular values discarded at each cut during the
    /// left-to-right sweep.
    pub discarded_per_cut: Vec<f64>,
}

/// Converts a statevector into a right-canonical MPS with every bond capped
/// at `chi_max`. Truncation is by count only.
pub fn from_statevector(state: &Statevector, chi_max: usize) -> Result<Truncation> {
    let caps = vec![chi_max; state.n_qubits().saturating_sub(1)];
    from_statevector_impl(state, &caps, None)
}

/// Same as [`from_statevector`] but with an individual cap per cut; cut `k`
/// separates sites `0..=k` from the rest.
pub fn from_statevector_with_caps(state: &Statevector, caps: &[usize]) -> Result<Truncation> {
    from_statevector_impl(state, caps, None)
}

/// Cap-plus-threshold variant (off by default elsewhere): at each cut the
/// bond additionally shrinks while the relative discarded weight
/// Σ_dropped s² / Σ s² stays within `max_discarded_weight`.
pub fn from_statevector_with_discard_threshold(
    state: &Statevector,
    chi_max: usize,
    max_discarded_weight: f64,
) -> Result<Truncation> {
    if !(0.0..1.0).contains(&max_discarded_weight) {
        return Err(Error::Domain(format!(
            "discard threshold {max_discarded_weight} outside [0, 1)"
        )));
    }
    let caps = vec![chi_max; state.n_qubits().saturating_sub(1)];
    from_statevector_impl(state, &caps, Some(max_discarded_weight))
}

fn from_statevector_impl(
    state: &Statevector,
    caps: &[usize],
    discard_threshold: Option<f64>,
) -> Result<Truncation> {
    let n = state.n_qubits();
    if n == 0 {
        return Err(Error::Shape("cannot decompose a zero-qubit state".into()));
    }
    if caps.len() + 1 != n {
        return Err(Error::Dimension(format!(
            "{} caps supplied for {} cuts",
            caps.len(),
            n - 1
        )));
    }
    if caps.iter().any(|&c| c == 0) {
        return Err(Error::Domain("bond caps must be >= 1".into()));
    }

    let mut rest: Vec<Complex64> = state.amps().to_vec();
    let mut chi_prev = 1usize;
    let mut tensors = Vec::with_capacity(n);
    let mut discarded_per_cut = Vec::with_capacity(n - 1);

    for cut in 0..n - 1 {
        let rows = chi_prev * 2;
        let cols = rest.len() / rows;
        let m = Tensor::new(vec![rows, cols], rest)?;
        let (u, s, vh) = svd(&m)?;
        let zero_tol = s.first().copied().unwrap_or(0.0) * RELATIVE_ZERO;
        let nonzero = s.iter().filter(|&&x| x > zero_tol).count().max(1);
        let mut keep = nonzero.min(caps[cut]);
        if let Some(budget) = discard_threshold {
            let total: f64 = s.iter().map(|x| x * x).sum();
            while keep > 1 {
                let tail: f64 = s[keep - 1..].iter().map(|x| x * x).sum();
                if tail > budget * total {
                    break;
                }
                keep -= 1;
            }
        }
        discarded_per_cut.push(s[keep..].iter().map(|x| x * x).sum());

        // Left factor becomes the site tensor; the weighted right factor is
        // carried into the next step.
        let mut site = Tensor::zeros(vec![chi_prev, 2, keep]);
        let u_cols = u.shape()[1];
        for row in 0..rows {
            for col in 0..keep {
                site.data_mut()[row * keep + col] = u.data()[row * u_cols + col];
            }
        }
        tensors.push(site);

        let mut carried = vec![Complex64::new(0.0, 0.0); keep * cols];
        for row in 0..keep {
            for col in 0..cols {
                carried[row * cols + col] = vh.data()[row * cols + col] * s[row];
            }
        }
        rest = carried;
        chi_prev = keep;
    }
    tensors.push(Tensor::new(vec![chi_prev, 2, 1], rest)?);

    let truncated = Mps::new(tensors)?;
    let canonical = right_canonicalize(&truncated)?;
    let overlap = dense_overlap(state, &canonical)?;
    let error = (1.0 - overlap.norm_sqr()).max(0.0);
    Ok(Truncation {
        mps: canonical,
        error,
        discarded_per_cut,
    })
}

/// ⟨state|mps⟩ without materializing the MPS, contracting site by site.
fn dense_overlap(state: &Statevector, m: &Mps) -> Result<Complex64> {
    let dims = m.phys_dims();
    let total: usize = dims.iter().product();
    if total != state.amps().len() {
        return Err(Error::Dimension(format!(
            "MPS carries {total} amplitudes, state {}",
            state.amps().len()
        )));
    }
    // Carry env[rest, bond]: the partial contraction of conj(ψ) with the
    // first k sites, where `rest` runs over the remaining physical indices
    // (most significant first).
    let mut env = Tensor::new(
        vec![total, 1],
        state.amps().iter().map(|a| a.conj()).collect(),
    )?;
    for t in m.tensors() {
        let (l, d, _) = (t.shape()[0], t.shape()[1], t.shape()[2]);
        let rest = env.shape()[0] / d;
        let e3 = env.reshape(vec![d, rest, l])?;
        env = contract(&e3, t, &[(0, 1), (2, 0)])?; // -> (rest, right bond)
    }
    Ok(env.data()[0])
}

/// Contracts the chain into dense amplitudes (refusing above `cap` entries).
pub fn to_statevector_capped(m: &Mps, cap: usize) -> Result<Statevector> {
    let total: usize = m.phys_dims().iter().product();
    if total > cap {
        return Err(Error::Size(format!(
            "dense reconstruction would need {total} amplitudes (cap {cap})"
        )));
    }
    if m.phys_dims().iter().any(|&d| d != 2) {
        return Err(Error::Shape(
            "dense reconstruction requires qubit (dim-2) sites".into(),
        ));
    }
    let mut acc = Tensor::new(vec![1, 1], vec![Complex64::new(1.0, 0.0)])?;
    for t in m.tensors() {
        let (l, d, r) = (t.shape()[0], t.shape()[1], t.shape()[2]);
        let flat = t.reshape(vec![l, d * r])?;
        let prod = matmul(&acc, &flat)?; // (P, d·r)
        let p = prod.shape()[0];
        acc = prod.reshape(vec![p * d, r])?;
    }
    let amps = acc.into_data();
    Statevector::raw(m.site_count(), amps)
}

/// Contracts the chain into dense amplitudes under the default cap.
pub fn to_statevector(m: &Mps) -> Result<Statevector> {
    to_statevector_capped(m, DENSE_CAP)
}

/// Right-canonicalizes the chain: after the sweep every tensor satisfies the
/// right-isometry condition and the represented state is unchanged up to
/// global phase and normalization.
pub fn right_canonicalize(m: &Mps) -> Result<Mps> {
    let n = m.site_count();
    let mut tensors: Vec<Tensor> = m.tensors.clone();
    for k in (1..n).rev() {
        let t = &tensors[k];
        let (l, d, r) = (t.shape()[0], t.shape()[1], t.shape()[2]);
        let flat = t.reshape(vec![l, d * r])?;
        let (u, s, vh) = svd(&flat)?;
        let zero_tol = s.first().copied().unwrap_or(0.0) * RELATIVE_ZERO;
        let keep = s.iter().filter(|&&x| x > zero_tol).count().max(1).min(l);
        // New site: top `keep` rows of vh (orthonormal rows).
        let mut site = Tensor::zeros(vec![keep, d, r]);
        site.data_mut()
            .copy_from_slice(&vh.data()[..keep * d * r]);
        tensors[k] = site;
        // Absorb u·diag(s) into the left neighbor.
        let u_cols = u.shape()[1];
        let mut carry = Tensor::zeros(vec![l, keep]);
        for row in 0..l {
            for col in 0..keep {
                carry.data_mut()[row * keep + col] = u.data()[row * u_cols + col] * s[col];
            }
        }
        tensors[k - 1] = contract(&tensors[k - 1], &carry, &[(2, 0)])?;
    }
    // The state norm has collected in the first tensor; normalize it away.
    let norm = tensors[0].frobenius_norm();
    if norm == 0.0 {
        return Err(Error::Domain("cannot canonicalize the zero state".into()));
    }
    let inv = Complex64::new(1.0 / norm, 0.0);
    tensors[0] = tensors[0].scale(inv);
    Mps::new(tensors)
}

/// Transfer-matrix inner product ⟨a|b⟩ with per-site norm factoring into a
/// log accumulator to avoid overflow on long chains.
pub fn inner(a: &Mps, b: &Mps) -> Result<Complex64> {
    let (mantissa, ln_factor) = inner_log(a, b)?;
    Ok(mantissa * ln_factor.exp())
}

/// Inner product split into `(mantissa, ln_scale)` with the true value
/// `mantissa · exp(ln_scale)`.
pub fn inner_log(a: &Mps, b: &Mps) -> Result<(Complex64, f64)> {
    if a.site_count() != b.site_count() {
        return Err(Error::Dimension(format!(
            "site counts differ: {} vs {}",
            a.site_count(),
            b.site_count()
        )));
    }
    let mut env = Tensor::new(vec![1, 1], vec![Complex64::new(1.0, 0.0)])?;
    let mut ln_acc = 0.0f64;
    for (ta, tb) in a.tensors.iter().zip(&b.tensors) {
        if ta.shape()[1] != tb.shape()[1] {
            return Err(Error::Shape(format!(
                "physical dims differ: {} vs {}",
                ta.shape()[1],
                tb.shape()[1]
            )));
        }
        // env (la, lb) with B over lb, then with conj(A) over (la, phys).
        let step = contract(&env, tb, &[(1, 0)])?; // (la, d, rb)
        env = contract(&ta.conj(), &step, &[(0, 0), (1, 1)])?; // (ra, rb)
        let scale = env.max_abs();
        if scale == 0.0 {
            return Ok((Complex64::new(0.0, 0.0), 0.0));
        }
        env = env.scale(Complex64::new(1.0 / scale, 0.0));
        ln_acc += scale.ln();
    }
    Ok((env.data()[0], ln_acc))
}

/// Von Neumann entanglement entropy (nats) across the bond that separates
/// sites `0..cut` from `cut..n`; `cut` ranges over `1..n`.
pub fn entanglement_entropy(m: &Mps, cut: usize) -> Result<f64> {
    let n = m.site_count();
    if cut == 0 || cut >= n {
        return Err(Error::Index(format!(
            "cut {cut} out of range 1..{n}"
        )));
    }
    let canonical = right_canonicalize(m)?;
    // Left-orthogonalize up to the cut; the singular values of the final
    // carried factor are the Schmidt coefficients.
    let mut carry: Option<Tensor> = None;
    let mut schmidt: Vec<f64> = vec![1.0];
    for k in 0..cut {
        let t = match carry.take() {
            Some(c) => contract(&c, &canonical.tensors[k], &[(1, 0)])?,
            None => canonical.tensors[k].clone(),
        };
        let (l, d, r) = (t.shape()[0], t.shape()[1], t.shape()[2]);
        let flat = t.reshape(vec![l * d, r])?;
        let (_, s, vh) = svd(&flat)?;
        let keep = s.len();
        let mut sv = Tensor::zeros(vec![keep, r]);
        for row in 0..keep {
            for col in 0..r {
                sv.data_mut()[row * r + col] = vh.data()[row * r + col] * s[row];
            }
        }
        carry = Some(sv);
        schmidt = s;
    }
    let total: f64 = schmidt.iter().map(|x| x * x).sum();
    if total == 0.0 {
        return Err(Error::Domain("zero-norm state has no Schmidt spectrum".into()));
    }
    let mut entropy = 0.0;
    for &s in &schmidt {
        let p = s * s / total;
        if p > 1e-30 {
            entropy -= p * p.ln();
        }
    }
    Ok(entropy.max(0.0))
}

/// Concatenates per-patch chains into one chain; inter-patch bonds have
/// extent 1 by construction, so the tensors are simply strung together.
pub fn concat_chains(patches: &[Mps]) -> Result<Mps> {
    let mut tensors = Vec::new();
    for p in patches {
        tensors.extend(p.tensors().iter().cloned());
    }
    Mps::new(tensors)
}

/// One patch of a compressed image.
#[derive(Clone, Debug)]
pub struct PatchMps {
    pub mps: Mps,
    pub truncation_error: f64,
}

/// Encodes each patch of `img` and truncates it to bond dimension
/// `chi_img`, reporting the per-patch truncation error.
pub fn compress_image_mps(
    img: &Image,
    layout: &PatchLayout,
    chi_img: usize,
) -> Result<Vec<PatchMps>> {
    split_patches(img, layout)?
        .iter()
        .map(|patch| {
            let state = encode_frqi(&snake_flatten(patch))?;
            let t = from_statevector(&state, chi_img)?;
            Ok(PatchMps {
                mps: t.mps,
                truncation_error: t.error,
            })
        })
        .collect()
}

/// Reconstructs an image from per-patch chains by dense decoding.
pub fn decode_image_mps(patches: &[PatchMps], layout: &PatchLayout) -> Result<Image> {
    let imgs = patches
        .iter()
        .map(|p| {
            let state = to_statevector(&p.mps)?;
            let pixels = decode_frqi(&state)?;
            snake_unflatten(&pixels, layout.patch_width, layout.patch_height)
        })
        .collect::<Result<Vec<_>>>()?;
    join_patches(&imgs, layout)
}
