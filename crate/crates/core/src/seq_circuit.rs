//! Parameterized sequential (staircase) circuits of two-qubit gates: gate
//! construction from 15 angles, statevector simulation, classifier readout
//! marginals, and exact analytic parameter gradients.
//!
//! Each gate is exp(-i/2 · Σ θ_{ρ,γ} σ^ρ ⊗ σ^γ) over the fifteen Pauli
//! pairs with (0,0) fixed to zero, which pins the global phase. Within a
//! layer, gates run down the chain on pairs (0,1), (1,2), ..., (n-2,n-1);
//! the optional readout tail appends three gates that walk information from
//! the final (color) qubit up into the label qubits.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frqi::Statevector;
use crate::tensors::eigh;
use crate::tensors::Tensor;

/// Number of free angles per gate.
pub const GATE_PARAMS: usize = 15;

/// Complex zero shorthand.
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// The fifteen angles θ_{ρ,γ} with (ρ,γ) over {0,1,2,3}² minus (0,0),
/// enumerated row-major: (0,1), (0,2), (0,3), (1,0), ..., (3,3).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateParams {
    pub theta: [f64; GATE_PARAMS],
}

impl GateParams {
    pub fn zero() -> Self {
        GateParams {
            theta: [0.0; GATE_PARAMS],
        }
    }

    /// Angle for the Pauli pair (rho, gamma); (0,0) is structurally absent.
    pub fn angle(&self, rho: usize, gamma: usize) -> f64 {
        assert!(rho < 4 && gamma < 4 && (rho, gamma) != (0, 0));
        self.theta[rho * 4 + gamma - 1]
    }
}

/// 2x2 Pauli matrices I, X, Y, Z.
fn pauli(index: usize) -> [Complex64; 4] {
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    match index {
        0 => [one, ZERO, ZERO, one],
        1 => [ZERO, one, one, ZERO],
        2 => [ZERO, -i, i, ZERO],
        _ => [one, ZERO, ZERO, -one],
    }
}

/// 4x4 Kronecker products σ^ρ ⊗ σ^γ for the fifteen parameter slots.
fn pauli_pairs() -> [[Complex64; 16]; GATE_PARAMS] {
    let mut out = [[ZERO; 16]; GATE_PARAMS];
    let mut slot = 0;
    for rho in 0..4 {
        for gamma in 0..4 {
            if (rho, gamma) == (0, 0) {
                continue;
            }
            let a = pauli(rho);
            let b = pauli(gamma);
            for i in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        for l in 0..2 {
                            out[slot][(i * 2 + k) * 4 + (j * 2 + l)] = a[i * 2 + j] * b[k * 2 + l];
                        }
                    }
                }
            }
            slot += 1;
        }
    }
    out
}

/// Hermitian generator H = Σ θ_{ρ,γ} σ^ρ ⊗ σ^γ.
fn generator(p: &GateParams) -> Tensor {
    let pairs = pauli_pairs();
    let mut h = vec![ZERO; 16];
    for (slot, basis) in pairs.iter().enumerate() {
        let angle = p.theta[slot];
        if angle != 0.0 {
            for (dst, src) in h.iter_mut().zip(basis.iter()) {
                *dst += angle * src;
            }
        }
    }
    Tensor::new(vec![4, 4], h).expect("4x4 shape")
}

/// The 4x4 unitary exp(-i H(θ) / 2), computed exactly through the
/// eigendecomposition of the Hermitian generator.
pub fn gate_matrix(p: &GateParams) -> [Complex64; 16] {
    let (u, _) = gate_matrix_with_derivs_impl(p, false);
    u
}

/// Gate unitary together with the exact derivative matrices dU/dθ_i.
pub fn gate_matrix_with_derivs(p: &GateParams) -> ([Complex64; 16], Vec<[Complex64; 16]>) {
    gate_matrix_with_derivs_impl(p, true)
}

fn gate_matrix_with_derivs_impl(
    p: &GateParams,
    with_derivs: bool,
) -> ([Complex64; 16], Vec<[Complex64; 16]>) {
    let h = generator(p);
    let (evals, v) = eigh(&h).expect("generator is Hermitian by construction");
    let vd = v.data();

    // U = V diag(exp(-i λ / 2)) V†
    let phases: Vec<Complex64> = evals
        .iter()
        .map(|&l| Complex64::from_polar(1.0, -l / 2.0))
        .collect();
    let mut u = [ZERO; 16];
    for r in 0..4 {
        for c in 0..4 {
            let mut acc = ZERO;
            for k in 0..4 {
                acc += vd[r * 4 + k] * phases[k] * vd[c * 4 + k].conj();
            }
            u[r * 4 + c] = acc;
        }
    }
    if !with_derivs {
        return (u, Vec::new());
    }

    // Divided differences of f(λ) = exp(-i λ / 2) in the eigenbasis
    // (Daleckii-Krein): dU = V (Φ ∘ V† P V) V†.
    let mut phi = [ZERO; 16];
    for a in 0..4 {
        for b in 0..4 {
            let (la, lb) = (evals[a], evals[b]);
            phi[a * 4 + b] = if (la - lb).abs() < 1e-7 {
                let mid = 0.5 * (la + lb);
                Complex64::new(0.0, -0.5) * Complex64::from_polar(1.0, -mid / 2.0)
            } else {
                (phases[a] - phases[b]) / (la - lb)
            };
        }
    }

    let pairs = pauli_pairs();
    let mut derivs = Vec::with_capacity(GATE_PARAMS);
    for basis in pairs.iter() {
        // W = V† P V
        let mut w = [ZERO; 16];
        for a in 0..4 {
            for b in 0..4 {
                let mut acc = ZERO;
                for r in 0..4 {
                    for c in 0..4 {
                        acc += vd[r * 4 + a].conj() * basis[r * 4 + c] * vd[c * 4 + b];
                    }
                }
                w[a * 4 + b] = acc * phi[a * 4 + b];
            }
        }
        // dU = V W V†
        let mut du = [ZERO; 16];
        for r in 0..4 {
            for c in 0..4 {
                let mut acc = ZERO;
                for a in 0..4 {
                    for b in 0..4 {
                        acc += vd[r * 4 + a] * w[a * 4 + b] * vd[c * 4 + b].conj();
                    }
                }
                du[r * 4 + c] = acc;
            }
        }
        derivs.push(du);
    }
    (u, derivs)
}

/// Recovers gate angles from a 4x4 unitary, up to global phase.
///
/// Splits U into commuting Hermitian parts, diagonalizes them jointly, takes
/// the principal log of the eigenphases, and projects the generator onto the
/// Pauli basis with the (0,0) component dropped.
pub fn params_from_unitary(u: &[Complex64; 16]) -> Result<GateParams> {
    // Hermitian A = (U + U†)/2 and B = (U - U†)/(2i) commute for unitary U.
    let mut a = [ZERO; 16];
    let mut b = [ZERO; 16];
    for r in 0..4 {
        for c in 0..4 {
            let x = u[r * 4 + c];
            let y = u[c * 4 + r].conj();
            a[r * 4 + c] = 0.5 * (x + y);
            b[r * 4 + c] = Complex64::new(0.0, -0.5) * (x - y);
        }
    }
    // A generic mixing of A and B has a simple spectrum whose eigenbasis
    // diagonalizes U; retry with other mixings on the measure-zero failures.
    for &t in &[0.6180339887498949, 0.3819660112501051, 0.5, 0.7745966692414834, 0.2236067977499790] {
        let mut mix = [ZERO; 16];
        for i in 0..16 {
            mix[i] = t * a[i] + (1.0 - t) * b[i];
        }
        let mix_t = Tensor::new(vec![4, 4], mix.to_vec())?;
        let Ok((_, v)) = eigh(&mix_t) else { continue };
        let vd = v.data();
        // D = V† U V should be diagonal.
        let mut d = [ZERO; 16];
        for r in 0..4 {
            for c in 0..4 {
                let mut acc = ZERO;
                for i in 0..4 {
                    for j in 0..4 {
                        acc += vd[i * 4 + r].conj() * u[i * 4 + j] * vd[j * 4 + c];
                    }
                }
                d[r * 4 + c] = acc;
            }
        }
        let off = (0..4)
            .flat_map(|r| (0..4).map(move |c| (r, c)))
            .filter(|&(r, c)| r != c)
            .map(|(r, c)| d[r * 4 + c].norm())
            .fold(0.0f64, f64::max);
        if off > 1e-10 {
            continue;
        }
        // Eigenphases -> generator eigenvalues λ = -2 arg(d_kk).
        let mut h = [ZERO; 16];
        for r in 0..4 {
            for c in 0..4 {
                let mut acc = ZERO;
                for k in 0..4 {
                    let lambda = -2.0 * d[k * 4 + k].arg();
                    acc += vd[r * 4 + k] * lambda * vd[c * 4 + k].conj();
                }
                h[r * 4 + c] = acc;
            }
        }
        // Remove the traceful part (global phase) and project onto Paulis.
        let trace = (h[0] + h[5] + h[10] + h[15]).re / 4.0;
        for i in 0..4 {
            h[i * 4 + i] -= Complex64::new(trace, 0.0);
        }
        let pairs = pauli_pairs();
        let mut params = GateParams::zero();
        for (slot, basis) in pairs.iter().enumerate() {
            let mut acc = ZERO;
            for r in 0..4 {
                for c in 0..4 {
                    acc += basis[c * 4 + r] * h[r * 4 + c];
                }
            }
            params.theta[slot] = acc.re / 4.0;
        }
        // Accept only if the reconstruction matches up to global phase.
        let rec = gate_matrix(&params);
        let mut overlap = ZERO;
        for i in 0..16 {
            overlap += rec[i].conj() * u[i];
        }
        if (overlap.norm() - 4.0).abs() < 1e-9 {
            return Ok(params);
        }
    }
    Err(Error::NonConvergence(
        "could not extract gate angles from unitary".into(),
        5,
    ))
}

/// Whether a circuit encodes images or classifies them; recorded in
/// serialized parameter files.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CircuitRole {
    ImageEncoder,
    Classifier,
}

/// M layers of two-qubit gates in staircase order, with an optional
/// three-gate readout tail.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SequentialCircuit {
    n_qubits: usize,
    role: CircuitRole,
    layers: Vec<Vec<GateParams>>,
    readout_tail: Option<[GateParams; 3]>,
}

impl SequentialCircuit {
    /// All-zero-angle circuit (the identity).
    pub fn identity(n_qubits: usize, layers: usize, role: CircuitRole, tail: bool) -> Result<Self> {
        if n_qubits < 2 {
            return Err(Error::Shape("circuits need at least 2 qubits".into()));
        }
        if tail && n_qubits < 5 {
            return Err(Error::Shape(
                "the readout tail spans the last five qubits".into(),
            ));
        }
        Ok(SequentialCircuit {
            n_qubits,
            role,
            layers: vec![vec![GateParams::zero(); n_qubits - 1]; layers],
            readout_tail: tail.then(|| [GateParams::zero(); 3]),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn role(&self) -> CircuitRole {
        self.role
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    pub fn has_tail(&self) -> bool {
        self.readout_tail.is_some()
    }

    /// Total gates: layers·(n−1) plus the tail.
    pub fn gate_count(&self) -> usize {
        self.layers.len() * (self.n_qubits - 1) + if self.readout_tail.is_some() { 3 } else { 0 }
    }

    pub fn param_count(&self) -> usize {
        self.gate_count() * GATE_PARAMS
    }

    /// Gates in application order as (top qubit of the pair, params).
    pub fn gates(&self) -> Vec<(usize, GateParams)> {
        let mut out = Vec::with_capacity(self.gate_count());
        for layer in &self.layers {
            for (q, g) in layer.iter().enumerate() {
                out.push((q, *g));
            }
        }
        if let Some(tail) = &self.readout_tail {
            let n = self.n_qubits;
            for (i, g) in tail.iter().enumerate() {
                out.push((n - 2 - i, *g));
            }
        }
        out
    }

    /// Flattens all angles in gate application order.
    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for (_, g) in self.gates() {
            out.extend_from_slice(&g.theta);
        }
        out
    }

    /// Installs a flat angle vector produced by [`Self::params_flat`].
    pub fn set_params_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::Dimension(format!(
                "{} angles installed into a circuit with {}",
                flat.len(),
                self.param_count()
            )));
        }
        let mut it = flat.chunks_exact(GATE_PARAMS);
        for layer in &mut self.layers {
            for g in layer.iter_mut() {
                g.theta.copy_from_slice(it.next().unwrap());
            }
        }
        if let Some(tail) = &mut self.readout_tail {
            for g in tail.iter_mut() {
                g.theta.copy_from_slice(it.next().unwrap());
            }
        }
        Ok(())
    }
}

/// Applies a `span`-qubit gate on the contiguous window starting at `top`;
/// `matrix` is (2^span)x(2^span) row-major with the window's first qubit as
/// the most significant bit.
pub fn apply_window(amps: &mut [Complex64], n_qubits: usize, top: usize, span: usize, matrix: &[Complex64]) {
    let dim = 1usize << span;
    debug_assert_eq!(matrix.len(), dim * dim);
    debug_assert!(top + span <= n_qubits);
    let shift = n_qubits - top - span;
    let low = 1usize << shift;
    let high = 1usize << top;
    let mut scratch = vec![ZERO; dim];
    for h in 0..high {
        let base_h = h << (n_qubits - top);
        for l in 0..low {
            let base = base_h | l;
            for (g, slot) in scratch.iter_mut().enumerate() {
                *slot = amps[base | (g << shift)];
            }
            for out in 0..dim {
                let row = &matrix[out * dim..(out + 1) * dim];
                let mut acc = ZERO;
                for (g, src) in scratch.iter().enumerate() {
                    acc += row[g] * src;
                }
                amps[base | (out << shift)] = acc;
            }
        }
    }
}

/// Runs the circuit on `input`, layer by layer in staircase order, then the
/// readout tail if present.
pub fn apply_circuit(c: &SequentialCircuit, input: &Statevector) -> Result<Statevector> {
    if input.n_qubits() != c.n_qubits {
        return Err(Error::Shape(format!(
            "circuit on {} qubits applied to a {}-qubit state",
            c.n_qubits,
            input.n_qubits()
        )));
    }
    let mut amps = input.amps().to_vec();
    for (top, params) in c.gates() {
        let u = gate_matrix(&params);
        apply_window(&mut amps, c.n_qubits, top, 2, &u);
    }
    Statevector::new(c.n_qubits, amps)
}

/// Normalized marginal probabilities over the label-qubit bitstrings.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbVector {
    probs: Vec<f64>,
}

impl ProbVector {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        let total: f64 = probs.iter().sum();
        if probs.iter().any(|&p| p < -1e-12) || (total - 1.0).abs() > 1e-10 {
            return Err(Error::Domain(format!(
                "probabilities must be nonnegative and sum to 1 (got {total})"
            )));
        }
        Ok(ProbVector { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// The four qubits nearest the readout end of the staircase (fewer when the
/// register is smaller).
pub fn default_label_qubits(n_qubits: usize) -> Vec<usize> {
    let count = 4.min(n_qubits);
    (n_qubits - count..n_qubits).collect()
}

/// Applies the circuit and marginalizes onto `label_qubits`. Bitstring
/// indices order the label qubits ascending, first as most significant.
pub fn readout(
    c: &SequentialCircuit,
    input: &Statevector,
    label_qubits: &[usize],
) -> Result<ProbVector> {
    let output = apply_circuit(c, input)?;
    marginal_probabilities(&output, label_qubits)
}

/// Marginal probabilities of a state over a subset of qubits.
pub fn marginal_probabilities(state: &Statevector, label_qubits: &[usize]) -> Result<ProbVector> {
    let n = state.n_qubits();
    let mut sorted = label_qubits.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != label_qubits.len() || sorted.iter().any(|&q| q >= n) {
        return Err(Error::Index(format!(
            "label qubits {label_qubits:?} invalid for {n} qubits"
        )));
    }
    let bits = sorted.len();
    let mut probs = vec![0.0f64; 1 << bits];
    for (idx, amp) in state.amps().iter().enumerate() {
        let mut key = 0usize;
        for &q in &sorted {
            key = (key << 1) | ((idx >> (n - 1 - q)) & 1);
        }
        probs[key] += amp.norm_sqr();
    }
    let total: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= total;
    }
    ProbVector::new(probs)
}

/// Argmax over the first `label_count` entries only, ties broken by lowest
/// index; trailing bitstrings are disregarded.
pub fn predict(s: &ProbVector, label_count: usize) -> Result<usize> {
    if label_count == 0 || label_count > s.len() {
        return Err(Error::Index(format!(
            "label count {label_count} out of range for {} outcomes",
            s.len()
        )));
    }
    let mut best = 0usize;
    for (i, &p) in s.probs[..label_count].iter().enumerate() {
        if p > s.probs[best] {
            best = i;
        }
    }
    Ok(best)
}

/// Exact gradients of a real cost w.r.t. every gate angle, in gate
/// application order.
///
/// `cost_cotangent` must hold g = ∂C/∂ψ* at the circuit output, so that
/// dC = 2·Re(g† dψ). The backward pass un-applies gates (unitarity) instead
/// of storing intermediate states.
pub fn param_gradients(
    c: &SequentialCircuit,
    input: &Statevector,
    cost_cotangent: &[Complex64],
) -> Result<Vec<f64>> {
    let n = c.n_qubits;
    if input.n_qubits() != n {
        return Err(Error::Shape(format!(
            "circuit on {n} qubits differentiated against a {}-qubit state",
            input.n_qubits()
        )));
    }
    if cost_cotangent.len() != input.amps().len() {
        return Err(Error::Dimension(format!(
            "cotangent has {} entries, state {}",
            cost_cotangent.len(),
            input.amps().len()
        )));
    }
    let gates = c.gates();
    let mut phi = input.amps().to_vec();
    for (top, params) in &gates {
        let u = gate_matrix(params);
        apply_window(&mut phi, n, *top, 2, &u);
    }
    let mut lambda = cost_cotangent.to_vec();
    let mut grads = vec![0.0f64; gates.len() * GATE_PARAMS];

    for (k, (top, params)) in gates.iter().enumerate().rev() {
        let (u, derivs) = gate_matrix_with_derivs(params);
        let u_dagger = dagger4(&u);
        // phi currently holds the state after gate k; walk it back first.
        apply_window(&mut phi, n, *top, 2, &u_dagger);
        // S[a][b] = Σ_rest conj(λ[rest,a]) φ[rest,b] over the window.
        let s = window_cross(&lambda, &phi, n, *top);
        for (i, du) in derivs.iter().enumerate() {
            let mut acc = ZERO;
            for a in 0..4 {
                for b in 0..4 {
                    acc += du[a * 4 + b] * s[a * 4 + b];
                }
            }
            grads[k * GATE_PARAMS + i] = 2.0 * acc.re;
        }
        apply_window(&mut lambda, n, *top, 2, &u_dagger);
    }
    Ok(grads)
}

fn dagger4(u: &[Complex64; 16]) -> [Complex64; 16] {
    let mut out = [ZERO; 16];
    for r in 0..4 {
        for c in 0..4 {
            out[c * 4 + r] = u[r * 4 + c].conj();
        }
    }
    out
}

/// S[a][b] = Σ_rest conj(λ[(rest,a)]) φ[(rest,b)] for a 2-qubit window.
fn window_cross(lambda: &[Complex64], phi: &[Complex64], n: usize, top: usize) -> [Complex64; 16] {
    let span = 2;
    let shift = n - top - span;
    let low = 1usize << shift;
    let high = 1usize << top;
    let mut s = [ZERO; 16];
    for h in 0..high {
        let base_h = h << (n - top);
        for l in 0..low {
            let base = base_h | l;
            for a in 0..4 {
                let la = lambda[base | (a << shift)].conj();
                if la == ZERO {
                    continue;
                }
                for b in 0..4 {
                    s[a * 4 + b] += la * phi[base | (b << shift)];
                }
            }
        }
    }
    s
}

/// Cotangent of the fidelity cost C = |⟨target|ψ⟩|²: g = ⟨target|ψ⟩ · target.
pub fn fidelity_cotangent(target: &Statevector, output: &Statevector) -> Result<Vec<Complex64>> {
    let overlap = target.inner(output)?;
    Ok(target.amps().iter().map(|t| overlap * t).collect())
}

/// Cotangent of a cost that depends on the label-qubit marginals s through
/// real weights w = ∂C/∂s: g_i = w_{key(i)} · ψ_i.
pub fn marginal_cotangent(
    output: &Statevector,
    label_qubits: &[usize],
    weights: &[f64],
) -> Result<Vec<Complex64>> {
    let n = output.n_qubits();
    let mut sorted = label_qubits.to_vec();
    sorted.sort_unstable();
    if weights.len() != 1 << sorted.len() {
        return Err(Error::Dimension(format!(
            "{} weights for {} label bitstrings",
            weights.len(),
            1 << sorted.len()
        )));
    }
    let mut out = Vec::with_capacity(output.amps().len());
    for (idx, amp) in output.amps().iter().enumerate() {
        let mut key = 0usize;
        for &q in &sorted {
            key = (key << 1) | ((idx >> (n - 1 - q)) & 1);
        }
        out.push(weights[key] * amp);
    }
    Ok(out)
}
