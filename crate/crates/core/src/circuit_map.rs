//! The exact correspondence between matrix-product states and sequential
//! circuits: a right-canonical MPS with bond dimension χ becomes a staircase
//! of (log2 χ_embed + 1)-qubit unitaries that prepares the same state from
//! |0...0⟩, and an M-layer two-qubit staircase circuit becomes an exact MPS
//! with χ ≤ 2^M.
//!
//! Decomposing the multi-qubit staircase unitaries into hardware one- and
//! two-qubit gates is out of scope here.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frqi::Statevector;
use crate::mps::{Mps, RELATIVE_ZERO};
use crate::seq_circuit::{
    apply_window, gate_matrix, params_from_unitary, CircuitRole, SequentialCircuit,
};
use crate::tensors::{contract, qr_unitary_completion, svd, Tensor};

/// One unitary of the staircase, acting on a contiguous qubit window.
#[derive(Clone, Debug)]
pub struct StaircaseUnitary {
    /// MPS site this gate consumes.
    pub site: usize,
    /// First (topmost) qubit of the window.
    pub top_qubit: usize,
    /// Window width: log2(χ_embed) + 1 qubits.
    pub span: usize,
    /// Row-major (2^span)x(2^span) unitary; window МSB is the top qubit.
    pub matrix: Tensor,
}

/// Serialized form of a gate list (the `export-circuit` CLI output).
#[derive(Serialize, Deserialize)]
pub struct GateListFile {
    pub n_qubits: usize,
    pub chi_embed: usize,
    pub gates: Vec<GateEntry>,
}

#[derive(Serialize, Deserialize)]
pub struct GateEntry {
    pub site: usize,
    pub top_qubit: usize,
    pub span: usize,
    /// Row-major entries as (re, im) pairs.
    pub matrix: Vec<[f64; 2]>,
}

impl StaircaseUnitary {
    pub fn to_entry(&self) -> GateEntry {
        GateEntry {
            site: self.site,
            top_qubit: self.top_qubit,
            span: self.span,
            matrix: self.matrix.data().iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

/// Builds the gate-list file for a canonical MPS.
pub fn gate_list_file(m: &Mps) -> Result<GateListFile> {
    let gates = mps_to_staircase(m)?;
    let chi_embed = gates
        .first()
        .map(|g| 1usize << (g.span - 1))
        .unwrap_or(1);
    Ok(GateListFile {
        n_qubits: m.site_count(),
        chi_embed,
        gates: gates.iter().map(StaircaseUnitary::to_entry).collect(),
    })
}

fn next_power_of_two(x: usize) -> usize {
    x.next_power_of_two()
}

/// Converts a right-canonical MPS into a staircase of unitaries that
/// reproduces the state when applied to |0...0⟩ in output order.
///
/// Bond indices are zero-padded to χ_embed = next power of two of the
/// maximum bond; free unitary columns come from deterministic Gram-Schmidt
/// completion.
pub fn mps_to_staircase(m: &Mps) -> Result<Vec<StaircaseUnitary>> {
    let chi_embed = next_power_of_two(m.max_bond());
    mps_to_staircase_embedded(m, chi_embed)
}

/// Same as [`mps_to_staircase`] with an explicit embedding dimension
/// (`chi_embed` ≥ the maximum bond, a power of two).
pub fn mps_to_staircase_embedded(m: &Mps, chi_embed: usize) -> Result<Vec<StaircaseUnitary>> {
    let n = m.site_count();
    if m.phys_dims().iter().any(|&d| d != 2) {
        return Err(Error::Shape("staircase mapping requires qubit sites".into()));
    }
    if !chi_embed.is_power_of_two() || chi_embed < m.max_bond() {
        return Err(Error::Domain(format!(
            "chi_embed {chi_embed} must be a power of two >= max bond {}",
            m.max_bond()
        )));
    }
    let deviation = m.isometry_deviation();
    if deviation > 1e-8 {
        return Err(Error::Precondition(format!(
            "staircase mapping needs a right-canonical MPS (isometry deviation {deviation:e})"
        )));
    }
    let aux = chi_embed.trailing_zeros() as usize; // log2(chi_embed)
    let span = (aux + 1).min(n);
    let window_dim = 1usize << span;

    let mut gates = Vec::with_capacity(n);
    for k in 0..n {
        let top = k.min(n - span);
        let offset = k - top; // pass-through qubits above the active part
        let inner_qubits = span - offset;
        let inner_dim = 1usize << inner_qubits;
        let t = m.tensor(k);
        let (chi_left, _, chi_right) = (t.shape()[0], t.shape()[1], t.shape()[2]);
        let beta_dim = inner_dim / 2; // capacity of the outgoing bond register

        if chi_left > inner_dim || chi_right > beta_dim {
            return Err(Error::Dimension(format!(
                "site {k}: bonds ({chi_left}, {chi_right}) exceed window capacity"
            )));
        }

        // Specified columns: |ancilla=0, alpha⟩ -> Σ_{j,beta} B[alpha,j,beta] |j, beta⟩.
        let mut cols = Tensor::zeros(vec![inner_dim, chi_left]);
        for alpha in 0..chi_left {
            for j in 0..2 {
                for beta in 0..chi_right {
                    let row = j * beta_dim + beta;
                    cols.data_mut()[row * chi_left + alpha] = t.get(&[alpha, j, beta]);
                }
            }
        }
        let completed = qr_unitary_completion(&cols)?;

        // Reorder columns so column (alpha << 1) carries |alpha⟩⊗|0⟩ input
        // when the window still has a fresh ancilla; tail gates (offset > 0)
        // consume the full register and keep the natural order.
        let inner = if offset == 0 {
            let mut placed = Tensor::zeros(vec![inner_dim, inner_dim]);
            let mut free = chi_left;
            let specified: Vec<usize> = (0..chi_left).map(|a| a << 1).collect();
            for col in 0..inner_dim {
                let src = if col % 2 == 0 && col / 2 < chi_left {
                    col / 2
                } else {
                    let s = free;
                    free += 1;
                    s
                };
                let _ = &specified;
                for row in 0..inner_dim {
                    placed.data_mut()[row * inner_dim + col] =
                        completed.data()[row * inner_dim + src];
                }
            }
            placed
        } else {
            completed
        };

        // Embed as identity on the pass-through qubits above.
        let matrix = if offset == 0 && inner_dim == window_dim {
            inner
        } else {
            let outer = 1usize << offset;
            let mut full = Tensor::zeros(vec![window_dim, window_dim]);
            for o in 0..outer {
                for r in 0..inner_dim {
                    for cc in 0..inner_dim {
                        full.data_mut()
                            [(o * inner_dim + r) * window_dim + (o * inner_dim + cc)] =
                            inner.data()[r * inner_dim + cc];
                    }
                }
            }
            full
        };
        gates.push(StaircaseUnitary {
            site: k,
            top_qubit: top,
            span,
            matrix,
        });
    }
    Ok(gates)
}

/// Applies a staircase gate list to |0...0⟩.
pub fn apply_staircase(gates: &[StaircaseUnitary], n_qubits: usize) -> Result<Statevector> {
    let mut amps = Statevector::zero_state(n_qubits).into_amps();
    for g in gates {
        if g.top_qubit + g.span > n_qubits {
            return Err(Error::Index(format!(
                "gate window {}..{} exceeds {n_qubits} qubits",
                g.top_qubit,
                g.top_qubit + g.span
            )));
        }
        apply_window(&mut amps, n_qubits, g.top_qubit, g.span, g.matrix.data());
    }
    Statevector::new(n_qubits, amps)
}

/// Converts an M-layer staircase circuit into the exact MPS (no truncation)
/// of the state it prepares from |0...0⟩; the bond dimension is bounded by
/// 2^M for tail-less circuits.
pub fn layered_circuit_to_mps(c: &SequentialCircuit) -> Result<Mps> {
    let n = c.n_qubits();
    let mut tensors: Vec<Tensor> = Mps::zero_state(n)
        .tensors()
        .to_vec();
    for (top, params) in c.gates() {
        let u = gate_matrix(&params);
        apply_gate_exact(&mut tensors, top, &u)?;
    }
    Mps::new(tensors)
}

/// Applies a two-qubit gate on sites (k, k+1) exactly, splitting back with
/// an untruncated SVD (numerically-zero singular values are dropped).
fn apply_gate_exact(tensors: &mut [Tensor], k: usize, u: &[Complex64; 16]) -> Result<()> {
    let left = tensors[k].shape()[0];
    let right = tensors[k + 1].shape()[2];
    // Θ[l, j1, j2, r]
    let theta = contract(&tensors[k], &tensors[k + 1], &[(2, 0)])?;
    let gate = Tensor::new(vec![2, 2, 2, 2], u.to_vec())?;
    // Θ'[o1, o2, l, r] = Σ G[o1,o2,j1,j2] Θ[l,j1,j2,r]
    let applied = contract(&gate, &theta, &[(2, 1), (3, 2)])?;
    let merged = applied.permute(&[2, 0, 1, 3])?.reshape(vec![left * 2, 2 * right])?;
    let (uu, s, vh) = svd(&merged)?;
    let zero_tol = s.first().copied().unwrap_or(0.0) * RELATIVE_ZERO;
    let keep = s.iter().filter(|&&x| x > zero_tol).count().max(1);

    let u_cols = uu.shape()[1];
    let mut site_left = Tensor::zeros(vec![left, 2, keep]);
    for row in 0..left * 2 {
        for col in 0..keep {
            site_left.data_mut()[row * keep + col] = uu.data()[row * u_cols + col];
        }
    }
    let mut site_right = Tensor::zeros(vec![keep, 2, right]);
    for row in 0..keep {
        for col in 0..2 * right {
            site_right.data_mut()[row * 2 * right + col] = vh.data()[row * 2 * right + col] * s[row];
        }
    }
    tensors[k] = site_left;
    tensors[k + 1] = site_right;
    Ok(())
}

/// Constructively maps a χ ≤ 2 right-canonical MPS to a single-layer
/// two-qubit sequential circuit: the two staircase gates sharing the final
/// window are merged and every window unitary is converted back to gate
/// angles.
pub fn mps_to_single_layer_circuit(m: &Mps, role: CircuitRole) -> Result<SequentialCircuit> {
    let n = m.site_count();
    if n < 2 {
        return Err(Error::Shape("need at least two sites".into()));
    }
    if m.max_bond() > 2 {
        return Err(Error::Domain(format!(
            "single-layer mapping needs χ ≤ 2, got {}",
            m.max_bond()
        )));
    }
    let gates = mps_to_staircase_embedded(m, 2)?;
    debug_assert_eq!(gates.len(), n);
    // Merge the last two gates, which share the window (n-2, n-1).
    let mut windows: Vec<[Complex64; 16]> = Vec::with_capacity(n - 1);
    for g in &gates[..n - 1] {
        let mut arr = [Complex64::new(0.0, 0.0); 16];
        arr.copy_from_slice(g.matrix.data());
        windows.push(arr);
    }
    let last = {
        let tail = &gates[n - 1];
        let prev = windows.pop().expect("n >= 2");
        let mut merged = [Complex64::new(0.0, 0.0); 16];
        for r in 0..4 {
            for c in 0..4 {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..4 {
                    acc += tail.matrix.data()[r * 4 + k] * prev[k * 4 + c];
                }
                merged[r * 4 + c] = acc;
            }
        }
        merged
    };
    windows.push(last);

    let mut circuit = SequentialCircuit::identity(n, 1, role, false)?;
    let mut flat = Vec::with_capacity(circuit.param_count());
    for w in &windows {
        let params = params_from_unitary(w)?;
        flat.extend_from_slice(&params.theta);
    }
    circuit.set_params_flat(&flat)?;
    Ok(circuit)
}
