//! Compression of a statevector into a shallow sequential circuit by
//! maximizing |⟨target|circuit|0...0⟩|² over the gate angles with Adam.
//!
//! The default initialization peels the target layer by layer: each peel
//! truncates the residual to χ = 2, maps it constructively to a single
//! staircase layer, and un-applies that layer. A small seeded jitter on top
//! differentiates optimization replicas.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::circuit_map::mps_to_single_layer_circuit;
use crate::error::{Error, Result};
use crate::frqi::Statevector;
use crate::learn::adam::AdamState;
use crate::mps::from_statevector;
use crate::seq_circuit::{
    apply_circuit, apply_window, fidelity_cotangent, gate_matrix, param_gradients, CircuitRole,
    SequentialCircuit,
};

/// How the angles are initialized before optimization.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CompressInit {
    /// Constructive layer peeling plus a seeded jitter in [-0.01, 0.01].
    WarmStart,
    /// Angles drawn uniformly from [-0.01, 0.01].
    Random,
}

/// Options for [`compress_image_circuit`].
#[derive(Clone, Copy, Debug)]
pub struct CompressOptions {
    pub layers: usize,
    pub iterations: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub init: CompressInit,
}

impl CompressOptions {
    pub fn new(layers: usize, iterations: usize, learning_rate: f64, seed: u64) -> Self {
        CompressOptions {
            layers,
            iterations,
            learning_rate,
            seed,
            init: CompressInit::WarmStart,
        }
    }
}

/// Un-applies a circuit: daggered gates in reverse order.
fn apply_circuit_inverse(c: &SequentialCircuit, state: &Statevector) -> Result<Statevector> {
    let n = c.n_qubits();
    let mut amps = state.amps().to_vec();
    for (top, params) in c.gates().into_iter().rev() {
        let u = gate_matrix(&params);
        let mut ud = [num_complex::Complex64::new(0.0, 0.0); 16];
        for r in 0..4 {
            for cc in 0..4 {
                ud[cc * 4 + r] = u[r * 4 + cc].conj();
            }
        }
        apply_window(&mut amps, n, top, 2, &ud);
    }
    Statevector::new(n, amps)
}

/// Constructive warm start: peel `layers` staircase layers off the target.
fn peel_layers(target: &Statevector, layers: usize) -> Result<Vec<SequentialCircuit>> {
    let mut residual = target.clone();
    let mut peeled = Vec::with_capacity(layers);
    for _ in 0..layers {
        let trunc = from_statevector(&residual, 2)?;
        let layer = mps_to_single_layer_circuit(&trunc.mps, CircuitRole::ImageEncoder)?;
        residual = apply_circuit_inverse(&layer, &residual)?;
        peeled.push(layer);
    }
    Ok(peeled)
}

/// Optimizes an `opts.layers`-layer circuit so its output state has maximal
/// fidelity with `target`; returns the best-seen parameters and fidelity.
pub fn compress_image_circuit(
    target: &Statevector,
    opts: &CompressOptions,
) -> Result<(SequentialCircuit, f64)> {
    let n = target.n_qubits();
    if n < 2 {
        return Err(Error::Shape(
            "circuit compression needs at least two qubits".into(),
        ));
    }
    let norm = target.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::Domain(format!(
            "target must be normalized (norm {norm})"
        )));
    }
    let mut circuit =
        SequentialCircuit::identity(n, opts.layers, CircuitRole::ImageEncoder, false)?;
    let zero = Statevector::zero_state(n);
    let fidelity_of = |c: &SequentialCircuit| -> Result<f64> {
        target.fidelity(&apply_circuit(c, &zero)?)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut flat = vec![0.0f64; circuit.param_count()];
    let mut best_fidelity = -1.0f64;
    let mut best_flat = flat.clone();
    match opts.init {
        CompressInit::WarmStart => {
            let peeled = peel_layers(target, opts.layers)?;
            // The last peeled layer acts first on |0...0⟩.
            let mut pos = 0;
            for layer in peeled.iter().rev() {
                let angles = layer.params_flat();
                flat[pos..pos + angles.len()].copy_from_slice(&angles);
                pos += angles.len();
            }
            // The un-jittered constructive solution is itself a candidate.
            circuit.set_params_flat(&flat)?;
            best_fidelity = fidelity_of(&circuit)?;
            best_flat.copy_from_slice(&flat);
            for v in &mut flat {
                *v += rng.gen_range(-0.01..0.01);
            }
        }
        CompressInit::Random => {
            for v in &mut flat {
                *v = rng.gen_range(-0.01..0.01);
            }
        }
    }
    circuit.set_params_flat(&flat)?;
    let init_fidelity = fidelity_of(&circuit)?;
    if init_fidelity > best_fidelity {
        best_fidelity = init_fidelity;
        best_flat.copy_from_slice(&flat);
    }
    let mut adam = AdamState::new(flat.len());
    for _ in 0..opts.iterations {
        let output = apply_circuit(&circuit, &zero)?;
        let cot = fidelity_cotangent(target, &output)?;
        let mut grads = param_gradients(&circuit, &zero, &cot)?;
        // Maximize fidelity = minimize its negation.
        for g in &mut grads {
            *g = -*g;
        }
        adam.step(&mut flat, &grads, opts.learning_rate)?;
        circuit.set_params_flat(&flat)?;
        let f = target.fidelity(&output)?;
        if f > best_fidelity {
            best_fidelity = f;
            best_flat.copy_from_slice(&flat);
        }
    }
    // The loop scores the pre-step state; check the final parameters too.
    let final_fidelity = fidelity_of(&circuit)?;
    if final_fidelity > best_fidelity {
        best_fidelity = final_fidelity;
        best_flat.copy_from_slice(&flat);
    }
    circuit.set_params_flat(&best_flat)?;
    Ok((circuit, best_fidelity))
}
