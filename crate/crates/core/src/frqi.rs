//! FRQI encoding of pixel vectors into statevectors, decoding back to
//! pixels, and qubit-budget accounting under patching.
//!
//! A vector of N pixels (N a power of two) maps to log2(N) address qubits
//! plus one color qubit. Address bits are the binary representation of the
//! pixel position, most-significant first; the color qubit is the final
//! (least-significant) qubit. The amplitude on basis state (x, c) is
//! cos(pi p_x / 2)/sqrt(N) for c = 0 and sin(pi p_x / 2)/sqrt(N) for c = 1.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::imaging::{snake_flatten, split_patches, Image, PatchLayout};

/// Dense complex amplitude vector over `n_qubits`.
#[derive(Clone, Debug, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl Statevector {
    /// Wraps an amplitude vector, requiring unit norm to 1e-12.
    pub fn new(n_qubits: usize, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != 1usize << n_qubits {
            return Err(Error::Shape(format!(
                "{} qubits need {} amplitudes, got {}",
                n_qubits,
                1usize << n_qubits,
                amps.len()
            )));
        }
        let norm_sq: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sq - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!(
                "statevector norm^2 = {norm_sq}, expected 1 within 1e-12"
            )));
        }
        Ok(Statevector { n_qubits, amps })
    }

    /// Wraps and rescales an amplitude vector to unit norm.
    pub fn normalized(n_qubits: usize, mut amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != 1usize << n_qubits {
            return Err(Error::Shape(format!(
                "{} qubits need {} amplitudes, got {}",
                n_qubits,
                1usize << n_qubits,
                amps.len()
            )));
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Domain("cannot normalize the zero vector".into()));
        }
        for a in &mut amps {
            *a /= norm;
        }
        Ok(Statevector { n_qubits, amps })
    }

    /// Length-checked constructor without the norm check; reconstruction
    /// paths use it for states that may carry compression-induced norm
    /// drift.
    pub(crate) fn raw(n_qubits: usize, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != 1usize << n_qubits {
            return Err(Error::Shape(format!(
                "{} qubits need {} amplitudes, got {}",
                n_qubits,
                1usize << n_qubits,
                amps.len()
            )));
        }
        Ok(Statevector { n_qubits, amps })
    }

    /// The all-zeros computational basis state.
    pub fn zero_state(n_qubits: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Statevector { n_qubits, amps }
    }

    /// A single computational basis state.
    pub fn basis_state(n_qubits: usize, index: usize) -> Result<Self> {
        if index >= 1 << n_qubits {
            return Err(Error::Index(format!(
                "basis index {index} out of range for {n_qubits} qubits"
            )));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(Statevector { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amps_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amps(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Inner product ⟨self|other⟩.
    pub fn inner(&self, other: &Statevector) -> Result<Complex64> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::Dimension(format!(
                "qubit counts differ: {} vs {}",
                self.n_qubits, other.n_qubits
            )));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Squared overlap |⟨self|other⟩|².
    pub fn fidelity(&self, other: &Statevector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }
}

/// Qubit cost of encoding N pixels split into N_p patches.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QubitBudget {
    pub address_qubits_per_patch: usize,
    pub color_qubits_per_patch: usize,
    pub patches: usize,
    pub total_qubits: usize,
}

/// Evaluates (ceil(log2(N / N_p)) + 1) · N_p.
pub fn qubit_budget(pixel_count: usize, patch_count: usize) -> Result<QubitBudget> {
    if patch_count == 0 || pixel_count == 0 {
        return Err(Error::Layout("pixel and patch counts must be >= 1".into()));
    }
    if pixel_count % patch_count != 0 {
        return Err(Error::Layout(format!(
            "{patch_count} patches do not divide {pixel_count} pixels"
        )));
    }
    let per_patch = pixel_count / patch_count;
    let address = ceil_log2(per_patch);
    Ok(QubitBudget {
        address_qubits_per_patch: address,
        color_qubits_per_patch: 1,
        patches: patch_count,
        total_qubits: (address + 1) * patch_count,
    })
}

fn ceil_log2(n: usize) -> usize {
    let mut bits = 0;
    while (1usize << bits) < n {
        bits += 1;
    }
    bits
}

/// Encodes a pixel vector of power-of-two length N into an (log2 N + 1)-qubit
/// state.
pub fn encode_frqi(pixels: &[f64]) -> Result<Statevector> {
    let n = pixels.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::Shape(format!(
            "pixel count {n} is not a power of two; pad or patch first"
        )));
    }
    if let Some(p) = pixels.iter().find(|p| !(0.0..=1.0).contains(*p) || p.is_nan()) {
        return Err(Error::Domain(format!("pixel value {p} outside [0, 1]")));
    }
    let address_qubits = n.trailing_zeros() as usize;
    let inv_sqrt_n = 1.0 / (n as f64).sqrt();
    let mut amps = Vec::with_capacity(2 * n);
    for &p in pixels {
        let angle = FRAC_PI_2 * p;
        amps.push(Complex64::new(inv_sqrt_n * angle.cos(), 0.0));
        amps.push(Complex64::new(inv_sqrt_n * angle.sin(), 0.0));
    }
    Ok(Statevector {
        n_qubits: address_qubits + 1,
        amps,
    })
}

/// Recovers pixel values from any normalized state on address+color qubits:
/// p_x = (2/pi) · atan2(|a_{x,1}|, |a_{x,0}|). Exact inverse of
/// [`encode_frqi`] on exact FRQI states; if both amplitudes vanish for some
/// address the pixel decodes to 0.
pub fn decode_frqi(state: &Statevector) -> Result<Vec<f64>> {
    if state.n_qubits() < 1 {
        return Err(Error::Shape("decode needs at least the color qubit".into()));
    }
    let n = state.amps.len() / 2;
    let mut pixels = Vec::with_capacity(n);
    for x in 0..n {
        let a0 = state.amps[2 * x].norm();
        let a1 = state.amps[2 * x + 1].norm();
        if a0 == 0.0 && a1 == 0.0 {
            pixels.push(0.0);
        } else {
            pixels.push((2.0 / PI) * a1.atan2(a0));
        }
    }
    Ok(pixels)
}

/// Encodes each patch of an image independently; patches are enumerated
/// row-major over the grid and pixels within a patch in snake order.
pub fn encode_patched(img: &Image, layout: &PatchLayout) -> Result<Vec<Statevector>> {
    split_patches(img, layout)?
        .iter()
        .map(|patch| encode_frqi(&snake_flatten(patch)))
        .collect()
}

/// Decodes per-patch statevectors back to snake-ordered pixel vectors.
pub fn decode_patched(states: &[Statevector]) -> Result<Vec<Vec<f64>>> {
    states.iter().map(decode_frqi).collect()
}
