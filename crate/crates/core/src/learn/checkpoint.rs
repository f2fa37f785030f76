//! Checkpoint format "QPIX-CKPT v1": a length-prefixed UTF-8 JSON manifest
//! (model kind, config, epoch, metrics, blob shape table, endianness tag)
//! followed by little-endian float64/complex128 payload blobs referenced by
//! offset.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learn::classifier_mps::ClassifierMps;
use crate::learn::train::{Checkpoint, EpochMetrics, ModelKind, ModelParams, TrainConfig};
use crate::seq_circuit::{CircuitRole, SequentialCircuit};
use crate::tensors::Tensor;

const FORMAT: &str = "QPIX-CKPT";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct AdamMeta {
    beta1: f64,
    beta2: f64,
    epsilon: f64,
}

#[derive(Serialize, Deserialize)]
struct ModelMeta {
    label_site: Option<usize>,
    label_count: Option<usize>,
    n_qubits: Option<usize>,
    layers: Option<usize>,
    readout_tail: Option<bool>,
}

#[derive(Serialize, Deserialize)]
struct BlobEntry {
    name: String,
    dtype: String, // "c128" | "f64"
    shape: Vec<usize>,
    offset: usize,
    byte_len: usize,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    format: String,
    version: u32,
    model: ModelKind,
    config: TrainConfig,
    epoch: usize,
    metrics: EpochMetrics,
    endianness: String,
    adam: AdamMeta,
    model_meta: ModelMeta,
    blobs: Vec<BlobEntry>,
}

/// Writes a checkpoint to `path`.
pub fn write_checkpoint(ckpt: &Checkpoint, path: &Path) -> Result<()> {
    let mut blobs = Vec::new();
    let mut payload: Vec<u8> = Vec::new();
    let model_meta = match &ckpt.model {
        ModelParams::Mps(clf) => {
            for (k, t) in clf.tensors().iter().enumerate() {
                let offset = payload.len();
                for z in t.data() {
                    payload.extend_from_slice(&z.re.to_le_bytes());
                    payload.extend_from_slice(&z.im.to_le_bytes());
                }
                blobs.push(BlobEntry {
                    name: format!("site_{k}"),
                    dtype: "c128".into(),
                    shape: t.shape().to_vec(),
                    offset,
                    byte_len: t.len() * 16,
                });
            }
            ModelMeta {
                label_site: Some(clf.label_site()),
                label_count: Some(clf.label_count()),
                n_qubits: None,
                layers: None,
                readout_tail: None,
            }
        }
        ModelParams::Circuit(circuit) => {
            let angles = circuit.params_flat();
            let offset = payload.len();
            for a in &angles {
                payload.extend_from_slice(&a.to_le_bytes());
            }
            blobs.push(BlobEntry {
                name: "angles".into(),
                dtype: "f64".into(),
                shape: vec![angles.len()],
                offset,
                byte_len: angles.len() * 8,
            });
            ModelMeta {
                label_site: None,
                label_count: None,
                n_qubits: Some(circuit.n_qubits()),
                layers: Some(circuit.layer_count()),
                readout_tail: Some(circuit.has_tail()),
            }
        }
    };
    let manifest = Manifest {
        format: FORMAT.into(),
        version: VERSION,
        model: ckpt.config.model,
        config: ckpt.config.clone(),
        epoch: ckpt.epoch,
        metrics: ckpt.metrics,
        endianness: "little".into(),
        adam: AdamMeta {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        },
        model_meta,
        blobs,
    };
    let manifest_json =
        serde_json::to_vec(&manifest).map_err(|e| Error::Format(e.to_string()))?;
    let mut out = Vec::with_capacity(8 + manifest_json.len() + payload.len());
    out.extend_from_slice(&(manifest_json.len() as u64).to_le_bytes());
    out.extend_from_slice(&manifest_json);
    out.extend_from_slice(&payload);
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads a checkpoint written by [`write_checkpoint`].
pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 8 {
        return Err(Error::Length(format!(
            "{}: shorter than the manifest length prefix",
            path.display()
        )));
    }
    let manifest_len = u64::from_le_bytes(bytes[..8].try_into().unwrap()) as usize;
    if bytes.len() < 8 + manifest_len {
        return Err(Error::Length(format!(
            "{}: manifest truncated",
            path.display()
        )));
    }
    let manifest: Manifest = serde_json::from_slice(&bytes[8..8 + manifest_len])
        .map_err(|e| Error::Format(format!("{}: bad manifest: {e}", path.display())))?;
    if manifest.format != FORMAT || manifest.version != VERSION {
        return Err(Error::Format(format!(
            "{}: not a {FORMAT} v{VERSION} file",
            path.display()
        )));
    }
    let payload = &bytes[8 + manifest_len..];

    let read_blob = |entry: &BlobEntry| -> Result<&[u8]> {
        payload
            .get(entry.offset..entry.offset + entry.byte_len)
            .ok_or_else(|| {
                Error::Length(format!(
                    "{}: blob {} escapes the payload",
                    path.display(),
                    entry.name
                ))
            })
    };

    let model = match manifest.model {
        ModelKind::Mps => {
            let mut tensors = Vec::with_capacity(manifest.blobs.len());
            for entry in &manifest.blobs {
                if entry.dtype != "c128" {
                    return Err(Error::Format(format!(
                        "blob {} has dtype {}, expected c128",
                        entry.name, entry.dtype
                    )));
                }
                let raw = read_blob(entry)?;
                let mut data = Vec::with_capacity(raw.len() / 16);
                for chunk in raw.chunks_exact(16) {
                    let re = f64::from_le_bytes(chunk[..8].try_into().unwrap());
                    let im = f64::from_le_bytes(chunk[8..].try_into().unwrap());
                    data.push(Complex64::new(re, im));
                }
                tensors.push(Tensor::new(entry.shape.clone(), data)?);
            }
            let label_site = manifest.model_meta.label_site.ok_or_else(|| {
                Error::Format("mps checkpoint missing label_site".into())
            })?;
            let label_count = manifest.model_meta.label_count.ok_or_else(|| {
                Error::Format("mps checkpoint missing label_count".into())
            })?;
            ModelParams::Mps(ClassifierMps::from_tensors(tensors, label_site, label_count)?)
        }
        ModelKind::Circuit => {
            let entry = manifest
                .blobs
                .iter()
                .find(|b| b.name == "angles")
                .ok_or_else(|| Error::Format("circuit checkpoint missing angles blob".into()))?;
            let raw = read_blob(entry)?;
            let angles: Vec<f64> = raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            let n = manifest
                .model_meta
                .n_qubits
                .ok_or_else(|| Error::Format("circuit checkpoint missing n_qubits".into()))?;
            let layers = manifest
                .model_meta
                .layers
                .ok_or_else(|| Error::Format("circuit checkpoint missing layers".into()))?;
            let tail = manifest.model_meta.readout_tail.unwrap_or(false);
            let mut circuit =
                SequentialCircuit::identity(n, layers, CircuitRole::Classifier, tail)?;
            circuit.set_params_flat(&angles)?;
            ModelParams::Circuit(circuit)
        }
    };
    Ok(Checkpoint {
        config: manifest.config,
        epoch: manifest.epoch,
        metrics: manifest.metrics,
        model,
    })
}
