//! Compressed-image file format "QPIX-MPS v1".
//!
//! Layout: 4-byte magic `QPXM`, u32 LE version, u64 LE header length, a UTF-8
//! JSON header (site counts, per-site shape table, patch layout, bond cap,
//! provenance metadata), then the site tensors as little-endian complex128
//! payloads in listed order.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Mps, PatchMps};
use crate::error::{Error, Result};
use crate::imaging::PatchLayout;
use crate::tensors::Tensor;

const MAGIC: &[u8; 4] = b"QPXM";
const VERSION: u32 = 1;

/// A compressed image: one truncated chain per patch plus enough metadata to
/// decode and retrace it.
#[derive(Clone, Debug)]
pub struct CompressedImage {
    pub width: usize,
    pub height: usize,
    pub layout: PatchLayout,
    pub chi: usize,
    pub label: Option<usize>,
    pub patches: Vec<PatchMps>,
    pub metadata: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    version: u32,
    width: usize,
    height: usize,
    patch_rows: usize,
    patch_cols: usize,
    patch_width: usize,
    patch_height: usize,
    chi: usize,
    label: Option<usize>,
    truncation_errors: Vec<f64>,
    /// Shape table: per patch, per site, the (left, phys, right) extents.
    sites: Vec<Vec<[usize; 3]>>,
    metadata: BTreeMap<String, String>,
}

/// Writes the QPIX-MPS v1 encoding of `image` to `path`.
pub fn write_qpxm(image: &CompressedImage, path: &Path) -> Result<()> {
    let header = Header {
        version: VERSION,
        width: image.width,
        height: image.height,
        patch_rows: image.layout.rows,
        patch_cols: image.layout.cols,
        patch_width: image.layout.patch_width,
        patch_height: image.layout.patch_height,
        chi: image.chi,
        label: image.label,
        truncation_errors: image.patches.iter().map(|p| p.truncation_error).collect(),
        sites: image
            .patches
            .iter()
            .map(|p| {
                p.mps
                    .tensors()
                    .iter()
                    .map(|t| [t.shape()[0], t.shape()[1], t.shape()[2]])
                    .collect()
            })
            .collect(),
        metadata: image.metadata.clone(),
    };
    let header_json = serde_json::to_vec(&header)
        .map_err(|e| Error::Format(format!("header serialization failed: {e}")))?;

    let payload_len: usize = image
        .patches
        .iter()
        .flat_map(|p| p.mps.tensors())
        .map(|t| t.len() * 16)
        .sum();
    let mut out = Vec::with_capacity(16 + header_json.len() + payload_len);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(header_json.len() as u64).to_le_bytes());
    out.extend_from_slice(&header_json);
    for patch in &image.patches {
        for t in patch.mps.tensors() {
            for z in t.data() {
                out.extend_from_slice(&z.re.to_le_bytes());
                out.extend_from_slice(&z.im.to_le_bytes());
            }
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads a QPIX-MPS v1 file.
pub fn read_qpxm(path: &Path) -> Result<CompressedImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 16 || &bytes[..4] != MAGIC {
        return Err(Error::Format(format!(
            "{}: missing QPXM magic",
            path.display()
        )));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(Error::Format(format!(
            "{}: unsupported version {version}",
            path.display()
        )));
    }
    let header_len = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    if bytes.len() < 16 + header_len {
        return Err(Error::Length(format!(
            "{}: header truncated",
            path.display()
        )));
    }
    let header: Header = serde_json::from_slice(&bytes[16..16 + header_len])
        .map_err(|e| Error::Format(format!("{}: bad header: {e}", path.display())))?;

    let layout = PatchLayout {
        rows: header.patch_rows,
        cols: header.patch_cols,
        patch_width: header.patch_width,
        patch_height: header.patch_height,
    };
    if header.truncation_errors.len() != header.sites.len() {
        return Err(Error::Format(format!(
            "{}: {} error entries for {} patches",
            path.display(),
            header.truncation_errors.len(),
            header.sites.len()
        )));
    }

    let mut cursor = 16 + header_len;
    let mut patches = Vec::with_capacity(header.sites.len());
    for (shapes, &err) in header.sites.iter().zip(&header.truncation_errors) {
        let mut tensors = Vec::with_capacity(shapes.len());
        for &[l, d, r] in shapes {
            let count = l * d * r;
            let need = count * 16;
            if bytes.len() < cursor + need {
                return Err(Error::Length(format!(
                    "{}: payload truncated",
                    path.display()
                )));
            }
            let mut data = Vec::with_capacity(count);
            for i in 0..count {
                let off = cursor + i * 16;
                let re = f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
                let im = f64::from_le_bytes(bytes[off + 8..off + 16].try_into().unwrap());
                data.push(Complex64::new(re, im));
            }
            cursor += need;
            tensors.push(Tensor::new(vec![l, d, r], data)?);
        }
        patches.push(PatchMps {
            mps: Mps::new(tensors)?,
            truncation_error: err,
        });
    }
    if cursor != bytes.len() {
        return Err(Error::Length(format!(
            "{}: {} trailing bytes",
            path.display(),
            bytes.len() - cursor
        )));
    }
    Ok(CompressedImage {
        width: header.width,
        height: header.height,
        layout,
        chi: header.chi,
        label: header.label,
        patches,
        metadata: header.metadata,
    })
}
