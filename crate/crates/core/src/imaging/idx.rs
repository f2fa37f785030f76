//! IDX (ubyte) file parsing, with transparent gzip decompression.

use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;

use crate::error::{Error, Result};

const MAGIC_IMAGES: u32 = 0x0000_0803;
const MAGIC_LABELS: u32 = 0x0000_0801;
const GZIP_PREFIX: [u8; 2] = [0x1f, 0x8b];

/// Which IDX payload is expected.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IdxKind {
    /// 3-dimensional ubyte array (count, rows, cols); magic 0x00000803.
    Images,
    /// 1-dimensional ubyte array; magic 0x00000801.
    Labels,
}

impl IdxKind {
    fn magic(self) -> u32 {
        match self {
            IdxKind::Images => MAGIC_IMAGES,
            IdxKind::Labels => MAGIC_LABELS,
        }
    }

    fn ndims(self) -> usize {
        match self {
            IdxKind::Images => 3,
            IdxKind::Labels => 1,
        }
    }
}

/// Raw unsigned-byte array with the extents decoded from an IDX header.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdxArray {
    pub dims: Vec<usize>,
    pub data: Vec<u8>,
}

/// Parses an IDX byte stream, auto-detecting gzip compression by its
/// 0x1f 0x8b prefix.
pub fn parse_idx(bytes: &[u8], kind: IdxKind) -> Result<IdxArray> {
    let plain;
    let bytes = if bytes.len() >= 2 && bytes[..2] == GZIP_PREFIX {
        let mut decoder = GzDecoder::new(bytes);
        let mut out = Vec::new();
        decoder
            .read_to_end(&mut out)
            .map_err(|e| Error::Format(format!("gzip decode failed: {e}")))?;
        plain = out;
        &plain[..]
    } else {
        bytes
    };

    if bytes.len() < 4 {
        return Err(Error::Length("IDX stream shorter than its magic".into()));
    }
    let magic = u32::from_be_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]);
    if magic != kind.magic() {
        return Err(Error::Format(format!(
            "bad IDX magic {magic:#010x}, expected {:#010x}",
            kind.magic()
        )));
    }
    let ndims = kind.ndims();
    let header_len = 4 + 4 * ndims;
    if bytes.len() < header_len {
        return Err(Error::Length(format!(
            "IDX header truncated: {} bytes, need {header_len}",
            bytes.len()
        )));
    }
    let mut dims = Vec::with_capacity(ndims);
    for d in 0..ndims {
        let off = 4 + 4 * d;
        dims.push(u32::from_be_bytes([
            bytes[off],
            bytes[off + 1],
            bytes[off + 2],
            bytes[off + 3],
        ]) as usize);
    }
    let expected: usize = dims.iter().product();
    let payload = &bytes[header_len..];
    if payload.len() != expected {
        return Err(Error::Length(format!(
            "IDX payload has {} bytes, header {:?} implies {expected}",
            payload.len(),
            dims
        )));
    }
    Ok(IdxArray {
        dims,
        data: payload.to_vec(),
    })
}

/// Serializes an array back to IDX bytes (uncompressed).
pub fn serialize_idx(array: &IdxArray, kind: IdxKind) -> Result<Vec<u8>> {
    if array.dims.len() != kind.ndims() {
        return Err(Error::Shape(format!(
            "{:?} arrays need {} dims, got {:?}",
            kind,
            kind.ndims(),
            array.dims
        )));
    }
    let expected: usize = array.dims.iter().product();
    if expected != array.data.len() {
        return Err(Error::Length(format!(
            "dims {:?} imply {expected} bytes, got {}",
            array.dims,
            array.data.len()
        )));
    }
    let mut out = Vec::with_capacity(4 + 4 * array.dims.len() + array.data.len());
    out.extend_from_slice(&kind.magic().to_be_bytes());
    for &d in &array.dims {
        out.extend_from_slice(&(d as u32).to_be_bytes());
    }
    out.extend_from_slice(&array.data);
    Ok(out)
}

/// Reads `name` (or `name.gz`) from `dir` and parses it.
pub fn read_idx_file(dir: &Path, name: &str, kind: IdxKind) -> Result<IdxArray> {
    let plain = dir.join(name);
    let gz = dir.join(format!("{name}.gz"));
    let path = if plain.exists() {
        plain
    } else if gz.exists() {
        gz
    } else {
        return Err(Error::io(
            plain,
            std::io::Error::new(std::io::ErrorKind::NotFound, "dataset file not found"),
        ));
    };
    let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
    parse_idx(&bytes, kind)
}

#[cfg(test)]
mod tests {
    use super::*;
    use flate2::write::GzEncoder;
    use flate2::Compression;
    use std::io::Write;

    fn two_image_blob() -> IdxArray {
        IdxArray {
            dims: vec![2, 2, 2],
            data: vec![0, 63, 127, 255, 10, 20, 30, 40],
        }
    }

    #[test]
    fn constructed_fixture_roundtrips_exactly() {
        let blob = two_image_blob();
        let bytes = serialize_idx(&blob, IdxKind::Images).unwrap();
        let parsed = parse_idx(&bytes, IdxKind::Images).unwrap();
        assert_eq!(parsed, blob);
    }

    #[test]
    fn gzip_stream_is_autodetected() {
        let blob = two_image_blob();
        let bytes = serialize_idx(&blob, IdxKind::Images).unwrap();
        let mut encoder = GzEncoder::new(Vec::new(), Compression::default());
        encoder.write_all(&bytes).unwrap();
        let gz = encoder.finish().unwrap();
        assert_eq!(&gz[..2], &GZIP_PREFIX);
        let parsed = parse_idx(&gz, IdxKind::Images).unwrap();
        assert_eq!(parsed, blob);
    }

    #[test]
    fn bad_magic_is_a_format_error() {
        let blob = IdxArray {
            dims: vec![2],
            data: vec![1, 2],
        };
        let bytes = serialize_idx(&blob, IdxKind::Labels).unwrap();
        assert!(matches!(
            parse_idx(&bytes, IdxKind::Images),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn truncated_stream_is_a_length_error() {
        let blob = two_image_blob();
        let mut bytes = serialize_idx(&blob, IdxKind::Images).unwrap();
        bytes.truncate(bytes.len() - 3);
        assert!(matches!(
            parse_idx(&bytes, IdxKind::Images),
            Err(Error::Length(_))
        ));
    }

    #[test]
    fn label_out_of_range_fails_dataset_validation() {
        let images = IdxArray {
            dims: vec![1, 2, 2],
            data: vec![0; 4],
        };
        let labels = IdxArray {
            dims: vec![1],
            data: vec![10],
        };
        let err = crate::imaging::dataset_from_idx(&images, &labels, 10);
        assert!(matches!(err, Err(Error::Domain(_))));
    }

    #[test]
    fn official_train_file_parses_when_present() {
        // Cross-checks the published format against the real archive when a
        // data directory is available; silently skipped otherwise.
        let Ok(dir) = std::env::var("QPIX_DATA_DIR") else {
            return;
        };
        let Ok(arr) = read_idx_file(Path::new(&dir), "train-images-idx3-ubyte", IdxKind::Images)
        else {
            return;
        };
        assert_eq!(arr.dims, vec![60000, 28, 28]);
        assert_eq!(arr.data.len(), 60000 * 28 * 28);
    }
}
