//! Dataset ingestion and image transforms: IDX parsing, bilinear resizing,
//! snake-order flattening, patch splitting/joining, and PGM rendering.

mod idx;
pub mod synthetic;

pub use idx::{parse_idx, serialize_idx, IdxArray, IdxKind};

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Grayscale image with pixel values in `[0, 1]`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width * height != pixels.len() {
            return Err(Error::Shape(format!(
                "{}x{} image needs {} pixels, got {}",
                width,
                height,
                width * height,
                pixels.len()
            )));
        }
        if let Some(p) = pixels.iter().find(|p| !(0.0..=1.0).contains(*p) || p.is_nan()) {
            return Err(Error::Domain(format!("pixel value {p} outside [0, 1]")));
        }
        Ok(Image {
            width,
            height,
            pixels,
        })
    }

    /// Builds an image from raw bytes, normalizing by 255 exactly.
    pub fn from_bytes(width: usize, height: usize, bytes: &[u8]) -> Result<Self> {
        let pixels = bytes.iter().map(|&b| f64::from(b) / 255.0).collect();
        Image::new(width, height, pixels)
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Result<Self> {
        Image::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn pixel(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }
}

/// Division of an image into a grid of equally sized patches.
///
/// "R x C patches" means R patch-rows by C patch-columns; each patch is
/// `height/R` by `width/C` pixels. Patches are enumerated row-major over the
/// grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PatchLayout {
    pub rows: usize,
    pub cols: usize,
    pub patch_width: usize,
    pub patch_height: usize,
}

impl PatchLayout {
    /// Layout of `rows x cols` patches for an image of the given size.
    pub fn for_image(width: usize, height: usize, rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Layout("patch grid extents must be >= 1".into()));
        }
        if height % rows != 0 || width % cols != 0 {
            return Err(Error::Layout(format!(
                "{rows}x{cols} patch grid does not divide a {width}x{height} image"
            )));
        }
        Ok(PatchLayout {
            rows,
            cols,
            patch_width: width / cols,
            patch_height: height / rows,
        })
    }

    /// Number of patches N_p.
    pub fn patch_count(&self) -> usize {
        self.rows * self.cols
    }

    /// Pixels per patch.
    pub fn patch_pixels(&self) -> usize {
        self.patch_width * self.patch_height
    }
}

/// A labelled image collection.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub images: Vec<Image>,
    pub labels: Vec<usize>,
    pub label_count: usize,
}

impl Dataset {
    pub fn new(images: Vec<Image>, labels: Vec<usize>, label_count: usize) -> Result<Self> {
        if images.len() != labels.len() {
            return Err(Error::Length(format!(
                "{} images vs {} labels",
                images.len(),
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= label_count) {
            return Err(Error::Domain(format!(
                "label {bad} out of range for {label_count} classes"
            )));
        }
        Ok(Dataset {
            images,
            labels,
            label_count,
        })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// Keeps only images whose label is below `classes` (relabelling is not
    /// needed since retained ids already lie in `[0, classes)`), then
    /// truncates to at most `limit` images.
    pub fn restrict(&self, classes: usize, limit: usize) -> Result<Dataset> {
        let mut images = Vec::new();
        let mut labels = Vec::new();
        for (img, &label) in self.images.iter().zip(&self.labels) {
            if label < classes {
                images.push(img.clone());
                labels.push(label);
                if images.len() == limit {
                    break;
                }
            }
        }
        Dataset::new(images, labels, classes)
    }

    /// Resizes every image in place.
    pub fn resize(&self, width: usize, height: usize) -> Result<Dataset> {
        let images = self
            .images
            .iter()
            .map(|img| resize_bilinear(img, width, height))
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(images, self.labels.clone(), self.label_count)
    }
}

/// Bilinear resampling with half-pixel-center alignment and no antialiasing
/// filter. Source coordinate for output index i is `(i + 0.5)·scale − 0.5`,
/// clamped to the source extent.
pub fn resize_bilinear(img: &Image, new_width: usize, new_height: usize) -> Result<Image> {
    if new_width == 0 || new_height == 0 {
        return Err(Error::Shape("target extents must be >= 1".into()));
    }
    let sx = img.width as f64 / new_width as f64;
    let sy = img.height as f64 / new_height as f64;
    let mut pixels = Vec::with_capacity(new_width * new_height);
    for oy in 0..new_height {
        let fy = ((oy as f64 + 0.5) * sy - 0.5).clamp(0.0, (img.height - 1) as f64);
        let y0 = fy.floor() as usize;
        let y1 = (y0 + 1).min(img.height - 1);
        let wy = fy - y0 as f64;
        for ox in 0..new_width {
            let fx = ((ox as f64 + 0.5) * sx - 0.5).clamp(0.0, (img.width - 1) as f64);
            let x0 = fx.floor() as usize;
            let x1 = (x0 + 1).min(img.width - 1);
            let wx = fx - x0 as f64;
            let top = img.pixel(x0, y0) * (1.0 - wx) + img.pixel(x1, y0) * wx;
            let bottom = img.pixel(x0, y1) * (1.0 - wx) + img.pixel(x1, y1) * wx;
            pixels.push((top * (1.0 - wy) + bottom * wy).clamp(0.0, 1.0));
        }
    }
    Image::new(new_width, new_height, pixels)
}

/// Flattens an image row by row, alternating direction: row 0 left-to-right,
/// row 1 right-to-left, and so on.
pub fn snake_flatten(img: &Image) -> Vec<f64> {
    let mut out = Vec::with_capacity(img.pixels.len());
    for y in 0..img.height {
        if y % 2 == 0 {
            out.extend((0..img.width).map(|x| img.pixel(x, y)));
        } else {
            out.extend((0..img.width).rev().map(|x| img.pixel(x, y)));
        }
    }
    out
}

/// Inverse of [`snake_flatten`].
pub fn snake_unflatten(values: &[f64], width: usize, height: usize) -> Result<Image> {
    if values.len() != width * height {
        return Err(Error::Shape(format!(
            "{} values cannot fill a {width}x{height} image",
            values.len()
        )));
    }
    let mut pixels = vec![0.0; values.len()];
    let mut it = values.iter();
    for y in 0..height {
        if y % 2 == 0 {
            for x in 0..width {
                pixels[y * width + x] = *it.next().unwrap();
            }
        } else {
            for x in (0..width).rev() {
                pixels[y * width + x] = *it.next().unwrap();
            }
        }
    }
    Image::new(width, height, pixels)
}

/// Splits an image into contiguous sub-rectangles, row-major over the patch
/// grid.
pub fn split_patches(img: &Image, layout: &PatchLayout) -> Result<Vec<Image>> {
    if layout.rows * layout.patch_height != img.height
        || layout.cols * layout.patch_width != img.width
    {
        return Err(Error::Layout(format!(
            "layout {}x{} patches of {}x{} does not tile a {}x{} image",
            layout.rows, layout.cols, layout.patch_width, layout.patch_height, img.width, img.height
        )));
    }
    let mut patches = Vec::with_capacity(layout.patch_count());
    for pr in 0..layout.rows {
        for pc in 0..layout.cols {
            let mut pixels = Vec::with_capacity(layout.patch_pixels());
            for dy in 0..layout.patch_height {
                let y = pr * layout.patch_height + dy;
                let x0 = pc * layout.patch_width;
                pixels.extend_from_slice(&img.pixels[y * img.width + x0..y * img.width + x0 + layout.patch_width]);
            }
            patches.push(Image::new(layout.patch_width, layout.patch_height, pixels)?);
        }
    }
    Ok(patches)
}

/// Reassembles patches produced by [`split_patches`].
pub fn join_patches(patches: &[Image], layout: &PatchLayout) -> Result<Image> {
    if patches.len() != layout.patch_count() {
        return Err(Error::Layout(format!(
            "expected {} patches, got {}",
            layout.patch_count(),
            patches.len()
        )));
    }
    let width = layout.cols * layout.patch_width;
    let height = layout.rows * layout.patch_height;
    let mut pixels = vec![0.0; width * height];
    for (i, patch) in patches.iter().enumerate() {
        let pr = i / layout.cols;
        let pc = i % layout.cols;
        for dy in 0..layout.patch_height {
            let y = pr * layout.patch_height + dy;
            let x0 = pc * layout.patch_width;
            pixels[y * width + x0..y * width + x0 + layout.patch_width]
                .copy_from_slice(&patch.pixels[dy * layout.patch_width..(dy + 1) * layout.patch_width]);
        }
    }
    Image::new(width, height, pixels)
}

/// Writes a binary PGM (P5, maxval 255); pixel byte = round(255 · p).
pub fn write_pgm(img: &Image, path: &Path) -> Result<()> {
    let mut buf = Vec::with_capacity(img.pixels.len() + 32);
    write!(buf, "P5\n{} {}\n255\n", img.width, img.height)
        .map_err(|e| Error::io(path, e))?;
    buf.extend(img.pixels.iter().map(|&p| (255.0 * p).round() as u8));
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Reads back a binary PGM written by [`write_pgm`].
pub fn read_pgm(path: &Path) -> Result<Image> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let header_err = || Error::Format(format!("{}: not a P5 PGM", path.display()));
    let mut fields = Vec::new();
    let mut pos = 0usize;
    // P5, width, height, maxval, then a single whitespace byte before payload.
    while fields.len() < 4 && pos < bytes.len() {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        fields.push(&bytes[start..pos]);
    }
    if fields.len() != 4 || fields[0] != b"P5" {
        return Err(header_err());
    }
    let parse = |f: &[u8]| -> Result<usize> {
        std::str::from_utf8(f)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(header_err)
    };
    let width = parse(fields[1])?;
    let height = parse(fields[2])?;
    let maxval = parse(fields[3])?;
    if maxval != 255 {
        return Err(Error::Format(format!(
            "{}: unsupported maxval {maxval}",
            path.display()
        )));
    }
    pos += 1; // single whitespace after maxval
    let payload = &bytes[pos..];
    if payload.len() != width * height {
        return Err(Error::Length(format!(
            "{}: payload has {} bytes, expected {}",
            path.display(),
            payload.len(),
            width * height
        )));
    }
    Image::from_bytes(width, height, payload)
}

/// Standard file names of the Fashion-MNIST archives, with the optional
/// gzip suffix tried first.
pub fn load_dataset_split(data_dir: &Path, train: bool) -> Result<Dataset> {
    let (img_name, lbl_name) = if train {
        ("train-images-idx3-ubyte", "train-labels-idx1-ubyte")
    } else {
        ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte")
    };
    let images = idx::read_idx_file(data_dir, img_name, IdxKind::Images)?;
    let labels = idx::read_idx_file(data_dir, lbl_name, IdxKind::Labels)?;
    dataset_from_idx(&images, &labels, 10)
}

/// Builds a [`Dataset`] from parsed IDX arrays.
pub fn dataset_from_idx(images: &IdxArray, labels: &IdxArray, label_count: usize) -> Result<Dataset> {
    if images.dims.len() != 3 {
        return Err(Error::Format(format!(
            "image array has {} dimensions, expected 3",
            images.dims.len()
        )));
    }
    let (n, h, w) = (images.dims[0], images.dims[1], images.dims[2]);
    if labels.dims != vec![n] {
        return Err(Error::Length(format!(
            "label count {:?} does not match {} images",
            labels.dims, n
        )));
    }
    let imgs = (0..n)
        .map(|i| Image::from_bytes(w, h, &images.data[i * w * h..(i + 1) * w * h]))
        .collect::<Result<Vec<_>>>()?;
    let lbls: Vec<usize> = labels.data.iter().map(|&b| b as usize).collect();
    Dataset::new(imgs, lbls, label_count)
}
