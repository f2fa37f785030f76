//! Deterministic synthetic grayscale dataset.
//!
//! Provides a stand-in image-classification workload with the same file
//! formats and pipeline surface as the real archives: distinct geometric
//! texture classes with per-sample jitter and pixel noise. Used by the
//! `gen-data` CLI command and by desk-scale tests when no dataset directory
//! is available.

use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{serialize_idx, Dataset, IdxArray, IdxKind};
use crate::error::{Error, Result};

/// Parameters of a synthetic draw.
#[derive(Clone, Copy, Debug)]
pub struct SyntheticSpec {
    pub width: usize,
    pub height: usize,
    pub classes: usize,
    pub count: usize,
    pub seed: u64,
}

/// Generates `count` images cycling through the classes deterministically.
pub fn generate(spec: &SyntheticSpec) -> Result<Dataset> {
    if spec.classes == 0 || spec.classes > 10 {
        return Err(Error::Domain(format!(
            "synthetic classes must be in 1..=10, got {}",
            spec.classes
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, 0.03).expect("valid normal");
    let mut images = Vec::with_capacity(spec.count);
    let mut labels = Vec::with_capacity(spec.count);
    for i in 0..spec.count {
        let label = i % spec.classes;
        let canvas = draw_class(label, spec.width, spec.height, &mut rng);
        let bytes: Vec<u8> = canvas
            .iter()
            .map(|&v| {
                let n: f64 = noise.sample(&mut rng);
                ((v + n).clamp(0.0, 1.0) * 255.0).round() as u8
            })
            .collect();
        images.push(super::Image::from_bytes(spec.width, spec.height, &bytes)?);
        labels.push(label);
    }
    Dataset::new(images, labels, spec.classes)
}

/// Train/test pair with decorrelated seeds derived from one base seed.
pub fn generate_splits(
    width: usize,
    height: usize,
    classes: usize,
    train_count: usize,
    test_count: usize,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    let train = generate(&SyntheticSpec {
        width,
        height,
        classes,
        count: train_count,
        seed,
    })?;
    let test = generate(&SyntheticSpec {
        width,
        height,
        classes,
        count: test_count,
        seed: seed ^ 0x9e37_79b9_7f4a_7c15,
    })?;
    Ok((train, test))
}

/// Writes train/test splits under the standard archive file names.
pub fn write_idx_dataset(
    dir: &Path,
    width: usize,
    height: usize,
    classes: usize,
    train_count: usize,
    test_count: usize,
    seed: u64,
) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (count, sub_seed, img_name, lbl_name) in [
        (train_count, seed, "train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
        (test_count, seed ^ 0x9e37_79b9_7f4a_7c15, "t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
    ] {
        let ds = generate(&SyntheticSpec {
            width,
            height,
            classes,
            count,
            seed: sub_seed,
        })?;
        let mut data = Vec::with_capacity(count * width * height);
        for img in &ds.images {
            data.extend(img.pixels().iter().map(|&p| (p * 255.0).round() as u8));
        }
        let images = IdxArray {
            dims: vec![count, height, width],
            data,
        };
        let labels = IdxArray {
            dims: vec![count],
            data: ds.labels.iter().map(|&l| l as u8).collect(),
        };
        let img_path = dir.join(img_name);
        std::fs::write(&img_path, serialize_idx(&images, IdxKind::Images)?)
            .map_err(|e| Error::io(&img_path, e))?;
        let lbl_path = dir.join(lbl_name);
        std::fs::write(&lbl_path, serialize_idx(&labels, IdxKind::Labels)?)
            .map_err(|e| Error::io(&lbl_path, e))?;
    }
    Ok(())
}

fn draw_class(label: usize, width: usize, height: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let w = width as f64;
    let h = height as f64;
    let fg = rng.gen_range(0.65..1.0);
    let bg = rng.gen_range(0.0..0.12);
    let cx = w * rng.gen_range(0.40..0.60);
    let cy = h * rng.gen_range(0.40..0.60);
    let mut pixels = vec![bg; width * height];
    let paint = |pred: &dyn Fn(f64, f64) -> bool, px: &mut Vec<f64>| {
        for y in 0..height {
            for x in 0..width {
                if pred(x as f64 + 0.5, y as f64 + 0.5) {
                    px[y * width + x] = fg;
                }
            }
        }
    };
    match label {
        // Horizontal stripes with random period and phase.
        0 => {
            let period = rng.gen_range(3.0..6.0);
            let phase = rng.gen_range(0.0..period);
            paint(&|_, y| ((y + phase) / period).fract() < 0.5, &mut pixels);
        }
        // Filled ellipse.
        1 => {
            let rx = w * rng.gen_range(0.22..0.34);
            let ry = h * rng.gen_range(0.22..0.34);
            paint(
                &|x, y| {
                    let dx = (x - cx) / rx;
                    let dy = (y - cy) / ry;
                    dx * dx + dy * dy <= 1.0
                },
                &mut pixels,
            );
        }
        // Upright cross.
        2 => {
            let arm = (w.min(h) * rng.gen_range(0.08..0.14)).max(1.0);
            let reach = w.min(h) * rng.gen_range(0.32..0.45);
            paint(
                &|x, y| {
                    ((x - cx).abs() <= arm && (y - cy).abs() <= reach)
                        || ((y - cy).abs() <= arm && (x - cx).abs() <= reach)
                },
                &mut pixels,
            );
        }
        // Vertical stripes.
        3 => {
            let period = rng.gen_range(3.0..6.0);
            let phase = rng.gen_range(0.0..period);
            paint(&|x, _| ((x + phase) / period).fract() < 0.5, &mut pixels);
        }
        // Ring.
        4 => {
            let r_out = w.min(h) * rng.gen_range(0.30..0.42);
            let r_in = r_out * rng.gen_range(0.5..0.7);
            paint(
                &|x, y| {
                    let d = ((x - cx).powi(2) + (y - cy).powi(2)).sqrt();
                    d <= r_out && d >= r_in
                },
                &mut pixels,
            );
        }
        // Rectangular frame.
        5 => {
            let half_w = w * rng.gen_range(0.28..0.40);
            let half_h = h * rng.gen_range(0.28..0.40);
            let thick = (w.min(h) * rng.gen_range(0.08..0.13)).max(1.0);
            paint(
                &|x, y| {
                    let dx = (x - cx).abs();
                    let dy = (y - cy).abs();
                    dx <= half_w && dy <= half_h && (dx >= half_w - thick || dy >= half_h - thick)
                },
                &mut pixels,
            );
        }
        // Diagonal bar.
        6 => {
            let thick = w.min(h) * rng.gen_range(0.10..0.16);
            let slope = rng.gen_range(0.8..1.25);
            paint(
                &|x, y| ((y - cy) - slope * (x - cx)).abs() <= thick,
                &mut pixels,
            );
        }
        // Checkerboard.
        7 => {
            let cell = rng.gen_range(3.0..5.0);
            let phase = rng.gen_range(0.0..cell);
            paint(
                &|x, y| {
                    let ix = ((x + phase) / cell).floor() as i64;
                    let iy = ((y + phase) / cell).floor() as i64;
                    (ix + iy) % 2 == 0
                },
                &mut pixels,
            );
        }
        // Dot grid.
        8 => {
            let pitch = rng.gen_range(5.0..8.0);
            let r = pitch * rng.gen_range(0.25..0.35);
            let phase = rng.gen_range(0.0..pitch);
            paint(
                &|x, y| {
                    let dx = ((x + phase) % pitch) - pitch / 2.0;
                    let dy = ((y + phase) % pitch) - pitch / 2.0;
                    dx * dx + dy * dy <= r * r
                },
                &mut pixels,
            );
        }
        // Bottom-heavy wedge.
        _ => {
            let skew = rng.gen_range(0.5..0.9);
            paint(
                &|x, y| y / h >= 1.0 - skew * x / w,
                &mut pixels,
            );
        }
    }
    pixels
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic_per_seed() {
        let spec = SyntheticSpec {
            width: 16,
            height: 16,
            classes: 3,
            count: 12,
            seed: 77,
        };
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        for (x, y) in a.images.iter().zip(&b.images) {
            assert_eq!(x, y);
        }
        assert_eq!(a.labels, b.labels);
    }

    #[test]
    fn labels_cycle_through_classes() {
        let ds = generate(&SyntheticSpec {
            width: 8,
            height: 8,
            classes: 3,
            count: 7,
            seed: 1,
        })
        .unwrap();
        assert_eq!(ds.labels, vec![0, 1, 2, 0, 1, 2, 0]);
    }

    #[test]
    fn written_files_load_as_a_dataset() {
        let dir = tempfile::tempdir().unwrap();
        write_idx_dataset(dir.path(), 12, 12, 4, 20, 8, 5).unwrap();
        let train = super::super::load_dataset_split(dir.path(), true).unwrap();
        let test = super::super::load_dataset_split(dir.path(), false).unwrap();
        assert_eq!(train.len(), 20);
        assert_eq!(test.len(), 8);
        assert!(train.labels.iter().all(|&l| l < 4));
    }

    #[test]
    fn dataset_survives_idx_roundtrip() {
        let spec = SyntheticSpec {
            width: 10,
            height: 10,
            classes: 2,
            count: 6,
            seed: 9,
        };
        let ds = generate(&spec).unwrap();
        let mut data = Vec::new();
        for img in &ds.images {
            data.extend(img.pixels().iter().map(|&p| (p * 255.0).round() as u8));
        }
        let images = IdxArray {
            dims: vec![6, 10, 10],
            data,
        };
        let labels = IdxArray {
            dims: vec![6],
            data: ds.labels.iter().map(|&l| l as u8).collect(),
        };
        let img_bytes = serialize_idx(&images, IdxKind::Images).unwrap();
        let lbl_bytes = serialize_idx(&labels, IdxKind::Labels).unwrap();
        let back = crate::imaging::dataset_from_idx(
            &crate::imaging::parse_idx(&img_bytes, IdxKind::Images).unwrap(),
            &crate::imaging::parse_idx(&lbl_bytes, IdxKind::Labels).unwrap(),
            2,
        )
        .unwrap();
        for (a, b) in ds.images.iter().zip(&back.images) {
            assert_eq!(a, b);
        }
    }
}
