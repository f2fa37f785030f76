//! Implementations of the CLI subcommands.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;
use serde_json::json;

use qpix_core::circuit_map::gate_list_file;
use qpix_core::error::{Error, Result};
use qpix_core::frqi::{encode_patched, qubit_budget};
use qpix_core::imaging::{load_dataset_split, synthetic, Dataset, PatchLayout};
use qpix_core::learn::{
    compress_image_circuit, evaluate_checkpoint, read_checkpoint, train as run_training,
    write_checkpoint, CompressOptions, ModelKind, TrainConfig,
};
use qpix_core::mps::{
    compress_image_mps, decode_image_mps, right_canonicalize, write_qpxm, CompressedImage,
};

fn parse_pair(text: &str, what: &str) -> Result<(usize, usize)> {
    let parts: Vec<&str> = text.split('x').collect();
    let err = || Error::Domain(format!("{what} must look like AxB, got {text:?}"));
    if parts.len() != 2 {
        return Err(err());
    }
    let a = parts[0].parse().map_err(|_| err())?;
    let b = parts[1].parse().map_err(|_| err())?;
    Ok((a, b))
}

fn load_split(data_dir: &Path, split: &str, subset: Option<usize>) -> Result<Dataset> {
    let ds = load_dataset_split(data_dir, split == "train")?;
    match subset {
        Some(n) => ds.restrict(ds.label_count, n),
        None => Ok(ds),
    }
}

fn write_config_echo(out_dir: &Path, value: &serde_json::Value) -> Result<()> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let path = out_dir.join("config.json");
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

pub fn gen_data(
    out: &Path,
    width: usize,
    height: usize,
    classes: usize,
    train_count: usize,
    test_count: usize,
    seed: u64,
) -> Result<()> {
    synthetic::write_idx_dataset(out, width, height, classes, train_count, test_count, seed)?;
    println!(
        "wrote {train_count} train / {test_count} test synthetic {width}x{height} images ({classes} classes) to {}",
        out.display()
    );
    Ok(())
}

pub fn encode(
    data_dir: &Path,
    split: &str,
    subset: Option<usize>,
    resize: &str,
    patches: &str,
    out: &Path,
    dump_states: bool,
) -> Result<()> {
    let (w, h) = parse_pair(resize, "--resize")?;
    let (pr, pc) = parse_pair(patches, "--patches")?;
    let data = load_split(data_dir, split, subset)?.resize(w, h)?;
    let layout = PatchLayout::for_image(w, h, pr, pc)?;
    let budget = qubit_budget(w * h, layout.patch_count())?;
    write_config_echo(
        out,
        &json!({
            "command": "encode",
            "data_dir": data_dir, "split": split, "subset": subset,
            "resize": [w, h], "patches": [pr, pc], "dump_states": dump_states,
        }),
    )?;

    let mut entries = Vec::new();
    for (idx, (img, &label)) in data.images.iter().zip(&data.labels).enumerate() {
        let states = encode_patched(img, &layout)?;
        if dump_states {
            let path = out.join(format!("state_{idx:05}.qpxs"));
            let mut bytes = Vec::new();
            bytes.extend_from_slice(&(states.len() as u32).to_le_bytes());
            for s in &states {
                bytes.extend_from_slice(&(s.n_qubits() as u32).to_le_bytes());
                for a in s.amps() {
                    bytes.extend_from_slice(&a.re.to_le_bytes());
                    bytes.extend_from_slice(&a.im.to_le_bytes());
                }
            }
            std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        }
        entries.push(json!({
            "index": idx,
            "label": label,
            "patch_states": states.len(),
            "qubits_per_patch": states.first().map(|s| s.n_qubits()).unwrap_or(0),
        }));
    }
    let manifest = json!({
        "count": data.len(),
        "budget": {
            "address_qubits_per_patch": budget.address_qubits_per_patch,
            "color_qubits_per_patch": budget.color_qubits_per_patch,
            "patches": budget.patches,
            "total_qubits": budget.total_qubits,
        },
        "images": entries,
    });
    let path = out.join("encode_manifest.json");
    std::fs::write(
        &path,
        serde_json::to_string_pretty(&manifest).map_err(|e| Error::Format(e.to_string()))?,
    )
    .map_err(|e| Error::io(&path, e))?;
    println!(
        "qubit budget: {} qubits ({} address + {} color per patch, {} patches)",
        budget.total_qubits,
        budget.address_qubits_per_patch,
        budget.color_qubits_per_patch,
        budget.patches
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn compress(
    data_dir: &Path,
    split: &str,
    subset: Option<usize>,
    mode: &str,
    chi: usize,
    layers: usize,
    resize: &str,
    patches: &str,
    iterations: usize,
    lr: f64,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let (w, h) = parse_pair(resize, "--resize")?;
    let (pr, pc) = parse_pair(patches, "--patches")?;
    let data = load_split(data_dir, split, subset)?.resize(w, h)?;
    let layout = PatchLayout::for_image(w, h, pr, pc)?;
    write_config_echo(
        out,
        &json!({
            "command": "compress", "mode": mode,
            "data_dir": data_dir, "split": split, "subset": subset,
            "resize": [w, h], "patches": [pr, pc],
            "chi": chi, "layers": layers,
            "iterations": iterations, "lr": lr, "seed": seed,
        }),
    )?;

    let mut csv = String::new();
    match mode {
        "mps" => {
            csv.push_str("index,label,truncation_error\n");
            for (idx, (img, &label)) in data.images.iter().zip(&data.labels).enumerate() {
                let compressed = compress_image_mps(img, &layout, chi)?;
                // Product over patches: total infidelity of the joint state.
                let total_error =
                    1.0 - compressed
                        .iter()
                        .map(|p| 1.0 - p.truncation_error)
                        .product::<f64>();
                let file = CompressedImage {
                    width: w,
                    height: h,
                    layout,
                    chi,
                    label: Some(label),
                    patches: compressed,
                    metadata: BTreeMap::from([(
                        "source".to_string(),
                        format!("{}:{split}:{idx}", data_dir.display()),
                    )]),
                };
                let path = out.join(format!("img_{idx:05}.qpxm"));
                write_qpxm(&file, &path)?;
                csv.push_str(&format!("{idx},{label},{total_error}\n"));
            }
        }
        "circuit" => {
            if (pr, pc) != (1, 1) {
                return Err(Error::Layout(
                    "circuit compression supports a single patch only".into(),
                ));
            }
            csv.push_str("index,label,fidelity\n");
            for (idx, (img, &label)) in data.images.iter().zip(&data.labels).enumerate() {
                let state = encode_patched(img, &layout)?.pop().expect("single patch");
                let opts = CompressOptions::new(layers, iterations, lr, seed ^ idx as u64);
                let (circuit, fidelity) = compress_image_circuit(&state, &opts)?;
                let file = json!({
                    "n_qubits": state.n_qubits(),
                    "layers": layers,
                    "fidelity": fidelity,
                    "label": label,
                    "angles": circuit.params_flat(),
                });
                let path = out.join(format!("enc_{idx:05}.json"));
                std::fs::write(
                    &path,
                    serde_json::to_string_pretty(&file)
                        .map_err(|e| Error::Format(e.to_string()))?,
                )
                .map_err(|e| Error::io(&path, e))?;
                csv.push_str(&format!("{idx},{label},{fidelity}\n"));
            }
        }
        other => {
            return Err(Error::Domain(format!("unknown compression mode {other:?}")));
        }
    }
    let csv_path = out.join("fidelity.csv");
    std::fs::write(&csv_path, csv).map_err(|e| Error::io(&csv_path, e))?;
    println!(
        "compressed {} images ({mode}) into {}",
        data.len(),
        out.display()
    );
    Ok(())
}

/// Flags of the `train` subcommand; unset values fall back to the profile
/// and then to the model defaults.
#[derive(Args, Clone)]
pub struct TrainArgs {
    /// Directory holding the IDX files (env: QPIX_DATA_DIR).
    #[arg(long, env = "QPIX_DATA_DIR")]
    pub data_dir: PathBuf,
    #[arg(long, value_parser = ["mps", "circuit"], default_value = "mps")]
    pub model: String,
    /// Named preset (currently: desk3). Explicit flags override it.
    #[arg(long)]
    pub profile: Option<String>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// L2 strength λ.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Logit scale C.
    #[arg(long)]
    pub logit_scale: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub chi_img: Option<usize>,
    #[arg(long)]
    pub chi_class: Option<usize>,
    /// Encoder depth for the circuit model; pass "exact" to feed exact
    /// encodings.
    #[arg(long)]
    pub layers_img: Option<String>,
    #[arg(long)]
    pub layers_class: Option<usize>,
    /// Drop the three extra readout gates.
    #[arg(long)]
    pub no_tail: bool,
    /// Target size WxH.
    #[arg(long)]
    pub resize: Option<String>,
    /// Patch grid RxC.
    #[arg(long)]
    pub patches: Option<String>,
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub train_count: Option<usize>,
    #[arg(long)]
    pub test_count: Option<usize>,
    #[arg(long)]
    pub compress_iters: Option<usize>,
    #[arg(long)]
    pub compress_lr: Option<f64>,
    /// Directory for cached per-image encoder circuits.
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

fn resolve_config(args: &TrainArgs) -> Result<(TrainConfig, Option<usize>, Option<usize>)> {
    let model = match args.model.as_str() {
        "mps" => ModelKind::Mps,
        _ => ModelKind::Circuit,
    };
    let (mut cfg, mut train_count, mut test_count) = match args.profile.as_deref() {
        None => (
            match model {
                ModelKind::Mps => TrainConfig::mps_defaults(),
                ModelKind::Circuit => TrainConfig::circuit_defaults(),
            },
            None,
            None,
        ),
        Some("desk3") => {
            let cfg = match model {
                ModelKind::Mps => TrainConfig::desk3_mps(4),
                ModelKind::Circuit => TrainConfig::desk3_circuit(2),
            };
            (cfg, Some(600), Some(300))
        }
        Some(other) => {
            return Err(Error::Domain(format!(
                "unknown profile {other:?}; available: desk3"
            )));
        }
    };
    cfg.model = model;
    if let Some(v) = args.lr {
        cfg.learning_rate = v;
    }
    if let Some(v) = args.batch_size {
        cfg.batch_size = v;
    }
    if let Some(v) = args.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = args.lambda {
        cfg.l2_strength = v;
    }
    if let Some(v) = args.logit_scale {
        cfg.logit_scale = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.chi_img {
        cfg.chi_img = v;
    }
    if let Some(v) = args.chi_class {
        cfg.chi_class = v;
    }
    if let Some(v) = &args.layers_img {
        cfg.layers_img = if v == "exact" {
            None
        } else {
            Some(v.parse().map_err(|_| {
                Error::Domain(format!("--layers-img must be a number or \"exact\", got {v:?}"))
            })?)
        };
    }
    if let Some(v) = args.layers_class {
        cfg.layers_class = v;
    }
    if args.no_tail {
        cfg.readout_tail = false;
    }
    if let Some(v) = &args.resize {
        let (w, h) = parse_pair(v, "--resize")?;
        cfg.resize_width = w;
        cfg.resize_height = h;
        if cfg.model == ModelKind::Circuit && args.logit_scale.is_none() {
            cfg.logit_scale = (w * h) as f64;
        }
    }
    if let Some(v) = &args.patches {
        let (r, c) = parse_pair(v, "--patches")?;
        cfg.patch_rows = r;
        cfg.patch_cols = c;
    }
    if let Some(v) = args.classes {
        cfg.label_count = v;
    }
    if let Some(v) = args.train_count {
        train_count = Some(v);
    }
    if let Some(v) = args.test_count {
        test_count = Some(v);
    }
    if let Some(v) = args.compress_iters {
        cfg.compress_iterations = v;
    }
    if let Some(v) = args.compress_lr {
        cfg.compress_lr = v;
    }
    Ok((cfg, train_count, test_count))
}

pub fn train(args: TrainArgs, verbose: bool) -> Result<()> {
    let (cfg, train_count, test_count) = resolve_config(&args)?;
    let train_data = load_split(&args.data_dir, "train", None)?
        .restrict(cfg.label_count, train_count.unwrap_or(usize::MAX))?;
    let test_data = load_split(&args.data_dir, "test", None)?
        .restrict(cfg.label_count, test_count.unwrap_or(usize::MAX))?;
    if verbose {
        eprintln!(
            "training {:?} model on {} train / {} test images",
            cfg.model,
            train_data.len(),
            test_data.len()
        );
    }
    write_config_echo(
        &args.out,
        &json!({
            "command": "train",
            "data_dir": args.data_dir,
            "train_count": train_data.len(),
            "test_count": test_data.len(),
            "config": cfg,
        }),
    )?;

    let outcome = run_training(&cfg, &train_data, &test_data, args.cache_dir.as_deref())?;

    let csv_path = args.out.join("metrics.csv");
    std::fs::write(&csv_path, outcome.metrics.to_csv()).map_err(|e| Error::io(&csv_path, e))?;
    let best_path = args.out.join("best.qpxc");
    write_checkpoint(&outcome.best, &best_path)?;
    let final_path = args.out.join("final.qpxc");
    write_checkpoint(&outcome.final_state, &final_path)?;

    if verbose {
        for row in &outcome.metrics.epochs {
            eprintln!(
                "epoch {:4}  loss {:.6}  train {:.4}  test {:.4}",
                row.epoch, row.train_loss, row.train_acc, row.test_acc
            );
        }
    }
    println!(
        "best test accuracy {:.4} (epoch {}), best-100 average {:.4}",
        outcome.best.metrics.test_acc,
        outcome.best.epoch,
        outcome.metrics.best100_test_accuracy()?
    );
    println!("checkpoints: {} / {}", best_path.display(), final_path.display());
    Ok(())
}

pub fn eval(
    checkpoint: &Path,
    data_dir: &Path,
    split: &str,
    subset: Option<usize>,
    cache_dir: Option<&Path>,
) -> Result<()> {
    let ckpt = read_checkpoint(checkpoint)?;
    let data = load_split(data_dir, split, None)?;
    let report = evaluate_checkpoint(&ckpt, &data, cache_dir, subset)?;
    println!("accuracy: {}", report.accuracy);
    println!("confusion matrix (rows = truth, cols = predicted):");
    for (truth, row) in report.confusion.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|c| format!("{c:6}")).collect();
        println!("  class {truth}: {}", cells.join(" "));
    }
    Ok(())
}

pub fn render(input: &Path, out: &Path) -> Result<()> {
    let file = qpix_core::mps::read_qpxm(input)?;
    let image = decode_image_mps(&file.patches, &file.layout)?;
    qpix_core::imaging::write_pgm(&image, out)?;
    println!("decoded {} -> {}", input.display(), out.display());
    Ok(())
}

pub fn export_circuit(input: &Path, patch: usize, out: &Path) -> Result<()> {
    let file = qpix_core::mps::read_qpxm(input)?;
    let chain = file.patches.get(patch).ok_or_else(|| {
        Error::Index(format!(
            "patch {patch} out of range for {} patches",
            file.patches.len()
        ))
    })?;
    let canonical = right_canonicalize(&chain.mps)?;
    let gates = gate_list_file(&canonical)?;
    let path = out.to_path_buf();
    std::fs::write(
        &path,
        serde_json::to_string_pretty(&gates).map_err(|e| Error::Format(e.to_string()))?,
    )
    .map_err(|e| Error::io(&path, e))?;
    println!(
        "wrote {} gates spanning {} qubits to {}",
        gates.gates.len(),
        gates.n_qubits,
        path.display()
    );
    Ok(())
}

pub fn report(metrics_csv: &Path, out: &Path) -> Result<()> {
    let text = std::fs::read_to_string(metrics_csv).map_err(|e| Error::io(metrics_csv, e))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty metrics CSV".into()))?;
    let columns: Vec<&str> = header.split(',').collect();
    if columns.len() < 2 {
        return Err(Error::Format(format!(
            "metrics CSV needs an x column plus series, got {header:?}"
        )));
    }
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let vals = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| Error::Format(format!("bad CSV row {line:?}: {e}")))?;
        if vals.len() != columns.len() {
            return Err(Error::Length(format!(
                "row has {} fields, header {}",
                vals.len(),
                columns.len()
            )));
        }
        rows.push(vals);
    }
    if rows.is_empty() {
        return Err(Error::Length("metrics CSV has no data rows".into()));
    }
    let svg = render_svg_chart(&columns, &rows);
    std::fs::write(out, svg).map_err(|e| Error::io(out, e))?;
    println!("wrote chart with {} series to {}", columns.len() - 1, out.display());
    Ok(())
}

/// Minimal self-contained line chart: one polyline per series, each scaled
/// to its own [min, max] range, with a legend naming the ranges.
fn render_svg_chart(columns: &[&str], rows: &[Vec<f64>]) -> String {
    const W: f64 = 900.0;
    const H: f64 = 520.0;
    const M: f64 = 60.0;
    let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];
    let xs: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let (xmin, xmax) = (
        xs.iter().cloned().fold(f64::INFINITY, f64::min),
        xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    );
    let xspan = (xmax - xmin).max(1e-12);
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n\
         <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n\
         <rect x=\"{M}\" y=\"{M}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#333\"/>\n",
        W - 2.0 * M,
        H - 2.0 * M
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">{}</text>\n",
        W / 2.0,
        H - M / 3.0,
        columns[0]
    ));
    for (s, name) in columns.iter().enumerate().skip(1) {
        let series: Vec<f64> = rows.iter().map(|r| r[s]).collect();
        let (mut ymin, mut ymax) = (
            series.iter().cloned().fold(f64::INFINITY, f64::min),
            series.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        );
        if (ymax - ymin).abs() < 1e-12 {
            ymin -= 0.5;
            ymax += 0.5;
        }
        let color = colors[(s - 1) % colors.len()];
        let points: Vec<String> = xs
            .iter()
            .zip(&series)
            .map(|(&x, &y)| {
                let px = M + (x - xmin) / xspan * (W - 2.0 * M);
                let py = H - M - (y - ymin) / (ymax - ymin) * (H - 2.0 * M);
                format!("{px:.2},{py:.2}")
            })
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            points.join(" ")
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" fill=\"{color}\">{} [{:.4}, {:.4}]</text>\n",
            M + 8.0,
            M + 18.0 + 16.0 * (s - 1) as f64,
            name,
            ymin,
            ymax
        ));
    }
    svg.push_str("</svg>\n");
    svg
}
