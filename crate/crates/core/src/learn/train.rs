//! Training loops for the two classifier models, input preparation, and
//! metrics.
//!
//! Minibatch SGD with Adam; forward/gradient evaluation across a minibatch
//! runs in parallel, but gradients are reduced in fixed index order and the
//! optimizer step is serialized, so results are bit-reproducible for a given
//! seed regardless of thread count.

use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frqi::{encode_patched, Statevector};
use crate::imaging::{Dataset, PatchLayout};
use crate::learn::adam::AdamState;
use crate::learn::classifier_mps::{argmax_score, ClassifierMps};
use crate::learn::compress::{compress_image_circuit, CompressOptions};
use crate::learn::loss::{best100_accuracy, cross_entropy, softmax_residuals};
use crate::mps::{compress_image_mps, concat_chains, Mps};
use crate::seq_circuit::{
    apply_circuit, default_label_qubits, marginal_cotangent, marginal_probabilities,
    param_gradients, CircuitRole, SequentialCircuit,
};

/// Which classifier is being trained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Mps,
    Circuit,
}

/// Full hyperparameter set; echoed into checkpoints and output directories.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub model: ModelKind,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// L2 strength λ.
    pub l2_strength: f64,
    /// Logit scale C.
    pub logit_scale: f64,
    pub seed: u64,
    /// Image bond cap (MPS model).
    pub chi_img: usize,
    /// Classifier bond dimension (MPS model).
    pub chi_class: usize,
    /// Encoder depth for the circuit model; `None` feeds the exact encoding.
    pub layers_img: Option<usize>,
    /// Classifier depth (circuit model).
    pub layers_class: usize,
    pub readout_tail: bool,
    pub patch_rows: usize,
    pub patch_cols: usize,
    pub resize_width: usize,
    pub resize_height: usize,
    pub label_count: usize,
    /// Gaussian width of the classifier-MPS initialization.
    pub noise_width: f64,
    /// Adam iterations per image when compressing to circuits.
    pub compress_iterations: usize,
    pub compress_lr: f64,
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.batch_size == 0
            || self.label_count == 0
            || self.resize_width == 0
            || self.resize_height == 0
            || self.patch_rows == 0
            || self.patch_cols == 0
        {
            return Err(Error::Domain(
                "batch size, label count, patch grid and resize extents must be positive".into(),
            ));
        }
        if self.learning_rate < 0.0 || self.l2_strength < 0.0 || self.logit_scale <= 0.0 {
            return Err(Error::Domain(
                "learning rate and λ must be >= 0, C must be > 0".into(),
            ));
        }
        Ok(())
    }

    /// MPS-model defaults: lr 1e-4, N_b = 128, λ = 1e-4, C = 1, χ_class = 10.
    pub fn mps_defaults() -> Self {
        TrainConfig {
            model: ModelKind::Mps,
            learning_rate: 1e-4,
            batch_size: 128,
            epochs: 3000,
            l2_strength: 1e-4,
            logit_scale: 1.0,
            seed: 1,
            chi_img: 4,
            chi_class: 10,
            layers_img: None,
            layers_class: 0,
            readout_tail: false,
            patch_rows: 1,
            patch_cols: 1,
            resize_width: 32,
            resize_height: 32,
            label_count: 10,
            noise_width: 1e-4,
            compress_iterations: 0,
            compress_lr: 8e-4,
        }
    }

    /// Circuit-model defaults: lr 8e-4, N_b = 100, λ = 0, C = pixel count.
    pub fn circuit_defaults() -> Self {
        TrainConfig {
            model: ModelKind::Circuit,
            learning_rate: 8e-4,
            batch_size: 100,
            epochs: 1600,
            l2_strength: 0.0,
            logit_scale: 1024.0,
            seed: 1,
            chi_img: 4,
            chi_class: 10,
            layers_img: Some(2),
            layers_class: 2,
            readout_tail: true,
            patch_rows: 1,
            patch_cols: 1,
            resize_width: 32,
            resize_height: 32,
            label_count: 10,
            noise_width: 1e-4,
            compress_iterations: 2000,
            compress_lr: 8e-4,
        }
    }

    /// Desk-scale preset: 3 classes on 16x16 single-patch images (9 qubits).
    pub fn desk3_mps(chi_img: usize) -> Self {
        TrainConfig {
            epochs: 300,
            chi_img,
            resize_width: 16,
            resize_height: 16,
            label_count: 3,
            learning_rate: 2e-3,
            ..TrainConfig::mps_defaults()
        }
    }

    /// Desk-scale circuit preset with a given encoder depth.
    pub fn desk3_circuit(layers_img: usize) -> Self {
        TrainConfig {
            epochs: 200,
            layers_img: Some(layers_img),
            layers_class: 2,
            resize_width: 16,
            resize_height: 16,
            label_count: 3,
            logit_scale: 256.0,
            compress_iterations: 250,
            compress_lr: 8e-3,
            ..TrainConfig::circuit_defaults()
        }
    }

    pub fn patch_layout(&self) -> Result<PatchLayout> {
        PatchLayout::for_image(
            self.resize_width,
            self.resize_height,
            self.patch_rows,
            self.patch_cols,
        )
    }
}

/// One row of the per-epoch log.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub test_acc: f64,
}

/// Per-epoch history plus derived summaries.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub epochs: Vec<EpochMetrics>,
}

impl Metrics {
    pub fn best_test_accuracy(&self) -> f64 {
        self.epochs.iter().map(|e| e.test_acc).fold(0.0, f64::max)
    }

    /// Mean of the best 100 per-epoch test accuracies.
    pub fn best100_test_accuracy(&self) -> Result<f64> {
        let history: Vec<f64> = self.epochs.iter().map(|e| e.test_acc).collect();
        best100_accuracy(&history)
    }

    /// CSV with the header `epoch,train_loss,train_acc,test_acc`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,train_acc,test_acc\n");
        for e in &self.epochs {
            out.push_str(&format!(
                "{},{},{},{}\n",
                e.epoch, e.train_loss, e.train_acc, e.test_acc
            ));
        }
        out
    }
}

/// Trained parameters of either model.
#[derive(Clone, Debug)]
pub enum ModelParams {
    Mps(ClassifierMps),
    Circuit(SequentialCircuit),
}

/// A restorable training snapshot.
#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub config: TrainConfig,
    pub epoch: usize,
    pub metrics: EpochMetrics,
    pub model: ModelParams,
}

/// Everything a training run produces.
#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub best: Checkpoint,
    pub final_state: Checkpoint,
    pub metrics: Metrics,
}

/// Image chains ready for the MPS classifier.
pub struct MpsInputs {
    pub chains: Vec<Mps>,
    pub labels: Vec<usize>,
    pub sites: usize,
}

/// Resizes, patches, encodes and truncates every image of a dataset.
pub fn prepare_mps_inputs(data: &Dataset, cfg: &TrainConfig) -> Result<MpsInputs> {
    cfg.validate()?;
    let layout = cfg.patch_layout()?;
    let resized = data.resize(cfg.resize_width, cfg.resize_height)?;
    let chains = resized
        .images
        .par_iter()
        .map(|img| {
            let patches = compress_image_mps(img, &layout, cfg.chi_img)?;
            let chains: Vec<Mps> = patches.into_iter().map(|p| p.mps).collect();
            concat_chains(&chains)
        })
        .collect::<Result<Vec<_>>>()?;
    let sites = chains
        .first()
        .map(|c| c.site_count())
        .ok_or_else(|| Error::Length("empty dataset".into()))?;
    Ok(MpsInputs {
        chains,
        labels: resized.labels.clone(),
        sites,
    })
}

/// Statevectors ready for the circuit classifier, with their encoding
/// fidelities (1.0 for exact encodings).
pub struct CircuitInputs {
    pub states: Vec<Statevector>,
    pub labels: Vec<usize>,
    pub n_qubits: usize,
    pub fidelities: Vec<f64>,
}

/// Serialized per-image encoder circuit (the on-disk compression cache).
#[derive(Serialize, Deserialize)]
pub struct EncodedImageFile {
    pub n_qubits: usize,
    pub layers: usize,
    pub fidelity: f64,
    pub label: usize,
    pub angles: Vec<f64>,
}

fn image_seed(base: u64, tag: u64, index: usize) -> u64 {
    base.wrapping_mul(0x9e37_79b9_7f4a_7c15)
        .wrapping_add(tag << 32)
        .wrapping_add(index as u64)
}

/// Encodes every image exactly, then (for a finite encoder depth) compresses
/// it into a sequential circuit, optionally caching the angles on disk.
pub fn prepare_circuit_inputs(
    data: &Dataset,
    cfg: &TrainConfig,
    cache_dir: Option<&Path>,
    tag: u64,
) -> Result<CircuitInputs> {
    cfg.validate()?;
    if cfg.patch_rows != 1 || cfg.patch_cols != 1 {
        return Err(Error::Layout(
            "the circuit model supports a single patch only".into(),
        ));
    }
    let layout = cfg.patch_layout()?;
    let resized = data.resize(cfg.resize_width, cfg.resize_height)?;
    if let Some(dir) = cache_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let results: Vec<(Statevector, f64)> = resized
        .images
        .par_iter()
        .enumerate()
        .map(|(idx, img)| {
            let exact = encode_patched(img, &layout)?
                .pop()
                .expect("single patch");
            match cfg.layers_img {
                None => Ok((exact, 1.0)),
                Some(layers) => {
                    let cache_path = cache_dir.map(|d| {
                        d.join(format!("enc_m{layers}_t{tag}_{idx:05}.json"))
                    });
                    if let Some(path) = &cache_path {
                        if path.exists() {
                            let bytes =
                                std::fs::read(path).map_err(|e| Error::io(path, e))?;
                            let file: EncodedImageFile = serde_json::from_slice(&bytes)
                                .map_err(|e| {
                                    Error::Format(format!("{}: {e}", path.display()))
                                })?;
                            let mut circuit = SequentialCircuit::identity(
                                file.n_qubits,
                                file.layers,
                                CircuitRole::ImageEncoder,
                                false,
                            )?;
                            circuit.set_params_flat(&file.angles)?;
                            let state = apply_circuit(
                                &circuit,
                                &Statevector::zero_state(file.n_qubits),
                            )?;
                            return Ok((state, file.fidelity));
                        }
                    }
                    let opts = CompressOptions::new(
                        layers,
                        cfg.compress_iterations,
                        cfg.compress_lr,
                        image_seed(cfg.seed, tag, idx),
                    );
                    let (circuit, fidelity) = compress_image_circuit(&exact, &opts)?;
                    if let Some(path) = &cache_path {
                        let file = EncodedImageFile {
                            n_qubits: exact.n_qubits(),
                            layers,
                            fidelity,
                            label: resized.labels[idx],
                            angles: circuit.params_flat(),
                        };
                        let json = serde_json::to_vec_pretty(&file)
                            .map_err(|e| Error::Format(e.to_string()))?;
                        std::fs::write(path, json).map_err(|e| Error::io(path, e))?;
                    }
                    let state =
                        apply_circuit(&circuit, &Statevector::zero_state(exact.n_qubits()))?;
                    Ok((state, fidelity))
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let n_qubits = results
        .first()
        .map(|(s, _)| s.n_qubits())
        .ok_or_else(|| Error::Length("empty dataset".into()))?;
    let (states, fidelities) = results.into_iter().unzip();
    Ok(CircuitInputs {
        states,
        labels: resized.labels.clone(),
        n_qubits,
        fidelities,
    })
}

fn shuffled_indices(count: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..count).collect();
    for i in (1..count).rev() {
        let j = rng.gen_range(0..=i);
        idx.swap(i, j);
    }
    idx
}

/// Trains either model; dispatches on `cfg.model`.
pub fn train(
    cfg: &TrainConfig,
    train_data: &Dataset,
    test_data: &Dataset,
    cache_dir: Option<&Path>,
) -> Result<TrainOutcome> {
    match cfg.model {
        ModelKind::Mps => train_mps(cfg, train_data, test_data),
        ModelKind::Circuit => train_circuit(cfg, train_data, test_data, cache_dir),
    }
}

fn train_mps(cfg: &TrainConfig, train_data: &Dataset, test_data: &Dataset) -> Result<TrainOutcome> {
    let train_in = prepare_mps_inputs(train_data, cfg)?;
    let test_in = prepare_mps_inputs(test_data, cfg)?;
    let mut clf = ClassifierMps::init(
        train_in.sites,
        cfg.chi_class,
        cfg.label_count,
        cfg.noise_width,
        cfg.seed,
    )?;
    let mut params = clf.params_flat();
    let mut adam = AdamState::new(params.len());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5155_4646_4c45_5221);

    let mut metrics = Metrics::default();
    let mut best: Option<Checkpoint> = None;
    for epoch in 0..cfg.epochs {
        let order = shuffled_indices(train_in.chains.len(), &mut rng);
        let mut ce_sum = 0.0;
        let mut correct = 0usize;
        for batch in order.chunks(cfg.batch_size) {
            let results: Vec<(Vec<f64>, Vec<f64>)> = batch
                .par_iter()
                .map(|&i| {
                    let (scores, grads) =
                        clf.grads(&train_in.chains[i], train_in.labels[i], cfg.logit_scale)?;
                    let flat = clf.grads_flat(&grads)?;
                    Ok((scores, flat))
                })
                .collect::<Result<Vec<_>>>()?;
            let n_b = batch.len() as f64;
            let mut grad = vec![0.0f64; params.len()];
            for (&i, (scores, flat)) in batch.iter().zip(&results) {
                ce_sum += cross_entropy(scores, train_in.labels[i], cfg.logit_scale)?;
                if argmax_score(scores) == train_in.labels[i] {
                    correct += 1;
                }
                for (g, f) in grad.iter_mut().zip(flat) {
                    *g += f / n_b;
                }
            }
            if cfg.l2_strength > 0.0 {
                let scale = cfg.l2_strength / n_b;
                for (g, p) in grad.iter_mut().zip(&params) {
                    *g += scale * p;
                }
            }
            adam.step(&mut params, &grad, cfg.learning_rate)?;
            clf.set_params_flat(&params)?;
        }

        let test_acc = {
            let hits: usize = test_in
                .chains
                .par_iter()
                .zip(&test_in.labels)
                .map(|(chain, &label)| {
                    let scores = clf.scores(chain)?;
                    Ok(usize::from(argmax_score(&scores) == label))
                })
                .collect::<Result<Vec<_>>>()?
                .iter()
                .sum();
            hits as f64 / test_in.chains.len() as f64
        };
        let row = EpochMetrics {
            epoch,
            train_loss: ce_sum / train_in.chains.len() as f64
                + cfg.l2_strength / (2.0 * cfg.batch_size as f64) * clf.weight_sq_sum(),
            train_acc: correct as f64 / train_in.chains.len() as f64,
            test_acc,
        };
        metrics.epochs.push(row);
        if best
            .as_ref()
            .map(|b| row.test_acc > b.metrics.test_acc)
            .unwrap_or(true)
        {
            best = Some(Checkpoint {
                config: cfg.clone(),
                epoch,
                metrics: row,
                model: ModelParams::Mps(clf.clone()),
            });
        }
    }
    let last = *metrics
        .epochs
        .last()
        .ok_or_else(|| Error::Domain("training ran for zero epochs".into()))?;
    let final_state = Checkpoint {
        config: cfg.clone(),
        epoch: last.epoch,
        metrics: last,
        model: ModelParams::Mps(clf),
    };
    Ok(TrainOutcome {
        best: best.unwrap_or_else(|| final_state.clone()),
        final_state,
        metrics,
    })
}

fn train_circuit(
    cfg: &TrainConfig,
    train_data: &Dataset,
    test_data: &Dataset,
    cache_dir: Option<&Path>,
) -> Result<TrainOutcome> {
    let train_in = prepare_circuit_inputs(train_data, cfg, cache_dir, 0)?;
    let test_in = prepare_circuit_inputs(test_data, cfg, cache_dir, 1)?;
    let n = train_in.n_qubits;
    let label_qubits = default_label_qubits(n);
    if (1usize << label_qubits.len()) < cfg.label_count {
        return Err(Error::Domain(format!(
            "{} label qubits cannot host {} classes",
            label_qubits.len(),
            cfg.label_count
        )));
    }
    let outcome_count = 1usize << label_qubits.len();

    let mut clf =
        SequentialCircuit::identity(n, cfg.layers_class, CircuitRole::Classifier, cfg.readout_tail)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x6369_7263_7569_7431);
    let mut params: Vec<f64> = (0..clf.param_count())
        .map(|_| rng.gen_range(-0.01..0.01))
        .collect();
    clf.set_params_flat(&params)?;
    let mut adam = AdamState::new(params.len());

    // Per-image loss pieces for the current parameters.
    let forward = |clf: &SequentialCircuit, state: &Statevector, truth: usize| -> Result<(Vec<f64>, Vec<f64>)> {
        let out = apply_circuit(clf, state)?;
        let probs = marginal_probabilities(&out, &label_qubits)?;
        let scores = probs.probs()[..cfg.label_count].to_vec();
        let mut weights = vec![0.0f64; outcome_count];
        let residuals = softmax_residuals(&scores, truth, cfg.logit_scale);
        weights[..cfg.label_count].copy_from_slice(&residuals);
        let cot = marginal_cotangent(&out, &label_qubits, &weights)?;
        let grads = param_gradients(clf, state, &cot)?;
        Ok((scores, grads))
    };

    let mut metrics = Metrics::default();
    let mut best: Option<Checkpoint> = None;
    for epoch in 0..cfg.epochs {
        let order = shuffled_indices(train_in.states.len(), &mut rng);
        let mut ce_sum = 0.0;
        let mut correct = 0usize;
        for batch in order.chunks(cfg.batch_size) {
            let results: Vec<(Vec<f64>, Vec<f64>)> = batch
                .par_iter()
                .map(|&i| forward(&clf, &train_in.states[i], train_in.labels[i]))
                .collect::<Result<Vec<_>>>()?;
            let n_b = batch.len() as f64;
            let mut grad = vec![0.0f64; params.len()];
            for (&i, (scores, flat)) in batch.iter().zip(&results) {
                ce_sum += cross_entropy(scores, train_in.labels[i], cfg.logit_scale)?;
                if argmax_score(scores) == train_in.labels[i] {
                    correct += 1;
                }
                for (g, f) in grad.iter_mut().zip(flat) {
                    *g += f / n_b;
                }
            }
            if cfg.l2_strength > 0.0 {
                let scale = cfg.l2_strength / n_b;
                for (g, p) in grad.iter_mut().zip(&params) {
                    *g += scale * p;
                }
            }
            adam.step(&mut params, &grad, cfg.learning_rate)?;
            clf.set_params_flat(&params)?;
        }

        let test_acc = {
            let hits: usize = test_in
                .states
                .par_iter()
                .zip(&test_in.labels)
                .map(|(state, &label)| {
                    let out = apply_circuit(&clf, state)?;
                    let probs = marginal_probabilities(&out, &label_qubits)?;
                    let pred = crate::seq_circuit::predict(&probs, cfg.label_count)?;
                    Ok(usize::from(pred == label))
                })
                .collect::<Result<Vec<_>>>()?
                .iter()
                .sum();
            hits as f64 / test_in.states.len() as f64
        };
        let weight_sq: f64 = params.iter().map(|p| p * p).sum();
        let row = EpochMetrics {
            epoch,
            train_loss: ce_sum / train_in.states.len() as f64
                + cfg.l2_strength / (2.0 * cfg.batch_size as f64) * weight_sq,
            train_acc: correct as f64 / train_in.states.len() as f64,
            test_acc,
        };
        metrics.epochs.push(row);
        if best
            .as_ref()
            .map(|b| row.test_acc > b.metrics.test_acc)
            .unwrap_or(true)
        {
            best = Some(Checkpoint {
                config: cfg.clone(),
                epoch,
                metrics: row,
                model: ModelParams::Circuit(clf.clone()),
            });
        }
    }
    let last = *metrics
        .epochs
        .last()
        .ok_or_else(|| Error::Domain("training ran for zero epochs".into()))?;
    let final_state = Checkpoint {
        config: cfg.clone(),
        epoch: last.epoch,
        metrics: last,
        model: ModelParams::Circuit(clf),
    };
    Ok(TrainOutcome {
        best: best.unwrap_or_else(|| final_state.clone()),
        final_state,
        metrics,
    })
}

/// Accuracy and confusion matrix of a checkpoint on a dataset.
pub struct EvalReport {
    pub accuracy: f64,
    /// confusion[truth][predicted]
    pub confusion: Vec<Vec<usize>>,
}

/// Re-runs the evaluation path of training on `data` (restricted to the
/// checkpoint's classes) and tallies a confusion matrix.
pub fn evaluate_checkpoint(
    ckpt: &Checkpoint,
    data: &Dataset,
    cache_dir: Option<&Path>,
    limit: Option<usize>,
) -> Result<EvalReport> {
    let cfg = &ckpt.config;
    let restricted = data.restrict(cfg.label_count, limit.unwrap_or(usize::MAX))?;
    let mut confusion = vec![vec![0usize; cfg.label_count]; cfg.label_count];
    let predictions: Vec<(usize, usize)> = match &ckpt.model {
        ModelParams::Mps(clf) => {
            let inputs = prepare_mps_inputs(&restricted, cfg)?;
            inputs
                .chains
                .par_iter()
                .zip(&inputs.labels)
                .map(|(chain, &label)| Ok((label, argmax_score(&clf.scores(chain)?))))
                .collect::<Result<Vec<_>>>()?
        }
        ModelParams::Circuit(clf) => {
            let inputs = prepare_circuit_inputs(&restricted, cfg, cache_dir, 1)?;
            let label_qubits = default_label_qubits(inputs.n_qubits);
            inputs
                .states
                .par_iter()
                .zip(&inputs.labels)
                .map(|(state, &label)| {
                    let out = apply_circuit(clf, state)?;
                    let probs = marginal_probabilities(&out, &label_qubits)?;
                    Ok((label, crate::seq_circuit::predict(&probs, cfg.label_count)?))
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    let mut hits = 0usize;
    for (truth, pred) in &predictions {
        confusion[*truth][*pred] += 1;
        if truth == pred {
            hits += 1;
        }
    }
    Ok(EvalReport {
        accuracy: hits as f64 / predictions.len().max(1) as f64,
        confusion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::synthetic::{generate, SyntheticSpec};

    fn tiny_dataset(count: usize, seed: u64) -> Dataset {
        generate(&SyntheticSpec {
            width: 8,
            height: 8,
            classes: 2,
            count,
            seed,
        })
        .unwrap()
    }

    fn tiny_mps_config() -> TrainConfig {
        TrainConfig {
            epochs: 1,
            batch_size: 4,
            chi_img: 2,
            chi_class: 4,
            resize_width: 8,
            resize_height: 8,
            label_count: 2,
            learning_rate: 1e-2,
            ..TrainConfig::mps_defaults()
        }
    }

    #[test]
    fn one_epoch_on_two_images_reduces_training_loss() {
        let data = tiny_dataset(2, 7);
        let mut cfg = tiny_mps_config();
        cfg.epochs = 12;
        cfg.batch_size = 2;
        let out = train(&cfg, &data, &data, None).unwrap();
        let first = out.metrics.epochs.first().unwrap().train_loss;
        let last = out.metrics.epochs.last().unwrap().train_loss;
        assert!(last < first, "loss {first} -> {last}");
    }

    #[test]
    fn zero_learning_rate_leaves_parameters_bit_identical() {
        let data = tiny_dataset(6, 8);
        let mut cfg = tiny_mps_config();
        cfg.learning_rate = 0.0;
        cfg.epochs = 2;
        let out = train(&cfg, &data, &data, None).unwrap();
        let init = ClassifierMps::init(
            prepare_mps_inputs(&data, &cfg).unwrap().sites,
            cfg.chi_class,
            cfg.label_count,
            cfg.noise_width,
            cfg.seed,
        )
        .unwrap();
        let ModelParams::Mps(trained) = &out.final_state.model else {
            panic!("expected MPS model");
        };
        assert_eq!(trained.params_flat(), init.params_flat());
    }

    #[test]
    fn training_is_deterministic_given_a_seed() {
        let data = tiny_dataset(6, 9);
        let cfg = tiny_mps_config();
        let a = train(&cfg, &data, &data, None).unwrap();
        let b = train(&cfg, &data, &data, None).unwrap();
        let (ModelParams::Mps(ma), ModelParams::Mps(mb)) =
            (&a.final_state.model, &b.final_state.model)
        else {
            panic!("expected MPS models");
        };
        assert_eq!(ma.params_flat(), mb.params_flat());
        assert_eq!(a.metrics.to_csv(), b.metrics.to_csv());
    }

    #[test]
    fn circuit_training_runs_and_logs_metrics() {
        let data = tiny_dataset(6, 10);
        let cfg = TrainConfig {
            model: ModelKind::Circuit,
            epochs: 2,
            batch_size: 3,
            layers_img: None, // exact encoding keeps this test fast
            layers_class: 1,
            readout_tail: true,
            resize_width: 8,
            resize_height: 8,
            label_count: 2,
            logit_scale: 64.0,
            ..TrainConfig::circuit_defaults()
        };
        let out = train(&cfg, &data, &data, None).unwrap();
        assert_eq!(out.metrics.epochs.len(), 2);
        assert!(out.metrics.epochs.iter().all(|e| e.train_loss.is_finite()));
    }

    #[test]
    fn evaluation_reproduces_trained_test_accuracy() {
        let data = tiny_dataset(8, 11);
        let mut cfg = tiny_mps_config();
        cfg.epochs = 3;
        let out = train(&cfg, &data, &data, None).unwrap();
        let report = evaluate_checkpoint(&out.final_state, &data, None, None).unwrap();
        assert_eq!(report.accuracy, out.final_state.metrics.test_acc);
        let total: usize = report.confusion.iter().flatten().sum();
        assert_eq!(total, 8);
    }

    #[test]
    fn default_configs_match_documented_hyperparameters() {
        let mps = TrainConfig::mps_defaults();
        assert_eq!(mps.learning_rate, 1e-4);
        assert_eq!(mps.batch_size, 128);
        assert_eq!(mps.l2_strength, 1e-4);
        assert_eq!(mps.logit_scale, 1.0);
        assert_eq!(mps.chi_class, 10);
        assert_eq!(mps.epochs, 3000);
        let circ = TrainConfig::circuit_defaults();
        assert_eq!(circ.learning_rate, 8e-4);
        assert_eq!(circ.batch_size, 100);
        assert_eq!(circ.l2_strength, 0.0);
        // C equals the pixel count of the default 32x32 resize.
        assert_eq!(circ.logit_scale, 1024.0);
        assert_eq!(circ.epochs, 1600);
        assert!(circ.readout_tail);
    }

    #[test]
    fn metrics_csv_has_the_documented_header() {
        let mut m = Metrics::default();
        m.epochs.push(EpochMetrics {
            epoch: 0,
            train_loss: 0.5,
            train_acc: 0.25,
            test_acc: 0.75,
        });
        let csv = m.to_csv();
        assert!(csv.starts_with("epoch,train_loss,train_acc,test_acc\n"));
        assert!(csv.contains("0,0.5,0.25,0.75"));
    }
}
