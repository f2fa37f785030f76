//! Training infrastructure: loss, Adam, the MPS classifier, circuit
//! compression, the circuit classifier, metrics, and checkpoints.

pub mod adam;
pub mod checkpoint;
pub mod classifier_mps;
pub mod compress;
pub mod loss;
pub mod train;

pub use adam::AdamState;
pub use checkpoint::{read_checkpoint, write_checkpoint};
pub use classifier_mps::{argmax_score, ClassifierMps};
pub use compress::{compress_image_circuit, CompressInit, CompressOptions};
pub use loss::{batch_loss, best100_accuracy, cross_entropy, softmax_residuals};
pub use train::{
    evaluate_checkpoint, prepare_circuit_inputs, prepare_mps_inputs, train, Checkpoint,
    CircuitInputs, EpochMetrics, EvalReport, Metrics, ModelKind, ModelParams, MpsInputs,
    TrainConfig, TrainOutcome,
};
