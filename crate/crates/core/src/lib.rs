pub mod circuit_map;
pub mod error;
pub mod frqi;
pub mod imaging;
pub mod learn;
pub mod mps;
pub mod seq_circuit;
pub mod tensors;

pub use error::{Error, Result};
