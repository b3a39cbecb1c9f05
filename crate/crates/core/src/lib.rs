//! Unsupervised code-mixing detection and nearest-neighbor bridging.
//!
//! Token and document language labels come from k-means over subword
//! embeddings. Comments scored as heavily code-mixed are filtered with a
//! classifier trained on the high-resource language, and the positives seed a
//! nearest-neighbor search over the low-resource pool.

pub mod corpus;
pub mod embedding;
pub mod error;
pub mod langid;
pub mod cmi;
pub mod classifier;
pub mod sampler;
pub mod bridge;
pub mod eval;
pub mod service;
pub mod synth;

pub use error::{Error, Result};
