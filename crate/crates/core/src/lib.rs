//! Surface-code decoding lab: planar code geometry, noise sampling,
//! nearest-border and matching decoders, a small convolutional network
//! engine for high-level decoding, occlusion saliency and Monte Carlo
//! evaluation.

pub mod dataset;
pub mod decode;
pub mod error;
pub mod eval;
pub mod explain;
pub mod hld;
pub mod lattice;
pub mod nn;
pub mod noise;

pub use error::{Error, Result};
pub use lattice::{BitSet, Cell, CellRole, CodeLayout, Correction, LogicalClass, Pauli, PauliError, Syndrome};
