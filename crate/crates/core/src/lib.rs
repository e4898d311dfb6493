//! Complementary clothing recommendation from part co-occurrence.
//!
//! The library covers the full offline pipeline:
//!
//! * [`corpus`] — manifest ingestion, cleanup filters, and train/test splits
//!   of part-annotated image records.
//! * [`features`] — per-part color descriptors (HSV histograms, color
//!   bag-of-words), codebook training, and vector quantization.
//! * [`recommenders`] — the query-transformation algorithms (PR, CNNC, GMM,
//!   MCL, TAR) plus the solid/pattern classifier and the hybrid router. Each
//!   maps a query with one hidden part to one or more predicted part
//!   descriptors.
//! * [`index`] — exact nearest-neighbor retrieval over an inventory of part
//!   descriptors under L1, L2, or smoothed symmetric KL.
//! * [`eval`] — crowd-rating ingestion and agreement-filtered algorithm
//!   scoring.
//!
//! Trained models and indices are immutable; inference is a pure function of
//! `(model, query, seed)`.

pub mod corpus;
pub mod distance;
pub mod error;
pub mod eval;
pub mod features;
pub mod index;
pub mod io;
pub mod kmeans;
pub mod recommenders;

pub use error::{Error, Result};
