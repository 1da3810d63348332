//! Stratified domain adaptation for small-scale sequence recognition.
//!
//! The pipeline has two stages. Stage 1 estimates a per-sample domain gap
//! score for every unlabeled target image, using either a harmonic
//! combination of two adversarially trained discriminators ([`hdge`]) or a
//! focal-loss binary domain classifier ([`dd`]), then sorts and splits the
//! target corpus into subsets of increasing gap ([`stratifier`]). Stage 2
//! runs self-training rounds over those subsets in order, weighting pseudo
//! and source losses by the mean pseudo-label confidence ([`selftrain`]).
//!
//! Everything is deterministic given the experiment seed. Batch generation,
//! scoring and evaluation are data-parallel (rayon, `parallel` feature,
//! enabled by default); training loops are single-threaded so that float
//! accumulation order never depends on thread count.

pub mod corpus;
pub mod dd;
pub mod error;
pub mod hdge;
pub mod image;
pub mod nn;
pub mod par;
pub mod recognizer;
pub mod runner;
pub mod selftrain;
pub mod stratifier;

pub use error::{Error, Result};
