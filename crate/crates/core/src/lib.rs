//! Score-based (Hyvärinen) binary hypothesis testing for unnormalized models,
//! with Chernoff/Cramér error exponents, samplers for the built-in model
//! families, score-matching RBM training, and intrusion-data preprocessing.
//!
//! The data-parallel loops (resampling sweeps, log-MGF sums, multi-chain pool
//! generation, batch gradients) use rayon when the `parallel` feature is on
//! and fall back to sequential execution otherwise; results are identical
//! either way.

pub mod data;
pub mod error;
pub mod exponents;
pub mod io;
pub mod models;
pub mod par;
pub mod perturb;
pub mod rng;
pub mod samplers;
pub mod score;
pub mod special;
pub mod testing;
pub mod train;

pub use error::{Error, Result};
pub use par::Execution;
pub use score::{DifferenceSample, Hypothesis, ScoreModel};
