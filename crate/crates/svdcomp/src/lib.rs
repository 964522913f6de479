//! SVD component model of age-specific mortality.
//!
//! The model treats a single-year mortality schedule (death probabilities
//! `1qx` for ages 0–109) as a weighted sum of a few fixed age-varying
//! components obtained from the singular value decomposition of a large
//! collection of observed life tables. Calibration regresses the empirical
//! component weights on child mortality `5q0` and adult mortality `45q15`,
//! so that a complete 110-age schedule can be predicted from `5q0` alone or
//! from the pair `(5q0, 45q15)`.
//!
//! The crate is organized around the pipeline:
//!
//! - [`lifetable`] — schedule data model, HMD 1x1 file ingestion, exclusion
//!   filtering, probability aggregation, logit/expit transforms.
//! - [`linalg`] — self-contained dense SVD (one-sided Jacobi) and ordinary
//!   least squares (Householder QR).
//! - [`calibration`] — offset logit matrices, per-sex SVDs, the twelve
//!   regression models, and the serializable model artifact.
//! - [`prediction`] — full-schedule prediction from `5q0` (and optionally
//!   `45q15`), plus interpolation of partial schedules.
//! - [`validation`] — prediction-error reports, seeded cross-validation,
//!   total absolute error, and the log-quadratic baseline for comparison.
//! - [`synth`] — a small deterministic synthetic corpus so every part of the
//!   crate is exercisable without access to a real life-table archive.
//!
//! The `examples/` directory contains one runnable example per capability;
//! a thin `svdcomp` binary exposes the same pipeline as subcommands
//! (`calibrate`, `predict`, `validate`, `compare`, `inspect`).

// Index loops are the clearer style in the dense linear-algebra kernels.
#![allow(clippy::needless_range_loop)]

pub mod calibration;
pub mod cli;
pub mod error;
pub mod lifetable;
pub mod linalg;
pub mod prediction;
pub mod synth;
pub mod validation;

pub use error::{Error, Result};
pub use lifetable::{Corpus, ExclusionRule, MortalitySchedule, Sex, AGE_GROUPS};
