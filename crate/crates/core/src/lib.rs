//! Audio-meter features for stereo music and a random-forest classifier
//! that predicts which DJ plays a song.
//!
//! The pipeline decodes a 16-bit stereo WAV, crops silence, normalizes,
//! keeps the central section and cuts it into 4096-sample windows. Each
//! window is described by broadband level meters, stereo-scope statistics
//! and per-band meters from a 27-band third-octave filterbank. Songs become
//! fixed-length vectors that feed an optional PCA and a random forest.

// `!(x > 0.0)` style checks are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audio_io;
pub mod cli;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod filterbank;
pub mod forest;
pub mod level_meters;
pub mod pca;
pub mod stereo_meters;
pub mod synth;

pub use error::{Error, Result};
