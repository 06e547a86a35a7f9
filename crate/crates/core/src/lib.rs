//! Core of a text-dependent speaker identification toolkit built around
//! sub-band continuous-density HMMs.
//!
//! The crate is `no_std` (it needs `alloc`) and performs no IO. Audio comes in
//! as [`corpus::AudioClip`] values, models come out as plain data structures.
//! The `sbsid` crate layers WAV/CSV/TOML IO, a model store and a CLI on top.
//!
//! Pipeline, wide band or per sub-band:
//!
//! ```text
//! clip -> pre-emphasis -> endpoint detection -> band-pass filterbank
//!      -> framing + Hamming -> MFCC + delta + delta-delta -> HMM scores
//!      -> merger (vote / LCLR / GMM / SVM) -> speaker id + confidence
//! ```

#![no_std]
// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Index loops mirror the textbook recursions they implement.
#![allow(clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod corpus;
pub mod decision;
pub mod dsp;
pub mod error;
pub mod features;
pub mod fusion;
pub mod ga;
pub mod gaussian;
pub mod gmm;
pub mod hmm;
mod kmeans;
pub mod matrix;
pub mod parallel;
pub mod recognizer;
pub mod rng;
pub mod svm;

pub use error::{Error, Result};
pub use matrix::Matrix;
