//! File formats, model store and command line for `sbsid-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod exec;
pub mod export;
pub mod manifest;
pub mod store;
pub mod wav;

pub use error::{Error, Result};
