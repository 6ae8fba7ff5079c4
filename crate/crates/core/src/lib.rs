//! Heterogeneous contrastive learning: weighted contrastive objectives with
//! exact gradients, small MLP encoders, a LARS optimizer, evaluation metrics
//! and mutual-information bound checks.
//!
//! The crate is `no_std` with `alloc`; file formats and the command line
//! live in the `hcl` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod bounds;
pub mod data;
pub mod error;
pub mod losses;
pub mod matrix;
pub mod metrics;
pub mod mi;
pub mod model;
pub mod numeric;
pub mod optimizer;
pub mod projection;
pub mod rng;
pub mod similarity;
pub mod train;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use rng::Rng;
