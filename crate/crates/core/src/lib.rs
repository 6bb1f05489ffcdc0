//! Kolmogorov-Arnold network engine and the time-domain activity-recognition
//! pipeline built on top of it.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is pure
//! computation: B-spline bases, KAN layers with analytic gradients, the
//! 36-feature accelerometer extractor, windowing and subject-disjoint
//! splitting, Adam/AdamW training, and classification metrics. File formats
//! and the command-line tool live in the `kanhar` companion crate.
//!
//! ```
//! use kanhar_core::kan::{KanNetwork, NetworkConfig};
//!
//! let net = KanNetwork::new(&NetworkConfig::with_dims(&[36, 64, 6]), 7).unwrap();
//! assert_eq!(net.parameter_count(), 36 * 64 * 11 + 64 + 64 * 6 * 11 + 6);
//! let scores = net.forward(&[0.0; 36]).unwrap();
//! assert_eq!(scores.len(), 6);
//! ```
#![no_std]
// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod dataset;
pub mod error;
pub mod features;
pub mod kan;
pub mod metrics;
pub mod optim;
pub mod spline;

pub use error::{Error, Result};
