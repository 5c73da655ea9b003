//! Coordinate MLPs with spatially-adaptive progressive positional encoding.
//!
//! Low-dimensional coordinates are lifted by an [`encoding::EncodingBasis`]
//! whose functionals are sorted by Lipschitz constant. During training a soft
//! mask multiplies the encoded features; the mask is revealed group by group
//! over time ([`mask::MaskSchedule`]) and the rate of reveal is gated per
//! spatial region by the local training loss ([`mask::MaskGrid`]).
//!
//! The crate is organized as:
//!
//! - [`nn`]: dense ReLU network, manual backpropagation and Adam.
//! - [`encoding`]: identity, Fourier-feature and RBF-grid bases.
//! - [`mask`]: progression schedule, sparse mask grid, loss feedback.
//! - [`tasks`]: training loops for images, 1D signals, silhouettes and
//!   occupancy fields, plus the sigma and grid-resolution sweeps.
//! - [`metrics`], [`geometry`], [`io`]: evaluation, rasterization and file
//!   formats used by the tasks and the CLI.

// `!(x > 0.0)` style checks are meant to reject NaN too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod domain;
pub mod encoding;
pub mod error;
pub mod geometry;
pub mod io;
pub mod mask;
pub mod metrics;
pub mod nn;
pub mod tasks;

pub use error::{Error, Result};
