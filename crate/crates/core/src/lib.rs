//! Secrecy-rate power allocation for MIMO wiretap channels where only the
//! eavesdroppers' channel statistics are known.
//!
//! The pipeline: collapse the eavesdroppers into one equivalent matrix
//! ([`model`]), split the destination/eavesdropper pair into scalar
//! subchannels with a generalized SVD ([`gsvd`]), allocate power across them
//! ([`allocator`]), and, for finite-alphabet inputs, cap each subchannel at
//! the power where its secrecy rate peaks ([`finite`]). [`harness`] wires it
//! into sweeps and file output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod allocator;
pub mod error;
pub mod finite;
pub mod gsvd;
pub mod harness;
pub mod linalg;
pub mod model;
pub mod rng;

pub use error::{Error, Result};
pub use linalg::CMatrix;
