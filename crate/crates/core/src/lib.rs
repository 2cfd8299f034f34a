//! Orthogonal space-time block codes: encoding, the real-valued lattice
//! representation, four equivalent maximum-likelihood decoders, and an exact
//! real-operation counting engine for the lattice decoder.
//!
//! The modules build on each other bottom-up:
//!
//! - [`codebook`]: dispersion-matrix code definitions, the encoder and the
//!   plain-text code file format.
//! - [`lattice`]: the `2MT x 2K` real channel matrix and its invariants.
//! - [`decoders`]: the lattice, trace, `F` and `F'` decoders, the per-coordinate
//!   quantizer and the exhaustive ML oracle.
//! - [`schedule`]: straight-line programs of real operations for the lattice
//!   decode step, with exact operation counts.
//! - [`sim`]: seeded Monte-Carlo trials and BER sweeps.
//! - [`cli`]: the `ostbc-lab` command-line front end.

pub mod cli;
pub mod codebook;
pub mod decoders;
pub mod error;
pub mod lattice;
pub mod numfmt;
pub mod schedule;
pub mod sim;

pub use error::{Error, Result};

pub use num_complex::Complex64;
