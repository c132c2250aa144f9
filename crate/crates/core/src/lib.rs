//! Simulation core for single-shot measurement learning (SSML) of unknown
//! pure qubit states.
//!
//! A learner tunes the three fast-axis angles of a QWP-HWP-QWP wave plate
//! stack so that the stack maps a hidden polarization state onto the
//! fiducial state `|H>`. Every copy of the hidden state yields a single
//! success/failure detection. Successes extend the current streak; a failure
//! kicks every angle by a random amount whose size shrinks with the length of
//! the streak it just ended.
//!
//! The crate is `no_std` (it needs `alloc`) and performs no IO. File
//! formats, configuration parsing and the command-line front end live in the
//! `ssml-cli` crate.
//!
//! Modules:
//! - [`qcore`]: qubit states, 2x2 unitaries, Jones matrices, Stokes vectors.
//! - [`noise`]: single-shot detector model with false negatives, false
//!   positives and losses.
//! - [`learner`]: the feedback loop, halting and checkpoint recording.
//! - [`experiment`]: sweeps over hidden states, power-law scaling fit,
//!   monitored-vs-true comparison and the angle-deduced infidelity study.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod error;
pub mod experiment;
pub mod learner;
pub mod noise;
pub mod qcore;
pub mod rng;

pub use error::Error;
pub use rng::RandomStream;
