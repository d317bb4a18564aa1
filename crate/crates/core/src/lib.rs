//! Graph matching as a quadratic assignment problem.
//!
//! The crate is organised bottom-up:
//!
//! - [`math`]: dense and sparse operators, Sinkhorn, Hungarian, binary score
//! - [`graphs`]: attributed keypoint graphs, synthetic pairs, AA-graphs
//! - [`affinity`]: handcrafted affinity operators and the QAP objective
//! - [`solver`]: the probabilistic solver and classical baselines
//! - [`nn`]: reverse-mode tape, the affinity-assignment predictor and training

pub mod affinity;
pub mod error;
pub mod graphs;
pub mod math;
pub mod nn;
pub mod solver;

pub use error::{Error, Result};
