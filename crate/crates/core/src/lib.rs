//! Simulation toolkit for an Aharonov-Casher phase measurement with an NV
//! centre carried on a spinning disk between charged plates.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ac_phase;
pub mod commands;
pub mod config;
pub mod error;
pub mod geometry;
pub mod holonomy;
pub mod linalg;
pub mod physics;
pub mod sequence;
pub mod stats;

pub use error::{Error, Result};
