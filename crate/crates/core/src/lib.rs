#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alerts;
pub mod cmp;
pub mod config;
pub mod detectors;
pub mod error;
pub mod eval;
pub mod gnn;
pub mod graphs;
pub mod ingest;
pub mod nn;
pub mod pipeline;
pub mod synth;

pub use error::{Error, Result};
