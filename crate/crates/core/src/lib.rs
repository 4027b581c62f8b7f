//! Knowledge-graph embeddings for tabular welding data.
//!
//! The pipeline turns welding records into a knowledge graph with
//! discretised literal entities, trains translational, bilinear and
//! hyperbolic embedding models with negative sampling, and evaluates
//! spot-diameter (Q1) and carbody (Q2) link prediction.

pub mod baselines;
pub mod error;
pub mod eval;
pub mod kg;
pub mod literals;
pub mod synth;
pub mod models;
pub mod table;
pub mod train;

pub use error::{Error, Result};
