pub mod cli;
pub mod discriminator;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod generator;
pub mod graph;
pub mod numkernel;
pub mod par;
pub mod rng;
pub mod synth;
pub mod trainer;

pub use error::{Error, Result};
