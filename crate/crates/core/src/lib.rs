pub mod analytics;
pub mod circuit;
pub mod config;
pub mod engine;
pub mod error;
pub mod exec;
pub mod experiments;
pub mod expr;
pub mod linalg;
pub mod noise;
pub mod pauli;
pub mod pec;
pub mod report;
pub mod rng;
pub mod sampler;
pub mod sim;

pub use error::{Error, Result};
