pub mod channel;
pub mod complexity;
pub mod config;
pub mod dataset;
pub mod detect;
pub mod error;
pub mod mobility;
pub mod model;
pub mod rng;
pub mod scenario;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
