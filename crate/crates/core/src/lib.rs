pub mod cli;
pub mod dataset;
pub mod dtfal;
pub mod dtree;
pub mod error;
pub mod nnfal;
pub mod rng;
pub mod scenario;
pub mod stl;
pub mod systems;
pub mod types;

pub use error::{Error, Result};
