pub mod cli;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod export;
pub mod model;
pub mod pyp;
pub mod sampler;
pub mod stirling;

pub use error::{Error, Result};
