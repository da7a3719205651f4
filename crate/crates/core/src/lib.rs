pub mod canonical;
pub mod capacity;
pub mod cli;
pub mod ensembles;
pub mod error;
pub mod protocol;
pub mod qmath;

pub use error::{Error, Result};
