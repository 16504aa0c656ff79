pub mod bench;
pub mod config;
pub mod detect;
pub mod error;
pub mod model;
pub mod seeds;
pub mod sigproc;
pub mod simulator;
pub mod store;
pub mod tensor;

pub use error::{Error, ErrorClass, Result};
