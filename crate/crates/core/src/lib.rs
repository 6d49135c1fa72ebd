pub mod beamform;
pub mod driver;
pub mod error;
pub mod harness;
pub mod model;
pub mod numerics;
pub mod power;

pub use error::{Error, Result};
