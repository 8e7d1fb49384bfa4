pub mod assembly;
pub mod continuum;
pub mod error;
pub mod experiments;
pub mod fock;
pub mod frame;
pub mod measures;
pub mod model;

pub use error::{Error, Result};
