pub mod diagnostics;
pub mod error;
pub mod estimation;
pub mod harness;
pub mod measurement;
pub mod qcore;
pub mod schemes;
pub mod states;
pub mod waveplates;
pub mod witness;

pub use error::{Error, Result};
