pub mod domain;
pub mod acceptance;
pub mod config;
pub mod diagnostics;
pub mod energy;
pub mod error;
pub mod exact;
pub mod fields;
pub mod linalg;
pub mod solve;
pub mod run;
pub mod spectral;

pub use error::{Error, Result};
