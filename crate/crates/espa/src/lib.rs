//! Std front end for the ESPA classifier: configuration, file formats,
//! cross-validation and the sample-size barrier sweep.

pub mod cli;
pub mod config;
pub mod error;
pub mod harness;
pub mod io;

pub use config::{RunConfig, Scale, Toy};
pub use error::{Error, ErrorClass, Result};
pub use harness::{Method, Source, Trained};
