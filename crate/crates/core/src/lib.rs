pub mod config;
pub mod encoder;
pub mod error;
pub mod harness;
pub mod hardness;
mod http;
pub mod knowledge;
pub mod text;
pub mod training;
pub mod translation;
mod tsv;

pub use error::{Error, ErrorKind, Result};
