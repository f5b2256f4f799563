pub mod cache;
pub mod config;
pub mod error;
pub mod evaluation;
pub mod filtering;
pub mod http;
pub mod image;
pub mod limiter;
pub mod pipeline;
pub mod ranking;
pub mod reasoning;
pub mod retrieval;
pub mod similarity;
pub mod types;

pub use error::{Error, Result};
pub use types::*;
