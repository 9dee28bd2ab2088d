pub mod absorption;
pub mod cap;
pub mod error;
pub mod interval;
pub mod linalg;
pub mod singular;
pub mod spectrum;

pub use error::{Error, Result};
