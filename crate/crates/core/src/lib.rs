mod error;
pub mod estimate;
pub mod grid;
pub mod haar;
pub mod inband;
pub mod io;
pub mod sim;
pub mod threshold;

pub use error::{Error, Result};
