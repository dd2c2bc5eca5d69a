pub mod analysis;
pub mod catalog;
pub mod cli;
pub mod conic;
pub mod error;
pub mod io;
pub mod iterate;
pub mod operators;
pub mod statesearch;
pub mod witness;

pub use error::{Error, Result};
