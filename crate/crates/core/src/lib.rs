pub mod bloch;
pub mod cli;
pub mod codetree;
pub mod error;
pub mod exactnum;
pub mod montecarlo;
pub mod optimizer;
pub mod primitives;
pub mod session;

pub use error::{Error, Result};
pub use exactnum::ExactValue;
