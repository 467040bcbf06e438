pub mod benchmarks;
pub mod error;
pub mod indicator;
pub mod io;
pub mod regression;
pub mod riskmap;
pub mod series;
pub mod volatility;

pub use error::{Error, Result};
