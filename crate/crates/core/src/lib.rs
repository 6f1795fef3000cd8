//! Polar coding for compound multiple-access channels and interference
//! networks built on monotone chain rules and polar alignment.

pub mod alignment;
pub mod chain;
pub mod channel;
pub mod codec;
pub mod error;
pub mod linear;
pub mod estimator;
pub mod polar;
pub mod region;
pub mod sc;
pub mod util;

pub use error::{Error, Result};
