//! Quantification of ε-δ almost safe sets for black-box car-following
//! controllers by guided scenario sampling.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod domain;
pub mod error;
pub mod models;
pub mod quantifier;
pub mod sim;

pub use error::{Error, Result};
