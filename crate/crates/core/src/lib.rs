//! Islanding-safe economic dispatch for micro grids.

pub mod api;
pub mod config;
pub mod czono;
pub mod env;
pub mod error;
pub mod gridmodel;
pub mod lpqp;
pub mod protocol;
pub mod reach;
pub mod shield;

pub use error::{Error, Result};
