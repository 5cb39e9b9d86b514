//! Numerical laboratory for the magnetic two-component Hunter–Saxton system.

pub mod blowup;
pub mod connectivity;
pub mod error;
pub mod grid;
pub mod m2hs;
pub mod madelung;
pub mod sphere;
pub mod util;

pub use error::{Error, Result};
