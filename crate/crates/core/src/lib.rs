pub mod action;
pub mod delaygen;
pub mod error;
pub mod geometry;
pub mod hamiltonians;
pub mod instances;
pub mod rational;
pub mod solvers;
pub mod transforms;

pub use error::{Error, Result};
