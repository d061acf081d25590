//! Fundamental solutions of factored linear q-difference systems built from
//! iterated Jackson integrals, the q-deformation of factored differential
//! operators, and numerical confluence checks as q → 1.

pub mod deformation;
pub mod domain;
pub mod error;
pub mod harness;
pub mod operators;
pub mod qfunctions;
pub mod quadrature;
pub mod series;
pub mod solutions;
pub mod summation;

pub use domain::{LogPoint, QParam, SectorDomain};
pub use error::{Error, Result};
pub use series::{LaurentSeries, Valuation};
