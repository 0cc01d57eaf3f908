//! Sensitivity forecasting and Monte Carlo simulation for resonant
//! optomechanical detection of vector ultralight dark matter.

pub mod app;
pub mod bounds;
pub mod config;
pub mod constants;
pub mod dmfield;
pub mod error;
pub mod estimator;
pub mod grid;
pub mod io;
pub mod materials;
pub mod membrane;
pub mod montecarlo;
pub mod noisebudget;
pub mod scanplan;

pub use error::{Error, Result};
