//! Chabauty-Coleman zero sets for genus 3 odd-degree hyperelliptic curves
//! whose Jacobians have Mordell-Weil rank 1.

pub mod batch;
pub mod error;
pub mod coleman;
pub mod curve;
pub mod fp;
pub mod frobenius;
pub mod jacobian;
pub mod linalg;
pub mod local;
pub mod padic;
pub mod pipeline;
pub mod poly;
pub mod recognize;
pub mod roots;
pub mod series;

pub use error::{Error, Result};
pub use padic::{PadicError, PadicNumber};
pub use series::PadicPowerSeries;
