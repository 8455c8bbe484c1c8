//! Numerical Gauss-Bonnet-Chern and Lovelock masses of asymptotically flat
//! metrics, with the graph case and its Penrose inequality.

pub mod curvature;
pub mod error;
pub mod graphcase;
pub mod mass;
pub mod metrics;
pub mod multiindex;
pub mod quadrature;
pub mod radial;

pub use error::{Error, Result};
