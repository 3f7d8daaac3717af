//! Kronecker-structured space-time adaptive processing: covariance estimation,
//! clutter-cancellation filters, a SIRV clutter simulator and the Monte Carlo
//! harness used to evaluate them.

pub mod covariance;
pub mod error;
pub mod eval;
pub mod io;
pub mod linalg;
pub mod par;
pub mod sim;
pub mod stap;

pub use error::{Error, Result};
