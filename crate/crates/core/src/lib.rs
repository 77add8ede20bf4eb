//! Numerical laboratory for predefined-time and fixed-time scalar controllers.
//!
//! * [`laws`]: the control laws, integration constants and exact solutions.
//! * [`derivatives`]: Taylor-mode time derivatives of the exact solution and
//!   their classification at the terminal time.
//! * [`integrator`]: fixed-step RK4 closed-loop simulation with a terminal
//!   standoff and exact clamp.
//! * [`analysis`]: peak location, initial-control bound and velocity checks.
//! * [`cli`]: scenario files, batch runs and CSV/JSON output.

pub mod analysis;
pub mod cli;
pub mod derivatives;
pub mod error;
pub mod integrator;
pub mod laws;
pub mod taylor;

pub use error::{Error, Result};
