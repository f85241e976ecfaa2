//! Simulation lab for Hegselmann-Krause bounded-confidence dynamics:
//! the synchronous averaging rule in arbitrary dimension (exact-rational or
//! binary64 arithmetic), the noisy asymmetric 1D variant, and runtime
//! certificates for the per-step progress and potential-decrease statements
//! that drive the known convergence bounds.

pub mod analysis;
pub mod calibration;
pub mod config;
pub mod error;
pub mod instances;
pub mod jsonl;
pub mod monitors;
pub mod noisy;
pub mod one_dim;
pub mod scalar;
pub mod sim;
pub mod verify;

pub use config::{neighbors, weight, Configuration, NeighborGraph, Point};
pub use error::{HkError, Result};
pub use scalar::Scalar;
pub use sim::{
    is_converged, simulate, step, cubic_budget, MonitorId, SimParams, StepReport, Trajectory,
};
