//! Entropy-rate estimators for controlled dynamical systems and an
//! intrinsically motivated sampling MPC planner built on them.
//!
//! The objective maximized by the planner is the gap between the open-loop
//! and closed-loop Kolmogorov-Sinai entropy rates of the linearized
//! dynamics along a candidate trajectory: chaos that feedback can suppress
//! scores high, chaos that cannot be influenced scores zero.

pub mod dynamics;
pub mod lyapunov;
pub mod noise;
pub mod planner;
pub mod riccati;
pub mod spectral;

pub(crate) mod par;

pub use dynamics::{DynamicsError, LinearizedStep, Model, Trajectory};
pub use planner::{CandidateScore, CemConfig, CemState, PlannerError};
pub use riccati::{CostWeights, EntropyEstimate, RiccatiError, RiccatiSolution, StabilizedLogDet};
