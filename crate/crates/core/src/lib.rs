//! Closed-loop simulation of a 3-DOF cylindrical manipulator under
//! sliding-mode control, with a genetic algorithm for tuning the controller.
//!
//! The crate is organized bottom-up:
//!
//! - [`dynamics`]: plant model, forward and inverse dynamics
//! - [`reference`]: sinusoidal joint-space reference
//! - [`control`]: sliding surfaces, reaching law, Lyapunov diagnostics
//! - [`sim`]: fixed-step RK4 closed loop, disturbances and metrics
//! - [`ga`]: real-coded GA minimizing the integral squared tracking error

pub mod control;
pub mod dynamics;
pub mod ga;
pub mod reference;
pub mod sim;

pub use control::{SmcGains, SwitchingMode};
pub use dynamics::{JointState, ManipulatorParams};
pub use ga::{GaConfig, GaReport, Individual};
pub use reference::{RefSample, ReferenceSpec};
pub use sim::{DisturbanceShape, DisturbanceSpec, SimConfig, SimResult};

pub use nalgebra::Vector3;
