//! Simulation toolkit for a self-powered wireless sensor node.
//!
//! The node drains its battery while the MCU is on (sensing, processing and
//! radio traffic) and recharges it from a piezoelectric vibration harvester
//! while the MCU is off. The crate covers each piece of that loop:
//!
//! - [`energy`]: per-activity energy consumption with first-order radio model
//! - [`lti`]: polynomial/rational algebra, the mass-spring-damper harvester
//!   plant, RK4 step simulation and step-response metrics
//! - [`pid`]: PID transfer function, Ziegler-Nichols tuning and the
//!   ultimate-gain search on a sampled proportional loop
//! - [`stability`]: Routh-Hurwitz tables and stability verdicts
//! - [`nodesim`]: the MCU on/off state machine coupling drain and harvest
//! - [`scenario`]: JSON scenario files and built-in presets

pub mod energy;
pub mod error;
pub mod lti;
pub mod nodesim;
pub mod pid;
pub mod poly;
pub mod scenario;
pub mod stability;

pub use energy::{EnergyBreakdown, EnergyParams};
pub use error::{Error, Result};
pub use lti::{MsdParams, SimTrace, StepMetrics, TransferFunction};
pub use nodesim::{HarvestConfig, McuMode, NodeState, NodeTrace};
pub use pid::{OscillationSearchConfig, PidGains, UltimateParams};
pub use poly::Polynomial;
pub use stability::{RouthTable, Stability, StabilityVerdict};
