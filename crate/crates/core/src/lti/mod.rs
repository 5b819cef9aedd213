//! Linear time-invariant systems: rational transfer functions, the
//! mass-spring-damper harvester plant, fixed-step simulation and step-response
//! metrics.

mod metrics;
mod sim;
mod ss;
mod tf;

pub use metrics::{step_metrics, StepMetrics};
pub use sim::{simulate_step, Sample, SimTrace, MAX_STABLE_STEP};
pub use ss::{to_state_space, StateSpace};
pub use tf::{dc_gain, msd_plant, unity_feedback, FeedbackLoop, MsdParams, TransferFunction};
