//! Hybrid plant/observer simulation on perturbed sampling schedules.

mod hybrid;
pub mod integrate;
mod noise;
pub mod output;
mod schedule;

pub(crate) use hybrid::{check_dims, check_horizon, check_step};
pub use hybrid::{
    default_step, simulate_sampled_data, HybridTrajectory, InitialState, JumpRecord, ResetRule,
    SimError, SimOptions, DIVERGENCE_BOUND,
};
pub use integrate::{integrate_segment, rk4_step, IntegrateError, Segment};
pub use noise::NoiseSignal;
pub use schedule::{generate_schedule, Perturbation, SamplingSchedule, ScheduleError};
