//! Operation counting, power-law fitting, pessimistic bound checks,
//! closed-form cost model and speedup metrics.

mod bounds;
mod cost_model;
mod counters;
mod fit;
mod report;
mod sweep;

pub use bounds::{check_bound, BoundSample, BoundVerdict, Phase, CALIBRATION_MARGIN};
pub use cost_model::{dominant_term, eval_t_in_pes, eval_t_pes, CostModelParams};
pub use counters::{OpCounters, PhaseTally};
pub use fit::{fit_exponent, FitError, PowerLawFit};
pub use report::{
    check_pessimistic_bounds, compute_speedup, PhaseFit, ProfileError, ProfileRun, ReportRow, ScalingReport,
    Speedup, SpeedupRow,
};
pub use sweep::{run_sweep, sweep_instance, SweepConfig};
