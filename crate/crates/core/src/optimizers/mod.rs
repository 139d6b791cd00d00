//! Step rules and the full-batch driver.

pub mod adam;
pub mod runner;
pub mod schedule;
pub mod steepest;
pub mod wide;

pub use adam::{adam_step, AdamConfig, AdamState, DecayMode, DEFAULT_EPSILON};
pub use runner::{run, ConvergenceCriterion, CoordSelection, Optimizer, RunOptions};
pub use schedule::LrSchedule;
pub use steepest::{frank_wolfe_step, linear_minimizer, nsd_step, NsdConfig};
pub use wide::{WideCounterexample, WideRun, WideStep};
