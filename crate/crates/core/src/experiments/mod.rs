//! Named scenarios, sweeps, rate fits and file output.

pub mod config;
pub mod fit;
pub mod output;
pub mod scenarios;

pub use config::{
    load_config, parse_override, Compensation, InitialState, ModelKind, ScenarioConfig,
    ScenarioId,
};
pub use fit::{analytic_uncorrected, fit_rate, FitForm, FitResult, FitWindow};
pub use output::{write_output, CSV_HEADER};
pub use scenarios::{run_scenario, run_sweep, run_sweep_output, Curve, ScenarioOutput, SweepRow};
