//! Experiment driver for the improper signaling solvers.
//!
//! Channel ensembles are generated per index from a single seed, so any
//! subset of an ensemble can be rerun in isolation. Drivers return rows;
//! [`output`] writes them as CSV or JSON with a header echoing the config.

pub mod channels;
pub mod config;
pub mod experiments;
pub mod output;

pub use channels::{gen_channels, named_channel, ChannelName};
pub use config::{
    ConfigError, ExperimentConfig, ExperimentKind, InstanceSource, ProfileSpec, SolverConfig,
};
pub use experiments::{
    run_maxmin, run_ratio, run_region, run_table_case, table_profile, REFERENCE_SUM_BITS,
};

/// Process exit codes of the CLI.
pub mod exit {
    pub const OK: i32 = 0;
    pub const CONFIG: i32 = 2;
    pub const SOLVER_FAILURES: i32 = 3;
}
