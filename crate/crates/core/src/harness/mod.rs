//! Configuration, comparison and persistence for command-line runs.

mod compare;
mod config;
mod output;
mod run;

pub use compare::{
    compare, merge, run_replica, run_replicas, ComparisonReport, FluxEstimate, LadderEntry,
    ReplicaSummary, StationaryDistance, TimeDistance,
};
pub use config::{parse_config, regime_boundary, InitialProfile, Mode, RunConfig, KEYS};
pub use output::{
    comparison_csv, error_document, observations_csv, read_table, stationary_csv, write_file,
    COMPARISON_HEADER, CSV_SCHEMA_VERSION, DIAGNOSTICS_HEADER, FIELD_HEADER, OBSERVATIONS_HEADER,
    STATIONARY_HEADER,
};
pub use run::{diagnose, execute, exit_code, report, run, Diagnostics, DynkinRow, RunOutput};
