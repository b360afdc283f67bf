//! Study drivers: configuration, runs, convergence/decay/tail studies,
//! probes and CSV output.

pub mod config;
pub mod csv;
pub mod simulation;
pub mod studies;

pub use config::{parse_config, parse_config_with_overrides, DtRefinement, InitSpec, Model, RunConfig, Scheme};
pub use csv::CsvTable;
pub use simulation::{run, RunSummary, Simulation, State, TraceRow};
pub use studies::{
    check_conservation, least_squares, refine, run_and_record, run_convergence_study, run_decay_study, probe_constants, run_probe_suite, run_tail_study, tail_slope, SUCCESS_MARKER,
    DecayReport, LinearFit, ProbeRow, ProbeSuite, StudyReport, StudyRow, TailFit,
};
