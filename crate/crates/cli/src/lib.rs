//! Problem-file front end for `specflow-core`: parsing, dispatch, reports and curve export.

pub mod app;
pub mod curves;
pub mod error;
pub mod problem;
pub mod report;

pub use app::{
    batch_exit_code, execute, execute_file, prepare, run_batch, BatchEntry, Command, Options,
    Output,
};
pub use curves::{emit_curves, lambda_grid, CURVES_HEADER};
pub use error::CliError;
pub use problem::{
    parse_problem, BlockInput, EnvelopeInput, Mode, OracleControls, OracleInput, Payload,
    ProblemFile, Tolerances, DEFAULT_SAMPLES, DEFAULT_WITNESS_TOL, DEFAULT_ZERO_TOL,
    SCHEMA_VERSION, SYMMETRY_REPAIR,
};
pub use report::{run, Provenance, Report, ResultBody, SpectrumReport, Status};
