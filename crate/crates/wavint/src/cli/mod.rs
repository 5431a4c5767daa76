//! Configuration ingestion, pipeline orchestration and result
//! serialization — the user-facing entry point behind the `wavint` binary.

pub mod config;
pub mod runner;

pub use config::{
    parse, serialize, ConfigError, DepthSpec, KGridSpec, LayerConfig, OutputSpec, RangeSpec,
    RunConfig,
};
pub use runner::{print_summary, run, OracleKind, RunError, RunSummary};
