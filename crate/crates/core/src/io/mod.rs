//! Run configuration, field checkpoints, result tables and experiment dispatch.

mod checkpoint;
mod config;
mod experiments;
mod output;

pub use checkpoint::{
    load_field, read_field, save_field, write_field, CheckpointHeader, FORMAT_VERSION, HEADER_LEN,
    MAGIC,
};
pub use config::{
    load_config, BuildManifoldConfig, CalibrateRadiiConfig, ConeCheckConfig, Experiment,
    InitialCondition, NSearchConfig, ProbeSmoothnessConfig, RunConfig, SampleConfig,
    SimulateConfig, TrackConfig,
};
pub use experiments::{run_experiment, stream_rng, RunSummary, CODE_VERSION};
pub use output::{fmt_f64, fmt_opt, OutputDir};
