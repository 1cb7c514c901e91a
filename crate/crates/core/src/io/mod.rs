//! Basin files, run configuration, synthetic basins, the batch pipeline
//! and report writers.

pub mod basin;
pub mod config;
pub mod pipeline;
pub mod report;
pub mod synth;

pub use basin::{load_basin_csv, write_basin_csv, BasinRecord, StreamflowUnit};
pub use config::RunConfig;
pub use pipeline::{run_pipeline, run_pipeline_with, PipelineOutput};
pub use report::write_report;
pub use synth::{synth_basin, synth_basin_with, SynthOptions};
