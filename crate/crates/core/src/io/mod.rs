//! File formats: JSON model files and CSV paths, observations, samples and
//! traces. Everything here works in `f64`.

mod model;
mod tables;

pub use model::{
    ctbn_model_json, read_ctbn_model, read_mjp_model, write_ctbn_model, write_mjp_model,
    CtbnInitialFile, CtbnModelFile, CtbnNodeFile, LayoutName, MjpModelFile,
};
pub use tables::{
    parse_payload, read_ctbn_observations_csv, read_observations_csv, read_path_csv,
    write_ctbn_observations_csv, write_ctbn_trace_csv, write_json, write_observations_csv,
    write_path_csv, write_trace_csv, SampleWriter, StatsWriter,
};
