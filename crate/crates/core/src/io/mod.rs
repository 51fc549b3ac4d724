//! Binary feature/label containers, synthetic data, task splits and
//! configuration files.

mod config;
mod format;
mod split;
mod synthetic;

pub use config::{parse_config, parse_config_str, parse_synthetic_spec, parse_synthetic_str, RunConfig};
pub use format::{
    decode_matrix, encode_labels, encode_matrix, encode_model, import_csv, read_labels, read_matrix, read_model,
    write_labels, write_matrix, write_model, LABEL_MAGIC, MATRIX_MAGIC,
};
pub use split::{split_tasks, Protocol, TaskSplit};
pub use synthetic::{generate_synthetic, SyntheticData, SyntheticSpec, REDUNDANCY_JITTER};
