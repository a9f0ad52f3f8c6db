//! File formats: JSPLIB instances, labeled datasets and trained models.

mod dataset;
mod jsplib;
mod model_file;

use std::path::Path;

pub use dataset::{
    instance_digest, read_dataset, read_dataset_from, write_dataset, write_dataset_to, Dataset, DatasetRecord,
    Slowdown, SolverStatus, DATASET_FORMAT, DATASET_VERSION,
};
pub use jsplib::{format_jsplib, parse_jsplib};
pub use model_file::{
    load_model, load_model_expecting, model_from_str, model_to_string, save_model, ModelArtifact, MODEL_FORMAT,
    MODEL_VERSION,
};

use crate::error::Result;
use crate::instance::Instance;

pub fn read_instance(path: impl AsRef<Path>) -> Result<Instance> {
    parse_jsplib(&std::fs::read_to_string(path)?)
}
