//! Matched-filter variants, from the closed-form robust filter to the
//! albedo-corrected reweighted l1 iteration.

mod config;
mod ops;
mod retrieval;

pub use config::{CovarianceMode, FilterConfig, Variant, DEFAULT_ALBEDO_FLOOR, DEFAULT_EPSILON, DEFAULT_ITERATIONS};
pub use ops::{
    albedo_factor, energy, ista_update, matched_filter_closed_form, reweight, soft_threshold, WhitenedTarget,
};
pub use retrieval::{
    retrieve_partition, run_retrieval, run_scene, PartitionDiagnostics, PartitionFailure, PartitionRetrieval,
    RetrievalResult,
};
