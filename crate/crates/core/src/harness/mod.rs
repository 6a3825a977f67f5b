//! Experiment orchestration: configuration, dataset ingestion, the
//! train-once/calibrate-per-session protocol, metrics and report files.

mod config;
mod experiment;
mod ingest;
mod metrics;
mod report;

pub use config::ExperimentConfig;
pub use experiment::{
    calibrate_session, calibration_blocks, cca_options, evaluate_sessions, run_experiment, run_on_sessions,
    session_position, split_by_repetition, train_reference, EvaluationAudit, ExperimentOutcome, Split,
};
pub use ingest::{
    day_dir_name, load_dataset, load_day, read_features, read_raw, write_dataset, write_day, DataMode, Manifest,
    FEATURES_FILE, MANIFEST_FILE, RAW_FILE,
};
pub use metrics::{correlation_metrics, pearson, within_day_upper_bound, CorrelationMetrics, DayReport};
pub use report::{
    emit_report, mapping_file_name, pca_2d, read_summary, summary_svg, write_outputs, write_summary_csv, MODEL_CSV,
    RUN_TOML, SUMMARY_CSV, SUMMARY_SVG,
};
