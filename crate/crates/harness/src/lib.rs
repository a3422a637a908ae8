//! Experiment harness: synthetic fixtures, benchmark dataset conversion and
//! the accuracy / noise / boundary / batch-size experiment runners.

pub mod experiment;
pub mod fetch;
pub mod fixtures;

pub use experiment::{
    aggregate, plot_data, run_experiment, run_experiment_to_files, run_trial, ExperimentConfig,
    ExperimentKind, HarnessError, Method, NoiseGrid, OutputFiles, ResultRecord, TrialSetup,
};
