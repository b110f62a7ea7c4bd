//! Simulation benchmarks: data generators with known truth, oracle bands,
//! evaluation metrics and the repetition-averaging experiment runner.

mod experiments;
mod metrics;
mod oracle;
mod settings;

pub use experiments::{
    aggregate_records, path_rep, rep_seed, run_experiment, sine_rep, sine_smoother, table_rep, tuning_paths, Experiment,
    ExperimentConfig, ExperimentOutput, FigurePoint, LinearFamily, Manifest, PathFamily, RepRecord, SineBins, SineRep,
    TABLE_RIDGE_PENALTY,
};
pub use metrics::{evaluate, mean_abs_error, mean_stderr, region_metrics, relative_optimism, KahanSum, MetricRow, Region, RepOutcome};
pub use oracle::{oracle_bands, OracleBand, OracleConfig, OracleKind};
pub use settings::{
    generate, mixture_moments, truth_for, Autocorrelation, FeatureModel, MeanFunction, NoiseDistribution, NoiseScale, Setting,
    SettingSpec, Simulation, Truth,
};
