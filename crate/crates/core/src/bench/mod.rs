//! Evaluation metrics, hyperparameter search and the end-to-end studies.

mod experiments;
mod grid;
mod metrics;
mod pipeline;

pub use experiments::{
    run_experiment, AngleCompare, BoundaryGrid, ClusterReport, CpSummary, DimCompare, Experiment, ExperimentOutput,
    ExperimentRegistry, ExperimentReport, PerCluster, RoutedSummary, Scatter, ScatterPoint, VariantReport,
};
pub use grid::{classify, grid_search, CellOutcome, GridCell, GridReport};
pub use metrics::{confusion, confusion_from_str, f1, ConfusionMatrix};
pub use pipeline::{embed, simulate_pair, split_healthy, Dataset, Embedding, SimulatedPair, Split};
