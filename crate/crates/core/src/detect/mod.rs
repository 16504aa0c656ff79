//! One-class classification in C-space: SVM training and scoring, kernel
//! density negatives and per-cluster models.

mod cluster;
mod kde;
mod ocsvm;

pub use cluster::{
    attribute_sensors, cluster_split, kmeans, Attribution, ClusterSet, KMeansFit, KMeansOptions, MajorityVote,
    NearestCentroid, Routed, Router, RouterRegistry, WeightedAverage,
};
pub use kde::{generate_negatives, kde_density, negative_box, scott_bandwidth, KdeModel, NegativeSampling};
pub use ocsvm::{rbf_kernel, score, train_ocsvm, train_ocsvm_with, OcsvmModel, SmoOptions};
