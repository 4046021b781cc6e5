//! Binary "barcodes" derived from real-valued embeddings, with exact
//! Hamming-distance retrieval and a two-stage barcode-prefilter +
//! real-valued-rerank search.
//!
//! The crate is organised by stage:
//!
//! * [`store`]: feature, barcode and label containers and their file formats;
//! * [`binarize`]: min-max and zero-threshold barcodes;
//! * [`pca`]: principal components fit on training rows;
//! * [`hamming`]: exact top-N search under Hamming distance;
//! * [`realvalue`]: brute-force L1 / L2 nearest neighbour;
//! * [`pipeline`]: search configurations wiring the above together;
//! * [`metrics`]: patch-level, class-averaged and total accuracy;
//! * [`synth`]: seeded Gaussian-cluster data for desk-scale runs.

pub mod binarize;
pub mod error;
pub mod hamming;
pub mod metrics;
pub mod pca;
pub mod pipeline;
pub mod realvalue;
pub mod store;
pub mod synth;

pub use binarize::{binarize_matrix, binarize_minmax, binarize_zero_threshold, BinarizationMethod};
pub use error::{Error, Result};
pub use hamming::{build_index, hamming_distance, HammingIndex, TopNResult};
pub use metrics::{evaluate, labels_from_results, total_accuracy, ClassHits, EvaluationReport};
pub use pca::{explained_variance_ratio, load_pca, pca_fit, pca_transform, save_pca, PcaModel};
pub use pipeline::{run_search, QueryResult, SearchConfig, SearchEngine, SearchMode};
pub use realvalue::{nearest, vector_distance, DistanceMetric};
pub use store::{
    load_barcodes, load_features, load_labels, save_barcodes, save_features, save_labels, Barcode,
    BarcodeMatrix, BarcodeRef, FeatureMatrix, LabelVector,
};
pub use synth::{generate, SyntheticData, SyntheticSpec};
