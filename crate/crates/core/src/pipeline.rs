//! Search configurations: single-stage real-valued search, PCA-reduced
//! search, barcode-only search, and two-stage barcode prefilter + rerank.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binarize::{binarize_matrix, BinarizationMethod};
use crate::error::{Error, Result};
use crate::hamming::{HammingIndex, TopNResult};
use crate::pca::{pca_fit, pca_transform, PcaModel};
use crate::realvalue::{nearest, DistanceMetric};
use crate::store::{BarcodeMatrix, FeatureMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMode {
    /// Nearest training row over full features.
    RealValued,
    /// Nearest training row after PCA projection.
    ReducedReal,
    /// Nearest training barcode by Hamming distance.
    BarcodeOnly,
    /// Top-N barcodes, then nearest among them over full features.
    TwoStage,
    /// Top-N min-max barcodes of PCA projections, then nearest over full features.
    ReducedBarcode,
}

impl SearchMode {
    pub fn is_reduced(self) -> bool {
        matches!(self, SearchMode::ReducedReal | SearchMode::ReducedBarcode)
    }

    pub fn is_two_stage(self) -> bool {
        matches!(self, SearchMode::TwoStage | SearchMode::ReducedBarcode)
    }

    pub fn uses_barcodes(self) -> bool {
        matches!(
            self,
            SearchMode::BarcodeOnly | SearchMode::TwoStage | SearchMode::ReducedBarcode
        )
    }
}

impl fmt::Display for SearchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SearchMode::RealValued => "realvalued",
            SearchMode::ReducedReal => "reducedreal",
            SearchMode::BarcodeOnly => "barcodeonly",
            SearchMode::TwoStage => "twostage",
            SearchMode::ReducedBarcode => "reducedbarcode",
        })
    }
}

impl FromStr for SearchMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "realvalued" => SearchMode::RealValued,
            "reducedreal" => SearchMode::ReducedReal,
            "barcodeonly" => SearchMode::BarcodeOnly,
            "twostage" => SearchMode::TwoStage,
            "reducedbarcode" => SearchMode::ReducedBarcode,
            other => return Err(Error::Config(format!("unknown search mode {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub mode: SearchMode,
    /// Single-stage metric, or the stage-2 rerank metric.
    pub metric: DistanceMetric,
    /// Barcode rule for barcode modes.
    pub method: BinarizationMethod,
    /// Stage-1 candidate count N; only read by two-stage modes.
    pub n_candidates: usize,
    /// Retained principal components; set exactly for the reduced modes.
    pub n_pca: Option<usize>,
}

impl SearchConfig {
    pub fn new(mode: SearchMode, metric: DistanceMetric) -> Self {
        Self {
            mode,
            metric,
            method: BinarizationMethod::MinMax,
            n_candidates: 1,
            n_pca: None,
        }
    }

    pub fn with_method(mut self, method: BinarizationMethod) -> Self {
        self.method = method;
        self
    }

    pub fn with_candidates(mut self, n: usize) -> Self {
        self.n_candidates = n;
        self
    }

    pub fn with_pca(mut self, k: usize) -> Self {
        self.n_pca = Some(k);
        self
    }

    /// Shape-independent checks.
    pub fn validate(&self) -> Result<()> {
        if self.mode.is_two_stage() && self.n_candidates == 0 {
            return Err(Error::Config("n_candidates must be at least 1".into()));
        }
        match (self.mode.is_reduced(), self.n_pca) {
            (true, None) => {
                return Err(Error::Config(format!("mode {} requires n_pca", self.mode)))
            }
            (false, Some(_)) => {
                return Err(Error::Config(format!(
                    "mode {} does not take n_pca",
                    self.mode
                )))
            }
            (true, Some(k)) if k < 2 => {
                return Err(Error::Config(format!("n_pca must be at least 2, got {k}")))
            }
            _ => {}
        }
        if self.mode == SearchMode::ReducedBarcode && self.method != BinarizationMethod::MinMax {
            return Err(Error::Config(
                "reducedbarcode mode binarizes with minmax only".into(),
            ));
        }
        Ok(())
    }

    /// Full validation against the data shapes, run before any computation.
    pub fn validate_for(&self, train: &FeatureMatrix, test: &FeatureMatrix) -> Result<()> {
        self.validate()?;
        if train.cols() != test.cols() {
            return Err(Error::Config(format!(
                "train has {} columns but test has {}",
                train.cols(),
                test.cols()
            )));
        }
        if let Some(k) = self.n_pca {
            let limit = train.rows().min(train.cols());
            if k > limit {
                return Err(Error::Config(format!(
                    "n_pca {k} exceeds min(train rows, cols) = {limit}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryResult {
    /// Stage-1 candidates for barcode modes.
    pub stage1: Option<TopNResult>,
    /// Final training row.
    pub index: usize,
    /// Final distance: the real-valued distance, or the Hamming distance in
    /// barcode-only mode.
    pub distance: f64,
}

impl QueryResult {
    pub fn new(stage1: Option<TopNResult>, index: usize, distance: f64) -> Self {
        Self {
            stage1,
            index,
            distance,
        }
    }
}

/// Training-side structures, built once and shared by all queries.
#[derive(Debug)]
pub struct SearchEngine<'a> {
    config: SearchConfig,
    train: &'a FeatureMatrix,
    pca: Option<PcaModel>,
    reduced_train: Option<FeatureMatrix>,
    index: Option<HammingIndex>,
}

impl<'a> SearchEngine<'a> {
    pub fn build(train: &'a FeatureMatrix, config: SearchConfig) -> Result<Self> {
        config.validate_for(train, train)?;
        let pca = config.n_pca.map(|k| pca_fit(train, k)).transpose()?;
        let reduced_train = pca.as_ref().map(|m| pca_transform(m, train)).transpose()?;
        let index = if config.mode.uses_barcodes() {
            let source = reduced_train.as_ref().unwrap_or(train);
            Some(HammingIndex::build(binarize_matrix(
                source,
                config.method,
            )?)?)
        } else {
            None
        };
        Ok(Self {
            config,
            train,
            pca,
            reduced_train,
            index,
        })
    }

    pub fn config(&self) -> &SearchConfig {
        &self.config
    }

    pub fn pca(&self) -> Option<&PcaModel> {
        self.pca.as_ref()
    }

    /// Answers every test row; parallel across queries, deterministic output.
    pub fn search(&self, test: &FeatureMatrix) -> Result<Vec<QueryResult>> {
        self.config.validate_for(self.train, test)?;
        let reduced_test = self
            .pca
            .as_ref()
            .map(|m| pca_transform(m, test))
            .transpose()?;
        let query_codes: Option<BarcodeMatrix> = if self.config.mode.uses_barcodes() {
            let source = reduced_test.as_ref().unwrap_or(test);
            Some(binarize_matrix(source, self.config.method)?)
        } else {
            None
        };
        (0..test.rows())
            .into_par_iter()
            .map(|q| self.answer(q, test, reduced_test.as_ref(), query_codes.as_ref()))
            .collect()
    }

    fn answer(
        &self,
        q: usize,
        test: &FeatureMatrix,
        reduced_test: Option<&FeatureMatrix>,
        codes: Option<&BarcodeMatrix>,
    ) -> Result<QueryResult> {
        let metric = self.config.metric;
        match self.config.mode {
            SearchMode::RealValued => {
                let (index, distance) = nearest(self.train, None, test.row(q), metric)?;
                Ok(QueryResult::new(None, index, distance))
            }
            SearchMode::ReducedReal => {
                let corpus = self.reduced_train.as_ref().expect("built with pca");
                let query = reduced_test.expect("projected with pca").row(q);
                let (index, distance) = nearest(corpus, None, query, metric)?;
                Ok(QueryResult::new(None, index, distance))
            }
            SearchMode::BarcodeOnly => {
                let index = self.index.as_ref().expect("built with barcodes");
                let top = index.top_n(codes.expect("binarized").row(q), 1)?;
                let (best, distance) = (top.indices[0], top.distances[0] as f64);
                Ok(QueryResult::new(Some(top), best, distance))
            }
            SearchMode::TwoStage | SearchMode::ReducedBarcode => {
                let index = self.index.as_ref().expect("built with barcodes");
                let top =
                    index.top_n(codes.expect("binarized").row(q), self.config.n_candidates)?;
                // Rerank always uses the full features, never the projections.
                let (best, distance) =
                    nearest(self.train, Some(&top.indices), test.row(q), metric)?;
                Ok(QueryResult::new(Some(top), best, distance))
            }
        }
    }
}

/// One result per row of `test`.
pub fn run_search(
    train: &FeatureMatrix,
    test: &FeatureMatrix,
    config: &SearchConfig,
) -> Result<Vec<QueryResult>> {
    config.validate_for(train, test)?;
    SearchEngine::build(train, *config)?.search(test)
}

pub const RESULTS_HEADER: &str = "# query_row train_row distance";

/// Results file body: a header line, then `query train distance` per query.
pub fn format_results(results: &[QueryResult]) -> String {
    let mut out = String::with_capacity(32 * (results.len() + 1));
    out.push_str(RESULTS_HEADER);
    out.push('\n');
    for (q, r) in results.iter().enumerate() {
        writeln!(out, "{q} {} {}", r.index, r.distance).unwrap();
    }
    out
}

/// Parses a results file into `(query_row, train_row, distance)` triples.
pub fn parse_results(text: &str) -> Result<Vec<(usize, usize, f64)>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == RESULTS_HEADER => {}
        _ => {
            return Err(Error::Format(format!(
                "results file must start with {RESULTS_HEADER:?}"
            )))
        }
    }
    lines
        .map(|(i, line)| {
            let err = || Error::Parse {
                line: i + 1,
                message: format!("expected `query train distance`, found {line:?}"),
            };
            let mut parts = line.split(' ');
            let q = parts.next().and_then(|s| s.parse().ok()).ok_or_else(err)?;
            let t = parts.next().and_then(|s| s.parse().ok()).ok_or_else(err)?;
            let d = parts.next().and_then(|s| s.parse().ok()).ok_or_else(err)?;
            if parts.next().is_some() {
                return Err(err());
            }
            Ok((q, t, d))
        })
        .collect()
}
