//! Retrieval accuracy.
//!
//! * `eta_p`: fraction of queries whose retrieved label equals the true label.
//! * `eta_w`: mean over ground-truth classes of the per-class hit rate.
//! * `eta_total`: `eta_p * eta_w`.
//!
//! Classes are the distinct true labels. A retrieved label that never occurs
//! among the true labels is simply a miss.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::pipeline::QueryResult;
use crate::store::LabelVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassHits {
    pub hits: usize,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub eta_p: f64,
    pub eta_w: f64,
    pub eta_total: f64,
    pub per_class_hits: BTreeMap<u32, ClassHits>,
    pub n_tot: usize,
}

#[inline]
pub fn total_accuracy(eta_p: f64, eta_w: f64) -> f64 {
    eta_p * eta_w
}

pub fn evaluate(
    true_labels: &LabelVector,
    retrieved_labels: &LabelVector,
) -> Result<EvaluationReport> {
    if true_labels.len() != retrieved_labels.len() {
        return Err(Error::dimension(
            "retrieved labels",
            true_labels.len(),
            retrieved_labels.len(),
        ));
    }
    if true_labels.is_empty() {
        return Err(Error::Parameter("cannot evaluate zero queries".into()));
    }

    let mut per_class: BTreeMap<u32, ClassHits> = BTreeMap::new();
    for (&t, &r) in true_labels
        .as_slice()
        .iter()
        .zip(retrieved_labels.as_slice())
    {
        let entry = per_class.entry(t).or_insert(ClassHits { hits: 0, size: 0 });
        entry.size += 1;
        if t == r {
            entry.hits += 1;
        }
    }

    let n_tot = true_labels.len();
    let hits: usize = per_class.values().map(|c| c.hits).sum();
    let eta_p = hits as f64 / n_tot as f64;
    let eta_w = per_class
        .values()
        .map(|c| c.hits as f64 / c.size as f64)
        .sum::<f64>()
        / per_class.len() as f64;

    Ok(EvaluationReport {
        eta_p,
        eta_w,
        eta_total: total_accuracy(eta_p, eta_w),
        per_class_hits: per_class,
        n_tot,
    })
}

/// Looks up the training label of each query's final match.
pub fn labels_from_results(
    results: &[QueryResult],
    train_labels: &LabelVector,
) -> Result<LabelVector> {
    results
        .iter()
        .map(|r| {
            train_labels.get(r.index).ok_or(Error::Bounds {
                index: r.index,
                len: train_labels.len(),
            })
        })
        .collect::<Result<Vec<u32>>>()
        .map(LabelVector::new)
}

impl EvaluationReport {
    /// Line-oriented `key=value` form. Floats use shortest round-trip formatting.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "eta_p={}", self.eta_p).unwrap();
        writeln!(out, "eta_w={}", self.eta_w).unwrap();
        writeln!(out, "eta_total={}", self.eta_total).unwrap();
        writeln!(out, "n_tot={}", self.n_tot).unwrap();
        for (class, c) in &self.per_class_hits {
            writeln!(out, "per_class.{class}={}/{}", c.hits, c.size).unwrap();
        }
        out
    }

    pub fn from_kv(text: &str) -> Result<Self> {
        let mut eta = [None; 3];
        let mut n_tot = None;
        let mut per_class_hits = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let parse_err = |message: String| Error::Parse {
                line: line_no,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_err(format!("expected key=value, found {line:?}")))?;
            let float = || {
                value
                    .parse::<f64>()
                    .map_err(|_| parse_err(format!("bad number {value:?}")))
            };
            match key {
                "eta_p" => eta[0] = Some(float()?),
                "eta_w" => eta[1] = Some(float()?),
                "eta_total" => eta[2] = Some(float()?),
                "n_tot" => {
                    n_tot = Some(
                        value
                            .parse()
                            .map_err(|_| parse_err(format!("bad count {value:?}")))?,
                    )
                }
                _ => {
                    let class = key
                        .strip_prefix("per_class.")
                        .and_then(|c| c.parse::<u32>().ok())
                        .ok_or_else(|| parse_err(format!("unknown key {key:?}")))?;
                    let (hits, size) = value
                        .split_once('/')
                        .and_then(|(h, s)| Some((h.parse().ok()?, s.parse().ok()?)))
                        .ok_or_else(|| parse_err(format!("expected hits/size, found {value:?}")))?;
                    per_class_hits.insert(class, ClassHits { hits, size });
                }
            }
        }
        let missing = |k: &str| Error::Parse {
            line: 0,
            message: format!("missing key {k}"),
        };
        Ok(Self {
            eta_p: eta[0].ok_or_else(|| missing("eta_p"))?,
            eta_w: eta[1].ok_or_else(|| missing("eta_w"))?,
            eta_total: eta[2].ok_or_else(|| missing("eta_total"))?,
            n_tot: n_tot.ok_or_else(|| missing("n_tot"))?,
            per_class_hits,
        })
    }

    /// Human-readable summary with percentages.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "queries      {}", self.n_tot).unwrap();
        writeln!(out, "classes      {}", self.per_class_hits.len()).unwrap();
        writeln!(out, "eta_p        {:6.2}%", 100.0 * self.eta_p).unwrap();
        writeln!(out, "eta_w        {:6.2}%", 100.0 * self.eta_w).unwrap();
        writeln!(out, "eta_total    {:6.2}%", 100.0 * self.eta_total).unwrap();
        out
    }
}
