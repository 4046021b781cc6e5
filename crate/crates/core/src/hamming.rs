//! Exact Hamming-distance search over packed barcodes.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::store::{BarcodeMatrix, BarcodeRef};

/// Popcount of the XOR of two equal-length packed byte strings.
#[inline]
pub(crate) fn xor_popcount(a: &[u8], b: &[u8]) -> u32 {
    debug_assert_eq!(a.len(), b.len());
    let mut total = 0u32;
    let mut ca = a.chunks_exact(8);
    let mut cb = b.chunks_exact(8);
    for (x, y) in (&mut ca).zip(&mut cb) {
        let x = u64::from_le_bytes(x.try_into().unwrap());
        let y = u64::from_le_bytes(y.try_into().unwrap());
        total += (x ^ y).count_ones();
    }
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        total += (x ^ y).count_ones();
    }
    total
}

/// Number of differing bit positions between `a` and `b`.
pub fn hamming_distance(a: BarcodeRef<'_>, b: BarcodeRef<'_>) -> Result<u32> {
    if a.bits() != b.bits() {
        return Err(Error::dimension("hamming distance", a.bits(), b.bits()));
    }
    // Pad bits are zero on both sides, so they cancel in the XOR.
    Ok(xor_popcount(a.bytes(), b.bytes()))
}

/// Corpus rows ordered by `(distance, index)` ascending.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TopNResult {
    pub indices: Vec<usize>,
    pub distances: Vec<u32>,
}

impl TopNResult {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Candidate {
    distance: u32,
    index: usize,
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.distance
            .cmp(&other.distance)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone)]
pub struct HammingIndex {
    corpus: BarcodeMatrix,
}

impl HammingIndex {
    pub fn build(corpus: BarcodeMatrix) -> Result<Self> {
        if corpus.rows() == 0 {
            return Err(Error::Parameter(
                "cannot index an empty barcode corpus".into(),
            ));
        }
        Ok(Self { corpus })
    }

    pub fn row_count(&self) -> usize {
        self.corpus.rows()
    }

    pub fn bits_per_row(&self) -> usize {
        self.corpus.bits_per_row()
    }

    pub fn corpus(&self) -> &BarcodeMatrix {
        &self.corpus
    }

    /// The `n` corpus rows nearest to `query`, ties cut by ascending index.
    /// Returns every row when `n` exceeds the corpus size.
    pub fn top_n(&self, query: BarcodeRef<'_>, n: usize) -> Result<TopNResult> {
        if query.bits() != self.bits_per_row() {
            return Err(Error::dimension(
                "query barcode",
                self.bits_per_row(),
                query.bits(),
            ));
        }
        if n == 0 {
            return Err(Error::Parameter("n must be at least 1".into()));
        }
        let n = n.min(self.row_count());
        let q = query.bytes();
        let distances = self.corpus.iter_rows().map(|r| xor_popcount(q, r.bytes()));

        let mut sorted: Vec<Candidate> = if n * 4 >= self.row_count() {
            let mut all: Vec<Candidate> = distances
                .enumerate()
                .map(|(index, distance)| Candidate { distance, index })
                .collect();
            all.select_nth_unstable(n - 1);
            all.truncate(n);
            all
        } else {
            // Max-heap holding the best n seen so far; its top is the worst of them.
            let mut heap = BinaryHeap::with_capacity(n + 1);
            for (index, distance) in distances.enumerate() {
                let c = Candidate { distance, index };
                if heap.len() < n {
                    heap.push(c);
                } else if c < *heap.peek().unwrap() {
                    heap.pop();
                    heap.push(c);
                }
            }
            heap.into_vec()
        };
        sorted.sort_unstable();
        Ok(TopNResult {
            indices: sorted.iter().map(|c| c.index).collect(),
            distances: sorted.iter().map(|c| c.distance).collect(),
        })
    }

    /// Runs `top_n` for every row of `queries` in parallel; output order follows
    /// the query rows.
    pub fn top_n_batch(&self, queries: &BarcodeMatrix, n: usize) -> Result<Vec<TopNResult>> {
        if queries.bits_per_row() != self.bits_per_row() {
            return Err(Error::dimension(
                "query barcodes",
                self.bits_per_row(),
                queries.bits_per_row(),
            ));
        }
        (0..queries.rows())
            .into_par_iter()
            .map(|i| self.top_n(queries.row(i), n))
            .collect()
    }
}

/// Convenience wrapper for [`HammingIndex::build`].
pub fn build_index(corpus: BarcodeMatrix) -> Result<HammingIndex> {
    HammingIndex::build(corpus)
}
