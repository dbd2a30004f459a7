//! Empirical Hamming-distance histogram, the estimator's sufficient statistic.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bitdata::{hamming_bytes, BitDataset};
use crate::error::{Error, Result};

/// Counts of unordered sample pairs per Hamming distance.
///
/// `counts[r]` is the number of pairs `(i, j)` with `i < j` at distance `r`,
/// for `r` in `0..=n_bits`. Histograms produced by [`distance_histogram`]
/// satisfy `sum(counts) = n_samples * (n_samples - 1) / 2`; synthetic
/// histograms built through [`DistanceHistogram::new`] are only shape-checked.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistanceHistogram {
    n_bits: usize,
    n_samples: usize,
    counts: Vec<u64>,
}

impl DistanceHistogram {
    /// Build from raw counts; `counts` must have length `n_bits + 1`.
    pub fn new(n_bits: usize, n_samples: usize, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != n_bits + 1 {
            return Err(Error::BadHistogramShape {
                expected: n_bits + 1,
                got: counts.len(),
            });
        }
        Ok(Self {
            n_bits,
            n_samples,
            counts,
        })
    }

    pub fn n_bits(&self) -> usize {
        self.n_bits
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Total number of pairs in the histogram.
    pub fn pair_count(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Largest distance with a nonzero count.
    pub fn max_nonzero_r(&self) -> Option<usize> {
        self.counts.iter().rposition(|&c| c > 0)
    }

    /// Number of nonzero bins with `r <= r_max`.
    pub fn nonzero_bins_up_to(&self, r_max: usize) -> usize {
        self.counts[..=r_max.min(self.n_bits)]
            .iter()
            .filter(|&&c| c > 0)
            .count()
    }

    /// Mean pair distance over bins with `r <= r_max`.
    pub fn mean_distance_up_to(&self, r_max: usize) -> f64 {
        let hi = r_max.min(self.n_bits);
        let mut mass = 0u64;
        let mut acc = 0.0;
        for (r, &c) in self.counts[..=hi].iter().enumerate() {
            mass += c;
            acc += r as f64 * c as f64;
        }
        acc / mass as f64
    }
}

/// All-pairs Hamming-distance histogram of a dataset.
///
/// Cost is `O(n_samples^2 * n_bits)`. Pairs are split across threads by row;
/// partial histograms merge by integer addition, so the result is identical
/// for every thread count.
pub fn distance_histogram(ds: &BitDataset) -> Result<DistanceHistogram> {
    let n = ds.n_samples();
    if n < 2 {
        return Err(Error::NotEnoughSamples { needed: 2, got: n });
    }
    let n_bits = ds.n_bits();
    let counts = (0..n - 1)
        .into_par_iter()
        .fold(
            || vec![0u64; n_bits + 1],
            |mut acc, i| {
                let row_i = ds.row(i);
                for j in (i + 1)..n {
                    let d = hamming_bytes(row_i, ds.row(j));
                    acc[d as usize] += 1;
                }
                acc
            },
        )
        .reduce(
            || vec![0u64; n_bits + 1],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    DistanceHistogram::new(n_bits, n, counts)
}
