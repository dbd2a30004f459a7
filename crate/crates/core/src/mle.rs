//! Scale-dependent maximum-likelihood BID from thin Hamming shells.
//!
//! For a scale `r_A`, shell `A` holds the pairs at exactly distance `r_A` and
//! shell `B` those at `r_A` or `r_A + 1`. Under a locally constant point
//! density the volume ratio has the closed form `V_A / V_B = (r_A+1)/(d+1)`,
//! which inverts to the estimator
//!
//! ```text
//! d_hat(r_A) = (r_A + 1) * <n_B> / <n_A> - 1.
//! ```
//!
//! The resulting profile `d_hat(r)` is what the linear ansatz `d0 + d1 * r`
//! is validated against; the KL fit remains the canonical BID.

use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::histogram::DistanceHistogram;

/// Largest dimension accepted by [`hamming_volume`]; the sums are exact
/// big integers and this keeps them desk-sized.
pub const HAMMING_VOLUME_MAX_D: usize = 256;

/// Number of binary strings within Hamming distance `r` of a point in `d`
/// dimensions: `sum_{r'<=r} binom(d, r')`, exact.
pub fn hamming_volume(r: usize, d: usize) -> Result<BigUint> {
    if d > HAMMING_VOLUME_MAX_D {
        return Err(Error::VolumeCap {
            d,
            cap: HAMMING_VOLUME_MAX_D,
        });
    }
    if r > d {
        return Err(Error::VolumeDomain { r, d });
    }
    let mut term = BigUint::from(1u32);
    let mut total = BigUint::from(1u32);
    for k in 0..r {
        // binom(d, k+1) = binom(d, k) * (d - k) / (k + 1), exact at each step.
        term = term * BigUint::from(d - k) / BigUint::from(k + 1);
        total += &term;
    }
    Ok(total)
}

/// Thin-shell volume ratio `V_A / V_B = (r_A + 1) / (d + 1)` for real `d`.
///
/// For integer `d` this equals `binom(d, r_A) / (binom(d, r_A) + binom(d, r_A+1))`
/// exactly.
pub fn thin_shell_ratio(r_a: usize, d: f64) -> Result<f64> {
    if !(d - r_a as f64 + 1.0 > 0.0) {
        return Err(Error::BinomialDomain {
            d,
            r: r_a as u64,
        });
    }
    Ok((r_a as f64 + 1.0) / (d + 1.0))
}

/// Thin-shell MLE at a single scale:
/// `(r_A + 1) * (counts[r_A] + counts[r_A + 1]) / counts[r_A] - 1`.
pub fn mle_scale_dependent(hist: &DistanceHistogram, r_a: usize) -> Result<f64> {
    if r_a + 1 > hist.n_bits() {
        return Err(Error::ScaleOutOfRange {
            r: r_a,
            n_bits: hist.n_bits(),
        });
    }
    let n_a = hist.counts()[r_a];
    if n_a == 0 {
        return Err(Error::UndefinedAtScale(r_a));
    }
    let n_b = n_a + hist.counts()[r_a + 1];
    Ok((r_a as f64 + 1.0) * (n_b as f64 / n_a as f64) - 1.0)
}

/// Scale-dependent estimates across every observable scale.
#[derive(Debug, Clone)]
pub struct ScaleProfile {
    pub n_bits: usize,
    /// Scales `0..n_bits` (where the `r+1` shell exists).
    pub r_values: Vec<usize>,
    /// `d_hat(r)`; NaN where the scale is invalid.
    pub d_hat: Vec<f64>,
    /// True where `counts[r] > 0` so `d_hat` is defined.
    pub valid_mask: Vec<bool>,
    /// Shell occupancies `counts[r]` and `counts[r] + counts[r+1]`.
    pub n_a: Vec<u64>,
    pub n_b: Vec<u64>,
}

impl ScaleProfile {
    /// Valid `(r, d_hat)` points, optionally requiring `n_a >= min_count`.
    pub fn valid_points(&self, min_count: u64) -> Vec<(usize, f64)> {
        self.r_values
            .iter()
            .zip(&self.d_hat)
            .zip(&self.valid_mask)
            .zip(&self.n_a)
            .filter(|(((_, _), &ok), &na)| ok && na >= min_count)
            .map(|(((&r, &d), _), _)| (r, d))
            .collect()
    }
}

/// Apply the thin-shell MLE at every scale of the histogram.
pub fn mle_profile(hist: &DistanceHistogram) -> ScaleProfile {
    let n_bits = hist.n_bits();
    let mut profile = ScaleProfile {
        n_bits,
        r_values: (0..n_bits).collect(),
        d_hat: Vec::with_capacity(n_bits),
        valid_mask: Vec::with_capacity(n_bits),
        n_a: Vec::with_capacity(n_bits),
        n_b: Vec::with_capacity(n_bits),
    };
    for r in 0..n_bits {
        let n_a = hist.counts()[r];
        let n_b = n_a + hist.counts()[r + 1];
        profile.n_a.push(n_a);
        profile.n_b.push(n_b);
        match mle_scale_dependent(hist, r) {
            Ok(d) => {
                profile.d_hat.push(d);
                profile.valid_mask.push(true);
            }
            Err(_) => {
                profile.d_hat.push(f64::NAN);
                profile.valid_mask.push(false);
            }
        }
    }
    profile
}

/// Least-squares line with its coefficient of determination.
#[derive(Debug, Clone, Copy)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares of `y` on `x`; `None` with fewer than two points
/// or a degenerate abscissa.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LinearFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

/// Fit a line to the central part of a profile.
///
/// Keeps scales with at least `min_count` pairs in shell `A` (sparse tails
/// are noisy), drops `(1 - central_frac)/2` of the surviving bins on each
/// side, and fits `d_hat` against `r`.
pub fn profile_linear_fit(
    profile: &ScaleProfile,
    min_count: u64,
    central_frac: f64,
) -> Option<LinearFit> {
    let pts = profile.valid_points(min_count);
    let skip = ((pts.len() as f64) * (1.0 - central_frac) / 2.0).floor() as usize;
    let kept = &pts[skip..pts.len() - skip.min(pts.len())];
    let xs: Vec<f64> = kept.iter().map(|&(r, _)| r as f64).collect();
    let ys: Vec<f64> = kept.iter().map(|&(_, d)| d).collect();
    linear_fit(&xs, &ys)
}
