//! Metropolis-Hastings posterior sampling over `(d0, d1)`.
//!
//! The target is the posterior under a flat prior on the feasible region,
//!
//! ```text
//! P(d0, d1 | data)  propto  prod_r P(r)^(N_r),
//! ```
//!
//! with `P(r)` the normalized model probability, taken over every observed
//! distance bin. The normalization term matters: the bare product of
//! `binom(d(r), r) / 2^d(r)` factors is maximized at `d(r) = 2r` for every
//! bin at once, so without it the chain walks to `(d0, d1) = (0, 2)`
//! whatever the data. With it, the posterior mode coincides with the KL
//! optimum when the fit spans all observed bins. [`log_likelihood`] exposes
//! the bare sum for inspection; the sampler adds `N_pairs * ln C`.
//!
//! Proposals displace each coordinate uniformly by at most `step_fraction`
//! of its current value. Such moves are not symmetric, so by default the
//! Hastings ratio (including the reverse-reachability check) is applied;
//! `hastings_correction: false` reproduces the plain-Metropolis variant
//! that accepts on the likelihood ratio alone.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::histogram::DistanceHistogram;
use crate::special::ln_gamma;

const LN_2: f64 = std::f64::consts::LN_2;

/// Sampler settings. Defaults keep 1e5 post-burn-in steps.
#[derive(Debug, Clone)]
pub struct McmcOptions {
    /// Total Markov-chain steps, including burn-in.
    pub steps: u64,
    /// Steps discarded before recording.
    pub burn_in: u64,
    /// Maximum move amplitude as a fraction of the current coordinate value.
    pub step_fraction: f64,
    pub seed: u64,
    /// Apply the Hastings ratio for the value-scaled proposals.
    pub hastings_correction: bool,
}

impl McmcOptions {
    pub fn new(seed: u64) -> Self {
        Self {
            steps: 110_000,
            burn_in: 10_000,
            step_fraction: 0.01,
            seed,
            hastings_correction: true,
        }
    }
}

/// Sample moments of an MCMC chain (population convention: divide by n).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub mean_d0: f64,
    pub mean_d1: f64,
    pub std_d0: f64,
    pub std_d1: f64,
    pub cov_d0d1: f64,
}

/// Post-burn-in chain with its summary statistics.
#[derive(Debug, Clone)]
pub struct PosteriorSample {
    /// Recorded `(d0, d1)` states, one per post-burn-in step.
    pub chain: Vec<[f64; 2]>,
    /// Accepted fraction over the post-burn-in steps.
    pub acceptance_rate: f64,
    pub summary: PosteriorSummary,
    /// Set when the burn-in phase accepted no move at all.
    pub warning: Option<String>,
}

/// Bare log-likelihood sum `sum_r N_r * ln[binom(d(r), r) / 2^d(r)]` over
/// the observed bins, without the model normalization.
///
/// Returns `-inf` outside the feasible region (`d0 < 0` or `d(r) <= r - 1`
/// at any observed bin); the sampler rejects such moves instead of erroring.
pub fn log_likelihood(hist: &DistanceHistogram, d0: f64, d1: f64) -> f64 {
    let bins: Vec<(f64, f64)> = observed_bins(hist);
    let ln_gamma_r: Vec<f64> = bins.iter().map(|&(rf, _)| ln_gamma(rf + 1.0)).collect();
    log_likelihood_over(&bins, &ln_gamma_r, d0, d1)
}

fn observed_bins(hist: &DistanceHistogram) -> Vec<(f64, f64)> {
    hist.counts()
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(r, &c)| (r as f64, c as f64))
        .collect()
}

fn log_likelihood_over(bins: &[(f64, f64)], ln_gamma_r: &[f64], d0: f64, d1: f64) -> f64 {
    if !(d0 >= 0.0) {
        return f64::NEG_INFINITY;
    }
    let mut acc = 0.0;
    for (&(rf, count), &lg_r) in bins.iter().zip(ln_gamma_r) {
        let d = d0 + d1 * rf;
        if d - rf + 1.0 <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let lb = if rf == 0.0 || d == rf {
            0.0
        } else {
            ln_gamma(d + 1.0) - lg_r - ln_gamma(d - rf + 1.0)
        };
        acc += count * (lb - d * LN_2);
    }
    acc
}

/// Posterior log-density (up to a constant): bare likelihood plus
/// `N_pairs * ln C`, with `C` normalizing the model over `0..=r_max`.
struct LogPosterior {
    bins: Vec<(f64, f64)>,
    /// `ln Gamma(r+1)` aligned with `bins`.
    ln_gamma_bins: Vec<f64>,
    /// `ln Gamma(r+1)` for the whole normalization domain `0..=r_max`.
    ln_gamma_domain: Vec<f64>,
    total_pairs: f64,
}

impl LogPosterior {
    fn new(hist: &DistanceHistogram, r_max: usize) -> Self {
        let bins = observed_bins(hist);
        let ln_gamma_bins = bins.iter().map(|&(rf, _)| ln_gamma(rf + 1.0)).collect();
        let ln_gamma_domain = (0..=r_max).map(|r| ln_gamma(r as f64 + 1.0)).collect();
        let total_pairs = bins.iter().map(|&(_, c)| c).sum();
        Self {
            bins,
            ln_gamma_bins,
            ln_gamma_domain,
            total_pairs,
        }
    }

    fn eval(&self, d0: f64, d1: f64) -> f64 {
        let bare = log_likelihood_over(&self.bins, &self.ln_gamma_bins, d0, d1);
        if bare == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        // Streaming log-sum-exp of the model weights over the domain.
        let mut max = f64::NEG_INFINITY;
        let mut sum = 0.0;
        for (r, &lg_r) in self.ln_gamma_domain.iter().enumerate() {
            let rf = r as f64;
            let d = d0 + d1 * rf;
            if d - rf + 1.0 <= 0.0 {
                continue;
            }
            let lb = if rf == 0.0 || d == rf {
                0.0
            } else {
                ln_gamma(d + 1.0) - lg_r - ln_gamma(d - rf + 1.0)
            };
            let t = lb - d * LN_2;
            if t <= max {
                sum += (t - max).exp();
            } else {
                sum = sum * (max - t).exp() + 1.0;
                max = t;
            }
        }
        if !max.is_finite() {
            return f64::NEG_INFINITY;
        }
        let log_c = -(max + sum.ln());
        bare + self.total_pairs * log_c
    }
}

struct ChainRun {
    kept: Vec<[f64; 2]>,
    accepted_kept: u64,
    accepted_burn_in: u64,
}

/// One Metropolis-Hastings chain over a generic log-target.
fn run_chain(
    log_target: &mut dyn FnMut(f64, f64) -> f64,
    init: [f64; 2],
    steps: u64,
    burn_in: u64,
    step_fraction: f64,
    seed: u64,
    hastings_correction: bool,
) -> ChainRun {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = init;
    let mut fx = log_target(x[0], x[1]);
    debug_assert!(fx.is_finite(), "chain must start inside the support");

    let kept_len = (steps - burn_in) as usize;
    let mut kept = Vec::with_capacity(kept_len);
    let mut accepted_kept = 0u64;
    let mut accepted_burn_in = 0u64;

    for step in 0..steps {
        let mut y = [0.0f64; 2];
        for i in 0..2 {
            let amp = step_fraction * x[i].abs();
            y[i] = x[i] + amp * (2.0 * rng.random::<f64>() - 1.0);
        }
        let fy = log_target(y[0], y[1]);

        let mut ln_alpha = fy - fx;
        if hastings_correction {
            // Reverse reachability: x must lie within the proposal range of y.
            let reversible =
                (0..2).all(|i| (x[i] - y[i]).abs() <= step_fraction * y[i].abs());
            if !reversible {
                ln_alpha = f64::NEG_INFINITY;
            } else {
                // q(x|y)/q(y|x) = prod |x_i| / |y_i| for uniform value-scaled moves.
                ln_alpha += (0..2)
                    .map(|i| x[i].abs().ln() - y[i].abs().ln())
                    .sum::<f64>();
            }
        }

        let accept = ln_alpha >= 0.0 || rng.random::<f64>() < ln_alpha.exp();
        if accept {
            x = y;
            fx = fy;
            if step < burn_in {
                accepted_burn_in += 1;
            } else {
                accepted_kept += 1;
            }
        }
        if step >= burn_in {
            kept.push(x);
        }
    }
    ChainRun {
        kept,
        accepted_kept,
        accepted_burn_in,
    }
}

/// Sample the `(d0, d1)` posterior of a distance histogram.
///
/// The chain starts at `(<r>, 1)` with `<r>` the mean observed distance and
/// is deterministic for a given seed.
pub fn mcmc_sample(hist: &DistanceHistogram, opts: &McmcOptions) -> Result<PosteriorSample> {
    if opts.steps <= opts.burn_in {
        return Err(Error::InvalidSchedule {
            steps: opts.steps,
            burn_in: opts.burn_in,
        });
    }
    if !(opts.step_fraction > 0.0) {
        return Err(Error::InvalidStepFraction(opts.step_fraction));
    }
    let r_max = hist.max_nonzero_r().ok_or(Error::DegenerateHistogram)?;
    let posterior = LogPosterior::new(hist, r_max);
    if posterior.bins.len() < 2 {
        return Err(Error::DegenerateHistogram);
    }
    let mean_r: f64 = posterior.bins.iter().map(|&(rf, c)| rf * c).sum::<f64>()
        / posterior.total_pairs;

    let mut target = |d0: f64, d1: f64| posterior.eval(d0, d1);
    let run = run_chain(
        &mut target,
        [mean_r, 1.0],
        opts.steps,
        opts.burn_in,
        opts.step_fraction,
        opts.seed,
        opts.hastings_correction,
    );

    let summary = posterior_summary(&run.kept)?;
    let warning = (opts.burn_in > 0 && run.accepted_burn_in == 0)
        .then(|| "no accepted move during burn-in; chain is likely stuck".to_string());
    Ok(PosteriorSample {
        acceptance_rate: run.accepted_kept as f64 / (opts.steps - opts.burn_in) as f64,
        summary,
        warning,
        chain: run.kept,
    })
}

/// Exact sample moments of a chain; errors on an empty chain.
pub fn posterior_summary(chain: &[[f64; 2]]) -> Result<PosteriorSummary> {
    if chain.is_empty() {
        return Err(Error::EmptyChain);
    }
    let n = chain.len() as f64;
    let mean_d0 = chain.iter().map(|s| s[0]).sum::<f64>() / n;
    let mean_d1 = chain.iter().map(|s| s[1]).sum::<f64>() / n;
    let mut var_d0 = 0.0;
    let mut var_d1 = 0.0;
    let mut cov = 0.0;
    for s in chain {
        let (a, b) = (s[0] - mean_d0, s[1] - mean_d1);
        var_d0 += a * a;
        var_d1 += b * b;
        cov += a * b;
    }
    Ok(PosteriorSummary {
        mean_d0,
        mean_d1,
        std_d0: (var_d0 / n).sqrt(),
        std_d1: (var_d1 / n).sqrt(),
        cov_d0d1: cov / n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitdata::BitDataset;
    use crate::histogram::distance_histogram;
    use crate::model::{fit_bid, FitOptions};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn hist_from(n_bits: usize, n_samples: usize, bins: &[(usize, u64)]) -> DistanceHistogram {
        let mut counts = vec![0u64; n_bits + 1];
        for &(r, c) in bins {
            counts[r] = c;
        }
        DistanceHistogram::new(n_bits, n_samples, counts).unwrap()
    }

    #[test]
    fn single_bin_at_zero_gives_zero() {
        let hist = hist_from(4, 2, &[(0, 1)]);
        assert_eq!(log_likelihood(&hist, 0.0, 0.0), 0.0);
    }

    #[test]
    fn uniform_n4_closed_form() {
        // Counts binom(4, r) with params (4, 0):
        // sum_r binom(4,r) * ln(binom(4,r)/16).
        let hist = hist_from(4, 6, &[(0, 1), (1, 4), (2, 6), (3, 4), (4, 1)]);
        let by_hand: f64 = [1.0f64, 4.0, 6.0, 4.0, 1.0]
            .iter()
            .map(|&b| b * (b / 16.0f64).ln())
            .sum();
        let got = log_likelihood(&hist, 4.0, 0.0);
        assert!((got - by_hand).abs() < 1e-10, "{got} vs {by_hand}");
    }

    #[test]
    fn matches_product_formula_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let n_bits = 24usize;
            let mut bins: Vec<(usize, u64)> = Vec::new();
            for r in 0..=n_bits {
                if rng.random::<f64>() < 0.4 {
                    bins.push((r, rng.random_range(1..200)));
                }
            }
            if bins.len() < 2 {
                continue;
            }
            let hist = hist_from(n_bits, 40, &bins);
            let d0 = rng.random_range(0.5..30.0);
            let d1 = rng.random_range(0.9..2.0);
            // Independent route: binom via the running product, no ln_gamma.
            let oracle: f64 = bins
                .iter()
                .map(|&(r, c)| {
                    let d = d0 + d1 * r as f64;
                    let ln_binom: f64 =
                        (1..=r).map(|k| ((d - k as f64 + 1.0) / k as f64).ln()).sum();
                    c as f64 * (ln_binom - d * LN_2)
                })
                .sum();
            let got = log_likelihood(&hist, d0, d1);
            let tol = 1e-9 * oracle.abs().max(1.0);
            assert!((got - oracle).abs() < tol, "{got} vs {oracle}");
        }
    }

    #[test]
    fn infeasible_parameters_give_neg_infinity() {
        let hist = hist_from(8, 5, &[(2, 3), (5, 7)]);
        assert_eq!(log_likelihood(&hist, 1.0, 0.0), f64::NEG_INFINITY);
        assert_eq!(log_likelihood(&hist, -0.5, 1.5), f64::NEG_INFINITY);
        assert!(log_likelihood(&hist, 5.0, 0.0).is_finite());
    }

    #[test]
    fn flat_target_stays_in_region_with_high_acceptance() {
        // Flat target on a box away from zero; plain Metropolis accepts
        // everything that stays inside.
        let lo = 5.0;
        let hi = 20.0;
        let mut flat = |a: f64, b: f64| {
            if (lo..hi).contains(&a) && (lo..hi).contains(&b) {
                0.0
            } else {
                f64::NEG_INFINITY
            }
        };
        let run = run_chain(&mut flat, [10.0, 10.0], 20_000, 0, 0.01, 99, false);
        let acc = run.accepted_kept as f64 / 20_000.0;
        assert!(acc > 0.99, "acceptance = {acc}");
        assert!(run
            .kept
            .iter()
            .all(|s| (lo..hi).contains(&s[0]) && (lo..hi).contains(&s[1])));
    }

    #[test]
    fn rejecting_target_reports_zero_acceptance() {
        let mut spike = |a: f64, b: f64| {
            if a == 10.0 && b == 10.0 {
                0.0
            } else {
                f64::NEG_INFINITY
            }
        };
        let run = run_chain(&mut spike, [10.0, 10.0], 1_000, 500, 0.01, 7, false);
        assert_eq!(run.accepted_burn_in, 0);
        assert_eq!(run.accepted_kept, 0);
        assert!(run.kept.iter().all(|s| s == &[10.0, 10.0]));
    }

    #[test]
    fn seed_determinism() {
        let hist = hist_from(16, 30, &[(3, 120), (4, 200), (5, 90), (6, 25)]);
        let mut opts = McmcOptions::new(1234);
        opts.steps = 5_000;
        opts.burn_in = 500;
        let a = mcmc_sample(&hist, &opts).unwrap();
        let b = mcmc_sample(&hist, &opts).unwrap();
        assert_eq!(a.chain, b.chain);
        assert_eq!(a.acceptance_rate, b.acceptance_rate);
        opts.seed = 1235;
        let c = mcmc_sample(&hist, &opts).unwrap();
        assert_ne!(a.chain, c.chain);
    }

    #[test]
    fn chain_states_stay_feasible() {
        let hist = hist_from(16, 30, &[(2, 50), (3, 150), (4, 80), (8, 10)]);
        let mut opts = McmcOptions::new(5);
        opts.steps = 8_000;
        opts.burn_in = 1_000;
        opts.step_fraction = 0.05;
        let sample = mcmc_sample(&hist, &opts).unwrap();
        for s in &sample.chain {
            assert!(s[0] >= 0.0);
            for r in [2.0f64, 3.0, 4.0, 8.0] {
                assert!(s[0] + s[1] * r > r - 1.0);
            }
        }
    }

    #[test]
    fn rejects_bad_schedules_and_degenerate_histograms() {
        let hist = hist_from(8, 5, &[(2, 3), (5, 7)]);
        let mut opts = McmcOptions::new(1);
        opts.steps = 100;
        opts.burn_in = 100;
        assert!(matches!(
            mcmc_sample(&hist, &opts),
            Err(Error::InvalidSchedule { .. })
        ));
        let single = hist_from(8, 5, &[(2, 10)]);
        assert!(matches!(
            mcmc_sample(&single, &McmcOptions::new(1)),
            Err(Error::DegenerateHistogram)
        ));
    }

    #[test]
    fn summary_closed_forms() {
        let constant = vec![[2.5, -1.0]; 10];
        let s = posterior_summary(&constant).unwrap();
        assert_eq!(s.std_d0, 0.0);
        assert_eq!(s.std_d1, 0.0);
        assert_eq!(s.cov_d0d1, 0.0);

        let two = vec![[0.0, 0.0], [2.0, 2.0]];
        let s = posterior_summary(&two).unwrap();
        assert_eq!(s.mean_d0, 1.0);
        assert_eq!(s.mean_d1, 1.0);
        assert_eq!(s.cov_d0d1, 1.0);
        assert_eq!(s.std_d0, 1.0);

        assert!(matches!(posterior_summary(&[]), Err(Error::EmptyChain)));
    }

    #[test]
    fn summary_matches_streaming_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let chain: Vec<[f64; 2]> = (0..5_000)
            .map(|_| [rng.random_range(-3.0..9.0), rng.random_range(0.0..2.0)])
            .collect();
        let s = posterior_summary(&chain).unwrap();
        // One-pass accumulation as an independent route.
        let n = chain.len() as f64;
        let (mut s0, mut s1, mut s00, mut s11, mut s01) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for c in &chain {
            s0 += c[0];
            s1 += c[1];
            s00 += c[0] * c[0];
            s11 += c[1] * c[1];
            s01 += c[0] * c[1];
        }
        let (m0, m1) = (s0 / n, s1 / n);
        assert!((s.mean_d0 - m0).abs() < 1e-12);
        assert!((s.std_d0 - (s00 / n - m0 * m0).sqrt()).abs() < 1e-9);
        assert!((s.std_d1 - (s11 / n - m1 * m1).sqrt()).abs() < 1e-9);
        assert!((s.cov_d0d1 - (s01 / n - m0 * m1)).abs() < 1e-9);
    }

    #[test]
    fn sample_summary_is_summary_of_stored_chain() {
        let hist = hist_from(16, 30, &[(3, 120), (4, 200), (5, 90)]);
        let mut opts = McmcOptions::new(8);
        opts.steps = 4_000;
        opts.burn_in = 400;
        let sample = mcmc_sample(&hist, &opts).unwrap();
        let recomputed = posterior_summary(&sample.chain).unwrap();
        assert_eq!(sample.summary, recomputed);
    }

    #[test]
    fn posterior_means_match_grid_quadrature() {
        // Expected model counts at (d0, d1) = (3, 1.3): the posterior mode
        // sits in the interior with d1 well away from zero, where the
        // value-scaled proposals mix properly.
        let params = crate::model::BidModelParams::normalized(3.0, 1.3, 12).unwrap();
        let bins: Vec<(usize, u64)> = (0..=12usize)
            .filter_map(|r| {
                let p = crate::model::model_log_prob(r, &params).unwrap().exp();
                let c = (3000.0 * p).round() as u64;
                (c > 0).then_some((r, c))
            })
            .collect();
        let hist = hist_from(12, 78, &bins);
        let posterior = LogPosterior::new(&hist, hist.max_nonzero_r().unwrap());

        let (n0, n1) = (700usize, 700usize);
        let (d0_lo, d0_hi) = (0.0, 8.0);
        let (d1_lo, d1_hi) = (0.2, 2.6);
        let (mut z, mut m0, mut m1) = (0.0, 0.0, 0.0);
        let mut boundary_max = f64::NEG_INFINITY;
        // Peak the weights relative to a reference value for stability.
        let ref_ll = posterior.eval(3.0, 1.3);
        for i in 0..n0 {
            let d0 = d0_lo + (i as f64 + 0.5) * (d0_hi - d0_lo) / n0 as f64;
            for j in 0..n1 {
                let d1 = d1_lo + (j as f64 + 0.5) * (d1_hi - d1_lo) / n1 as f64;
                let w = (posterior.eval(d0, d1) - ref_ll).exp();
                z += w;
                m0 += w * d0;
                m1 += w * d1;
                if i == 0 || j == 0 || i == n0 - 1 || j == n1 - 1 {
                    boundary_max = boundary_max.max(w);
                }
            }
        }
        let (grid_mean_d0, grid_mean_d1) = (m0 / z, m1 / z);
        // The grid must actually contain the posterior.
        assert!(boundary_max < 1e-6 * z / (n0 * n1) as f64);

        let mut opts = McmcOptions::new(2024);
        opts.steps = 220_000;
        opts.burn_in = 20_000;
        let sample = mcmc_sample(&hist, &opts).unwrap();

        // Standard error by batch means.
        let batches = 20;
        let len = sample.chain.len() / batches;
        let se = |coord: usize| {
            let means: Vec<f64> = (0..batches)
                .map(|b| {
                    sample.chain[b * len..(b + 1) * len]
                        .iter()
                        .map(|s| s[coord])
                        .sum::<f64>()
                        / len as f64
                })
                .collect();
            let m = means.iter().sum::<f64>() / batches as f64;
            let var = means.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / batches as f64;
            (var / batches as f64).sqrt()
        };
        let (se0, se1) = (se(0), se(1));
        assert!(
            (sample.summary.mean_d0 - grid_mean_d0).abs() < 3.0 * se0 + 5e-3,
            "mcmc {} vs grid {} (se {})",
            sample.summary.mean_d0,
            grid_mean_d0,
            se0
        );
        assert!(
            (sample.summary.mean_d1 - grid_mean_d1).abs() < 3.0 * se1 + 5e-3,
            "mcmc {} vs grid {} (se {})",
            sample.summary.mean_d1,
            grid_mean_d1,
            se1
        );
    }

    #[test]
    fn posterior_mean_agrees_with_kl_fit() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<Vec<bool>> = (0..1500)
            .map(|_| (0..60).map(|_| rng.random()).collect())
            .collect();
        let hist = distance_histogram(&BitDataset::pack(&rows).unwrap()).unwrap();
        let fit = fit_bid(&hist, &FitOptions::default()).unwrap();
        let mut opts = McmcOptions::new(77);
        opts.steps = 90_000;
        opts.burn_in = 15_000;
        opts.step_fraction = 0.002;
        let sample = mcmc_sample(&hist, &opts).unwrap();
        let diff = (sample.summary.mean_d0 - fit.params.d0).abs();
        assert!(
            diff <= 3.0 * sample.summary.std_d0,
            "posterior mean {} vs fit {} (std {})",
            sample.summary.mean_d0,
            fit.params.d0,
            sample.summary.std_d0
        );
    }
}
