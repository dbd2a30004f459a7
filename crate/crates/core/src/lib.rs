//! Binary intrinsic dimension (BID) estimation for large bit-vector datasets.
//!
//! The estimator works on the histogram of pairwise Hamming distances: a
//! generalized-binomial model with a scale-dependent dimension `d(r) = d0 + d1*r`
//! is fitted to the empirical distance distribution by minimizing the
//! Kullback-Leibler divergence, and `d0` is reported as the BID. Because the
//! only observable is the distance histogram, the method stays usable when the
//! intrinsic dimension is in the hundreds of thousands, where neighborhood
//! based estimators starve for samples.
//!
//! The crate ships four layers:
//!
//! - [`bitdata`] / [`histogram`]: bit-packed datasets, binarization and
//!   encoding utilities, and the pairwise Hamming-distance histogram.
//! - [`model`]: the generalized-binomial distance model, the KL objective and
//!   the simplex optimizer that produces a [`model::BidFit`].
//! - [`bayes`] / [`mle`]: Metropolis-Hastings posterior sampling over
//!   `(d0, d1)` and the scale-dependent thin-shell maximum-likelihood profile.
//! - [`spins`]: seeded Monte Carlo generators for Ising and Potts benchmark
//!   systems used to validate the estimator.
//!
//! File formats (BIDB packed datasets, BIDF real matrices, histogram JSON)
//! live in [`io`].

pub mod bayes;
pub mod bitdata;
pub mod error;
pub mod histogram;
pub mod io;
pub mod mle;
pub mod model;
mod special;
pub mod spins;

pub use bitdata::{
    binarize_sign, potts_decode, potts_encode, quantize_2bit, ActivationStats, BitDataset,
    RealMatrix,
};
pub use error::{Error, Result};
pub use histogram::{distance_histogram, DistanceHistogram};
pub use model::{fit_bid, kl_objective, log_binom_general, model_log_prob, BidFit, BidModelParams};
