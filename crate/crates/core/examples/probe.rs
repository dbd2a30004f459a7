use bid_core::model::{fit_bid, FitOptions};
use bid_core::spins::{sample_iid_blocks, SamplerConfig};
use bid_core::{distance_histogram};
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let n_block: usize = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(2000);
    let n_samples: usize = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(800);
    let burn: u64 = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(1000);

    let t0 = Instant::now();
    let cfg = SamplerConfig::new(2.0, n_samples, 42).unwrap().with_burn_in(burn);
    let ds = sample_iid_blocks(1, n_block, &cfg, false).unwrap();
    let t_sample = t0.elapsed();

    let t1 = Instant::now();
    let hist = distance_histogram(&ds).unwrap();
    let t_hist = t1.elapsed();

    let t2 = Instant::now();
    let fit = fit_bid(&hist, &FitOptions::default()).unwrap();
    let t_fit = t2.elapsed();

    println!(
        "N={} Ns={} burn={} | sample {:.1?} hist {:.1?} fit {:.1?} | d0={:.2} bid/bit={:.4} d1={:.4} kl={:.3e} log_kl={:.2} evals={}",
        n_block, n_samples, burn, t_sample, t_hist, t_fit,
        fit.params.d0, fit.bid_per_bit, fit.params.d1, fit.kl, fit.log_kl,
        fit.optimizer.iterations
    );
}
