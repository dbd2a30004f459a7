//! Single-spin-flip Metropolis sampling of Ising models.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::lattice::{LatticeSpec, NeighborTable, Topology};
use super::{auto_burn_in, chain_rng, resolve_start, EnergySample, SamplerConfig};
use crate::bitdata::BitDataset;
use crate::error::{Error, Result};

/// Energy `E = -J * sum_<ij> s_i s_j` with every unordered bond counted once.
pub fn ising_energy(config: &[i8], spec: &LatticeSpec) -> Result<f64> {
    if config.len() != spec.n_sites() {
        return Err(Error::SizeMismatch {
            got: config.len(),
            expected: spec.n_sites(),
        });
    }
    debug_assert!(config.iter().all(|&s| s == 1 || s == -1));
    let sum: i64 = spec
        .bonds()
        .iter()
        .map(|&(i, j)| (config[i as usize] as i64) * (config[j as usize] as i64))
        .sum();
    Ok(-spec.coupling * sum as f64)
}

/// One Metropolis chain. Tracks `sum_<ij> s_i s_j` incrementally so the
/// energy is available at integer exactness throughout the run.
pub(crate) struct IsingChain<'a> {
    nbrs: &'a NeighborTable,
    coupling: f64,
    config: Vec<i8>,
    bond_sum: i64,
    /// Acceptance threshold on a raw u64 draw, indexed by `s_u * h_u + z`;
    /// `u64::MAX` marks certain acceptance (no draw consumed).
    accept: Vec<u64>,
    rng: ChaCha8Rng,
}

impl<'a> IsingChain<'a> {
    pub(crate) fn new(
        spec: &LatticeSpec,
        nbrs: &'a NeighborTable,
        temperature: f64,
        cold: bool,
        mut rng: ChaCha8Rng,
    ) -> Self {
        let n = spec.n_sites();
        let config: Vec<i8> = if cold {
            vec![1; n]
        } else {
            (0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect()
        };
        let z = nbrs.coordination() as i32;
        // Flip of site u changes E by 2*J*s, with s = s_u * sum(neighbors).
        let accept: Vec<u64> = (-z..=z)
            .map(|s| {
                let p = (-2.0 * spec.coupling * s as f64 / temperature).exp();
                if p >= 1.0 {
                    u64::MAX
                } else {
                    (p * (u64::MAX as f64)) as u64
                }
            })
            .collect();
        let mut chain = Self {
            nbrs,
            coupling: spec.coupling,
            config,
            bond_sum: 0,
            accept,
            rng,
        };
        chain.bond_sum = chain.bond_sum_recomputed();
        chain
    }

    /// `sum_<ij> s_i s_j` from scratch; used at startup and by audits.
    pub(crate) fn bond_sum_recomputed(&self) -> i64 {
        let mut twice_sum: i64 = 0;
        for (u, &s) in self.config.iter().enumerate() {
            let h: i64 = self
                .nbrs
                .neighbors(u)
                .iter()
                .map(|&v| self.config[v as usize] as i64)
                .sum();
            twice_sum += s as i64 * h;
        }
        twice_sum / 2
    }

    pub(crate) fn energy(&self) -> f64 {
        -self.coupling * self.bond_sum as f64
    }

    /// One full-lattice sweep: `n` single-flip attempts at random sites.
    pub(crate) fn sweep(&mut self) {
        let n = self.config.len();
        let z = self.nbrs.coordination() as i32;
        for _ in 0..n {
            // Multiply-high maps a raw u64 draw onto 0..n; the modulo bias
            // is 2^-64 per site and irrelevant at these sizes.
            let u = ((self.rng.random::<u64>() as u128 * n as u128) >> 64) as usize;
            let mut h: i32 = 0;
            for &v in self.nbrs.neighbors(u) {
                h += self.config[v as usize] as i32;
            }
            let s = self.config[u] as i32 * h;
            let threshold = self.accept[(s + z) as usize];
            if threshold == u64::MAX || self.rng.random::<u64>() < threshold {
                self.config[u] = -self.config[u];
                self.bond_sum -= 2 * s as i64;
            }
        }
    }

    pub(crate) fn config(&self) -> &[i8] {
        &self.config
    }

    /// Pack spins into bits via `(s + 1) / 2` at `bit_offset` of a zeroed row.
    fn write_bits(&self, row: &mut [u8], bit_offset: usize) {
        for (j, &s) in self.config.iter().enumerate() {
            if s > 0 {
                let bit = bit_offset + j;
                row[bit / 8] |= 1 << (bit % 8);
            }
        }
    }
}

/// Sample an Ising model: one row per independent chain, spins mapped to
/// bits via `(s + 1) / 2`.
pub fn metropolis_sample_ising(spec: &LatticeSpec, cfg: &SamplerConfig) -> Result<BitDataset> {
    metropolis_sample_ising_traced(spec, cfg, 0).map(|(ds, _)| ds)
}

/// Like [`metropolis_sample_ising`], also returning burn-in energy traces
/// for the first `trace_chains` chains (one record per sweep).
pub fn metropolis_sample_ising_traced(
    spec: &LatticeSpec,
    cfg: &SamplerConfig,
    trace_chains: usize,
) -> Result<(BitDataset, Vec<EnergySample>)> {
    let nbrs = spec.neighbor_table();
    let tc = spec.critical_temperature();
    let burn_in = cfg
        .burn_in_sweeps
        .unwrap_or_else(|| auto_burn_in(tc, cfg.temperature));
    let cold = resolve_start(cfg.start, tc, cfg.temperature);

    let mut ds = BitDataset::zeros(cfg.n_samples, spec.n_sites())?;
    let row_bytes = ds.row_bytes();
    ds.as_bytes_mut()
        .par_chunks_mut(row_bytes)
        .enumerate()
        .for_each(|(c, row)| {
            let rng = chain_rng(cfg.seed, c as u64);
            let mut chain = IsingChain::new(spec, &nbrs, cfg.temperature, cold, rng);
            for _ in 0..burn_in {
                chain.sweep();
            }
            chain.write_bits(row, 0);
        });

    // Traced chains replay the identical RNG stream, so the recorded
    // trajectory is exactly the one that produced the rows above.
    let mut trace = Vec::new();
    for c in 0..trace_chains.min(cfg.n_samples) {
        let rng = chain_rng(cfg.seed, c as u64);
        let mut chain = IsingChain::new(spec, &nbrs, cfg.temperature, cold, rng);
        trace.push(EnergySample {
            chain: c,
            sweep: 0,
            energy: chain.energy(),
        });
        for sweep in 1..=burn_in {
            chain.sweep();
            trace.push(EnergySample {
                chain: c,
                sweep,
                energy: chain.energy(),
            });
        }
    }
    Ok((ds, trace))
}

/// Rows made of `n_blocks` independent 1D-chain samples of `block_len` bits
/// each, concatenated. Every `(chain, block)` pair gets its own RNG stream.
///
/// The default block Hamiltonian is `E = sum_i s_i s_(i+1)` with periodic
/// closure (antiferromagnetic under `exp(-E/T)`); `ferro` flips the sign.
pub fn sample_iid_blocks(
    n_blocks: usize,
    block_len: usize,
    cfg: &SamplerConfig,
    ferro: bool,
) -> Result<BitDataset> {
    sample_iid_blocks_traced(n_blocks, block_len, cfg, ferro, 0).map(|(ds, _)| ds)
}

/// Traced variant of [`sample_iid_blocks`]; traces cover block 0 of the
/// first `trace_chains` chains.
pub fn sample_iid_blocks_traced(
    n_blocks: usize,
    block_len: usize,
    cfg: &SamplerConfig,
    ferro: bool,
    trace_chains: usize,
) -> Result<(BitDataset, Vec<EnergySample>)> {
    if n_blocks == 0 {
        return Err(Error::EmptyInput);
    }
    let coupling = if ferro { 1.0 } else { -1.0 };
    let spec = LatticeSpec::new(Topology::Chain, block_len, coupling)?;
    let nbrs = spec.neighbor_table();
    let burn_in = cfg
        .burn_in_sweeps
        .unwrap_or_else(|| auto_burn_in(None, cfg.temperature));
    let cold = resolve_start(cfg.start, None, cfg.temperature);

    let mut ds = BitDataset::zeros(cfg.n_samples, n_blocks * block_len)?;
    let row_bytes = ds.row_bytes();
    ds.as_bytes_mut()
        .par_chunks_mut(row_bytes)
        .enumerate()
        .for_each(|(c, row)| {
            for b in 0..n_blocks {
                let rng = chain_rng(cfg.seed, (c * n_blocks + b) as u64);
                let mut chain = IsingChain::new(&spec, &nbrs, cfg.temperature, cold, rng);
                for _ in 0..burn_in {
                    chain.sweep();
                }
                chain.write_bits(row, b * block_len);
            }
        });

    let mut trace = Vec::new();
    for c in 0..trace_chains.min(cfg.n_samples) {
        let rng = chain_rng(cfg.seed, (c * n_blocks) as u64);
        let mut chain = IsingChain::new(&spec, &nbrs, cfg.temperature, cold, rng);
        trace.push(EnergySample {
            chain: c,
            sweep: 0,
            energy: chain.energy(),
        });
        for sweep in 1..=burn_in {
            chain.sweep();
            trace.push(EnergySample {
                chain: c,
                sweep,
                energy: chain.energy(),
            });
        }
    }
    Ok((ds, trace))
}
