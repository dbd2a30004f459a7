//! Heat-bath sampling of the q-state Potts model on the square lattice.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::lattice::{LatticeSpec, NeighborTable, Topology};
use super::{auto_burn_in, chain_rng, potts_transition_temperature, resolve_start, EnergySample,
    SamplerConfig};
use crate::bitdata::{potts_encode, BitDataset};
use crate::error::{Error, Result};

/// Energy `E = -sum_<ij> delta(s_i, s_j)` with every bond counted once.
pub fn potts_energy(config: &[u32], q: u32, spec: &LatticeSpec) -> Result<f64> {
    if spec.topology != Topology::Square {
        return Err(Error::TopologyMismatch {
            required: "square",
            got: spec.topology.name(),
        });
    }
    if config.len() != spec.n_sites() {
        return Err(Error::SizeMismatch {
            got: config.len(),
            expected: spec.n_sites(),
        });
    }
    if let Some(&s) = config.iter().find(|&&s| s >= q) {
        return Err(Error::StateOutOfRange { state: s, q });
    }
    let matches: i64 = spec
        .bonds()
        .iter()
        .filter(|&&(i, j)| config[i as usize] == config[j as usize])
        .count() as i64;
    Ok(-matches as f64)
}

/// Relabel colors by the permutation swapping the most frequent color with 0
/// (ties broken toward the lowest color index). A global relabeling leaves
/// the energy invariant while aligning ordered configurations on the same
/// ground state.
pub fn potts_gauge_fix(states: &[u32]) -> Vec<u32> {
    let Some(&max_state) = states.iter().max() else {
        return Vec::new();
    };
    let mut counts = vec![0u64; max_state as usize + 1];
    for &s in states {
        counts[s as usize] += 1;
    }
    let dominant = counts
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(c, _)| c as u32)
        .unwrap_or(0);
    if dominant == 0 {
        return states.to_vec();
    }
    states
        .iter()
        .map(|&s| {
            if s == dominant {
                0
            } else if s == 0 {
                dominant
            } else {
                s
            }
        })
        .collect()
}

/// One heat-bath chain. Each update resamples a site's color from its exact
/// local conditional `P(c) prop exp(n_c / T)`, with `n_c` the number of
/// neighbors already in color `c`. Tracks the matching-bond count so the
/// energy stays integer-exact.
pub(crate) struct PottsChain<'a> {
    q: usize,
    nbrs: &'a NeighborTable,
    config: Vec<u32>,
    /// `exp(k / T)` for `k = 0..=z`.
    weight: Vec<f64>,
    /// Scratch: neighbor-color tallies, zeroed between updates.
    counts: Vec<u32>,
    match_sum: i64,
    rng: ChaCha8Rng,
}

impl<'a> PottsChain<'a> {
    pub(crate) fn new(
        q: u32,
        spec: &LatticeSpec,
        nbrs: &'a NeighborTable,
        temperature: f64,
        cold: bool,
        mut rng: ChaCha8Rng,
    ) -> Self {
        let n = spec.n_sites();
        let config: Vec<u32> = if cold {
            vec![0; n]
        } else {
            (0..n).map(|_| rng.random_range(0..q)).collect()
        };
        let z = nbrs.coordination();
        let weight: Vec<f64> = (0..=z).map(|k| (k as f64 / temperature).exp()).collect();
        let mut chain = Self {
            q: q as usize,
            nbrs,
            config,
            weight,
            counts: vec![0; q as usize],
            match_sum: 0,
            rng,
        };
        chain.match_sum = chain.match_sum_recomputed();
        chain
    }

    pub(crate) fn match_sum_recomputed(&self) -> i64 {
        let mut twice: i64 = 0;
        for (u, &s) in self.config.iter().enumerate() {
            twice += self
                .nbrs
                .neighbors(u)
                .iter()
                .filter(|&&v| self.config[v as usize] == s)
                .count() as i64;
        }
        twice / 2
    }

    pub(crate) fn energy(&self) -> f64 {
        -(self.match_sum as f64)
    }

    /// Heat-bath update of a single site.
    pub(crate) fn update_site(&mut self, u: usize) {
        for &v in self.nbrs.neighbors(u) {
            self.counts[self.config[v as usize] as usize] += 1;
        }
        let total: f64 = (0..self.q).map(|c| self.weight[self.counts[c] as usize]).sum();
        let mut target = self.rng.random::<f64>() * total;
        let mut new_color = self.q - 1;
        for c in 0..self.q {
            let w = self.weight[self.counts[c] as usize];
            if target < w {
                new_color = c;
                break;
            }
            target -= w;
        }
        let old = self.config[u] as usize;
        self.match_sum += self.counts[new_color] as i64 - self.counts[old] as i64;
        self.config[u] = new_color as u32;
        for &v in self.nbrs.neighbors(u) {
            self.counts[self.config[v as usize] as usize] = 0;
        }
    }

    pub(crate) fn sweep(&mut self) {
        let n = self.config.len();
        for _ in 0..n {
            let u = self.rng.random_range(0..n);
            self.update_site(u);
        }
    }

    pub(crate) fn config(&self) -> &[u32] {
        &self.config
    }
}

/// Sample a q-state Potts model on the square lattice with heat-bath
/// dynamics. After burn-in each chain is gauge-fixed and its state indices
/// are written out in plain binary (MSB first), `ceil(log2 q)` bits per site.
pub fn heatbath_sample_potts(
    q: u32,
    spec: &LatticeSpec,
    cfg: &SamplerConfig,
) -> Result<BitDataset> {
    heatbath_sample_potts_traced(q, spec, cfg, 0).map(|(ds, _)| ds)
}

/// Traced variant of [`heatbath_sample_potts`].
pub fn heatbath_sample_potts_traced(
    q: u32,
    spec: &LatticeSpec,
    cfg: &SamplerConfig,
    trace_chains: usize,
) -> Result<(BitDataset, Vec<EnergySample>)> {
    if q < 2 {
        return Err(Error::InvalidQ(q));
    }
    if spec.topology != Topology::Square {
        return Err(Error::TopologyMismatch {
            required: "square",
            got: spec.topology.name(),
        });
    }
    let nbrs = spec.neighbor_table();
    let transition = Some(potts_transition_temperature(q));
    let burn_in = cfg
        .burn_in_sweeps
        .unwrap_or_else(|| auto_burn_in(transition, cfg.temperature));
    let cold = resolve_start(cfg.start, transition, cfg.temperature);

    let states: Vec<Vec<u32>> = (0..cfg.n_samples)
        .into_par_iter()
        .map(|c| {
            let rng = chain_rng(cfg.seed, c as u64);
            let mut chain = PottsChain::new(q, spec, &nbrs, cfg.temperature, cold, rng);
            for _ in 0..burn_in {
                chain.sweep();
            }
            potts_gauge_fix(chain.config())
        })
        .collect();
    let ds = potts_encode(&states, q)?;

    let mut trace = Vec::new();
    for c in 0..trace_chains.min(cfg.n_samples) {
        let rng = chain_rng(cfg.seed, c as u64);
        let mut chain = PottsChain::new(q, spec, &nbrs, cfg.temperature, cold, rng);
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
