//! Lattice topologies with periodic boundaries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    /// L x L square lattice, 4 neighbors per site.
    Square,
    /// L x L triangular lattice embedded on a square array with the extra
    /// (+1,+1) / (-1,-1) diagonal, 6 neighbors per site.
    Triangular,
    /// Ring of L sites, 2 neighbors per site.
    Chain,
}

impl Topology {
    pub fn name(&self) -> &'static str {
        match self {
            Topology::Square => "square",
            Topology::Triangular => "triangular",
            Topology::Chain => "chain",
        }
    }
}

/// Lattice geometry plus the spin-spin coupling `J` (+1 ferromagnetic,
/// -1 antiferromagnetic). Boundaries are always periodic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub topology: Topology,
    /// Side length; for a chain this is the number of sites.
    pub l: usize,
    pub coupling: f64,
}

impl LatticeSpec {
    pub fn new(topology: Topology, l: usize, coupling: f64) -> Result<Self> {
        if l < 2 {
            return Err(Error::InvalidLatticeSide(l));
        }
        Ok(Self {
            topology,
            l,
            coupling,
        })
    }

    pub fn n_sites(&self) -> usize {
        match self.topology {
            Topology::Square | Topology::Triangular => self.l * self.l,
            Topology::Chain => self.l,
        }
    }

    /// Neighbors per site.
    pub fn coordination(&self) -> usize {
        match self.topology {
            Topology::Square => 4,
            Topology::Triangular => 6,
            Topology::Chain => 2,
        }
    }

    fn offsets(&self) -> &'static [(isize, isize)] {
        match self.topology {
            Topology::Square => &[(1, 0), (-1, 0), (0, 1), (0, -1)],
            Topology::Triangular => &[(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1)],
            Topology::Chain => &[(1, 0), (-1, 0)],
        }
    }

    /// Flat neighbor table, `coordination()` entries per site.
    pub fn neighbor_table(&self) -> NeighborTable {
        let z = self.coordination();
        let n = self.n_sites();
        let mut idx = Vec::with_capacity(n * z);
        let l = self.l as isize;
        match self.topology {
            Topology::Chain => {
                for i in 0..l {
                    for &(dx, _) in self.offsets() {
                        idx.push((i + dx).rem_euclid(l) as u32);
                    }
                }
            }
            _ => {
                for y in 0..l {
                    for x in 0..l {
                        for &(dx, dy) in self.offsets() {
                            let nx = (x + dx).rem_euclid(l);
                            let ny = (y + dy).rem_euclid(l);
                            idx.push((ny * l + nx) as u32);
                        }
                    }
                }
            }
        }
        NeighborTable { z, idx }
    }

    /// Every unordered nearest-neighbor bond exactly once.
    pub fn bonds(&self) -> Vec<(u32, u32)> {
        let l = self.l as isize;
        let mut out = Vec::new();
        match self.topology {
            Topology::Chain => {
                for i in 0..l {
                    out.push((i as u32, ((i + 1).rem_euclid(l)) as u32));
                }
            }
            _ => {
                let forward: &[(isize, isize)] = match self.topology {
                    Topology::Square => &[(1, 0), (0, 1)],
                    Topology::Triangular => &[(1, 0), (0, 1), (1, 1)],
                    Topology::Chain => unreachable!(),
                };
                for y in 0..l {
                    for x in 0..l {
                        let site = (y * l + x) as u32;
                        for &(dx, dy) in forward {
                            let nx = (x + dx).rem_euclid(l);
                            let ny = (y + dy).rem_euclid(l);
                            out.push((site, (ny * l + nx) as u32));
                        }
                    }
                }
            }
        }
        out
    }

    /// Exact critical temperature of the ferromagnetic model, where one is
    /// known: `2/ln(1+sqrt 2)` on the square lattice, `4/ln 3` on the
    /// triangular lattice. `None` for chains and antiferromagnets.
    pub fn critical_temperature(&self) -> Option<f64> {
        if self.coupling <= 0.0 {
            return None;
        }
        match self.topology {
            Topology::Square => Some(2.0 * self.coupling / (1.0 + 2.0_f64.sqrt()).ln()),
            Topology::Triangular => Some(4.0 * self.coupling / 3.0_f64.ln()),
            Topology::Chain => None,
        }
    }
}

/// Flat per-site neighbor lists.
pub struct NeighborTable {
    z: usize,
    idx: Vec<u32>,
}

impl NeighborTable {
    #[inline]
    pub fn neighbors(&self, site: usize) -> &[u32] {
        &self.idx[site * self.z..(site + 1) * self.z]
    }

    pub fn coordination(&self) -> usize {
        self.z
    }
}
