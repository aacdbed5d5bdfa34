use rand::Rng;

use crate::error::{Error, Result};
use crate::lattice::{Edge, Lattice};
use crate::rc::{BondMap, Boundary, SpinConfig};
use crate::union_find::UnionFind;

/// Sampler state shared by both kernels: the edge list, the bond
/// probabilities and scratch space for the cluster decomposition.
///
/// Under wiring the ghost is a vertex pinned to `ghost_state`; it is never
/// resampled and its cluster inherits its state.
#[derive(Clone, Debug)]
pub(crate) struct Kernel {
    ends: Vec<(usize, usize)>,
    probs: Vec<f64>,
    /// Per site: lattice neighbors with their couplings.
    neighbors: Vec<Vec<(usize, f64)>>,
    ghost_coupling: Vec<f64>,
    n_sites: usize,
    ghost: Option<usize>,
    ghost_state: u16,
    q: u16,
    uf: UnionFind,
    color: Vec<u16>,
    open: Vec<bool>,
    weights: Vec<f64>,
}

const UNSET: u16 = u16::MAX;

impl Kernel {
    pub(crate) fn new(lat: &Lattice, bonds: &BondMap, q: u16, boundary: Boundary) -> Result<Self> {
        if q == 0 || q == UNSET {
            return Err(Error::param(
                "q",
                format!("{q} spin states are not supported"),
            ));
        }
        if bonds.len() != lat.num_edges() {
            return Err(Error::param("bonds", "bond map does not match the lattice"));
        }
        let (ghost, ghost_state) = match boundary {
            Boundary::Free => (None, 0),
            Boundary::Wired(k) => {
                let g = lat.ghost().ok_or_else(|| {
                    Error::Geometry("wired boundary requires a ghost vertex".into())
                })?;
                if k >= q {
                    return Err(Error::param(
                        "boundary",
                        format!("wired state {k} outside 0..{q}"),
                    ));
                }
                (Some(g), k)
            }
        };
        let n_edges = if ghost.is_some() {
            lat.num_edges()
        } else {
            lat.num_lattice_edges()
        };
        let n_sites = lat.num_sites();
        let mut neighbors = vec![Vec::new(); n_sites];
        let mut ghost_coupling = vec![0.0; n_sites];
        for e in 0..n_edges {
            let Edge { a, b } = lat.edge(e);
            let j = bonds.coupling(e);
            if lat.is_ghost_edge(e) {
                ghost_coupling[a] += j;
            } else {
                neighbors[a].push((b, j));
                neighbors[b].push((a, j));
            }
        }
        Ok(Kernel {
            ends: (0..n_edges)
                .map(|e| (lat.edge(e).a, lat.edge(e).b))
                .collect(),
            probs: bonds.probs()[..n_edges].to_vec(),
            neighbors,
            ghost_coupling,
            n_sites,
            ghost,
            ghost_state,
            q,
            uf: UnionFind::new(lat.num_vertices()),
            color: vec![UNSET; lat.num_vertices()],
            open: vec![false; lat.num_edges()],
            weights: vec![0.0; q as usize],
        })
    }

    #[inline]
    fn spin(&self, spins: &[u16], v: usize) -> u16 {
        if v < self.n_sites {
            spins[v]
        } else {
            self.ghost_state
        }
    }

    /// Draws the edge configuration given the spins: each edge whose
    /// endpoints agree is occupied with probability `p_e`.
    pub(crate) fn draw_bonds<R: Rng + ?Sized>(&mut self, spins: &[u16], rng: &mut R) {
        self.uf
            .reset(self.n_sites + usize::from(self.ghost.is_some()));
        for (e, &(a, b)) in self.ends.iter().enumerate() {
            let p = self.probs[e];
            let open =
                p > 0.0 && self.spin(spins, a) == self.spin(spins, b) && rng.random::<f64>() < p;
            self.open[e] = open;
            if open {
                self.uf.union(a, b);
            }
        }
    }

    /// One Swendsen–Wang update: bonds given spins, then a uniform new state
    /// per cluster, the ghost's cluster keeping the ghost state.
    pub(crate) fn sw_sweep<R: Rng + ?Sized>(&mut self, spins: &mut [u16], rng: &mut R) {
        self.draw_bonds(spins, rng);
        self.color.fill(UNSET);
        if let Some(g) = self.ghost {
            let root = self.uf.find(g);
            self.color[root] = self.ghost_state;
        }
        for (v, s) in spins.iter_mut().enumerate() {
            let root = self.uf.find(v);
            if self.color[root] == UNSET {
                self.color[root] = rng.random_range(0..self.q);
            }
            *s = self.color[root];
        }
    }

    /// One sequential heat-bath pass over the sites, followed by a bond draw
    /// so connectivity can be measured.
    pub(crate) fn heat_bath_sweep<R: Rng + ?Sized>(&mut self, spins: &mut [u16], rng: &mut R) {
        for v in 0..self.n_sites {
            self.weights.fill(0.0);
            for &(u, j) in &self.neighbors[v] {
                self.weights[spins[u] as usize] += j;
            }
            if self.ghost.is_some() {
                self.weights[self.ghost_state as usize] += self.ghost_coupling[v];
            }
            let top = self
                .weights
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for w in self.weights.iter_mut() {
                *w = (*w - top).exp();
                total += *w;
            }
            let mut u = rng.random::<f64>() * total;
            let mut pick = self.q - 1;
            for (s, w) in self.weights.iter().enumerate() {
                if u < *w {
                    pick = s as u16;
                    break;
                }
                u -= w;
            }
            spins[v] = pick;
        }
        self.draw_bonds(spins, rng);
    }

    pub(crate) fn occupied(&self) -> &[bool] {
        &self.open
    }

    pub(crate) fn connected_to_ghost(&mut self, v: usize) -> bool {
        match self.ghost {
            Some(g) => self.uf.connected(v, g),
            None => false,
        }
    }
}

/// One Swendsen–Wang sweep of `state`. The boundary condition is the one
/// carried by `state`; under `Boundary::Wired(k)` the ghost stays at `k`.
pub fn sw_sweep<R: Rng + ?Sized>(
    state: &SpinConfig,
    lat: &Lattice,
    bonds: &BondMap,
    rng: &mut R,
) -> Result<SpinConfig> {
    if state.len() != lat.num_sites() {
        return Err(Error::param(
            "state",
            "spin configuration does not match the lattice",
        ));
    }
    let mut kernel = Kernel::new(lat, bonds, state.q(), state.boundary())?;
    let mut next = state.clone();
    kernel.sw_sweep(next.states_mut(), rng);
    Ok(next)
}
