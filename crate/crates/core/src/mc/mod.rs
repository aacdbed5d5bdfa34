//! Markov chain sampling of the joint spin/edge measure.
//!
//! The primary kernel is Swendsen–Wang with heterogeneous bonds; a
//! sequential heat-bath kernel targets the same law and is kept as a
//! cross-check. Each chain owns a ChaCha8 generator seeded from
//! `(seed, stream)`, so runs are reproducible bit for bit and parallel
//! chains use disjoint streams.

mod geometry;
mod kernel;
pub mod stats;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use geometry::{annulus_embed, margin_radius, BoundaryMode, Setup};
pub use kernel::sw_sweep;
pub use stats::{wls_slope, BatchMeans, Estimate};

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::rc::{BondMap, Boundary};
use kernel::Kernel;

/// Name of the generator recorded in every output.
pub const RNG_NAME: &str = "ChaCha8 (rand_chacha 0.9, seed_from_u64 + set_stream)";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Start {
    /// Independent uniform spins.
    #[default]
    Hot,
    /// Every site in state 0.
    Cold,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    #[default]
    SwendsenWang,
    HeatBath,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub sweeps: u64,
    pub burn_in: u64,
    pub thinning: u64,
    pub seed: u64,
    pub stream: u64,
    pub batches: usize,
    pub mode: BoundaryMode,
    pub start: Start,
    pub kernel: KernelKind,
    /// Also estimate the occupation probability of every edge.
    pub record_edges: bool,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            sweeps: 110_000,
            burn_in: 10_000,
            thinning: 1,
            seed: 0,
            stream: 0,
            batches: 20,
            mode: BoundaryMode::WeaklyWiredGhost,
            start: Start::Hot,
            kernel: KernelKind::SwendsenWang,
            record_edges: false,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.sweeps {
            return Err(Error::param(
                "burn_in",
                format!("must be below sweeps ({} >= {})", self.burn_in, self.sweeps),
            ));
        }
        if self.thinning == 0 {
            return Err(Error::param("thinning", "must be at least 1"));
        }
        if self.batches < 2 {
            return Err(Error::param("batches", "need at least two batches"));
        }
        Ok(())
    }

    /// Number of recorded samples.
    pub fn samples(&self) -> u64 {
        (self.sweeps - self.burn_in).div_ceil(self.thinning)
    }
}

/// Origin marginal and connectivity estimates from one chain, or several
/// pooled chains.
///
/// `probs` is the connectivity estimator: given the edge configuration the
/// origin is in the ghost state when connected to the ghost and uniform
/// otherwise, so `probs = theta e_0 + (1 - theta) / q`. Under free
/// boundary conditions this is exactly uniform. `spin_freq` are the raw
/// origin state frequencies.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MarginalEstimate {
    pub q: usize,
    pub probs: Vec<f64>,
    pub probs_se: Vec<f64>,
    pub spin_freq: Vec<f64>,
    pub spin_freq_se: Vec<f64>,
    pub theta: f64,
    pub theta_se: f64,
    /// Occupation frequency per edge; empty unless recorded.
    pub edge_means: Vec<f64>,
    pub edge_se: Vec<f64>,
    pub n_samples: u64,
    /// Effective sample size of theta (wired) or of the raw origin plus
    /// indicator (free).
    pub ess: f64,
    pub seed: u64,
    pub streams: Vec<u64>,
    pub rng: String,
    pub kernel: KernelKind,
    pub wired: bool,
}

impl MarginalEstimate {
    /// Pools independent chains of equal length: means are averaged and
    /// standard errors combined in quadrature.
    pub fn pool(chains: &[MarginalEstimate]) -> Result<MarginalEstimate> {
        let first = chains
            .first()
            .ok_or_else(|| Error::param("streams", "nothing to pool"))?;
        let n = chains.len() as f64;
        let mean = |f: &dyn Fn(&MarginalEstimate) -> &[f64]| -> Vec<f64> {
            (0..f(first).len())
                .map(|i| chains.iter().map(|c| f(c)[i]).sum::<f64>() / n)
                .collect()
        };
        let se = |f: &dyn Fn(&MarginalEstimate) -> &[f64]| -> Vec<f64> {
            (0..f(first).len())
                .map(|i| chains.iter().map(|c| f(c)[i].powi(2)).sum::<f64>().sqrt() / n)
                .collect()
        };
        let theta = chains.iter().map(|c| c.theta).sum::<f64>() / n;
        let theta_se = chains
            .iter()
            .map(|c| c.theta_se.powi(2))
            .sum::<f64>()
            .sqrt()
            / n;
        Ok(MarginalEstimate {
            q: first.q,
            probs: mean(&|c| &c.probs),
            probs_se: se(&|c| &c.probs_se),
            spin_freq: mean(&|c| &c.spin_freq),
            spin_freq_se: se(&|c| &c.spin_freq_se),
            theta,
            theta_se,
            edge_means: mean(&|c| &c.edge_means),
            edge_se: se(&|c| &c.edge_se),
            n_samples: chains.iter().map(|c| c.n_samples).sum(),
            ess: chains.iter().map(|c| c.ess).sum(),
            seed: first.seed,
            streams: chains
                .iter()
                .flat_map(|c| c.streams.iter().copied())
                .collect(),
            rng: first.rng.clone(),
            kernel: first.kernel,
            wired: first.wired,
        })
    }
}

/// One recorded sample, handed to observers.
#[derive(Debug)]
pub struct Measurement<'a> {
    pub index: u64,
    pub spins: &'a [u16],
    pub origin_state: u16,
    pub origin_to_ghost: bool,
    /// Edge occupation drawn with these spins; ghost edges are vacant
    /// without wiring.
    pub occupied: &'a [bool],
}

pub fn run_chain(
    lat: &Lattice,
    bonds: &BondMap,
    q: usize,
    cfg: &ChainConfig,
) -> Result<MarginalEstimate> {
    run_chain_observed(lat, bonds, q, cfg, |_| {})
}

/// Runs burn-in, then records every `thinning`-th sweep, passing each
/// recorded sample to `observe`.
pub fn run_chain_observed<F>(
    lat: &Lattice,
    bonds: &BondMap,
    q: usize,
    cfg: &ChainConfig,
    mut observe: F,
) -> Result<MarginalEstimate>
where
    F: FnMut(&Measurement<'_>),
{
    cfg.validate()?;
    let q16 = u16::try_from(q)
        .ok()
        .filter(|&x| x > 0 && x < u16::MAX)
        .ok_or_else(|| Error::param("q", format!("sampling needs 1 <= q < 65535, got {q}")))?;
    let wired = cfg.mode.is_wired();
    let boundary = if wired {
        Boundary::Wired(0)
    } else {
        Boundary::Free
    };
    let mut kernel = Kernel::new(lat, bonds, q16, boundary)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(cfg.stream);
    let mut spins = match cfg.start {
        Start::Hot => (0..lat.num_sites())
            .map(|_| rng.random_range(0..q16))
            .collect(),
        Start::Cold => vec![0u16; lat.num_sites()],
    };

    // Observables: theta, then the q origin states, then the edges.
    let n_edges = if cfg.record_edges { lat.num_edges() } else { 0 };
    let n_samples = cfg.samples();
    let mut bm = BatchMeans::new(1 + q + n_edges, n_samples, cfg.batches)?;
    let origin = lat.origin();
    let mut recorded = 0u64;
    for t in 0..cfg.sweeps {
        match cfg.kernel {
            KernelKind::SwendsenWang => kernel.sw_sweep(&mut spins, &mut rng),
            KernelKind::HeatBath => kernel.heat_bath_sweep(&mut spins, &mut rng),
        }
        if t < cfg.burn_in || !(t - cfg.burn_in).is_multiple_of(cfg.thinning) {
            continue;
        }
        let linked = kernel.connected_to_ghost(origin);
        let state = spins[origin];
        if linked {
            bm.add(0, 1.0);
        }
        bm.add(1 + state as usize, 1.0);
        if cfg.record_edges {
            for (e, &open) in kernel.occupied().iter().enumerate() {
                if open {
                    bm.add(1 + q + e, 1.0);
                }
            }
        }
        bm.end_sample();
        observe(&Measurement {
            index: recorded,
            spins: &spins,
            origin_state: state,
            origin_to_ghost: linked,
            occupied: kernel.occupied(),
        });
        recorded += 1;
    }

    let theta = bm.estimate(0);
    let spin: Vec<Estimate> = (0..q).map(|s| bm.estimate(1 + s)).collect();
    let edges: Vec<Estimate> = (0..n_edges).map(|e| bm.estimate(1 + q + e)).collect();
    let qf = q as f64;
    let probs = (0..q)
        .map(|s| {
            let rest = (1.0 - theta.mean) / qf;
            if s == 0 {
                1.0 - rest * (qf - 1.0)
            } else {
                rest
            }
        })
        .collect();
    let probs_se = (0..q)
        .map(|s| {
            if s == 0 {
                theta.se * (1.0 - 1.0 / qf)
            } else {
                theta.se / qf
            }
        })
        .collect();
    Ok(MarginalEstimate {
        q,
        probs,
        probs_se,
        spin_freq: spin.iter().map(|e| e.mean).collect(),
        spin_freq_se: spin.iter().map(|e| e.se).collect(),
        theta: theta.mean,
        theta_se: theta.se,
        edge_means: edges.iter().map(|e| e.mean).collect(),
        edge_se: edges.iter().map(|e| e.se).collect(),
        n_samples: bm.used_samples(),
        ess: if wired { theta.ess } else { spin[0].ess },
        seed: cfg.seed,
        streams: vec![cfg.stream],
        rng: RNG_NAME.to_string(),
        kernel: cfg.kernel,
        wired,
    })
}

/// Runs `n_streams` independent chains on streams `cfg.stream ..` in
/// parallel and pools them in stream order.
pub fn run_chains(
    lat: &Lattice,
    bonds: &BondMap,
    q: usize,
    cfg: &ChainConfig,
    n_streams: u64,
) -> Result<MarginalEstimate> {
    if n_streams == 0 {
        return Err(Error::param("streams", "must be at least 1"));
    }
    let chains = (0..n_streams)
        .into_par_iter()
        .map(|i| {
            let cfg = ChainConfig {
                stream: cfg.stream + i,
                ..cfg.clone()
            };
            run_chain(lat, bonds, q, &cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    MarginalEstimate::pool(&chains)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{spin_enumerate, DEFAULT_SPIN_CAP};
    use crate::lattice::Cutset;
    use crate::rc::SpinConfig;

    fn cfg(mode: BoundaryMode, sweeps: u64) -> ChainConfig {
        ChainConfig {
            sweeps,
            burn_in: 1000,
            mode,
            record_edges: true,
            ..ChainConfig::default()
        }
    }

    #[test]
    fn zero_probability_recolors_independently() {
        let lat = Lattice::new(2, 3, false).unwrap();
        let bonds = BondMap::uniform(&lat, 0.0).unwrap();
        let start = SpinConfig::constant(9, 3, 0, Boundary::Free).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut counts = [0usize; 3];
        for _ in 0..2000 {
            let next = sw_sweep(&start, &lat, &bonds, &mut rng).unwrap();
            for &s in next.states() {
                counts[s as usize] += 1;
            }
        }
        // 18000 independent uniform draws.
        for c in counts {
            assert!(
                (c as f64 - 6000.0).abs() < 5.0 * (18000.0f64 * (1.0 / 3.0) * (2.0 / 3.0)).sqrt()
            );
        }
    }

    #[test]
    fn certain_bonds_give_one_cluster() {
        let lat = Lattice::new(2, 4, false).unwrap();
        let bonds = BondMap::uniform(&lat, 50.0).unwrap();
        assert_eq!(bonds.prob(0), 1.0);
        let start = SpinConfig::constant(16, 5, 2, Boundary::Free).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let next = sw_sweep(&start, &lat, &bonds, &mut rng).unwrap();
            assert!(next.states().iter().all(|&s| s == next.states()[0]));
        }
    }

    #[test]
    fn ghost_cluster_keeps_the_ghost_state() {
        let lat = Lattice::new(2, 3, true).unwrap();
        let bonds = BondMap::uniform(&lat, 50.0).unwrap();
        let start = SpinConfig::constant(9, 4, 0, Boundary::Wired(0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let next = sw_sweep(&start, &lat, &bonds, &mut rng).unwrap();
        assert!(next.states().iter().all(|&s| s == 0));
    }

    #[test]
    fn stationary_free_marginal() {
        let lat = Lattice::new(2, 3, false).unwrap();
        let bonds = BondMap::uniform(&lat, 1.0).unwrap();
        let exact = spin_enumerate(&lat, &bonds, 3, Boundary::Free, DEFAULT_SPIN_CAP).unwrap();
        let m = run_chain(&lat, &bonds, 3, &cfg(BoundaryMode::Free, 41_000)).unwrap();
        for (s, &want) in exact.iter().enumerate() {
            let z = (m.spin_freq[s] - want).abs() / m.spin_freq_se[s];
            assert!(z < 4.0, "state {s}: {} vs {want} (z = {z})", m.spin_freq[s]);
        }
        assert_eq!(m.theta, 0.0);
        assert!(m.probs.iter().all(|&p| (p - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn wired_theta_and_edges_match_exact() {
        let lat = Lattice::new(2, 3, true).unwrap();
        let cut = Cutset::centered_box(&lat, 0).unwrap();
        let bonds = BondMap::weakened(&lat, 6f64.ln(), 1.0, &cut).unwrap();
        let exact = crate::exact::frontier::solve(&lat, &bonds, 25.0, true).unwrap();
        for kind in [KernelKind::SwendsenWang, KernelKind::HeatBath] {
            let c = ChainConfig {
                kernel: kind,
                ..cfg(BoundaryMode::WeaklyWiredGhost, 41_000)
            };
            let m = run_chain(&lat, &bonds, 25, &c).unwrap();
            let z = (m.theta - exact.theta).abs() / m.theta_se;
            assert!(
                z < 4.0,
                "{kind:?}: theta {} vs {} (z = {z})",
                m.theta,
                exact.theta
            );
            for e in 0..lat.num_edges() {
                let se = m.edge_se[e].max(1e-3);
                assert!(
                    (m.edge_means[e] - exact.edge_marginals[e]).abs() < 5.0 * se,
                    "edge {e}"
                );
            }
        }
    }

    #[test]
    fn zero_epsilon_never_connects() {
        let s = Setup::build(2, 7, 6f64.ln(), 0.0, BoundaryMode::WeaklyWiredGhost, None).unwrap();
        let m = run_chain(
            &s.lattice,
            &s.bonds,
            25,
            &cfg(BoundaryMode::WeaklyWiredGhost, 3000),
        )
        .unwrap();
        assert_eq!(m.theta, 0.0);
        assert_eq!(m.theta_se, 0.0);
    }

    #[test]
    fn reproducible_series() {
        let s = Setup::build(2, 5, 1.0, 0.5, BoundaryMode::WeaklyWiredGhost, None).unwrap();
        let c = ChainConfig {
            stream: 7,
            ..cfg(BoundaryMode::WeaklyWiredGhost, 1500)
        };
        let series = |c: &ChainConfig| {
            let mut out = Vec::new();
            let m = run_chain_observed(&s.lattice, &s.bonds, 3, c, |x| {
                out.push((x.origin_state, x.origin_to_ghost, x.spins.to_vec()))
            })
            .unwrap();
            (out, m)
        };
        let (a, ma) = series(&c);
        let (b, mb) = series(&c);
        assert_eq!(a, b);
        assert_eq!(ma, mb);
        let (other, _) = series(&ChainConfig {
            stream: 8,
            ..c.clone()
        });
        assert_ne!(a, other);
    }

    #[test]
    fn config_validation() {
        let mut c = ChainConfig::default();
        c.burn_in = c.sweeps;
        assert!(c.validate().is_err());
        let c = ChainConfig {
            thinning: 0,
            ..ChainConfig::default()
        };
        assert!(c.validate().is_err());
        let c = ChainConfig {
            sweeps: 11,
            burn_in: 1,
            thinning: 3,
            ..ChainConfig::default()
        };
        assert_eq!(c.samples(), 4);
    }

    #[test]
    fn pooled_chains() {
        let lat = Lattice::new(2, 3, true).unwrap();
        let bonds = BondMap::uniform(&lat, 1.0).unwrap();
        let c = cfg(BoundaryMode::WiredGhost, 3000);
        let pooled = run_chains(&lat, &bonds, 2, &c, 3).unwrap();
        assert_eq!(pooled.streams, vec![0, 1, 2]);
        let again = run_chains(&lat, &bonds, 2, &c, 3).unwrap();
        assert_eq!(pooled, again);
        assert!((pooled.probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}
