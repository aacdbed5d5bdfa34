use rayon::prelude::*;

use super::{check_inputs, considered_edges, ExactResult};
use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::rc::BondMap;
use crate::union_find::UnionFind;

/// Default cap on the number of enumerated edges (2^24 configurations).
pub const DEFAULT_EDGE_CAP: usize = 24;

/// Exact random-cluster quantities by summing the weight of every edge
/// configuration.
///
/// Edges with `p_e = 0` are pinned vacant and do not count towards `cap`;
/// ghost edges are skipped unless `wired`. The configurations are visited in
/// Gray-code order within chunks that fix the high-order bits, and chunks
/// are merged in index order so the result does not depend on scheduling.
pub fn enumerate(
    lat: &Lattice,
    bonds: &BondMap,
    q: f64,
    wired: bool,
    cap: usize,
) -> Result<ExactResult> {
    check_inputs(lat, bonds, q, wired)?;
    let n_considered = considered_edges(lat, wired);
    let active: Vec<usize> = (0..n_considered).filter(|&e| bonds.prob(e) > 0.0).collect();
    let n = active.len();
    if n > cap.min(62) {
        return Err(Error::CapExceeded {
            what: "enumerated edge count",
            cap_name: "enumeration edge",
            cap: cap as u64,
            requested: n as u64,
        });
    }

    let ctx = Context {
        ends: active
            .iter()
            .map(|&e| (lat.edge(e).a, lat.edge(e).b))
            .collect(),
        log_odds: active
            .iter()
            .map(|&e| bonds.log_prob(e) - bonds.log_vacant(e))
            .collect(),
        log_q: q.ln(),
        origin: lat.origin(),
        ghost: if wired { lat.ghost() } else { None },
        n_vertices: lat.num_vertices(),
        uncounted: usize::from(lat.has_ghost() && !wired),
    };
    let base: f64 = active.iter().map(|&e| bonds.log_vacant(e)).sum();

    let high_bits = n.saturating_sub(12).min(8);
    let low_bits = n - high_bits;
    let total = (0..1u64 << high_bits)
        .into_par_iter()
        .map(|chunk| ctx.run_chunk(chunk << low_bits, low_bits, n))
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Acc::new(n), Acc::merge);

    let norm = total.sum;
    let log_z = base + total.max + norm.ln();
    let theta = total.theta / norm;
    let mut edge_marginals = vec![0.0; lat.num_edges()];
    for (i, &e) in active.iter().enumerate() {
        edge_marginals[e] = (total.edges[i] / norm).min(1.0);
    }
    // Tail over all edges: counts above n are impossible.
    let mut occupied_tail = vec![0.0; lat.num_edges() + 1];
    let mut run = 0.0;
    for k in (0..=n).rev() {
        run += total.counts[k];
        occupied_tail[k] = (run / norm).min(1.0);
    }
    occupied_tail[0] = 1.0;
    ExactResult::finish(
        lat,
        bonds,
        q,
        wired,
        log_z,
        theta,
        edge_marginals,
        occupied_tail,
    )
}

struct Context {
    ends: Vec<(usize, usize)>,
    log_odds: Vec<f64>,
    log_q: f64,
    origin: usize,
    ghost: Option<usize>,
    n_vertices: usize,
    uncounted: usize,
}

/// Weighted tallies relative to a running maximum log weight.
struct Acc {
    max: f64,
    sum: f64,
    theta: f64,
    edges: Vec<f64>,
    counts: Vec<f64>,
}

impl Acc {
    fn new(n: usize) -> Self {
        Acc {
            max: f64::NEG_INFINITY,
            sum: 0.0,
            theta: 0.0,
            edges: vec![0.0; n],
            counts: vec![0.0; n + 1],
        }
    }

    fn rescale(&mut self, new_max: f64) {
        if self.max == f64::NEG_INFINITY {
            self.max = new_max;
            return;
        }
        let s = (self.max - new_max).exp();
        self.sum *= s;
        self.theta *= s;
        self.edges.iter_mut().for_each(|x| *x *= s);
        self.counts.iter_mut().for_each(|x| *x *= s);
        self.max = new_max;
    }

    fn merge(mut self, mut other: Acc) -> Acc {
        if other.max == f64::NEG_INFINITY {
            return self;
        }
        if self.max < other.max {
            self.rescale(other.max);
        } else {
            other.rescale(self.max);
        }
        self.sum += other.sum;
        self.theta += other.theta;
        for (a, b) in self.edges.iter_mut().zip(&other.edges) {
            *a += b;
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self
    }
}

impl Context {
    fn run_chunk(&self, high: u64, low_bits: usize, n: usize) -> Acc {
        let mut acc = Acc::new(n);
        let mut uf = UnionFind::new(self.n_vertices);

        // Log-odds of the open set, maintained incrementally along the Gray
        // code with a compensation term so the sum does not drift.
        let mut odds = 0.0;
        let mut comp = 0.0;
        let add = |odds: &mut f64, comp: &mut f64, x: f64| {
            let t = *odds + x;
            if odds.abs() >= x.abs() {
                *comp += (*odds - t) + x;
            } else {
                *comp += (x - t) + *odds;
            }
            *odds = t;
        };
        for b in 0..n {
            if high >> b & 1 == 1 {
                add(&mut odds, &mut comp, self.log_odds[b]);
            }
        }

        let mut gray = 0u64;
        for i in 0..1u64 << low_bits {
            if i > 0 {
                let bit = i.trailing_zeros() as usize;
                gray ^= 1 << bit;
                let x = self.log_odds[bit];
                if gray >> bit & 1 == 1 {
                    add(&mut odds, &mut comp, x);
                } else {
                    add(&mut odds, &mut comp, -x);
                }
            }
            let mask = high | gray;

            uf.reset(self.n_vertices);
            let mut rest = mask;
            let mut n_open = 0usize;
            while rest != 0 {
                let b = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                let (a, c) = self.ends[b];
                uf.union(a, c);
                n_open += 1;
            }
            let clusters = uf.components() - self.uncounted;
            let lw = odds + comp + clusters as f64 * self.log_q;
            if lw > acc.max {
                acc.rescale(lw);
            }
            let w = (lw - acc.max).exp();
            acc.sum += w;
            if let Some(g) = self.ghost {
                if uf.connected(self.origin, g) {
                    acc.theta += w;
                }
            }
            acc.counts[n_open] += w;
            let mut rest = mask;
            while rest != 0 {
                let b = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                acc.edges[b] += w;
            }
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Cutset;
    use crate::rc::{log_weight, EdgeConfig};
    use approx::assert_abs_diff_eq;

    #[test]
    fn single_edge_free() {
        let lat = Lattice::new(1, 2, false).unwrap();
        let b = BondMap::uniform(&lat, 2f64.ln()).unwrap();
        // p q / (p q + (1 - p) q^2) with p = 1/2, q = 2
        let r = enumerate(&lat, &b, 2.0, false, 24).unwrap();
        assert_abs_diff_eq!(r.edge_marginals[0], 1.0 / 3.0, epsilon = 1e-15);
        let r = enumerate(&lat, &b, 1.0, false, 24).unwrap();
        assert_abs_diff_eq!(r.edge_marginals[0], 0.5, epsilon = 1e-15);
        assert_eq!(r.theta, 0.0);
    }

    #[test]
    fn zero_epsilon_disconnects_origin() {
        let lat = Lattice::new(2, 3, true).unwrap();
        let cut = Cutset::centered_box(&lat, 0).unwrap();
        let b = BondMap::weakened(&lat, 1.0, 0.0, &cut).unwrap();
        for q in [1.0, 2.0, 3.0, 25.0] {
            let r = enumerate(&lat, &b, q, true, 24).unwrap();
            assert_eq!(r.theta, 0.0);
            if let Some(m) = &r.origin_marginal {
                for p in m {
                    assert_abs_diff_eq!(*p, 1.0 / q, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn log_z_matches_direct_sum() {
        let lat = Lattice::new(2, 2, true).unwrap();
        let b = BondMap::uniform(&lat, 0.8).unwrap();
        let n = lat.num_edges();
        let q = 3.3;
        let mut direct = f64::NEG_INFINITY;
        for mask in 0..1u64 << n {
            let eta = EdgeConfig::from_mask(mask, n);
            direct = super::super::log_add(direct, log_weight(&lat, &b, &eta, q, true).unwrap());
        }
        let r = enumerate(&lat, &b, q, true, 24).unwrap();
        assert_abs_diff_eq!(r.log_z, direct, epsilon = 1e-10);
    }

    #[test]
    fn chunking_does_not_change_the_answer() {
        // 17 active edges forces 5 high bits of chunking.
        let lat = Lattice::with_sides(&[3, 4], false).unwrap();
        assert_eq!(lat.num_edges(), 17);
        let b = BondMap::uniform(&lat, 1.1).unwrap();
        let r = enumerate(&lat, &b, 4.0, false, 24).unwrap();
        let f = super::super::frontier::solve(&lat, &b, 4.0, false).unwrap();
        assert_abs_diff_eq!(r.log_z, f.log_z, epsilon = 1e-10);
        for (x, y) in r.edge_marginals.iter().zip(&f.edge_marginals) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn cap_refusal_names_the_cap() {
        let lat = Lattice::new(2, 4, false).unwrap();
        let b = BondMap::uniform(&lat, 1.0).unwrap();
        let err = enumerate(&lat, &b, 2.0, false, 20).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("cap of 20"), "{msg}");
    }
}
