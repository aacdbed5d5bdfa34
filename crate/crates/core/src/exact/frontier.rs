//! Exact random-cluster sums by dynamic programming over connectivity
//! states of an edge frontier.
//!
//! Edges are processed in an order that sweeps the box row by row. The
//! state is the partition of the current frontier vertices induced by the
//! occupied edges seen so far; a vertex leaves the frontier after its last
//! edge, and if it was the only frontier member of its block that cluster
//! is closed and contributes its factor `q`. The origin and the ghost stay
//! pinned in the frontier so their connectivity can be read off at the end.
//! States are kept in ordered maps so summation order, and hence every bit
//! of the result, is deterministic.

use std::collections::BTreeMap;

use super::{check_inputs, considered_edges, log_add, ExactResult};
use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::rc::BondMap;

/// Frontier width beyond which the label alphabet would overflow.
const MAX_FRONTIER: usize = 200;

pub fn solve(lat: &Lattice, bonds: &BondMap, q: f64, wired: bool) -> Result<ExactResult> {
    check_inputs(lat, bonds, q, wired)?;
    let plan = Plan::new(lat, bonds, q, wired);

    let main = plan.run(None, true)?;
    let log_z = main.log_z;
    let theta = (main.log_theta - log_z).exp();

    let mut edge_marginals = vec![0.0; lat.num_edges()];
    for (pos, &e) in plan.order.iter().enumerate() {
        let forced = plan.run(Some(pos), false)?;
        edge_marginals[e] = (forced.log_z - log_z).exp().min(1.0);
    }

    let mut occupied_tail = vec![0.0; lat.num_edges() + 1];
    let mut run = f64::NEG_INFINITY;
    for k in (0..main.log_counts.len()).rev() {
        run = log_add(run, main.log_counts[k]);
        occupied_tail[k] = (run - log_z).exp().min(1.0);
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

struct Plan {
    order: Vec<usize>,
    ends: Vec<(usize, usize)>,
    log_p: Vec<f64>,
    log_v: Vec<f64>,
    last_use: Vec<Option<usize>>,
    pinned: Vec<bool>,
    origin: usize,
    ghost: Option<usize>,
    log_q: f64,
    /// `ln q` per vertex that no active edge touches.
    constant: f64,
}

struct Output {
    log_z: f64,
    log_theta: f64,
    log_counts: Vec<f64>,
}

type Key = (Vec<u8>, u32);

impl Plan {
    fn new(lat: &Lattice, bonds: &BondMap, q: f64, wired: bool) -> Self {
        let n_considered = considered_edges(lat, wired);
        let ghost = if wired { lat.ghost() } else { None };
        let mut order: Vec<usize> = (0..n_considered).filter(|&e| bonds.prob(e) > 0.0).collect();
        let key = |e: usize| {
            let edge = lat.edge(e);
            let hi = if Some(edge.b) == ghost {
                edge.a
            } else {
                edge.a.max(edge.b)
            };
            (hi, edge.a.min(edge.b), e)
        };
        order.sort_by_key(|&e| key(e));

        let mut last_use = vec![None; lat.num_vertices()];
        for (pos, &e) in order.iter().enumerate() {
            let edge = lat.edge(e);
            last_use[edge.a] = Some(pos);
            last_use[edge.b] = Some(pos);
        }
        let origin = lat.origin();
        let mut pinned = vec![false; lat.num_vertices()];
        pinned[origin] = true;
        if let Some(g) = ghost {
            pinned[g] = true;
        }
        let log_q = q.ln();
        // Vertices never touched by an active edge are singleton clusters.
        let n_counted = if wired {
            lat.num_vertices()
        } else {
            lat.num_sites()
        };
        let untouched = (0..n_counted).filter(|&v| last_use[v].is_none()).count();
        Plan {
            ends: order
                .iter()
                .map(|&e| (lat.edge(e).a, lat.edge(e).b))
                .collect(),
            log_p: order.iter().map(|&e| bonds.log_prob(e)).collect(),
            log_v: order.iter().map(|&e| bonds.log_vacant(e)).collect(),
            order,
            last_use,
            pinned,
            origin,
            ghost,
            log_q,
            constant: untouched as f64 * log_q,
        }
    }

    fn run(&self, forced: Option<usize>, track_counts: bool) -> Result<Output> {
        let mut frontier: Vec<usize> = Vec::new();
        let mut states: BTreeMap<Key, f64> = BTreeMap::new();
        states.insert((Vec::new(), 0), 0.0);

        for (pos, &(a, b)) in self.ends.iter().enumerate() {
            for v in [a, b] {
                if !frontier.contains(&v) {
                    frontier.push(v);
                    if frontier.len() > MAX_FRONTIER {
                        return Err(Error::CapExceeded {
                            what: "frontier width",
                            cap_name: "frontier",
                            cap: MAX_FRONTIER as u64,
                            requested: frontier.len() as u64,
                        });
                    }
                    states = states
                        .into_iter()
                        .map(|((mut labels, c), w)| {
                            let next = labels.iter().max().map_or(0, |m| m + 1);
                            labels.push(next);
                            ((labels, c), w)
                        })
                        .collect();
                }
            }
            let pa = frontier.iter().position(|&x| x == a).unwrap();
            let pb = frontier.iter().position(|&x| x == b).unwrap();

            // Frontier positions retired after this edge, highest first.
            let mut leaving: Vec<usize> = [a, b]
                .into_iter()
                .filter(|&v| self.last_use[v] == Some(pos) && !self.pinned[v])
                .map(|v| frontier.iter().position(|&x| x == v).unwrap())
                .collect();
            leaving.sort_unstable_by(|x, y| y.cmp(x));
            leaving.dedup();

            let mut next: BTreeMap<Key, f64> = BTreeMap::new();
            let mut push = |labels: Vec<u8>, count: u32, mut w: f64| {
                let mut labels = labels;
                for &p in &leaving {
                    let l = labels[p];
                    labels.remove(p);
                    if !labels.contains(&l) {
                        w += self.log_q;
                    }
                }
                canonicalize(&mut labels);
                let slot = next.entry((labels, count)).or_insert(f64::NEG_INFINITY);
                *slot = log_add(*slot, w);
            };
            for ((labels, count), w) in states {
                if forced != Some(pos) {
                    push(labels.clone(), count, w + self.log_v[pos]);
                }
                let (la, lb) = (labels[pa], labels[pb]);
                let mut merged = labels;
                if la != lb {
                    merged
                        .iter_mut()
                        .filter(|l| **l == lb)
                        .for_each(|l| *l = la);
                }
                let c = if track_counts { count + 1 } else { count };
                push(merged, c, w + self.log_p[pos]);
            }
            states = next;
            for &p in &leaving {
                frontier.remove(p);
            }
        }

        // Untouched vertices, pinned or not, are already in the constant.
        let constant = self.constant;
        let origin_at = frontier.iter().position(|&x| x == self.origin);
        let ghost_at = self
            .ghost
            .and_then(|g| frontier.iter().position(|&x| x == g));

        let mut log_z = f64::NEG_INFINITY;
        let mut log_theta = f64::NEG_INFINITY;
        let mut log_counts = vec![
            f64::NEG_INFINITY;
            if track_counts {
                self.order.len() + 1
            } else {
                1
            }
        ];
        for ((labels, count), w) in states {
            let blocks = labels.iter().max().map_or(0, |m| *m as usize + 1);
            let w = w + blocks as f64 * self.log_q;
            log_z = log_add(log_z, w);
            if let (Some(o), Some(g)) = (origin_at, ghost_at) {
                if labels[o] == labels[g] {
                    log_theta = log_add(log_theta, w);
                }
            }
            let slot = &mut log_counts[count as usize];
            *slot = log_add(*slot, w);
        }
        Ok(Output {
            log_z: log_z + constant,
            log_theta: log_theta + constant,
            log_counts: log_counts.into_iter().map(|x| x + constant).collect(),
        })
    }
}

/// Relabels blocks in order of first occurrence.
fn canonicalize(labels: &mut [u8]) {
    let mut map = [u8::MAX; 256];
    let mut next = 0u8;
    for l in labels.iter_mut() {
        let slot = &mut map[*l as usize];
        if *slot == u8::MAX {
            *slot = next;
            next += 1;
        }
        *l = *slot;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::enumerate;
    use crate::lattice::Cutset;
    use approx::assert_abs_diff_eq;

    fn agree(lat: &Lattice, b: &BondMap, q: f64, wired: bool) {
        let x = enumerate(lat, b, q, wired, 24).unwrap();
        let y = solve(lat, b, q, wired).unwrap();
        assert_abs_diff_eq!(x.log_z, y.log_z, epsilon = 1e-10);
        assert_abs_diff_eq!(x.theta, y.theta, epsilon = 1e-12);
        for (u, v) in x.edge_marginals.iter().zip(&y.edge_marginals) {
            assert_abs_diff_eq!(u, v, epsilon = 1e-12);
        }
        for (u, v) in x.occupied_tail.iter().zip(&y.occupied_tail) {
            assert_abs_diff_eq!(u, v, epsilon = 1e-12);
        }
    }

    #[test]
    fn matches_brute_force() {
        for (d, l) in [(1, 1), (1, 4), (2, 2), (2, 3), (3, 2)] {
            let lat = Lattice::new(d, l, false).unwrap();
            let b = BondMap::uniform(&lat, 0.9).unwrap();
            for q in [0.5, 1.0, 2.0, 25.0] {
                agree(&lat, &b, q, false);
            }
        }
        for l in [1, 2, 5] {
            let lat = Lattice::new(1, l, true).unwrap();
            let b = BondMap::uniform(&lat, 1.3).unwrap();
            agree(&lat, &b, 3.0, true);
            agree(&lat, &b, 3.0, false);
        }
        let lat = Lattice::new(2, 3, true).unwrap();
        let cut = Cutset::centered_box(&lat, 0).unwrap();
        for eps in [0.0, 0.3, 1.0] {
            let b = BondMap::weakened(&lat, 6f64.ln(), eps, &cut).unwrap();
            agree(&lat, &b, 25.0, true);
        }
        let diag = Cutset::at_boundary(&lat).unwrap();
        let b = BondMap::weakened(&lat, 1.0, 0.4, &diag).unwrap();
        agree(&lat, &b, 100.0, true);
    }

    #[test]
    fn canonical_labels() {
        let mut l = vec![3, 3, 1, 0, 1];
        canonicalize(&mut l);
        assert_eq!(l, vec![0, 0, 1, 2, 1]);
    }

    #[test]
    fn reaches_beyond_brute_force() {
        let lat = Lattice::new(2, 5, true).unwrap();
        assert!(lat.num_edges() > 50);
        let cut = Cutset::centered_box(&lat, 1).unwrap();
        let b = BondMap::weakened(&lat, 6f64.ln(), 0.5, &cut).unwrap();
        let r = solve(&lat, &b, 25.0, true).unwrap();
        assert!(r.theta > 0.0 && r.theta < 1.0);
        assert!(r.log_z.is_finite());
    }
}
