//! Random-cluster machinery: bond strengths, edge and spin configurations,
//! cluster counting with ghost wiring, configuration weights and the
//! spin marginal induced by connectivity to the wired boundary.
//!
//! The unnormalized weight of an edge configuration `η` is
//!
//! ```text
//! w(η) = Π_e p_e^{η_e} (1 - p_e)^{1 - η_e} · q^{C(η)},   p_e = 1 - exp(-J_e)
//! ```
//!
//! and is handled in natural-log space throughout since `q^C` overflows
//! quickly at large `q`.

use crate::error::{Error, Result};
use crate::lattice::{Cutset, Lattice};
use crate::union_find::UnionFind;

/// Log of an impossible configuration.
pub const LOG_ZERO: f64 = f64::NEG_INFINITY;

/// `p = 1 - exp(-J)`, exactly zero at `J = 0`.
pub fn edge_probability(coupling: f64) -> Result<f64> {
    if coupling.is_nan() || coupling < 0.0 {
        return Err(Error::param(
            "J_e",
            format!("must be a non-negative number, got {coupling}"),
        ));
    }
    if coupling == 0.0 {
        return Ok(0.0);
    }
    Ok(-(-coupling).exp_m1())
}

/// Self-dual coupling of the planar q-state model, `ln(1 + sqrt(q))`.
pub fn selfdual_coupling(q: f64) -> Result<f64> {
    if !q.is_finite() || q < 1.0 {
        return Err(Error::param(
            "q",
            format!("self-dual coupling needs q >= 1, got {q}"),
        ));
    }
    Ok(q.sqrt().ln_1p())
}

/// Per-edge couplings and probabilities, with the cutset edges scaled by ε.
#[derive(Clone, Debug, PartialEq)]
pub struct BondMap {
    base: f64,
    epsilon: f64,
    dim: usize,
    couplings: Vec<f64>,
    probs: Vec<f64>,
    log_p: Vec<f64>,
    in_cut: Vec<bool>,
    cut_len: usize,
}

impl BondMap {
    /// Every edge at strength `coupling`.
    pub fn uniform(lat: &Lattice, coupling: f64) -> Result<Self> {
        Self::assemble(lat, coupling, 1.0, None)
    }

    /// Strength `coupling` everywhere except on Γ, where it is `ε·coupling`.
    pub fn weakened(lat: &Lattice, coupling: f64, epsilon: f64, cut: &Cutset) -> Result<Self> {
        Self::assemble(lat, coupling, epsilon, Some(cut))
    }

    /// Arbitrary per-edge couplings (no cutset, ε = 1).
    pub fn from_couplings(lat: &Lattice, couplings: Vec<f64>) -> Result<Self> {
        if couplings.len() != lat.num_edges() {
            return Err(Error::param(
                "couplings",
                format!(
                    "expected {} entries, got {}",
                    lat.num_edges(),
                    couplings.len()
                ),
            ));
        }
        let base = couplings.iter().copied().fold(0.0, f64::max);
        let mut map = Self::assemble(lat, base, 1.0, None)?;
        for (e, &j) in couplings.iter().enumerate() {
            map.set(e, j)?;
        }
        Ok(map)
    }

    fn assemble(lat: &Lattice, coupling: f64, epsilon: f64, cut: Option<&Cutset>) -> Result<Self> {
        if !coupling.is_finite() || coupling < 0.0 {
            return Err(Error::param(
                "J",
                format!("must be finite and non-negative, got {coupling}"),
            ));
        }
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::param(
                "epsilon",
                format!("ε must lie in [0,1], got {epsilon}"),
            ));
        }
        let n = lat.num_edges();
        let mut map = BondMap {
            base: coupling,
            epsilon,
            dim: lat.dim(),
            couplings: vec![0.0; n],
            probs: vec![0.0; n],
            log_p: vec![LOG_ZERO; n],
            in_cut: vec![false; n],
            cut_len: 0,
        };
        for e in 0..n {
            let weak = cut.is_some_and(|c| c.contains_edge(e));
            map.in_cut[e] = weak;
            map.cut_len += usize::from(weak);
            map.set(e, if weak { epsilon * coupling } else { coupling })?;
        }
        Ok(map)
    }

    fn set(&mut self, e: usize, coupling: f64) -> Result<()> {
        if !coupling.is_finite() {
            return Err(Error::param("J_e", "must be finite"));
        }
        let p = edge_probability(coupling)?;
        self.couplings[e] = coupling;
        self.probs[e] = p;
        self.log_p[e] = if p > 0.0 { p.ln() } else { LOG_ZERO };
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.couplings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.couplings.is_empty()
    }

    pub fn base_coupling(&self) -> f64 {
        self.base
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn coupling(&self, e: usize) -> f64 {
        self.couplings[e]
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    pub fn prob(&self, e: usize) -> f64 {
        self.probs[e]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// `ln p_e`, or [`LOG_ZERO`] when `p_e = 0`.
    pub fn log_prob(&self, e: usize) -> f64 {
        self.log_p[e]
    }

    /// `ln(1 - p_e) = -J_e`.
    pub fn log_vacant(&self, e: usize) -> f64 {
        -self.couplings[e]
    }

    pub fn in_cutset(&self, e: usize) -> bool {
        self.in_cut[e]
    }

    /// A cutset edge that is actually weakened (ε < 1).
    pub fn is_weak(&self, e: usize) -> bool {
        self.in_cut[e] && self.epsilon < 1.0
    }

    pub fn cut_len(&self) -> usize {
        self.cut_len
    }

    /// Scale of the effective boundary term, `2d·ε·|Γ|`.
    pub fn boundary_term_bound(&self) -> f64 {
        2.0 * self.dim as f64 * self.epsilon * self.cut_len as f64
    }

    /// Edgewise `p_e(self) >= p_e(other)`.
    pub fn dominates(&self, other: &BondMap) -> bool {
        self.len() == other.len() && self.probs.iter().zip(&other.probs).all(|(a, b)| a >= b)
    }
}

/// One occupation bit per edge, ghost edges included.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EdgeConfig(Vec<bool>);

impl EdgeConfig {
    pub fn vacant(n_edges: usize) -> Self {
        EdgeConfig(vec![false; n_edges])
    }

    pub fn occupied(n_edges: usize) -> Self {
        EdgeConfig(vec![true; n_edges])
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        EdgeConfig(bits)
    }

    /// Low `n_edges` bits of `mask`, edge `e` at bit `e`.
    pub fn from_mask(mask: u64, n_edges: usize) -> Self {
        assert!(n_edges <= 64);
        EdgeConfig((0..n_edges).map(|e| mask >> e & 1 == 1).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, e: usize) -> bool {
        self.0[e]
    }

    pub fn set(&mut self, e: usize, open: bool) {
        self.0[e] = open;
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn num_occupied(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Boundary {
    Free,
    /// Ghost vertex pinned to the given state (state 0 is "plus").
    Wired(u16),
}

impl Boundary {
    pub fn is_wired(self) -> bool {
        matches!(self, Boundary::Wired(_))
    }
}

/// Potts spins, one label in `0..q` per site. State 0 plays the role of
/// "plus".
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpinConfig {
    states: Vec<u16>,
    q: u16,
    boundary: Boundary,
}

impl SpinConfig {
    pub fn constant(n_sites: usize, q: u16, state: u16, boundary: Boundary) -> Result<Self> {
        Self::new(vec![state; n_sites], q, boundary)
    }

    pub fn new(states: Vec<u16>, q: u16, boundary: Boundary) -> Result<Self> {
        if q == 0 {
            return Err(Error::param("q", "need at least one spin state"));
        }
        if let Some(&bad) = states.iter().find(|&&s| s >= q) {
            return Err(Error::param(
                "states",
                format!("label {bad} outside 0..{q}"),
            ));
        }
        if let Boundary::Wired(k) = boundary {
            if k >= q {
                return Err(Error::param(
                    "boundary",
                    format!("wired state {k} outside 0..{q}"),
                ));
            }
        }
        Ok(SpinConfig {
            states,
            q,
            boundary,
        })
    }

    pub fn q(&self) -> u16 {
        self.q
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn states(&self) -> &[u16] {
        &self.states
    }

    pub fn states_mut(&mut self) -> &mut [u16] {
        &mut self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// State of vertex `v`, where `v == n_sites` is the ghost. Panics if
    /// the ghost is queried under free boundary conditions.
    pub fn state(&self, v: usize) -> u16 {
        if v < self.states.len() {
            return self.states[v];
        }
        match self.boundary {
            Boundary::Wired(k) => k,
            Boundary::Free => panic!("ghost state queried under free boundary conditions"),
        }
    }
}

/// Connected components of the occupied subgraph, isolated sites counted.
/// With `wired` and a ghost present, ghost edges participate and the
/// ghost's cluster counts once; otherwise ghost edges are ignored.
pub fn cluster_count(lat: &Lattice, eta: &EdgeConfig, wired: bool) -> usize {
    let mut uf = UnionFind::new(lat.num_vertices());
    count_with(&mut uf, lat, eta, wired)
}

pub(crate) fn count_with(
    uf: &mut UnionFind,
    lat: &Lattice,
    eta: &EdgeConfig,
    wired: bool,
) -> usize {
    assert_eq!(
        eta.len(),
        lat.num_edges(),
        "edge configuration length mismatch"
    );
    let use_ghost = wired && lat.has_ghost();
    uf.reset(lat.num_vertices());
    let n_edges = if use_ghost {
        lat.num_edges()
    } else {
        lat.num_lattice_edges()
    };
    for (e, edge) in lat.edges()[..n_edges].iter().enumerate() {
        if eta.get(e) {
            uf.union(edge.a, edge.b);
        }
    }
    if lat.has_ghost() && !use_ghost {
        uf.components() - 1
    } else {
        uf.components()
    }
}

/// Natural log of the unnormalized random-cluster weight. Returns
/// [`LOG_ZERO`] for configurations of zero weight (an occupied edge with
/// `p_e = 0`).
pub fn log_weight(
    lat: &Lattice,
    bonds: &BondMap,
    eta: &EdgeConfig,
    q: f64,
    wired: bool,
) -> Result<f64> {
    if q.is_nan() || q <= 0.0 || !q.is_finite() {
        return Err(Error::param(
            "q",
            format!("must be a positive number, got {q}"),
        ));
    }
    if bonds.len() != lat.num_edges() || eta.len() != lat.num_edges() {
        return Err(Error::param(
            "eta",
            "length does not match the lattice edge count",
        ));
    }
    let active = if wired && lat.has_ghost() {
        lat.num_edges()
    } else {
        lat.num_lattice_edges()
    };
    let mut acc = 0.0;
    for e in 0..active {
        let term = if eta.get(e) {
            bonds.log_prob(e)
        } else {
            bonds.log_vacant(e)
        };
        if term == LOG_ZERO {
            return Ok(LOG_ZERO);
        }
        acc += term;
    }
    let c = cluster_count(lat, eta, wired);
    let out = acc + c as f64 * q.ln();
    if out.is_nan() {
        return Err(Error::param("weight", "evaluated to NaN"));
    }
    Ok(out)
}

/// Origin spin marginal under wired-to-plus conditions given
/// `theta = P(origin connected to the ghost)`: the origin is plus when
/// connected, uniform otherwise.
pub fn origin_marginal_from_connectivity(theta: f64, q: usize) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::param(
            "theta",
            format!("must lie in [0,1], got {theta}"),
        ));
    }
    if q == 0 {
        return Err(Error::param("q", "need at least one spin state"));
    }
    let other = (1.0 - theta) / q as f64;
    let mut out = vec![other; q];
    out[0] = 1.0 - other * (q - 1) as f64;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn edge_probability_values() {
        assert_eq!(edge_probability(0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(edge_probability(2f64.ln()).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(
            edge_probability(6f64.ln()).unwrap(),
            5.0 / 6.0,
            epsilon = 1e-15
        );
        assert!(edge_probability(-0.1).is_err());
        assert!(edge_probability(f64::NAN).is_err());
    }

    /// Independent oracle: solve the self-duality relation p = sqrt(q)(1 - p)
    /// by bisection, then J = -ln(1 - p).
    fn selfdual_by_bisection(q: f64) -> f64 {
        let f = |p: f64| p / (1.0 - p) / q.sqrt() - 1.0;
        let (mut lo, mut hi) = (1e-12, 1.0 - 1e-12);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        -(1.0 - 0.5 * (lo + hi)).ln()
    }

    #[test]
    fn selfdual_matches_bisection_oracle() {
        for (q, frozen) in [
            (1.0, std::f64::consts::LN_2),
            (2.0, 0.881_373_587_019_543),
            (25.0, 1.791_759_469_228_055),
        ] {
            let oracle = selfdual_by_bisection(q);
            assert_abs_diff_eq!(oracle, frozen, epsilon = 1e-9);
            assert_abs_diff_eq!(selfdual_coupling(q).unwrap(), frozen, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(selfdual_coupling(25.0).unwrap(), 6f64.ln(), epsilon = 1e-15);
        assert!(selfdual_coupling(0.5).is_err());
    }

    #[test]
    fn bondmap_weakening() {
        let lat = Lattice::new(2, 5, true).unwrap();
        let cut = Cutset::centered_box(&lat, 0).unwrap();
        let b = BondMap::weakened(&lat, 1.0, 0.25, &cut).unwrap();
        for e in 0..lat.num_edges() {
            let expect = if cut.contains_edge(e) { 0.25 } else { 1.0 };
            assert_eq!(b.coupling(e), expect);
            assert!(b.prob(e) < 1.0);
        }
        assert_eq!(b.cut_len(), 4);
        assert_abs_diff_eq!(b.boundary_term_bound(), 2.0 * 2.0 * 0.25 * 4.0);

        let full = BondMap::weakened(&lat, 1.0, 1.0, &cut).unwrap();
        assert!(full.couplings().iter().all(|&j| j == 1.0));
        assert!(full.dominates(&b));
        assert!(!b.dominates(&full));

        let zero = BondMap::weakened(&lat, 1.0, 0.0, &cut).unwrap();
        for e in 0..lat.num_edges() {
            assert_eq!(zero.prob(e) == 0.0, zero.coupling(e) == 0.0);
        }
        assert!(BondMap::weakened(&lat, 1.0, 1.5, &cut).is_err());
        assert!(BondMap::uniform(&lat, -1.0).is_err());
    }

    #[test]
    fn cluster_count_examples() {
        let lat = Lattice::new(2, 3, false).unwrap();
        assert_eq!(cluster_count(&lat, &EdgeConfig::vacant(12), false), 9);
        assert_eq!(cluster_count(&lat, &EdgeConfig::occupied(12), false), 1);
        let lat = Lattice::new(2, 2, false).unwrap();
        let mut eta = EdgeConfig::vacant(4);
        eta.set(0, true);
        assert_eq!(cluster_count(&lat, &eta, false), 3);
    }

    #[test]
    fn cluster_count_with_ghost() {
        let lat = Lattice::new(2, 2, true).unwrap();
        let n = lat.num_edges();
        // Ghost alone plus four singletons under wiring.
        assert_eq!(cluster_count(&lat, &EdgeConfig::vacant(n), true), 5);
        // Free ignores the ghost entirely.
        assert_eq!(cluster_count(&lat, &EdgeConfig::occupied(n), false), 1);
        assert_eq!(cluster_count(&lat, &EdgeConfig::vacant(n), false), 4);
        let mut eta = EdgeConfig::vacant(n);
        eta.set(lat.num_lattice_edges(), true);
        assert_eq!(cluster_count(&lat, &eta, true), 4);
    }

    #[test]
    fn log_weight_examples() {
        let lat = Lattice::new(1, 2, false).unwrap();
        let b = BondMap::uniform(&lat, 2f64.ln()).unwrap();
        let open = EdgeConfig::occupied(1);
        let shut = EdgeConfig::vacant(1);
        assert_abs_diff_eq!(
            log_weight(&lat, &b, &open, 2.0, false).unwrap(),
            0.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            log_weight(&lat, &b, &shut, 2.0, false).unwrap(),
            2f64.ln(),
            epsilon = 1e-15
        );

        let lat = Lattice::new(2, 3, false).unwrap();
        let b = BondMap::uniform(&lat, 0.7).unwrap();
        let eta = EdgeConfig::from_mask(0b1010_0110_0101, 12);
        let bern: f64 = (0..12)
            .map(|e| {
                if eta.get(e) {
                    b.prob(e).ln()
                } else {
                    (1.0 - b.prob(e)).ln()
                }
            })
            .sum();
        assert_abs_diff_eq!(
            log_weight(&lat, &b, &eta, 1.0, false).unwrap(),
            bern,
            epsilon = 1e-12
        );

        let zero = BondMap::uniform(&lat, 0.0).unwrap();
        assert_eq!(log_weight(&lat, &zero, &eta, 2.0, false).unwrap(), LOG_ZERO);
        assert!(log_weight(&lat, &b, &eta, 0.0, false).is_err());
        assert!(log_weight(&lat, &b, &eta, f64::NAN, false).is_err());
    }

    #[test]
    fn log_weight_is_additive_over_disjoint_union() {
        // Two disjoint segments: a path of 3 sites and a path of 2 sites,
        // versus their disjoint union built by hand from a 2x3 box with the
        // middle column's vertical bond and row bonds arranged accordingly.
        let path3 = Lattice::new(1, 3, false).unwrap();
        let path2 = Lattice::new(1, 2, false).unwrap();
        let q = 3.7;
        for m3 in 0..4u64 {
            for m2 in 0..2u64 {
                let b3 = BondMap::uniform(&path3, 0.9).unwrap();
                let b2 = BondMap::uniform(&path2, 0.4).unwrap();
                let w3 = log_weight(&path3, &b3, &EdgeConfig::from_mask(m3, 2), q, false).unwrap();
                let w2 = log_weight(&path2, &b2, &EdgeConfig::from_mask(m2, 1), q, false).unwrap();
                // Union: 2x3 box, keep only row bonds of row 0 (0-1, 1-2) and
                // the single bond 3-4 of row 1; all other bonds at J = 0.
                let union = Lattice::with_sides(&[2, 3], false).unwrap();
                let mut js = vec![0.0; union.num_edges()];
                let mut mask = 0u64;
                for (e, edge) in union.edges().iter().enumerate() {
                    match (edge.a, edge.b) {
                        (0, 1) => {
                            js[e] = 0.9;
                            mask |= (m3 & 1) << e;
                        }
                        (1, 2) => {
                            js[e] = 0.9;
                            mask |= (m3 >> 1 & 1) << e;
                        }
                        (3, 4) => {
                            js[e] = 0.4;
                            mask |= (m2 & 1) << e;
                        }
                        _ => {}
                    }
                }
                // Site 5 is an extra singleton contributing ln q.
                let bu = BondMap::from_couplings(&union, js).unwrap();
                let wu = log_weight(
                    &union,
                    &bu,
                    &EdgeConfig::from_mask(mask, union.num_edges()),
                    q,
                    false,
                )
                .unwrap();
                assert_abs_diff_eq!(wu, w3 + w2 + q.ln(), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn marginal_from_connectivity() {
        let m = origin_marginal_from_connectivity(0.0, 3).unwrap();
        for x in &m {
            assert_abs_diff_eq!(*x, 1.0 / 3.0, epsilon = 1e-15);
        }
        assert_eq!(
            origin_marginal_from_connectivity(1.0, 3).unwrap(),
            vec![1.0, 0.0, 0.0]
        );
        let m = origin_marginal_from_connectivity(0.5, 2).unwrap();
        assert_abs_diff_eq!(m[0], 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(m[1], 0.25, epsilon = 1e-15);
        assert!(origin_marginal_from_connectivity(1.2, 3).is_err());
    }

    #[test]
    fn spin_config_validation() {
        assert!(SpinConfig::new(vec![0, 1, 2], 3, Boundary::Free).is_ok());
        assert!(SpinConfig::new(vec![0, 3], 3, Boundary::Free).is_err());
        assert!(SpinConfig::new(vec![0], 3, Boundary::Wired(5)).is_err());
        let s = SpinConfig::constant(4, 3, 2, Boundary::Wired(0)).unwrap();
        assert_eq!(s.state(4), 0);
        assert_eq!(s.state(1), 2);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn cluster_count_ignores_edge_order(mask in any::<u64>(), seed in any::<u64>()) {
                let lat = Lattice::new(2, 3, true).unwrap();
                let n = lat.num_edges();
                let eta = EdgeConfig::from_mask(mask, n);
                // Rebuild the same graph with edges listed in a shuffled order.
                let mut order: Vec<usize> = (0..n).collect();
                let mut s = seed | 1;
                for i in (1..n).rev() {
                    s ^= s << 13; s ^= s >> 7; s ^= s << 17;
                    order.swap(i, (s % (i as u64 + 1)) as usize);
                }
                let mut uf = UnionFind::new(lat.num_vertices());
                for &e in &order {
                    if eta.get(e) {
                        let edge = lat.edge(e);
                        uf.union(edge.a, edge.b);
                    }
                }
                prop_assert_eq!(uf.components(), cluster_count(&lat, &eta, true));
            }

            #[test]
            fn tv_identity_of_connectivity_marginal(theta in 0.0f64..=1.0, q in 2usize..120) {
                let m = origin_marginal_from_connectivity(theta, q).unwrap();
                let u = 1.0 / q as f64;
                let tv = 0.5 * m.iter().map(|p| (p - u).abs()).sum::<f64>();
                prop_assert!((tv - theta * (1.0 - u)).abs() < 1e-12);
                let sum: f64 = m.iter().sum();
                prop_assert!((sum - 1.0).abs() < 1e-13);
                if theta > 0.0 {
                    prop_assert!(m.windows(2).all(|w| w[0] >= w[1]));
                }
            }
        }
    }
}
