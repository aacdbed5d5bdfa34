//! Site and square classification of planar Potts configurations, contour
//! extraction and census, and the constrained partition-function check.
//!
//! A bond is ordered when its endpoint spins agree (unbroken) and broken
//! otherwise. Sites are classified by their number of ordered bonds; a bond
//! is weak when it lies in the cutset and ε < 1. Unit squares are ordered
//! (four ordered sides), disordered (four broken sides) or irregular;
//! ordered squares inside the cutset with a corner touching a weak bond are
//! promoted to contour squares alongside the irregular ones. Contours are
//! the connected components of contour squares under a chosen adjacency.

use std::collections::{BTreeMap, VecDeque};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::mc::wls_slope;
use crate::rc::{selfdual_coupling, BondMap, SpinConfig};
use crate::union_find::UnionFind;

fn require_planar(lat: &Lattice) -> Result<()> {
    if lat.dim() != 2 {
        return Err(Error::Geometry(format!(
            "contour analysis is defined for d = 2, got d = {}",
            lat.dim()
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SiteClassification {
    /// Ordered bonds incident to each site.
    pub ordered: Vec<u8>,
    pub touches_weak: Vec<bool>,
    /// `counts[k]` = number of sites in E_k.
    pub counts: [usize; 5],
    /// Sites in E_4 touching a weak bond.
    pub e4_prime: usize,
}

impl SiteClassification {
    pub fn n_sites(&self) -> usize {
        self.ordered.len()
    }
}

fn weak_sites(lat: &Lattice, bonds: &BondMap, wired: bool) -> Vec<bool> {
    let mut weak = vec![false; lat.num_sites()];
    for (e, edge) in lat.edges().iter().enumerate() {
        if (wired || !lat.is_ghost_edge(e)) && bonds.is_weak(e) {
            for v in [edge.a, edge.b] {
                if v < lat.num_sites() {
                    weak[v] = true;
                }
            }
        }
    }
    weak
}

fn classify_with(
    lat: &Lattice,
    bonds: &BondMap,
    wired: bool,
    ordered_edge: impl Fn(usize) -> bool,
) -> SiteClassification {
    let n = lat.num_sites();
    let mut ordered = vec![0u8; n];
    for (e, edge) in lat.edges().iter().enumerate() {
        if (wired || !lat.is_ghost_edge(e)) && ordered_edge(e) {
            for v in [edge.a, edge.b] {
                if v < n {
                    ordered[v] += 1;
                }
            }
        }
    }
    let touches_weak = weak_sites(lat, bonds, wired);
    let mut counts = [0usize; 5];
    let mut e4_prime = 0;
    for v in 0..n {
        let k = ordered[v] as usize;
        counts[k] += 1;
        if k == 4 && touches_weak[v] {
            e4_prime += 1;
        }
    }
    SiteClassification {
        ordered,
        touches_weak,
        counts,
        e4_prime,
    }
}

/// Classifies every site of a planar configuration. Under a wired boundary
/// the ghost edges count as bonds to the pinned ghost state.
pub fn classify_sites(
    sigma: &SpinConfig,
    lat: &Lattice,
    bonds: &BondMap,
) -> Result<SiteClassification> {
    require_planar(lat)?;
    if sigma.len() != lat.num_sites() || bonds.len() != lat.num_edges() {
        return Err(Error::param(
            "sigma",
            "configuration does not match the lattice",
        ));
    }
    let wired = sigma.boundary().is_wired();
    if wired && !lat.has_ghost() {
        return Err(Error::Geometry(
            "wired boundary requires a ghost vertex".into(),
        ));
    }
    Ok(classify_with(lat, bonds, wired, |e| {
        let edge = lat.edge(e);
        sigma.state(edge.a) == sigma.state(edge.b)
    }))
}

/// `(E0 + E4 - E4') ln q + (3/4 + ε)(E1 + E2 + E3 + E4') ln q`.
pub fn bkl_rhs(c: &SiteClassification, q: f64, epsilon: f64) -> f64 {
    let [e0, e1, e2, e3, e4] = c.counts;
    let e4p = c.e4_prime;
    let ln_q = q.ln();
    (e0 + e4 - e4p) as f64 * ln_q + (0.75 + epsilon) * (e1 + e2 + e3 + e4p) as f64 * ln_q
}

/// Which ε enters the site-count bound.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub enum BklEpsilon {
    /// The bond-weakening factor of the bond map.
    #[default]
    Bond,
    /// An independent constant.
    Fixed(f64),
}

impl BklEpsilon {
    fn resolve(self, bonds: &BondMap) -> f64 {
        match self {
            BklEpsilon::Bond => bonds.epsilon(),
            BklEpsilon::Fixed(x) => x,
        }
    }
}

/// Largest number of clusters of unbroken bonds the coloring counter accepts.
pub const MAX_COLORING_VERTICES: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PatternCheck {
    /// Broken flag per considered edge.
    pub broken: Vec<bool>,
    /// `ln Z(Λ | u, b)`; `-inf` for patterns no coloring realizes.
    pub log_z: f64,
    pub rhs: f64,
    pub holds: bool,
    pub counts: [usize; 5],
    pub e4_prime: usize,
}

/// `Z(Λ|u,b)`: the sum over spin configurations that agree across every
/// unbroken bond and disagree across every broken one of
/// `Π_{unbroken} e^{J_e}`, compared with [`bkl_rhs`].
///
/// The sum factorizes into `exp(Σ_unbroken J_e)` times the number of
/// proper colorings of the graph obtained by contracting unbroken bonds,
/// which is counted exactly. Under `wired` the ghost edges are part of the
/// pattern and the ghost state is fixed.
pub fn constrained_partition_check(
    lat: &Lattice,
    bonds: &BondMap,
    q: u16,
    broken: &[bool],
    wired: bool,
    epsilon: BklEpsilon,
) -> Result<PatternCheck> {
    require_planar(lat)?;
    check_selfdual(bonds, q)?;
    if wired && !lat.has_ghost() {
        return Err(Error::Geometry(
            "wired boundary requires a ghost vertex".into(),
        ));
    }
    let n_considered = if wired {
        lat.num_edges()
    } else {
        lat.num_lattice_edges()
    };
    if broken.len() != n_considered {
        return Err(Error::param(
            "pattern",
            format!("expected {n_considered} bond flags, got {}", broken.len()),
        ));
    }
    let n_vertices = if wired {
        lat.num_vertices()
    } else {
        lat.num_sites()
    };
    let mut uf = UnionFind::new(n_vertices);
    let mut energy = 0.0;
    for (e, &is_broken) in broken.iter().enumerate() {
        if !is_broken {
            let edge = lat.edge(e);
            uf.union(edge.a, edge.b);
            energy += bonds.coupling(e);
        }
    }
    let class = classify_with(lat, bonds, wired, |e| !broken[e]);
    let rhs = bkl_rhs(&class, q as f64, epsilon.resolve(bonds));

    let mut root_id = vec![usize::MAX; n_vertices];
    let mut k = 0;
    for v in 0..n_vertices {
        let r = uf.find(v);
        if root_id[r] == usize::MAX {
            root_id[r] = k;
            k += 1;
        }
    }
    if k > MAX_COLORING_VERTICES {
        return Err(Error::CapExceeded {
            what: "clusters of unbroken bonds",
            cap_name: "coloring vertex",
            cap: MAX_COLORING_VERTICES as u64,
            requested: k as u64,
        });
    }
    let mut adjacent = vec![0u32; k];
    let mut feasible = true;
    for e in (0..n_considered).filter(|&e| broken[e]) {
        let edge = lat.edge(e);
        let (a, b) = (root_id[uf.find(edge.a)], root_id[uf.find(edge.b)]);
        if a == b {
            feasible = false;
            break;
        }
        adjacent[a] |= 1 << b;
        adjacent[b] |= 1 << a;
    }
    let log_z = if feasible {
        let mut colorings = count_colorings(&adjacent, q as f64);
        if wired {
            colorings /= q as f64;
        }
        if colorings > 0.0 {
            energy + colorings.ln()
        } else {
            f64::NEG_INFINITY
        }
    } else {
        f64::NEG_INFINITY
    };
    Ok(PatternCheck {
        broken: broken.to_vec(),
        log_z,
        rhs,
        holds: log_z <= rhs + 1e-9,
        counts: class.counts,
        e4_prime: class.e4_prime,
    })
}

fn check_selfdual(bonds: &BondMap, q: u16) -> Result<()> {
    let j = selfdual_coupling(q as f64)?;
    if (bonds.base_coupling() - j).abs() > 1e-9 * j.max(1.0) {
        return Err(Error::param(
            "J",
            format!(
                "the constrained check runs at J = ln(1 + sqrt q) = {j}, got {}",
                bonds.base_coupling()
            ),
        ));
    }
    Ok(())
}

/// Proper `q`-colorings of a graph given by adjacency bitmasks, summed over
/// partitions into independent sets, each partition with `k` blocks
/// contributing `q (q - 1) ... (q - k + 1)`.
fn count_colorings(adjacent: &[u32], q: f64) -> f64 {
    fn go(v: usize, adjacent: &[u32], classes: &mut Vec<u32>, q: f64) -> f64 {
        if v == adjacent.len() {
            return 1.0;
        }
        let mut total = 0.0;
        for i in 0..classes.len() {
            if classes[i] & adjacent[v] == 0 {
                classes[i] |= 1 << v;
                total += go(v + 1, adjacent, classes, q);
                classes[i] &= !(1 << v);
            }
        }
        let fresh = q - classes.len() as f64;
        if fresh > 0.0 {
            classes.push(1 << v);
            total += fresh * go(v + 1, adjacent, classes, q);
            classes.pop();
        }
        total
    }
    go(0, adjacent, &mut Vec::new(), q)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PatternTable {
    pub rows: Vec<PatternCheck>,
    pub violations: usize,
}

/// Largest number of pattern bonds accepted by [`pattern_table`].
pub const MAX_PATTERN_EDGES: usize = 20;

/// Runs [`constrained_partition_check`] for every broken/unbroken pattern,
/// in increasing bitmask order with bit `e` set when edge `e` is broken.
pub fn pattern_table(
    lat: &Lattice,
    bonds: &BondMap,
    q: u16,
    wired: bool,
    epsilon: BklEpsilon,
) -> Result<PatternTable> {
    let n = if wired {
        lat.num_edges()
    } else {
        lat.num_lattice_edges()
    };
    if n > MAX_PATTERN_EDGES {
        return Err(Error::CapExceeded {
            what: "pattern bond count",
            cap_name: "pattern edge",
            cap: MAX_PATTERN_EDGES as u64,
            requested: n as u64,
        });
    }
    let mut rows = Vec::with_capacity(1 << n);
    for mask in 0..1u64 << n {
        let broken: Vec<bool> = (0..n).map(|e| mask >> e & 1 == 1).collect();
        rows.push(constrained_partition_check(
            lat, bonds, q, &broken, wired, epsilon,
        )?);
    }
    let violations = rows.iter().filter(|r| !r.holds).count();
    Ok(PatternTable { rows, violations })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SquareClass {
    Ordered,
    Disordered,
    Irregular,
    /// Ordered, but touching a weak bond; counts as a contour square.
    OrderedBoundary,
}

impl SquareClass {
    pub fn is_contour(self) -> bool {
        matches!(self, SquareClass::Irregular | SquareClass::OrderedBoundary)
    }
}

/// When two contour squares belong to the same contour.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Adjacency {
    /// Sharing a side.
    #[default]
    Side,
    /// Sharing a side or a corner.
    Corner,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Contour {
    /// Square indices `i * (L1 - 1) + j` for the square with lower corner
    /// `(i, j)`.
    pub squares: Vec<usize>,
    pub surrounds_origin: bool,
}

impl Contour {
    pub fn len(&self) -> usize {
        self.squares.len()
    }

    pub fn is_empty(&self) -> bool {
        self.squares.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContourSet {
    pub classes: Vec<SquareClass>,
    pub contours: Vec<Contour>,
}

impl ContourSet {
    pub fn contour_squares(&self) -> usize {
        self.classes.iter().filter(|c| c.is_contour()).count()
    }
}

/// Reusable square geometry of a planar box.
#[derive(Clone, Debug)]
pub struct SquareGrid {
    rows: usize,
    cols: usize,
    /// Lattice edge indices of each square's sides.
    sides: Vec<[usize; 4]>,
    /// Ordered squares that would be promoted to contour squares.
    boundary_square: Vec<bool>,
    origin: (usize, usize),
    adjacency: Adjacency,
}

impl SquareGrid {
    /// Squares inside the cutset are those whose corners all lie in the
    /// origin's component once the weak bonds are removed.
    pub fn new(lat: &Lattice, bonds: &BondMap, adjacency: Adjacency) -> Result<Self> {
        require_planar(lat)?;
        let (l0, l1) = (lat.sides()[0], lat.sides()[1]);
        let (rows, cols) = (l0.saturating_sub(1), l1.saturating_sub(1));
        let mut next = vec![[usize::MAX; 2]; lat.num_sites()];
        for e in 0..lat.num_lattice_edges() {
            let edge = lat.edge(e);
            let axis = usize::from(edge.b - edge.a == 1 && l1 > 1);
            next[edge.a][axis] = e;
        }
        let mut sides = Vec::with_capacity(rows * cols);
        let mut corners = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                let c = [
                    lat.index(&[i, j]),
                    lat.index(&[i + 1, j]),
                    lat.index(&[i, j + 1]),
                    lat.index(&[i + 1, j + 1]),
                ];
                sides.push([next[c[0]][1], next[c[1]][1], next[c[0]][0], next[c[2]][0]]);
                corners.push(c);
            }
        }
        let weak_site = weak_sites(lat, bonds, lat.has_ghost());
        let inside = inside_sites(lat, bonds);
        let boundary_square = corners
            .iter()
            .map(|c| c.iter().all(|&v| inside[v]) && c.iter().any(|&v| weak_site[v]))
            .collect();
        let center = lat.center();
        Ok(SquareGrid {
            rows,
            cols,
            sides,
            boundary_square,
            origin: (center[0], center[1]),
            adjacency,
        })
    }

    pub fn num_squares(&self) -> usize {
        self.rows * self.cols
    }

    pub fn classify(&self, spins: &[u16], lat: &Lattice) -> Vec<SquareClass> {
        (0..self.num_squares())
            .map(|s| {
                let ordered = self.sides[s]
                    .iter()
                    .filter(|&&e| {
                        let edge = lat.edge(e);
                        spins[edge.a] == spins[edge.b]
                    })
                    .count();
                match ordered {
                    4 if self.boundary_square[s] => SquareClass::OrderedBoundary,
                    4 => SquareClass::Ordered,
                    0 => SquareClass::Disordered,
                    _ => SquareClass::Irregular,
                }
            })
            .collect()
    }

    pub fn extract(&self, spins: &[u16], lat: &Lattice) -> ContourSet {
        let classes = self.classify(spins, lat);
        let mut label = vec![usize::MAX; classes.len()];
        let mut contours = Vec::new();
        let mut queue = VecDeque::new();
        for start in 0..classes.len() {
            if !classes[start].is_contour() || label[start] != usize::MAX {
                continue;
            }
            let id = contours.len();
            let mut squares = Vec::new();
            label[start] = id;
            queue.push_back(start);
            while let Some(s) = queue.pop_front() {
                squares.push(s);
                let (i, j) = (s / self.cols, s % self.cols);
                for di in -1i64..=1 {
                    for dj in -1i64..=1 {
                        if self.adjacency == Adjacency::Side && di != 0 && dj != 0 {
                            continue;
                        }
                        let (ni, nj) = (i as i64 + di, j as i64 + dj);
                        if ni < 0 || nj < 0 || ni >= self.rows as i64 || nj >= self.cols as i64 {
                            continue;
                        }
                        let t = ni as usize * self.cols + nj as usize;
                        if classes[t].is_contour() && label[t] == usize::MAX {
                            label[t] = id;
                            queue.push_back(t);
                        }
                    }
                }
            }
            squares.sort_unstable();
            contours.push(Contour {
                squares,
                surrounds_origin: false,
            });
        }
        for (id, c) in contours.iter_mut().enumerate() {
            c.surrounds_origin = self.surrounds(&label, id, &c.squares);
        }
        ContourSet { classes, contours }
    }

    /// Whether the closed union of the contour's squares contains the
    /// origin or separates it from the outside of the box.
    fn surrounds(&self, label: &[usize], id: usize, squares: &[usize]) -> bool {
        let (oi, oj) = self.origin;
        // Squares having the origin as a corner.
        let mut around = Vec::new();
        for (di, dj) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            if oi >= di && oj >= dj && oi - di < self.rows && oj - dj < self.cols {
                around.push((oi - di) * self.cols + (oj - dj));
            }
        }
        if around.iter().any(|&s| label[s] == id) {
            return true;
        }
        let (mut lo_i, mut hi_i, mut lo_j, mut hi_j) = (usize::MAX, 0, usize::MAX, 0);
        for &s in squares {
            let (i, j) = (s / self.cols, s % self.cols);
            lo_i = lo_i.min(i);
            hi_i = hi_i.max(i);
            lo_j = lo_j.min(j);
            hi_j = hi_j.max(j);
        }
        if !(lo_i < oi && hi_i >= oi && lo_j < oj && hi_j >= oj) {
            return false;
        }
        let mut seen = vec![false; self.num_squares()];
        let mut queue: VecDeque<usize> = around.into_iter().collect();
        for &s in &queue {
            seen[s] = true;
        }
        while let Some(s) = queue.pop_front() {
            let (i, j) = (s / self.cols, s % self.cols);
            if i == 0 || j == 0 || i + 1 == self.rows || j + 1 == self.cols {
                return false;
            }
            for t in [s - self.cols, s + self.cols, s - 1, s + 1] {
                if !seen[t] && label[t] != id {
                    seen[t] = true;
                    queue.push_back(t);
                }
            }
        }
        true
    }
}

/// Sites reachable from the origin without crossing a weak lattice bond.
fn inside_sites(lat: &Lattice, bonds: &BondMap) -> Vec<bool> {
    let mut inside = vec![false; lat.num_sites()];
    let adjacency = lat.adjacency();
    let mut queue = VecDeque::from([lat.origin()]);
    inside[lat.origin()] = true;
    while let Some(v) = queue.pop_front() {
        for &(u, e) in &adjacency[v] {
            if u < lat.num_sites() && !inside[u] && !bonds.is_weak(e) {
                inside[u] = true;
                queue.push_back(u);
            }
        }
    }
    inside
}

/// Convenience wrapper building the square grid for one configuration.
pub fn extract_contours(
    sigma: &SpinConfig,
    lat: &Lattice,
    bonds: &BondMap,
    adjacency: Adjacency,
) -> Result<ContourSet> {
    if sigma.len() != lat.num_sites() {
        return Err(Error::param(
            "sigma",
            "configuration does not match the lattice",
        ));
    }
    Ok(SquareGrid::new(lat, bonds, adjacency)?.extract(sigma.states(), lat))
}

/// Histogram over samples of the sizes of contours surrounding the origin.
/// Each sample contributes at most once per size.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ContourCensus {
    pub counts: BTreeMap<usize, u64>,
    pub n_samples: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CensusRow {
    pub size: usize,
    pub count: u64,
    pub p_hat: f64,
    pub se: f64,
    /// `2 size ln 2 - (C size / 4) ln q` for each `C` of the panel.
    pub log_peierls: Vec<f64>,
}

impl ContourCensus {
    pub fn observe(&mut self, set: &ContourSet) {
        self.n_samples += 1;
        let mut sizes: Vec<usize> = set
            .contours
            .iter()
            .filter(|c| c.surrounds_origin)
            .map(Contour::len)
            .collect();
        sizes.sort_unstable();
        sizes.dedup();
        for s in sizes {
            *self.counts.entry(s).or_insert(0) += 1;
        }
    }

    pub fn merge(&mut self, other: &ContourCensus) {
        self.n_samples += other.n_samples;
        for (&s, &c) in &other.counts {
            *self.counts.entry(s).or_insert(0) += c;
        }
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn rows(&self, q: f64, c_panel: &[f64]) -> Vec<CensusRow> {
        let n = self.n_samples.max(1) as f64;
        self.counts
            .iter()
            .map(|(&size, &count)| {
                let p = count as f64 / n;
                let l = size as f64;
                CensusRow {
                    size,
                    count,
                    p_hat: p,
                    se: (p * (1.0 - p) / n).sqrt(),
                    log_peierls: c_panel
                        .iter()
                        .map(|c| 2.0 * l * 2f64.ln() - c * l / 4.0 * q.ln())
                        .collect(),
                }
            })
            .collect()
    }

    /// Weighted least-squares slope of `ln P̂(ℓ)` against `ℓ` over sizes
    /// seen at least `min_count` times, or `None` with fewer than two such
    /// sizes.
    pub fn log_slope(&self, min_count: u64) -> Option<(f64, f64)> {
        let n = self.n_samples as f64;
        let pts: Vec<(f64, f64, f64)> = self
            .counts
            .iter()
            .filter(|(_, &c)| c >= min_count.max(1))
            .map(|(&s, &c)| {
                let p = c as f64 / n;
                (s as f64, p.ln(), ((1.0 - p) / (n * p)).sqrt())
            })
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let se: Vec<f64> = pts.iter().map(|p| p.2).collect();
        Some(wls_slope(&x, &y, &se))
    }
}

/// Census over a stream of spin configurations.
pub fn contour_census<'a, I>(
    samples: I,
    lat: &Lattice,
    bonds: &BondMap,
    adjacency: Adjacency,
) -> Result<ContourCensus>
where
    I: IntoIterator<Item = &'a [u16]>,
{
    let grid = SquareGrid::new(lat, bonds, adjacency)?;
    let mut census = ContourCensus::default();
    for spins in samples {
        if spins.len() != lat.num_sites() {
            return Err(Error::param(
                "samples",
                "configuration does not match the lattice",
            ));
        }
        census.observe(&grid.extract(spins, lat));
    }
    Ok(census)
}
