//! Finite open boxes in `Z^d`, the optional ghost vertex used for wired
//! boundaries, and centered-box cutsets.
//!
//! Vertices are indexed row-major over their coordinates: the last axis
//! varies fastest, so in `d = 2` the vertex `(x0, x1)` has index
//! `x0 * L1 + x1`. The ghost, when present, takes index `V` (one past the
//! last site). Lattice edges come first in the edge list, ordered by their
//! lower endpoint and then by axis; ghost edges follow, one per missing
//! lattice neighbor, ordered by site, then axis, lower face before upper.

use std::collections::VecDeque;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
}

impl Edge {
    pub fn other(&self, v: usize) -> usize {
        if v == self.a {
            self.b
        } else {
            self.a
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Lattice {
    sides: Vec<usize>,
    strides: Vec<usize>,
    n_sites: usize,
    edges: Vec<Edge>,
    n_lattice_edges: usize,
    ghost: bool,
    boundary: Vec<usize>,
}

impl Lattice {
    /// Cubic box of side `side` in `dim` dimensions.
    pub fn new(dim: usize, side: usize, ghost: bool) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Geometry("dimension must be at least 1".into()));
        }
        Self::with_sides(&vec![side; dim], ghost)
    }

    /// Like [`Lattice::new`] but refuses boxes with more than `max_edges`
    /// edges (ghost edges included). Used by the exact routes.
    pub fn with_cap(dim: usize, side: usize, ghost: bool, max_edges: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Geometry("dimension must be at least 1".into()));
        }
        let sides = vec![side; dim];
        let (_, n_edges) = counts(&sides, ghost)?;
        if n_edges > max_edges {
            return Err(Error::CapExceeded {
                what: "edge count",
                cap_name: "enumeration edge",
                cap: max_edges as u64,
                requested: n_edges as u64,
            });
        }
        Self::with_sides(&sides, ghost)
    }

    /// Rectangular box with one side length per axis.
    pub fn with_sides(sides: &[usize], ghost: bool) -> Result<Self> {
        if sides.is_empty() {
            return Err(Error::Geometry("dimension must be at least 1".into()));
        }
        if sides.contains(&0) {
            return Err(Error::Geometry("side lengths must be at least 1".into()));
        }
        let (n_sites, n_edges) = counts(sides, ghost)?;
        let dim = sides.len();
        let mut strides = vec![1usize; dim];
        for k in (0..dim.saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * sides[k + 1];
        }

        let mut edges = Vec::with_capacity(n_edges);
        let mut coords = vec![0usize; dim];
        for v in 0..n_sites {
            for k in 0..dim {
                if coords[k] + 1 < sides[k] {
                    edges.push(Edge {
                        a: v,
                        b: v + strides[k],
                    });
                }
            }
            advance(&mut coords, sides);
        }
        let n_lattice_edges = edges.len();

        let mut boundary = Vec::new();
        coords.iter_mut().for_each(|c| *c = 0);
        for v in 0..n_sites {
            let mut missing = 0;
            for k in 0..dim {
                if coords[k] == 0 {
                    missing += 1;
                }
                if coords[k] + 1 == sides[k] {
                    missing += 1;
                }
            }
            if missing > 0 {
                boundary.push(v);
                if ghost {
                    for k in 0..dim {
                        if coords[k] == 0 {
                            edges.push(Edge { a: v, b: n_sites });
                        }
                        if coords[k] + 1 == sides[k] {
                            edges.push(Edge { a: v, b: n_sites });
                        }
                    }
                }
            }
            advance(&mut coords, sides);
        }
        debug_assert_eq!(edges.len(), n_edges);

        Ok(Lattice {
            sides: sides.to_vec(),
            strides,
            n_sites,
            edges,
            n_lattice_edges,
            ghost,
            boundary,
        })
    }

    pub fn dim(&self) -> usize {
        self.sides.len()
    }

    pub fn sides(&self) -> &[usize] {
        &self.sides
    }

    /// Side length when the box is cubic.
    pub fn side(&self) -> Option<usize> {
        let s = self.sides[0];
        self.sides.iter().all(|&x| x == s).then_some(s)
    }

    /// Number of lattice sites, excluding the ghost.
    pub fn num_sites(&self) -> usize {
        self.n_sites
    }

    /// Number of vertices including the ghost.
    pub fn num_vertices(&self) -> usize {
        self.n_sites + usize::from(self.ghost)
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_lattice_edges(&self) -> usize {
        self.n_lattice_edges
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> Edge {
        self.edges[e]
    }

    pub fn has_ghost(&self) -> bool {
        self.ghost
    }

    pub fn ghost(&self) -> Option<usize> {
        self.ghost.then_some(self.n_sites)
    }

    pub fn is_ghost_edge(&self, e: usize) -> bool {
        e >= self.n_lattice_edges
    }

    /// Sites with fewer than `2d` lattice neighbors.
    pub fn boundary_sites(&self) -> &[usize] {
        &self.boundary
    }

    pub fn center(&self) -> Vec<usize> {
        self.sides.iter().map(|&s| (s - 1) / 2).collect()
    }

    /// The center site (exact center when every side is odd).
    pub fn origin(&self) -> usize {
        self.index(&self.center())
    }

    pub fn coords(&self, v: usize) -> Vec<usize> {
        assert!(v < self.n_sites, "site {v} out of range");
        self.strides
            .iter()
            .zip(&self.sides)
            .map(|(&st, &s)| (v / st) % s)
            .collect()
    }

    pub fn index(&self, coords: &[usize]) -> usize {
        assert_eq!(coords.len(), self.dim());
        coords.iter().zip(&self.strides).map(|(c, s)| c * s).sum()
    }

    /// Incident `(neighbor, edge)` pairs for every vertex, ghost included.
    pub fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.num_vertices()];
        for (e, edge) in self.edges.iter().enumerate() {
            adj[edge.a].push((edge.b, e));
            adj[edge.b].push((edge.a, e));
        }
        adj
    }
}

fn advance(coords: &mut [usize], sides: &[usize]) {
    for k in (0..coords.len()).rev() {
        coords[k] += 1;
        if coords[k] < sides[k] {
            return;
        }
        coords[k] = 0;
    }
}

/// `(sites, edges)` for a box, failing on overflow.
fn counts(sides: &[usize], ghost: bool) -> Result<(usize, usize)> {
    let overflow = || Error::Geometry("lattice size overflows the address space".into());
    let n_sites = sides
        .iter()
        .try_fold(1usize, |acc, &s| acc.checked_mul(s))
        .ok_or_else(overflow)?;
    let mut n_edges = 0usize;
    let mut n_ghost = 0usize;
    for &s in sides {
        // Edges along this axis: (s - 1) * prod of the other sides.
        let others = n_sites / s;
        n_edges = others
            .checked_mul(s - 1)
            .and_then(|x| x.checked_add(n_edges))
            .ok_or_else(overflow)?;
        // Ghost edges through the two faces normal to this axis.
        n_ghost = others
            .checked_mul(2)
            .and_then(|x| x.checked_add(n_ghost))
            .ok_or_else(overflow)?;
    }
    if ghost {
        n_edges = n_edges.checked_add(n_ghost).ok_or_else(overflow)?;
    }
    Ok((n_sites, n_edges))
}

/// A set of edges separating an interior vertex set from the rest of the
/// box (and from the ghost).
#[derive(Clone, Debug, PartialEq)]
pub struct Cutset {
    radius: Option<usize>,
    edges: Vec<usize>,
    in_cut: Vec<bool>,
    interior: Vec<usize>,
    in_interior: Vec<bool>,
}

impl Cutset {
    /// Edges with exactly one endpoint in the centered box of side `2r + 1`.
    /// The inner box must lie strictly inside the lattice, whose sides must
    /// all be odd.
    pub fn centered_box(lat: &Lattice, r: usize) -> Result<Self> {
        if lat.sides().iter().any(|s| s % 2 == 0) {
            return Err(Error::Geometry(format!(
                "cutset experiments require odd side lengths, got {:?}",
                lat.sides()
            )));
        }
        let width = 2 * r + 1;
        if lat.sides().iter().any(|&s| width >= s) {
            return Err(Error::Geometry(format!(
                "inner box of side {width} does not fit strictly inside sides {:?}",
                lat.sides()
            )));
        }
        let center = lat.center();
        let mut in_interior = vec![false; lat.num_sites()];
        let mut interior = Vec::new();
        for (v, flag) in in_interior.iter_mut().enumerate() {
            let inside = lat
                .coords(v)
                .iter()
                .zip(&center)
                .all(|(&c, &m)| c.abs_diff(m) <= r);
            if inside {
                *flag = true;
                interior.push(v);
            }
        }
        let edges: Vec<usize> = lat
            .edges()
            .iter()
            .enumerate()
            .take(lat.num_lattice_edges())
            .filter(|(_, e)| in_interior[e.a] != in_interior[e.b])
            .map(|(i, _)| i)
            .collect();
        let mut in_cut = vec![false; lat.num_edges()];
        for &e in &edges {
            in_cut[e] = true;
        }
        Ok(Cutset {
            radius: Some(r),
            edges,
            in_cut,
            interior,
            in_interior,
        })
    }

    /// The ghost edges themselves: wiring sits directly outside the cutset
    /// and the interior is the whole box.
    pub fn at_boundary(lat: &Lattice) -> Result<Self> {
        if !lat.has_ghost() {
            return Err(Error::Geometry(
                "a boundary cutset needs a ghost vertex".into(),
            ));
        }
        let edges: Vec<usize> = (lat.num_lattice_edges()..lat.num_edges()).collect();
        let interior: Vec<usize> = (0..lat.num_sites()).collect();
        let radius = lat.side().filter(|s| s % 2 == 1).map(|s| (s - 1) / 2);
        Self::build(lat, radius, interior, edges)
    }

    /// Arbitrary interior and edge sets; indices are validated but the
    /// separation property is not (see [`separation_check`]).
    pub fn from_parts(lat: &Lattice, interior: Vec<usize>, edges: Vec<usize>) -> Result<Self> {
        Self::build(lat, None, interior, edges)
    }

    fn build(
        lat: &Lattice,
        radius: Option<usize>,
        mut interior: Vec<usize>,
        mut edges: Vec<usize>,
    ) -> Result<Self> {
        interior.sort_unstable();
        interior.dedup();
        edges.sort_unstable();
        edges.dedup();
        if interior.iter().any(|&v| v >= lat.num_sites()) {
            return Err(Error::Geometry("interior site out of range".into()));
        }
        if edges.iter().any(|&e| e >= lat.num_edges()) {
            return Err(Error::Geometry("cutset edge out of range".into()));
        }
        let mut in_interior = vec![false; lat.num_sites()];
        for &v in &interior {
            in_interior[v] = true;
        }
        let mut in_cut = vec![false; lat.num_edges()];
        for &e in &edges {
            in_cut[e] = true;
        }
        Ok(Cutset {
            radius,
            edges,
            in_cut,
            interior,
            in_interior,
        })
    }

    /// Same cutset with edge `e` removed from Γ.
    pub fn without_edge(&self, e: usize) -> Self {
        let mut out = self.clone();
        out.edges.retain(|&x| x != e);
        if let Some(flag) = out.in_cut.get_mut(e) {
            *flag = false;
        }
        out
    }

    pub fn radius(&self) -> Option<usize> {
        self.radius
    }

    pub fn edges(&self) -> &[usize] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains_edge(&self, e: usize) -> bool {
        self.in_cut.get(e).copied().unwrap_or(false)
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn contains_site(&self, v: usize) -> bool {
        self.in_interior.get(v).copied().unwrap_or(false)
    }
}

/// True iff a search from the interior that never crosses a cutset edge
/// stays inside the interior and never reaches the ghost.
pub fn separation_check(lat: &Lattice, cut: &Cutset) -> bool {
    let adj = lat.adjacency();
    let mut seen = vec![false; lat.num_vertices()];
    let mut queue: VecDeque<usize> = cut.interior().iter().copied().collect();
    for &v in cut.interior() {
        seen[v] = true;
    }
    while let Some(v) = queue.pop_front() {
        for &(w, e) in &adj[v] {
            if cut.contains_edge(e) || seen[w] {
                continue;
            }
            if w >= lat.num_sites() || !cut.contains_site(w) {
                return false;
            }
            seen[w] = true;
            queue.push_back(w);
        }
    }
    true
}
