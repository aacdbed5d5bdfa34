//! Exact random-cluster computations on small lattices.
//!
//! Two independent routes evaluate the same measure: [`enumerate`] walks
//! every edge configuration, and [`frontier::solve`] runs a connectivity
//! dynamic program over an edge elimination order, which reaches lattices
//! far beyond brute force. [`spin_enumerate`] sums Potts Boltzmann weights
//! directly and serves as the cross-check of the spin/edge correspondence.

mod enumerate;
pub mod frontier;
mod spin;

use serde::Serialize;

pub use enumerate::{enumerate, DEFAULT_EDGE_CAP};
pub use spin::{spin_enumerate, DEFAULT_SPIN_CAP};

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::rc::{origin_marginal_from_connectivity, BondMap};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExactResult {
    pub log_z: f64,
    /// P(origin connected to the ghost); zero without wiring.
    pub theta: f64,
    /// Occupation probability per edge (ignored ghost edges report 0).
    pub edge_marginals: Vec<f64>,
    /// `occupied_tail[k] = P(number of occupied edges >= k)`.
    pub occupied_tail: Vec<f64>,
    /// Origin spin marginal, present for integer `q`.
    pub origin_marginal: Option<Vec<f64>>,
    pub q: f64,
    pub wired: bool,
    pub sides: Vec<usize>,
    pub coupling: f64,
    pub epsilon: f64,
}

impl ExactResult {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn finish(
        lat: &Lattice,
        bonds: &BondMap,
        q: f64,
        wired: bool,
        log_z: f64,
        theta: f64,
        edge_marginals: Vec<f64>,
        occupied_tail: Vec<f64>,
    ) -> Result<Self> {
        let theta = theta.clamp(0.0, 1.0);
        let origin_marginal = if q >= 1.0 && q.fract() == 0.0 && q <= u16::MAX as f64 {
            Some(origin_marginal_from_connectivity(theta, q as usize)?)
        } else {
            None
        };
        Ok(ExactResult {
            log_z,
            theta,
            edge_marginals,
            occupied_tail,
            origin_marginal,
            q,
            wired,
            sides: lat.sides().to_vec(),
            coupling: bonds.base_coupling(),
            epsilon: bonds.epsilon(),
        })
    }

    pub fn event_probability(&self, event: Event) -> f64 {
        match event {
            Event::OriginToGhost => self.theta,
            Event::EdgeOccupied(e) => self.edge_marginals[e],
            Event::OccupiedAtLeast(k) => self.occupied_tail.get(k).copied().unwrap_or(0.0),
        }
    }
}

/// Which exact route to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExactMethod {
    /// Full enumeration, refusing more than `cap` free edges.
    BruteForce {
        cap: usize,
    },
    Frontier,
}

impl Default for ExactMethod {
    fn default() -> Self {
        ExactMethod::BruteForce {
            cap: DEFAULT_EDGE_CAP,
        }
    }
}

pub fn solve(
    lat: &Lattice,
    bonds: &BondMap,
    q: f64,
    wired: bool,
    method: ExactMethod,
) -> Result<ExactResult> {
    match method {
        ExactMethod::BruteForce { cap } => enumerate(lat, bonds, q, wired, cap),
        ExactMethod::Frontier => frontier::solve(lat, bonds, q, wired),
    }
}

pub(crate) fn check_inputs(lat: &Lattice, bonds: &BondMap, q: f64, wired: bool) -> Result<()> {
    if !q.is_finite() || q <= 0.0 {
        return Err(Error::param(
            "q",
            format!("must be a positive number, got {q}"),
        ));
    }
    if bonds.len() != lat.num_edges() {
        return Err(Error::param("bonds", "bond map does not match the lattice"));
    }
    if wired && !lat.has_ghost() {
        return Err(Error::Geometry(
            "wired boundary requires a ghost vertex".into(),
        ));
    }
    Ok(())
}

/// Edges that carry weight in the model: lattice edges, plus ghost edges
/// under wiring.
pub(crate) fn considered_edges(lat: &Lattice, wired: bool) -> usize {
    if wired {
        lat.num_edges()
    } else {
        lat.num_lattice_edges()
    }
}

/// `ln(e^a + e^b)` with [`crate::rc::LOG_ZERO`] as the identity.
#[inline]
pub(crate) fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Increasing events used by the stochastic-ordering checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Event {
    OriginToGhost,
    EdgeOccupied(usize),
    OccupiedAtLeast(usize),
}

impl std::fmt::Display for Event {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Event::OriginToGhost => write!(f, "origin<->ghost"),
            Event::EdgeOccupied(e) => write!(f, "edge{e}=1"),
            Event::OccupiedAtLeast(k) => write!(f, "occupied>={k}"),
        }
    }
}

/// Origin-to-ghost connectivity, every single-edge event, and every
/// occupied-count threshold.
pub fn event_library(lat: &Lattice, wired: bool) -> Vec<Event> {
    let n = considered_edges(lat, wired);
    let mut out = Vec::with_capacity(2 * n + 2);
    if wired {
        out.push(Event::OriginToGhost);
    }
    out.extend((0..n).map(Event::EdgeOccupied));
    out.extend((0..=n).map(Event::OccupiedAtLeast));
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EventComparison {
    pub event: Event,
    pub p_strong: f64,
    pub p_weak: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DominationReport {
    pub comparisons: Vec<EventComparison>,
    pub passed: bool,
}

/// Tolerance for `P_strong(A) >= P_weak(A)`.
pub const DOMINATION_TOL: f64 = 1e-12;

/// Exact event-wise comparison of two random-cluster measures whose bond
/// maps are edgewise ordered (`strong >= weak`).
pub fn check_event_domination(
    lat: &Lattice,
    strong: &BondMap,
    weak: &BondMap,
    q: f64,
    wired: bool,
    events: &[Event],
    method: ExactMethod,
) -> Result<DominationReport> {
    if !strong.dominates(weak) {
        return Err(Error::param(
            "bonds",
            "bond maps are not edgewise comparable (strong >= weak)",
        ));
    }
    let a = solve(lat, strong, q, wired, method)?;
    let b = solve(lat, weak, q, wired, method)?;
    let comparisons: Vec<EventComparison> = events
        .iter()
        .map(|&event| {
            let (p_strong, p_weak) = (a.event_probability(event), b.event_probability(event));
            EventComparison {
                event,
                p_strong,
                p_weak,
                holds: p_strong >= p_weak - DOMINATION_TOL,
            }
        })
        .collect();
    let passed = comparisons.iter().all(|c| c.holds);
    Ok(DominationReport {
        comparisons,
        passed,
    })
}
