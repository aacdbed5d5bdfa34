//! Finite-size robustness scans: theta at the origin as a function of the
//! box size for a fixed weakening ε, with a weighted least-squares trend
//! verdict.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{self, DEFAULT_EDGE_CAP};
use crate::mc::{
    self, margin_radius, wls_slope, BoundaryMode, ChainConfig, MarginalEstimate, Setup,
};
use crate::rc::selfdual_coupling;

/// Slope significance used for trend verdicts.
pub const TREND_SIGMA: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Trend {
    Increasing,
    Decreasing,
    Flat,
    /// Every point is exactly zero.
    FlatAtZero,
}

impl std::fmt::Display for Trend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Trend::Increasing => "increasing",
            Trend::Decreasing => "decreasing",
            Trend::Flat => "flat",
            Trend::FlatAtZero => "flat-at-zero",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrendVerdict {
    pub trend: Trend,
    pub slope: f64,
    pub slope_se: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    pub side: usize,
    /// Cutset radius; `None` without a cutset.
    pub radius: Option<usize>,
    pub cut_len: usize,
    pub theta: f64,
    pub theta_se: f64,
    pub tv: f64,
    pub tv_se: f64,
    pub n_samples: u64,
    /// Computed by exact enumeration rather than sampling.
    pub exact: bool,
    /// `2 d ε |Γ|`, the scale of the boundary term in the free energy.
    pub boundary_term: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RobustnessCurve {
    pub dim: usize,
    pub q: usize,
    pub coupling: f64,
    pub epsilon: f64,
    pub mode: BoundaryMode,
    pub seed: u64,
    pub points: Vec<CurvePoint>,
    pub verdict: TrendVerdict,
}

impl RobustnessCurve {
    pub fn point(&self, side: usize) -> Option<&CurvePoint> {
        self.points.iter().find(|p| p.side == side)
    }
}

/// Knobs shared by all scans.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanOptions {
    /// Cutset radius for every size; `None` uses the one-site margin.
    pub radius: Option<usize>,
    /// Points whose enumerated edge count is within this cap are computed
    /// exactly; 0 always samples.
    pub exact_cap: usize,
    /// Independent chains pooled per point.
    pub streams: u64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            radius: None,
            exact_cap: DEFAULT_EDGE_CAP,
            streams: 1,
        }
    }
}

/// Total-variation distance of a marginal from the uniform vector, with a
/// standard error bounded by half the summed component errors.
pub fn tv_from_free(m: &MarginalEstimate) -> (f64, f64) {
    tv_from_uniform(&m.probs, &m.probs_se)
}

pub fn tv_from_uniform(probs: &[f64], se: &[f64]) -> (f64, f64) {
    let u = 1.0 / probs.len() as f64;
    let tv = 0.5 * probs.iter().map(|p| (p - u).abs()).sum::<f64>();
    (tv, 0.5 * se.iter().sum::<f64>())
}

/// Theta versus L at fixed ε. Sizes are scanned in parallel; each point uses
/// streams `chain.stream + i * streams ..` so results do not depend on the
/// worker count.
#[allow(clippy::too_many_arguments)]
pub fn robustness_scan(
    dim: usize,
    q: usize,
    coupling: f64,
    epsilon: f64,
    sides: &[usize],
    mode: BoundaryMode,
    chain: &ChainConfig,
    opts: &ScanOptions,
) -> Result<RobustnessCurve> {
    check_sides(sides)?;
    let points = sides
        .par_iter()
        .enumerate()
        .map(|(i, &side)| {
            let setup = Setup::build(
                dim,
                side,
                coupling,
                epsilon,
                mode,
                radius_for(mode, side, opts.radius)?,
            )?;
            let chain = ChainConfig {
                mode,
                stream: chain.stream + i as u64 * opts.streams,
                ..chain.clone()
            };
            measure(&setup, q, &chain, opts)
        })
        .collect::<Result<Vec<_>>>()?;
    let verdict = trend(&points);
    Ok(RobustnessCurve {
        dim,
        q,
        coupling,
        epsilon,
        mode,
        seed: chain.seed,
        points,
        verdict,
    })
}

/// The scan with Γ on the ghost edges, so wiring sits directly outside the
/// weakened bonds at every size.
pub fn diagonal_limit_scan(
    dim: usize,
    q: usize,
    coupling: f64,
    epsilon: f64,
    sides: &[usize],
    chain: &ChainConfig,
    opts: &ScanOptions,
) -> Result<RobustnessCurve> {
    check_sides(sides)?;
    let mode = BoundaryMode::WeaklyWiredGhost;
    let points = sides
        .par_iter()
        .enumerate()
        .map(|(i, &side)| {
            let setup = Setup::build(dim, side, coupling, epsilon, mode, Some((side - 1) / 2))?;
            let chain = ChainConfig {
                mode,
                stream: chain.stream + i as u64 * opts.streams,
                ..chain.clone()
            };
            measure(&setup, q, &chain, opts)
        })
        .collect::<Result<Vec<_>>>()?;
    let verdict = trend(&points);
    Ok(RobustnessCurve {
        dim,
        q,
        coupling,
        epsilon,
        mode,
        seed: chain.seed,
        points,
        verdict,
    })
}

/// Ising (`q = 2`) scan in d = 2 at `J = j_factor * ln(1 + sqrt 2)`,
/// i.e. below the critical temperature for `j_factor > 1`.
pub fn ising_contrast(
    j_factor: f64,
    epsilon: f64,
    sides: &[usize],
    chain: &ChainConfig,
    opts: &ScanOptions,
) -> Result<RobustnessCurve> {
    if j_factor.is_nan() || j_factor <= 1.0 {
        return Err(Error::param(
            "J_factor",
            format!("must exceed 1, got {j_factor}"),
        ));
    }
    let coupling = j_factor * selfdual_coupling(2.0)?;
    robustness_scan(
        2,
        2,
        coupling,
        epsilon,
        sides,
        BoundaryMode::WeaklyWiredGhost,
        chain,
        opts,
    )
}

fn radius_for(mode: BoundaryMode, side: usize, radius: Option<usize>) -> Result<Option<usize>> {
    Ok(match mode {
        BoundaryMode::WeaklyWiredGhost | BoundaryMode::WeaklyWiredAnnulus { .. } => {
            Some(radius.map_or_else(|| margin_radius(side), Ok)?)
        }
        BoundaryMode::Free => radius,
        BoundaryMode::WiredGhost => None,
    })
}

fn check_sides(sides: &[usize]) -> Result<()> {
    if sides.is_empty() {
        return Err(Error::param("L_list", "needs at least one size"));
    }
    if let Some(&even) = sides.iter().find(|&&l| l % 2 == 0) {
        return Err(Error::param(
            "L_list",
            format!("sizes must be odd, got {even}"),
        ));
    }
    if sides.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param("L_list", "sizes must be strictly increasing"));
    }
    Ok(())
}

fn measure(setup: &Setup, q: usize, chain: &ChainConfig, opts: &ScanOptions) -> Result<CurvePoint> {
    let lat = &setup.lattice;
    let bonds = &setup.bonds;
    let wired = setup.wired();
    let active = (0..lat.num_edges())
        .filter(|&e| (wired || !lat.is_ghost_edge(e)) && bonds.prob(e) > 0.0)
        .count();
    let (theta, theta_se, n_samples, exact) = if opts.exact_cap > 0 && active <= opts.exact_cap {
        let r = exact::enumerate(lat, bonds, q as f64, wired, opts.exact_cap)?;
        (r.theta, 0.0, 0, true)
    } else {
        let m = mc::run_chains(lat, bonds, q, chain, opts.streams)?;
        (m.theta, m.theta_se, m.n_samples, false)
    };
    let scale = 1.0 - 1.0 / q as f64;
    Ok(CurvePoint {
        side: lat.sides()[0],
        radius: setup.radius(),
        cut_len: bonds.cut_len(),
        theta,
        theta_se,
        tv: theta * scale,
        tv_se: theta_se * scale,
        n_samples,
        exact,
        boundary_term: bonds.boundary_term_bound(),
    })
}

/// Standard error used in fits: sampled points are floored at the
/// resolution `1 / n_samples`, so a point that never saw a connection does
/// not carry infinite weight.
pub fn fit_se(p: &CurvePoint) -> f64 {
    if p.exact || p.n_samples == 0 {
        p.theta_se
    } else {
        p.theta_se.max(1.0 / p.n_samples as f64)
    }
}

/// Weighted least-squares slope of theta against L, called significant at
/// [`TREND_SIGMA`].
pub fn trend(points: &[CurvePoint]) -> TrendVerdict {
    if points.iter().all(|p| p.theta == 0.0 && p.theta_se == 0.0) {
        return TrendVerdict {
            trend: Trend::FlatAtZero,
            slope: 0.0,
            slope_se: 0.0,
        };
    }
    if points.len() < 2 {
        return TrendVerdict {
            trend: Trend::Flat,
            slope: 0.0,
            slope_se: f64::INFINITY,
        };
    }
    let x: Vec<f64> = points.iter().map(|p| p.side as f64).collect();
    let y: Vec<f64> = points.iter().map(|p| p.theta).collect();
    let se: Vec<f64> = points.iter().map(fit_se).collect();
    let (slope, slope_se) = wls_slope(&x, &y, &se);
    let trend = if slope > TREND_SIGMA * slope_se {
        Trend::Increasing
    } else if slope < -TREND_SIGMA * slope_se {
        Trend::Decreasing
    } else {
        Trend::Flat
    };
    TrendVerdict {
        trend,
        slope,
        slope_se,
    }
}

/// `(theta_b - theta_a) / sqrt(se_a^2 + se_b^2)`, using [`fit_se`].
pub fn separation_sigma(a: &CurvePoint, b: &CurvePoint) -> f64 {
    let se = fit_se(a).hypot(fit_se(b));
    let diff = b.theta - a.theta;
    if se == 0.0 {
        if diff == 0.0 {
            0.0
        } else {
            diff.signum() * f64::INFINITY
        }
    } else {
        diff / se
    }
}

/// One pairwise check of theta ordering in ε at a fixed size.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrderingCheck {
    pub side: usize,
    pub eps_low: f64,
    pub eps_high: f64,
    pub theta_low: f64,
    pub theta_high: f64,
    /// `theta_high >= theta_low - 3 sigma`.
    pub holds: bool,
}

/// Compares adjacent curves (sorted by ε) point by point.
pub fn epsilon_ordering(curves: &[RobustnessCurve]) -> Vec<OrderingCheck> {
    let mut sorted: Vec<&RobustnessCurve> = curves.iter().collect();
    sorted.sort_by(|a, b| a.epsilon.total_cmp(&b.epsilon));
    let mut out = Vec::new();
    for pair in sorted.windows(2) {
        for lo in &pair[0].points {
            if let Some(hi) = pair[1].point(lo.side) {
                let tol = 3.0 * lo.theta_se.hypot(hi.theta_se) + 1e-12;
                out.push(OrderingCheck {
                    side: lo.side,
                    eps_low: pair[0].epsilon,
                    eps_high: pair[1].epsilon,
                    theta_low: lo.theta,
                    theta_high: hi.theta,
                    holds: hi.theta >= lo.theta - tol,
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn point(side: usize, theta: f64, theta_se: f64) -> CurvePoint {
        CurvePoint {
            side,
            radius: None,
            cut_len: 0,
            theta,
            theta_se,
            tv: 0.0,
            tv_se: 0.0,
            n_samples: 0,
            exact: false,
            boundary_term: 0.0,
        }
    }

    #[test]
    fn tv_examples() {
        let (tv, se) = tv_from_uniform(&[0.25; 4], &[0.0; 4]);
        assert_eq!((tv, se), (0.0, 0.0));
        let (tv, _) = tv_from_uniform(&[1.0, 0.0, 0.0, 0.0], &[0.0; 4]);
        assert_abs_diff_eq!(tv, 0.75, epsilon = 1e-15);
        let p = crate::rc::origin_marginal_from_connectivity(0.4, 25).unwrap();
        let (tv, _) = tv_from_uniform(&p, &[0.0; 25]);
        assert_abs_diff_eq!(tv, 0.384, epsilon = 1e-12);
    }

    #[test]
    fn trend_verdicts() {
        let zero = [point(9, 0.0, 0.0), point(17, 0.0, 0.0)];
        assert_eq!(trend(&zero).trend, Trend::FlatAtZero);
        let down = [
            point(9, 0.8, 0.01),
            point(17, 0.6, 0.01),
            point(33, 0.4, 0.01),
        ];
        assert_eq!(trend(&down).trend, Trend::Decreasing);
        let up = [
            point(9, 0.4, 0.01),
            point(17, 0.6, 0.01),
            point(33, 0.8, 0.01),
        ];
        assert_eq!(trend(&up).trend, Trend::Increasing);
        let noisy = [
            point(9, 0.5, 0.1),
            point(17, 0.52, 0.1),
            point(33, 0.49, 0.1),
        ];
        assert_eq!(trend(&noisy).trend, Trend::Flat);
    }

    #[test]
    fn separation() {
        assert_abs_diff_eq!(
            separation_sigma(&point(9, 0.5, 0.03), &point(9, 0.9, 0.04)),
            8.0,
            epsilon = 1e-12
        );
        assert_eq!(
            separation_sigma(&point(9, 0.5, 0.0), &point(9, 0.5, 0.0)),
            0.0
        );
    }

    #[test]
    fn sizes_are_validated() {
        let c = ChainConfig::default();
        let o = ScanOptions::default();
        let mode = BoundaryMode::WeaklyWiredGhost;
        assert!(robustness_scan(2, 2, 1.0, 0.5, &[5, 4], mode, &c, &o).is_err());
        assert!(robustness_scan(2, 2, 1.0, 0.5, &[7, 5], mode, &c, &o).is_err());
        assert!(robustness_scan(2, 2, 1.0, 0.5, &[], mode, &c, &o).is_err());
        assert!(ising_contrast(0.9, 0.1, &[5], &c, &o).is_err());
    }

    #[test]
    fn exact_points_within_cap() {
        // L = 3 with ghost has 24 edges and is enumerated; L = 5 is sampled.
        let chain = ChainConfig {
            sweeps: 3000,
            burn_in: 500,
            ..ChainConfig::default()
        };
        let j = 6f64.ln();
        let curve = robustness_scan(
            2,
            25,
            j,
            0.0,
            &[3, 5],
            BoundaryMode::WeaklyWiredGhost,
            &chain,
            &ScanOptions::default(),
        )
        .unwrap();
        assert!(curve.points[0].exact);
        assert!(!curve.points[1].exact);
        assert!(curve.points.iter().all(|p| p.theta == 0.0));
        assert_eq!(curve.verdict.trend, Trend::FlatAtZero);
    }
}
