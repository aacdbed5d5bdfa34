use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Cutset, Lattice};
use crate::rc::BondMap;

/// Boundary treatment of a sampled box.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryMode {
    Free,
    /// Ghost-wired box, all bonds at full strength.
    WiredGhost,
    /// Ghost-wired box with the cutset bonds weakened.
    WeaklyWiredGhost,
    /// Weakened cutset around an inner box, embedded `width` sites deep in
    /// a larger ghost-wired box; `None` means `ceil(L / 2)`.
    WeaklyWiredAnnulus {
        width: Option<usize>,
    },
}

impl BoundaryMode {
    pub fn is_wired(self) -> bool {
        !matches!(self, BoundaryMode::Free)
    }

    pub fn name(self) -> &'static str {
        match self {
            BoundaryMode::Free => "free",
            BoundaryMode::WiredGhost => "wired-ghost",
            BoundaryMode::WeaklyWiredGhost => "weakly-wired-ghost",
            BoundaryMode::WeaklyWiredAnnulus { .. } => "weakly-wired-annulus",
        }
    }
}

/// A lattice, its (optional) cutset and the matching bond map.
#[derive(Clone, Debug)]
pub struct Setup {
    pub lattice: Lattice,
    pub cutset: Option<Cutset>,
    pub bonds: BondMap,
    pub mode: BoundaryMode,
}

impl Setup {
    pub fn wired(&self) -> bool {
        self.mode.is_wired()
    }

    /// Cutset radius, or `None` when the cutset is the ghost edges or absent.
    pub fn radius(&self) -> Option<usize> {
        self.cutset.as_ref().and_then(Cutset::radius)
    }

    /// Builds the geometry for a box of side `side`.
    ///
    /// `radius` defaults to the one-site margin `(side - 3) / 2` in the
    /// weakly-wired modes. A radius with `2r + 1 == side` puts the cutset on
    /// the ghost edges themselves. In `Free` mode a radius weakens a centered
    /// box; without one the bonds are uniform. `WiredGhost` ignores both.
    pub fn build(
        dim: usize,
        side: usize,
        coupling: f64,
        epsilon: f64,
        mode: BoundaryMode,
        radius: Option<usize>,
    ) -> Result<Setup> {
        match mode {
            BoundaryMode::Free => {
                let lattice = Lattice::new(dim, side, false)?;
                let cutset = radius
                    .map(|r| Cutset::centered_box(&lattice, r))
                    .transpose()?;
                let bonds = match &cutset {
                    Some(c) => BondMap::weakened(&lattice, coupling, epsilon, c)?,
                    None => BondMap::uniform(&lattice, coupling)?,
                };
                Ok(Setup {
                    lattice,
                    cutset,
                    bonds,
                    mode,
                })
            }
            BoundaryMode::WiredGhost => {
                let lattice = Lattice::new(dim, side, true)?;
                let bonds = BondMap::uniform(&lattice, coupling)?;
                Ok(Setup {
                    lattice,
                    cutset: None,
                    bonds,
                    mode,
                })
            }
            BoundaryMode::WeaklyWiredGhost => {
                check_odd(side)?;
                let r = match radius {
                    Some(r) => r,
                    None => margin_radius(side)?,
                };
                let lattice = Lattice::new(dim, side, true)?;
                weakened(lattice, r, coupling, epsilon, mode)
            }
            BoundaryMode::WeaklyWiredAnnulus { width } => {
                let r = match radius {
                    Some(r) => r,
                    None => margin_radius(side)?,
                };
                annulus_embed(
                    dim,
                    side,
                    width.unwrap_or(side.div_ceil(2)),
                    r,
                    coupling,
                    epsilon,
                )
            }
        }
    }
}

/// The one-site-margin radius `(side - 3) / 2`: the cutset is the layer of
/// edges just inside the outermost ring of sites.
pub fn margin_radius(side: usize) -> Result<usize> {
    check_odd(side)?;
    if side < 3 {
        return Err(Error::Geometry(format!(
            "side {side} leaves no room for a one-site margin; give r explicitly"
        )));
    }
    Ok((side - 3) / 2)
}

fn check_odd(side: usize) -> Result<()> {
    if side.is_multiple_of(2) {
        return Err(Error::Geometry(format!(
            "cutset geometries need an odd side so the origin is centered, got L = {side}"
        )));
    }
    Ok(())
}

fn weakened(
    lattice: Lattice,
    r: usize,
    coupling: f64,
    epsilon: f64,
    mode: BoundaryMode,
) -> Result<Setup> {
    let side = lattice.sides()[0];
    let cutset = if 2 * r + 1 == side {
        Cutset::at_boundary(&lattice)?
    } else if 2 * r + 1 < side {
        Cutset::centered_box(&lattice, r)?
    } else {
        return Err(Error::Geometry(format!(
            "cutset radius {r} does not fit in side {side}"
        )));
    };
    let bonds = BondMap::weakened(&lattice, coupling, epsilon, &cutset)?;
    Ok(Setup {
        lattice,
        cutset: Some(cutset),
        bonds,
        mode,
    })
}

/// Embeds an inner box of side `inner_side` in a ghost-wired box of side
/// `inner_side + 2 * width`, weakening the cutset of radius `radius` around
/// the origin. All other bonds, including the ghost edges, keep `coupling`.
pub fn annulus_embed(
    dim: usize,
    inner_side: usize,
    width: usize,
    radius: usize,
    coupling: f64,
    epsilon: f64,
) -> Result<Setup> {
    check_odd(inner_side)?;
    if 2 * radius + 1 > inner_side {
        return Err(Error::Geometry(format!(
            "cutset radius {radius} does not fit in the inner box of side {inner_side}"
        )));
    }
    let outer = inner_side + 2 * width;
    let lattice = Lattice::new(dim, outer, true)?;
    weakened(
        lattice,
        radius,
        coupling,
        epsilon,
        BoundaryMode::WeaklyWiredAnnulus { width: Some(width) },
    )
}
