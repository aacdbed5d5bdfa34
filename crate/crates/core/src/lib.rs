//! Random-cluster / Potts toolkit for testing whether order at the origin
//! survives when the bonds on a separating cutset are weakened by a factor
//! ε: exact enumeration on tiny boxes, Swendsen–Wang sampling on larger
//! ones, finite-size robustness scans, and contour statistics.

pub mod config;
pub mod contour;
pub mod error;
pub mod exact;
pub mod experiments;
pub mod lattice;
pub mod mc;
pub mod rc;
pub mod report;
pub mod runner;
pub mod union_find;

pub use error::{Error, Result};
pub use lattice::{separation_check, Cutset, Edge, Lattice};
pub use rc::{
    cluster_count, edge_probability, log_weight, origin_marginal_from_connectivity,
    selfdual_coupling, BondMap, Boundary, EdgeConfig, SpinConfig,
};
