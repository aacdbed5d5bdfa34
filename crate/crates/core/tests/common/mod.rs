#![allow(dead_code)]

use robust_potts::{BondMap, Cutset, Lattice};

/// Oracle-sized boxes: `(sides, wired)` with at most 14 weighted edges.
pub fn oracle_lattices() -> Vec<(Vec<usize>, bool)> {
    let mut out = Vec::new();
    for sides in [
        vec![3],
        vec![5],
        vec![2, 2],
        vec![2, 3],
        vec![3, 3],
        vec![2, 2, 2],
    ] {
        for wired in [false, true] {
            let lat = Lattice::with_sides(&sides, wired).unwrap();
            let n = if wired {
                lat.num_edges()
            } else {
                lat.num_lattice_edges()
            };
            if n <= 14 {
                out.push((sides.clone(), wired));
            }
        }
    }
    out
}

/// The edges incident to the origin, ghost edges included, as a cutset
/// around the single-site interior.
pub fn origin_cut(lat: &Lattice) -> Cutset {
    let o = lat.origin();
    let edges = (0..lat.num_edges())
        .filter(|&e| {
            let ed = lat.edge(e);
            ed.a == o || ed.b == o
        })
        .collect();
    Cutset::from_parts(lat, vec![o], edges).unwrap()
}

pub fn weakened_at_origin(lat: &Lattice, coupling: f64, epsilon: f64) -> BondMap {
    BondMap::weakened(lat, coupling, epsilon, &origin_cut(lat)).unwrap()
}

pub fn label(sides: &[usize], wired: bool) -> String {
    let s: Vec<String> = sides.iter().map(|x| x.to_string()).collect();
    format!("{}{}", s.join("x"), if wired { "w" } else { "f" })
}
