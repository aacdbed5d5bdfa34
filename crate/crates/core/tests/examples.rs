use approx::assert_abs_diff_eq;
use robust_potts::contour::{constrained_partition_check, pattern_table, BklEpsilon};
use robust_potts::exact::{self, spin_enumerate, DEFAULT_SPIN_CAP};
use robust_potts::{selfdual_coupling, BondMap, Boundary, Cutset, Lattice};

#[test]
fn two_vertex_graph() {
    let lat = Lattice::with_sides(&[2], false).unwrap();
    let bonds = BondMap::uniform(&lat, 2f64.ln()).unwrap();
    let r = exact::enumerate(&lat, &bonds, 2.0, false, 24).unwrap();
    assert_abs_diff_eq!(r.edge_marginals[0], 1.0 / 3.0, epsilon = 1e-14);
    let r = exact::enumerate(&lat, &bonds, 1.0, false, 24).unwrap();
    assert_abs_diff_eq!(r.edge_marginals[0], 0.5, epsilon = 1e-14);
}

#[test]
fn single_site_tied_to_the_ghost() {
    // One site, two ghost edges in d = 1; keep only one of them.
    let lat = Lattice::with_sides(&[1], true).unwrap();
    assert_eq!(lat.num_edges(), 2);
    let bonds = BondMap::from_couplings(&lat, vec![2f64.ln(), 0.0]).unwrap();
    let spin = spin_enumerate(&lat, &bonds, 2, Boundary::Wired(1), DEFAULT_SPIN_CAP).unwrap();
    assert_abs_diff_eq!(spin[1], 2.0 / 3.0, epsilon = 1e-14);
    let fk = exact::enumerate(&lat, &bonds, 2.0, true, 24).unwrap();
    assert_abs_diff_eq!(fk.origin_marginal.unwrap()[0], 2.0 / 3.0, epsilon = 1e-14);
}

#[test]
fn decoupled_origin_on_the_three_box() {
    let lat = Lattice::new(2, 3, true).unwrap();
    let cut = Cutset::centered_box(&lat, 0).unwrap();
    for q in [2.0, 25.0] {
        let bonds = BondMap::weakened(&lat, selfdual_coupling(q).unwrap(), 0.0, &cut).unwrap();
        let r = exact::frontier::solve(&lat, &bonds, q, true).unwrap();
        assert_eq!(r.theta, 0.0);
        for p in r.origin_marginal.unwrap() {
            assert_abs_diff_eq!(p, 1.0 / q, epsilon = 1e-12);
        }
    }
}

#[test]
fn spin_and_edge_routes_on_the_three_box() {
    let lat = Lattice::new(2, 3, true).unwrap();
    let cut = Cutset::centered_box(&lat, 0).unwrap();
    let bonds = BondMap::weakened(&lat, 1.0, 0.5, &cut).unwrap();
    let fk = exact::enumerate(&lat, &bonds, 3.0, true, 24).unwrap();
    let spin = spin_enumerate(&lat, &bonds, 3, Boundary::Wired(0), DEFAULT_SPIN_CAP).unwrap();
    for (a, b) in fk.origin_marginal.unwrap().iter().zip(&spin) {
        assert_abs_diff_eq!(a, b, epsilon = 1e-10);
    }
}

#[test]
fn unbroken_patterns_on_small_rectangles() {
    for sides in [[2usize, 2], [2, 3]] {
        let lat = Lattice::with_sides(&sides, false).unwrap();
        let n_edges = lat.num_lattice_edges();
        for q in [25u16, 100] {
            let j = selfdual_coupling(q as f64).unwrap();
            let bonds = BondMap::uniform(&lat, j).unwrap();
            let unbroken = vec![false; n_edges];
            let c =
                constrained_partition_check(&lat, &bonds, q, &unbroken, false, BklEpsilon::Bond)
                    .unwrap();
            assert_abs_diff_eq!(
                c.log_z,
                (q as f64).ln() + j * n_edges as f64,
                epsilon = 1e-9
            );
            let broken = vec![true; n_edges];
            let c = constrained_partition_check(&lat, &bonds, q, &broken, false, BklEpsilon::Bond)
                .unwrap();
            assert!(c.holds);
            assert!(c.log_z <= lat.num_sites() as f64 * (q as f64).ln());
        }
    }
}

#[test]
fn pattern_tables_are_reproducible() {
    let lat = Lattice::with_sides(&[2, 2], false).unwrap();
    let bonds = BondMap::uniform(&lat, 6f64.ln()).unwrap();
    let a = pattern_table(&lat, &bonds, 25, false, BklEpsilon::Bond).unwrap();
    let b = pattern_table(&lat, &bonds, 25, false, BklEpsilon::Bond).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.rows.len(), 16);
    // A single broken bond on a 4-cycle cannot be realized.
    for e in 0..4 {
        let mask = 1usize << e;
        assert_eq!(a.rows[mask].log_z, f64::NEG_INFINITY);
    }
}
