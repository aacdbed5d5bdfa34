use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::rc::{BondMap, Boundary};

/// Default cap on `q^V` for direct spin sums.
pub const DEFAULT_SPIN_CAP: u64 = 100_000_000;

/// Exact origin spin marginal from the Potts Boltzmann weights
/// `exp(Σ_e J_e δ(σ_a, σ_b))`, with the ghost pinned to state `k` under
/// `Boundary::Wired(k)`. Runs over all `q^V` site configurations.
pub fn spin_enumerate(
    lat: &Lattice,
    bonds: &BondMap,
    q: u16,
    bc: Boundary,
    cap: u64,
) -> Result<Vec<f64>> {
    if q == 0 {
        return Err(Error::param("q", "need at least one spin state"));
    }
    if bonds.len() != lat.num_edges() {
        return Err(Error::param("bonds", "bond map does not match the lattice"));
    }
    let pinned = match bc {
        Boundary::Free => None,
        Boundary::Wired(k) => {
            if !lat.has_ghost() {
                return Err(Error::Geometry(
                    "wired boundary requires a ghost vertex".into(),
                ));
            }
            if k >= q {
                return Err(Error::param(
                    "boundary",
                    format!("wired state {k} outside 0..{q}"),
                ));
            }
            Some(k)
        }
    };
    let n = lat.num_sites();
    let configs = (q as u64).checked_pow(n as u32).filter(|&c| c <= cap);
    if configs.is_none() {
        let requested = (q as f64).powi(n as i32).min(u64::MAX as f64) as u64;
        return Err(Error::CapExceeded {
            what: "spin configuration count q^V",
            cap_name: "spin enumeration",
            cap,
            requested,
        });
    }

    // For each site, bonds to lower-indexed sites and the summed ghost
    // coupling; energies are accumulated site by site in index order.
    let mut back: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut ghost_j = vec![0.0; n];
    let mut top = 0.0;
    for (e, edge) in lat.edges().iter().enumerate() {
        let j = bonds.coupling(e);
        if lat.is_ghost_edge(e) {
            if pinned.is_some() {
                ghost_j[edge.a] += j;
                top += j;
            }
        } else {
            back[edge.a.max(edge.b)].push((edge.a.min(edge.b), j));
            top += j;
        }
    }

    let origin = lat.origin();
    let mut sums = vec![(0.0f64, 0.0f64); q as usize];
    let mut spins = vec![0u16; n];
    let mut energy = vec![0.0; n + 1];
    let site_energy = |v: usize, spins: &[u16]| {
        let s = spins[v];
        let mut x: f64 = back[v]
            .iter()
            .filter(|(u, _)| spins[*u] == s)
            .map(|(_, j)| j)
            .sum();
        if pinned == Some(s) {
            x += ghost_j[v];
        }
        x
    };
    for v in 0..n {
        energy[v + 1] = energy[v] + site_energy(v, &spins);
    }
    loop {
        let (sum, comp) = &mut sums[spins[origin] as usize];
        neumaier(sum, comp, (energy[n] - top).exp());
        // Odometer over the last site first; recompute energies from the
        // lowest changed position.
        let mut k = n;
        loop {
            if k == 0 {
                let sums: Vec<f64> = sums.into_iter().map(|(s, c)| s + c).collect();
                let total: f64 = sums.iter().sum();
                return Ok(sums.into_iter().map(|s| s / total).collect());
            }
            k -= 1;
            spins[k] += 1;
            if spins[k] < q {
                break;
            }
            spins[k] = 0;
        }
        for v in k..n {
            energy[v + 1] = energy[v] + site_energy(v, &spins);
        }
    }
}

fn neumaier(sum: &mut f64, comp: &mut f64, x: f64) {
    let t = *sum + x;
    if sum.abs() >= x.abs() {
        *comp += (*sum - t) + x;
    } else {
        *comp += (x - t) + *sum;
    }
    *sum = t;
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn free_boundary_is_uniform() {
        let lat = Lattice::new(2, 3, false).unwrap();
        let b = BondMap::uniform(&lat, 1.0).unwrap();
        let m = spin_enumerate(&lat, &b, 3, Boundary::Free, DEFAULT_SPIN_CAP).unwrap();
        for p in m {
            assert_abs_diff_eq!(p, 1.0 / 3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn single_site_against_pinned_ghost() {
        // One site, one ghost edge in d = 1 with L = 1 has two ghost edges;
        // use d = 1, L = 1 and split the coupling so the total is ln 2.
        let lat = Lattice::new(1, 1, true).unwrap();
        assert_eq!(lat.num_edges(), 2);
        let b = BondMap::from_couplings(&lat, vec![2f64.ln(), 0.0]).unwrap();
        let m = spin_enumerate(&lat, &b, 2, Boundary::Wired(0), DEFAULT_SPIN_CAP).unwrap();
        assert_abs_diff_eq!(m[0], 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m[1], 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn cap_refusal() {
        let lat = Lattice::new(2, 5, false).unwrap();
        let b = BondMap::uniform(&lat, 1.0).unwrap();
        let err = spin_enumerate(&lat, &b, 3, Boundary::Free, DEFAULT_SPIN_CAP).unwrap_err();
        assert!(err.to_string().contains("100000000"));
    }
}
