//! Seeded inputs shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spahm_core::fusion::LocalGroup;
use spahm_core::lsap::CostMatrix;
use spahm_core::simbench::{generate, SimInstance, SimSpec};

/// `rows × cols` matrix of uniform costs in `[0, 1)`.
pub fn random_costs(rows: usize, cols: usize, seed: u64) -> CostMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..rows * cols).map(|_| rng.random::<f64>()).collect();
    CostMatrix::new(rows, cols, data).expect("rows >= cols")
}

/// Simulated instance with the default noise and subset settings.
pub fn instance(l_true: usize, dim: usize, groups: usize, points_per_atom: usize, seed: u64) -> SimInstance {
    generate(&SimSpec {
        l_true,
        dim,
        groups,
        points_per_atom,
        seed,
        ..SimSpec::default()
    })
    .expect("valid spec")
}

/// True local atoms of a simulated instance, ready for fusion.
pub fn local_groups(l_true: usize, dim: usize, groups: usize, seed: u64) -> Vec<LocalGroup> {
    instance(l_true, dim, groups, 0, seed).local_groups().expect("non-empty groups")
}

/// Raw points of one group of a simulated instance.
pub fn blob_points(l_true: usize, dim: usize, points_per_atom: usize, seed: u64) -> (Vec<Vec<f64>>, usize) {
    let inst = instance(l_true, dim, 1, points_per_atom, seed);
    let g = &inst.groups[0];
    (g.points.clone(), g.atoms.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_have_the_requested_shapes() {
        let c = random_costs(5, 3, 1);
        assert_eq!((c.rows(), c.cols()), (5, 3));
        let groups = local_groups(10, 4, 3, 2);
        assert_eq!(groups.len(), 3);
        assert!(groups.iter().all(|g| g.dim() == 4));
        let (points, k) = blob_points(8, 2, 10, 3);
        assert_eq!(points.len(), 10 * k);
    }
}
