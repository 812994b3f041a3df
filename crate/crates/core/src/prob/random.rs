//! Seeded random instances. Every generator draws from a ChaCha stream so a
//! seed fully determines the instance on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use super::JointPmf;

pub type InstanceRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> InstanceRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A draw from the flat Dirichlet distribution on `n` points.
pub fn dirichlet(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = w.iter().sum();
    for v in &mut w {
        *v /= total;
    }
    w
}

/// A random joint law over `n_x * n_y` cells with a flat Dirichlet prior.
pub fn random_joint(rng: &mut impl Rng, n_x: usize, n_y: usize) -> JointPmf {
    JointPmf::from_table(n_x, n_y, dirichlet(rng, n_x * n_y)).expect("dirichlet draw is a pmf")
}

/// Like [`random_joint`] but each cell is zeroed with probability
/// `zero_prob`, keeping at least one positive cell.
pub fn random_sparse_joint(rng: &mut impl Rng, n_x: usize, n_y: usize, zero_prob: f64) -> JointPmf {
    let mut w = dirichlet(rng, n_x * n_y);
    let keep = rng.random_range(0..w.len());
    for (i, v) in w.iter_mut().enumerate() {
        if i != keep && rng.random::<f64>() < zero_prob {
            *v = 0.0;
        }
    }
    let total: f64 = w.iter().sum();
    for v in &mut w {
        *v /= total;
    }
    JointPmf::from_table(n_x, n_y, w).expect("renormalized draw is a pmf")
}

/// A uniformly random permutation of `0..n`.
pub fn permutation(rng: &mut impl Rng, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        p.swap(i, j);
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_instance() {
        let a = random_joint(&mut seeded_rng(7), 3, 2);
        let b = random_joint(&mut seeded_rng(7), 3, 2);
        assert_eq!(a, b);
        assert_ne!(a, random_joint(&mut seeded_rng(8), 3, 2));
    }

    #[test]
    fn sparse_draw_keeps_mass() {
        let mut rng = seeded_rng(1);
        for _ in 0..50 {
            let j = random_sparse_joint(&mut rng, 4, 2, 0.9);
            assert!(j.table().iter().any(|&p| p > 0.0));
        }
    }

    #[test]
    fn permutation_is_bijective() {
        let mut p = permutation(&mut seeded_rng(3), 9);
        p.sort_unstable();
        assert_eq!(p, (0..9).collect::<Vec<_>>());
    }
}
