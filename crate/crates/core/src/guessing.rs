//! Guessing functions, optimal guessing moments and the side-information
//! encoder that shrinks them by a factor of the description size.

use serde::Serialize;
use thiserror::Error;

use crate::prob::{renyi_cond_entropy, JointPmf, RenyiOrder};
use crate::task::DetTaskEncoder;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GuessError {
    #[error("ranks of context {ctx} are not a permutation of 1..={n_x}")]
    NotPermutation { ctx: usize, n_x: usize },
    #[error("guessing function covers {g_x}x{g_ctx} but the joint is {j_x}x{j_ctx}")]
    Mismatch {
        g_x: usize,
        g_ctx: usize,
        j_x: usize,
        j_ctx: usize,
    },
}

/// Per-context ranks of the secret alphabet; rank 1 is guessed first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GuessingFunction {
    n_x: usize,
    ranks: Vec<u32>,
}

impl GuessingFunction {
    /// `ranks[ctx * n_x + x]`, each context a permutation of `1..=n_x`.
    pub fn new(n_x: usize, ranks: Vec<u32>) -> Result<Self, GuessError> {
        assert!(n_x > 0 && ranks.len().is_multiple_of(n_x), "rank table shape");
        for (ctx, chunk) in ranks.chunks(n_x).enumerate() {
            let mut seen = vec![false; n_x];
            for &r in chunk {
                let r = r as usize;
                if r == 0 || r > n_x || std::mem::replace(&mut seen[r - 1], true) {
                    return Err(GuessError::NotPermutation { ctx, n_x });
                }
            }
        }
        Ok(Self { n_x, ranks })
    }

    /// Build from per-context guessing orders (lists of symbol indices).
    pub fn from_orders(n_x: usize, orders: &[Vec<usize>]) -> Result<Self, GuessError> {
        let mut ranks = vec![0u32; n_x * orders.len()];
        for (ctx, order) in orders.iter().enumerate() {
            if order.len() != n_x {
                return Err(GuessError::NotPermutation { ctx, n_x });
            }
            for (pos, &x) in order.iter().enumerate() {
                if x >= n_x {
                    return Err(GuessError::NotPermutation { ctx, n_x });
                }
                ranks[ctx * n_x + x] = pos as u32 + 1;
            }
        }
        Self::new(n_x, ranks)
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_ctx(&self) -> usize {
        self.ranks.len() / self.n_x
    }

    pub fn rank(&self, x: usize, ctx: usize) -> u32 {
        self.ranks[ctx * self.n_x + x]
    }

    /// Symbols of `ctx` in guessing order.
    pub fn order(&self, ctx: usize) -> Vec<usize> {
        let mut order = vec![0; self.n_x];
        for x in 0..self.n_x {
            order[self.rank(x, ctx) as usize - 1] = x;
        }
        order
    }

    /// `{context label: [symbol labels in guessing order]}`.
    pub fn to_json(&self, x_labels: &[String], ctx_labels: &[String]) -> String {
        let map: serde_json::Map<String, serde_json::Value> = (0..self.n_ctx())
            .map(|c| {
                let order: Vec<&str> = self.order(c).into_iter().map(|x| x_labels[x].as_str()).collect();
                (ctx_labels[c].clone(), serde_json::json!(order))
            })
            .collect();
        serde_json::Value::Object(map).to_string()
    }
}

/// Order of decreasing posterior, ties by symbol index.
pub fn optimal_order(masses: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..masses.len()).collect();
    order.sort_by(|&a, &b| masses[b].total_cmp(&masses[a]).then(a.cmp(&b)));
    order
}

/// The guesser that orders each context by decreasing posterior.
pub fn optimal_guesser(joint: &JointPmf) -> GuessingFunction {
    let orders: Vec<Vec<usize>> = (0..joint.n_y())
        .map(|y| {
            let column: Vec<f64> = (0..joint.n_x()).map(|x| joint.p(x, y)).collect();
            optimal_order(&column)
        })
        .collect();
    GuessingFunction::from_orders(joint.n_x(), &orders).expect("sort yields permutations")
}

/// `sum_j m_(j) j^rho` with masses sorted in decreasing order; sorts in place.
pub fn sorted_moment(masses: &mut [f64], rho: f64) -> f64 {
    masses.sort_by(|a, b| b.total_cmp(a));
    masses
        .iter()
        .enumerate()
        .take_while(|(_, &m)| m > 0.0)
        .map(|(j, &m)| m * ((j + 1) as f64).powf(rho))
        .sum()
}

/// `E[G(X|Y)^rho]` for a given guesser.
pub fn guess_moment(g: &GuessingFunction, joint: &JointPmf, rho: f64) -> Result<f64, GuessError> {
    if g.n_x() != joint.n_x() || g.n_ctx() != joint.n_y() {
        return Err(GuessError::Mismatch {
            g_x: g.n_x(),
            g_ctx: g.n_ctx(),
            j_x: joint.n_x(),
            j_ctx: joint.n_y(),
        });
    }
    let mut m = 0.0;
    for x in 0..joint.n_x() {
        for y in 0..joint.n_y() {
            let p = joint.p(x, y);
            if p > 0.0 {
                m += p * (g.rank(x, y) as f64).powf(rho);
            }
        }
    }
    Ok(m)
}

/// `min_G E[G(X|Y)^rho]`.
pub fn optimal_moment(joint: &JointPmf, rho: f64) -> f64 {
    (0..joint.n_y())
        .map(|y| {
            let mut column: Vec<f64> = (0..joint.n_x()).map(|x| joint.p(x, y)).collect();
            sorted_moment(&mut column, rho)
        })
        .sum()
}

/// `H_{1/(1+rho)}(X|Y)`, the entropy that governs rho-th moments.
pub fn moment_entropy(joint: &JointPmf, rho: f64) -> f64 {
    renyi_cond_entropy(joint, RenyiOrder::for_moment(rho))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ArikanBounds {
    pub lower: f64,
    pub upper: f64,
}

/// Bounds on the optimal moment: `(1 + ln|X|)^-rho 2^{rho H} v 1` and `2^{rho H}`.
pub fn arikan_bounds(joint: &JointPmf, rho: f64) -> ArikanBounds {
    let h = moment_entropy(joint, rho);
    let upper = (rho * h).exp2();
    let lower = ((1.0 + (joint.n_x() as f64).ln()).powf(-rho) * upper).max(1.0);
    ArikanBounds { lower, upper }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GuessMomentReport {
    pub rho: f64,
    pub moment: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
}

pub fn moment_report(joint: &JointPmf, rho: f64) -> GuessMomentReport {
    let b = arikan_bounds(joint, rho);
    GuessMomentReport {
        rho,
        moment: optimal_moment(joint, rho),
        lower_bound: b.lower,
        upper_bound: b.upper,
    }
}

/// Describe `x` by the remainder of its optimal rank modulo `z_count`.
pub fn side_info_encoder(joint: &JointPmf, z_count: usize) -> DetTaskEncoder {
    assert!(z_count >= 1, "description alphabet must be nonempty");
    let g = optimal_guesser(joint);
    let map = (0..joint.n_y())
        .flat_map(|y| (0..joint.n_x()).map(move |x| (y, x)))
        .map(|(y, x)| (g.rank(x, y) - 1) % z_count as u32)
        .collect();
    DetTaskEncoder::new(joint.n_x(), joint.n_y(), z_count, map).expect("remainders are in range")
}

/// `E[ceil(G*(X|Y) / z_count)^rho]`.
pub fn ceil_moment(joint: &JointPmf, z_count: usize, rho: f64) -> f64 {
    let g = optimal_guesser(joint);
    let z = z_count as u32;
    let mut m = 0.0;
    for x in 0..joint.n_x() {
        for y in 0..joint.n_y() {
            let p = joint.p(x, y);
            if p > 0.0 {
                m += p * (g.rank(x, y).div_ceil(z) as f64).powf(rho);
            }
        }
    }
    m
}

/// Floor valid for any side information on a `z_count`-ary alphabet.
pub fn side_info_lower_bound(joint: &JointPmf, z_count: usize, rho: f64) -> f64 {
    ((z_count as f64).powf(-rho) * optimal_moment(joint, rho)).max(1.0)
}

/// `1 + 2^{rho (H - log|Z| + 1)}`, strictly above the remainder encoder's moment.
pub fn side_info_upper_bound(joint: &JointPmf, z_count: usize, rho: f64) -> f64 {
    1.0 + (rho * (moment_entropy(joint, rho) - (z_count as f64).log2() + 1.0)).exp2()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::random::{permutation, random_joint, seeded_rng};
    use crate::task::EncoderLaw;
    use proptest::prelude::*;

    fn uniform4() -> JointPmf {
        JointPmf::uniform(4)
    }

    #[test]
    fn optimal_ranks_follow_posteriors() {
        let g = optimal_guesser(&uniform4());
        assert_eq!((0..4).map(|x| g.rank(x, 0)).collect::<Vec<_>>(), vec![1, 2, 3, 4]);
        let j = JointPmf::unconditional(&[0.5, 0.3, 0.2]).unwrap();
        let g = optimal_guesser(&j);
        assert_eq!((0..3).map(|x| g.rank(x, 0)).collect::<Vec<_>>(), vec![1, 2, 3]);
        let j = JointPmf::unconditional(&[0.2, 0.5, 0.3]).unwrap();
        let g = optimal_guesser(&j);
        assert_eq!((0..3).map(|x| g.rank(x, 0)).collect::<Vec<_>>(), vec![3, 1, 2]);
    }

    #[test]
    fn zero_posterior_goes_last() {
        let j = JointPmf::unconditional(&[0.0, 0.5, 0.0, 0.5]).unwrap();
        assert_eq!(optimal_guesser(&j).order(0), vec![1, 3, 0, 2]);
    }

    #[test]
    fn uniform_moments() {
        let u = uniform4();
        let g = optimal_guesser(&u);
        assert_eq!(guess_moment(&g, &u, 1.0).unwrap(), 2.5);
        assert_eq!(guess_moment(&g, &u, 2.0).unwrap(), 7.5);
        let det = JointPmf::from_table(2, 2, vec![0.3, 0.0, 0.0, 0.7]).unwrap();
        assert_eq!(optimal_moment(&det, 1.7), 1.0);
    }

    #[test]
    fn arikan_reference_values() {
        let b = arikan_bounds(&uniform4(), 1.0);
        assert!((b.upper - 4.0).abs() < 1e-12);
        assert!((b.lower - 4.0 / (1.0 + 4f64.ln())).abs() < 1e-12);
        assert!((b.lower - 1.676).abs() < 1e-3);
        let det = JointPmf::from_table(2, 2, vec![0.3, 0.0, 0.0, 0.7]).unwrap();
        let b = arikan_bounds(&det, 1.0);
        assert_eq!((b.lower, b.upper), (1.0, 1.0));
        let j = JointPmf::unconditional(&[0.5, 0.25, 0.25]).unwrap();
        let b = arikan_bounds(&j, 1.0);
        assert!((b.upper - 2.914_213_562_373_095).abs() < 1e-9);
        assert_eq!(optimal_moment(&j, 1.0), 1.75);
    }

    #[test]
    fn remainder_encoder_reference_values() {
        let u = uniform4();
        assert_eq!(ceil_moment(&u, 2, 1.0), 1.5);
        assert_eq!(ceil_moment(&u, 4, 1.0), 1.0);
        let enc = side_info_encoder(&u, 2);
        assert_eq!(optimal_moment(&enc.augment(&u), 1.0), 1.5);
        let enc = side_info_encoder(&u, 1);
        assert_eq!(optimal_moment(&enc.augment(&u), 1.0), 2.5);
        assert_eq!(side_info_lower_bound(&u, 2, 1.0), 1.25);
        assert_eq!(side_info_lower_bound(&u, 4, 1.0), 1.0);
        assert_eq!(side_info_lower_bound(&u, 1, 1.0), 2.5);
    }

    #[test]
    fn rank_table_validation() {
        assert!(GuessingFunction::new(3, vec![1, 2, 2]).is_err());
        assert!(GuessingFunction::new(3, vec![1, 2, 4]).is_err());
        assert!(GuessingFunction::new(2, vec![2, 1, 1, 2]).is_ok());
        let g = GuessingFunction::new(2, vec![2, 1]).unwrap();
        assert!(guess_moment(&g, &uniform4(), 1.0).is_err());
        let labels = vec!["a".to_string(), "b".to_string()];
        assert_eq!(g.to_json(&labels, &["*".to_string()]), r#"{"*":["b","a"]}"#);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn optimal_beats_random_orders(seed in any::<u64>(), nx in 1usize..8, ny in 1usize..5, rho_idx in 0usize..3) {
            let rho = [0.5, 1.0, 2.0][rho_idx];
            let mut rng = seeded_rng(seed);
            let j = random_joint(&mut rng, nx, ny);
            let best = guess_moment(&optimal_guesser(&j), &j, rho).unwrap();
            prop_assert!((best - optimal_moment(&j, rho)).abs() < 1e-12);
            for _ in 0..50 {
                let orders: Vec<Vec<usize>> = (0..ny).map(|_| permutation(&mut rng, nx)).collect();
                let g = GuessingFunction::from_orders(nx, &orders).unwrap();
                prop_assert!(best <= guess_moment(&g, &j, rho).unwrap() + 1e-12);
            }
            let b = arikan_bounds(&j, rho);
            prop_assert!(b.lower <= best + 1e-9 && best <= b.upper + 1e-9);
        }

        #[test]
        fn remainder_encoder_meets_ceiling_and_bound(seed in any::<u64>(), nx in 1usize..8, ny in 1usize..4, z in 1usize..6, rho in 0.25f64..3.0) {
            let j = random_joint(&mut seeded_rng(seed), nx, ny);
            let induced = optimal_moment(&side_info_encoder(&j, z).augment(&j), rho);
            prop_assert!((induced - ceil_moment(&j, z, rho)).abs() < 1e-12);
            prop_assert!(induced < side_info_upper_bound(&j, z, rho));
            prop_assert!(induced >= side_info_lower_bound(&j, z, rho) - 1e-12);
        }
    }
}
