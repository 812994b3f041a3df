//! Finite-length behavior of the two-hint scheme on blocks of fair bits.

use serde::Serialize;

use super::eve::{genie_ambiguity, GenieProblem};
use super::twohint::{build_two_hint, choose_triple, single_views, Triple};
use super::{SchemeError, Version};
use crate::prob::JointPmf;

/// One block length: Bob's ambiguity and the best certified floor on Eve's.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendPoint {
    pub n: u32,
    pub triple: Triple,
    pub bob: f64,
    pub eve_floor: f64,
    /// `log2(eve_floor) / n`.
    pub eve_exponent: f64,
    /// Eve's exact value where the oracle finished within budget.
    pub eve_exact: Option<f64>,
}

/// Blocks of `n` fair bits with hints of `n` bits each, Bob's target set to
/// the smallest level that admits a full pad. Eve's floor is the larger of
/// the direct bound and the rank-counting bound, or her exact value.
pub fn uniform_bit_trend(max_n: u32, rho: f64, budget: u64) -> Result<Vec<TrendPoint>, SchemeError> {
    (1..=max_n)
        .map(|n| {
            let size = 1usize << n;
            let joint = JointPmf::uniform(size);
            let h = n as f64;
            let bound = 1.0 + rho.exp2();
            let choice = choose_triple(bound, size, size, h, rho, Version::Guessing, size)?;
            let scheme = build_two_hint(&joint, choice.triple, size, size, Version::Guessing, rho)?;
            let bob = scheme.bob_ambiguity(rho, Version::Guessing);
            let prob = GenieProblem::new(&scheme.realization, &single_views(), rho)?;
            let t = choice.triple;
            let direct = (1.0 + (size as f64).ln()).powf(-rho) * (rho * (h - ((t.c1 + t.c2) as f64).log2())).exp2();
            let mut floor = direct.max(prob.counting_bound());
            let mut exact = None;
            if (size * size) as u64 <= budget {
                let e = genie_ambiguity(&scheme.realization, &single_views(), rho, budget)?;
                exact = e.value;
                floor = floor.max(e.lower);
            }
            Ok(TrendPoint {
                n,
                triple: t,
                bob,
                eve_floor: floor,
                eve_exponent: floor.log2() / n as f64,
                eve_exact: exact,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_blocks_are_exact_and_counting_is_tight() {
        let pts = uniform_bit_trend(3, 1.0, 100_000).unwrap();
        for p in &pts {
            assert_eq!(p.triple, Triple::new(1 << p.n, 1, 1));
            assert_eq!(p.bob, 1.0);
            let exact = p.eve_exact.expect("small blocks finish");
            assert!((exact - p.eve_floor).abs() < 1e-12, "{p:?}");
        }
        // A uniform pad over 2^n values: E[ceil(k / 2^{n+1})] = (1 + 2^{n-1}) / 2.
        assert_eq!(pts[0].eve_floor, 1.0);
        assert_eq!(pts[2].eve_floor, 2.5);
    }

    #[test]
    fn genie_search_agrees_for_two_bits() {
        let size = 4;
        let s = build_two_hint(&JointPmf::uniform(size), Triple::new(4, 1, 1), 4, 4, Version::Guessing, 1.0).unwrap();
        let prob = GenieProblem::new(&s.realization, &single_views(), 1.0).unwrap();
        let bnb = prob.branch_and_bound(50_000_000).unwrap().value;
        let m = prob.matching(1_000_000).unwrap().value;
        assert!((bnb - m).abs() < 1e-12);
        assert!((bnb - 1.5).abs() < 1e-12);
    }
}
