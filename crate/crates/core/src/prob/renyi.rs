use super::{JointPmf, ProbError};

/// Order of a Renyi entropy. Orders 0, 1 and infinity are evaluated through
/// their limiting formulas.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct RenyiOrder(f64);

impl RenyiOrder {
    pub const SHANNON: RenyiOrder = RenyiOrder(1.0);
    pub const MIN: RenyiOrder = RenyiOrder(f64::INFINITY);
    pub const HARTLEY: RenyiOrder = RenyiOrder(0.0);

    pub fn new(alpha: f64) -> Result<Self, ProbError> {
        if alpha.is_nan() || alpha < 0.0 {
            return Err(ProbError::Order(alpha));
        }
        Ok(Self(alpha))
    }

    /// The order `1 / (1 + rho)` that governs rho-th guessing moments.
    pub fn for_moment(rho: f64) -> Self {
        assert!(rho > 0.0, "moment order must be positive, got {rho}");
        Self(1.0 / (1.0 + rho))
    }

    pub fn alpha(self) -> f64 {
        self.0
    }
}

/// Arimoto's conditional Renyi entropy `H_alpha(X|Y)` in bits.
pub fn renyi_cond_entropy(joint: &JointPmf, order: RenyiOrder) -> f64 {
    let alpha = order.alpha();
    let (nx, ny) = (joint.n_x(), joint.n_y());
    if alpha == 0.0 {
        let widest = (0..ny).map(|y| joint.support_size(y)).max().unwrap_or(1);
        return (widest.max(1) as f64).log2();
    }
    if alpha == 1.0 {
        return shannon_cond_entropy(joint);
    }
    if alpha.is_infinite() {
        let s: f64 = (0..ny)
            .map(|y| (0..nx).map(|x| joint.p(x, y)).fold(0.0, f64::max))
            .sum();
        return -s.log2();
    }
    let mut total = 0.0;
    for y in 0..ny {
        let peak = (0..nx).map(|x| joint.p(x, y)).fold(0.0, f64::max);
        if peak == 0.0 {
            continue;
        }
        let inner: f64 = (0..nx)
            .map(|x| joint.p(x, y))
            .filter(|&p| p > 0.0)
            .map(|p| (p / peak).powf(alpha))
            .sum();
        total += peak * inner.powf(1.0 / alpha);
    }
    alpha / (1.0 - alpha) * total.log2()
}

/// Shannon conditional entropy `H(X|Y)` in bits.
pub fn shannon_cond_entropy(joint: &JointPmf) -> f64 {
    let py = joint.marginal_y();
    let mut h = 0.0;
    for x in 0..joint.n_x() {
        for (y, &m) in py.iter().enumerate() {
            let p = joint.p(x, y);
            if p > 0.0 {
                h -= p * (p / m).log2();
            }
        }
    }
    h
}

/// `D(q || p)` in bits; infinite when `q` is not absolutely continuous.
pub fn kl_divergence(q: &JointPmf, p: &JointPmf) -> Result<f64, ProbError> {
    if q.n_x() != p.n_x() || q.n_y() != p.n_y() {
        return Err(ProbError::AlphabetMismatch(format!(
            "{}x{} against {}x{}",
            q.n_x(),
            q.n_y(),
            p.n_x(),
            p.n_y()
        )));
    }
    let mut d = 0.0;
    for (&a, &b) in q.table().iter().zip(p.table()) {
        if a > 0.0 {
            if b <= 0.0 {
                return Ok(f64::INFINITY);
            }
            d += a * (a / b).log2();
        }
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::random::{random_joint, seeded_rng};
    use proptest::prelude::*;

    fn half_quarter_quarter() -> JointPmf {
        JointPmf::unconditional(&[0.5, 0.25, 0.25]).unwrap()
    }

    #[test]
    fn uniform_has_log_size_at_every_order() {
        let u = JointPmf::uniform(4);
        for a in [0.0, 0.25, 0.5, 1.0, 2.0, 7.0, f64::INFINITY] {
            let h = renyi_cond_entropy(&u, RenyiOrder::new(a).unwrap());
            assert!((h - 2.0).abs() < 1e-12, "alpha {a}: {h}");
        }
    }

    #[test]
    fn deterministic_given_context_is_zero() {
        let j = JointPmf::from_table(3, 3, vec![0.2, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0, 0.3]).unwrap();
        for a in [0.0, 0.5, 1.0, 3.0, f64::INFINITY] {
            assert!(renyi_cond_entropy(&j, RenyiOrder::new(a).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn order_one_half_reference_value() {
        // 2*log2(sqrt(1/2) + 2*sqrt(1/4)) = 2*log2(1.70710678...)
        let h = renyi_cond_entropy(&half_quarter_quarter(), RenyiOrder::new(0.5).unwrap());
        assert!((h - 1.543_106_606_327_224).abs() < 1e-12, "{h}");
    }

    #[test]
    fn product_is_additive() {
        let j = half_quarter_quarter();
        let two = j.product(2, 1 << 16).unwrap();
        let h2 = renyi_cond_entropy(&two, RenyiOrder::new(0.5).unwrap());
        assert!((h2 - 3.086_213_212_654_448).abs() < 1e-9, "{h2}");
    }

    #[test]
    fn kl_reference_values() {
        let p = JointPmf::unconditional(&[0.5, 0.5]).unwrap();
        let q = JointPmf::unconditional(&[0.6, 0.4]).unwrap();
        assert!(kl_divergence(&p, &p).unwrap().abs() < 1e-15);
        let d = kl_divergence(&q, &p).unwrap();
        assert!((d - 0.029_049_405_545_331_36).abs() < 1e-12, "{d}");
        let point = JointPmf::unconditional(&[1.0, 0.0]).unwrap();
        assert!((kl_divergence(&point, &p).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(kl_divergence(&p, &point).unwrap(), f64::INFINITY);
        assert!(kl_divergence(&p, &JointPmf::uniform(3)).is_err());
    }

    #[test]
    fn negative_order_rejected() {
        assert!(RenyiOrder::new(-0.1).is_err());
    }

    // Joint law of (X, Z) given Y packed as a JointPmf over (x*nz + z, y).
    fn split(joint: &JointPmf, nx: usize, nz: usize) -> (JointPmf, JointPmf) {
        let ny = joint.n_y();
        // X given (Y,Z): context index y*nz + z.
        let mut given_yz = vec![0.0; nx * ny * nz];
        // X given Y, marginalizing Z.
        let mut given_y = vec![0.0; nx * ny];
        for x in 0..nx {
            for z in 0..nz {
                for y in 0..ny {
                    let p = joint.p(x * nz + z, y);
                    given_yz[x * ny * nz + y * nz + z] += p;
                    given_y[x * ny + y] += p;
                }
            }
        }
        (
            JointPmf::from_table(nx, ny * nz, given_yz).unwrap(),
            JointPmf::from_table(nx, ny, given_y).unwrap(),
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn monotone_and_chain_rule(seed in any::<u64>(), nx in 1usize..4, nz in 1usize..4, ny in 1usize..3) {
            let mut rng = seeded_rng(seed);
            let xz = random_joint(&mut rng, nx * nz, ny);
            let (x_given_yz, x_given_y) = split(&xz, nx, nz);
            for a in [0.0, 0.3, 0.5, 1.0, 2.0, f64::INFINITY] {
                let order = RenyiOrder::new(a).unwrap();
                let h_xz = renyi_cond_entropy(&xz, order);
                prop_assert!(renyi_cond_entropy(&x_given_y, order) <= h_xz + 1e-9);
                prop_assert!(renyi_cond_entropy(&x_given_yz, order) >= h_xz - (nz as f64).log2() - 1e-9);
            }
        }

        #[test]
        fn order_one_is_the_shannon_limit(seed in any::<u64>(), nx in 1usize..6, ny in 1usize..4) {
            let j = random_joint(&mut seeded_rng(seed), nx, ny);
            let h = shannon_cond_entropy(&j);
            let below = renyi_cond_entropy(&j, RenyiOrder::new(1.0 - 1e-5).unwrap());
            let above = renyi_cond_entropy(&j, RenyiOrder::new(1.0 + 1e-5).unwrap());
            // One-sided values move at first order in the offset; their midpoint
            // cancels that term.
            prop_assert!(below >= h - 1e-9 && above <= h + 1e-9);
            prop_assert!((below - h).abs() < 1e-3 && (above - h).abs() < 1e-3);
            prop_assert!(((below + above) / 2.0 - h).abs() < 1e-6);
        }

        #[test]
        fn product_additivity(seed in any::<u64>(), n in 1usize..4, a in 0.1f64..4.0) {
            let j = random_joint(&mut seeded_rng(seed), 2, 2);
            let order = RenyiOrder::new(a).unwrap();
            let big = j.product(n, 1 << 16).unwrap();
            let gap = (renyi_cond_entropy(&big, order) - n as f64 * renyi_cond_entropy(&j, order)).abs();
            prop_assert!(gap <= 1e-9 * n as f64);
        }

        #[test]
        fn ceiling_identity(xi in 0.0f64..1e3, rho_idx in 0usize..3) {
            let rho = [0.5, 1.0, 2.0][rho_idx];
            prop_assert!(xi.ceil().powf(rho) < 1.0 + 2f64.powf(rho) * xi.powf(rho));
        }
    }
}
