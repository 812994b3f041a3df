//! Scenario variants: a hint Eve cannot read, a secret key shared with Bob,
//! hints that force Eve to form a list, and the either-hint example.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::eve::genie_list_moment;
use super::twohint::{bob_ambiguity, list_offset, single_views, BOTH};
use super::{require, Realization, SchemeError, Version};
use crate::check::Check;
use crate::guessing::{moment_entropy, optimal_guesser, side_info_encoder};
use crate::prob::JointPmf;
use crate::task::{floor_log2, optimal_task_encoder, scale_count, DetTaskEncoder};

fn ln_factor(n_x: usize) -> f64 {
    1.0 + (n_x as f64).ln()
}

fn descriptor(joint: &JointPmf, z_count: usize, version: Version, rho: f64) -> DetTaskEncoder {
    match version {
        Version::Guessing => side_info_encoder(joint, z_count),
        Version::List => optimal_task_encoder(joint, z_count, rho),
    }
}

fn bob_direct_rhs(h: f64, z: f64, n_x: usize, rho: f64, version: Version) -> f64 {
    match version {
        Version::Guessing => 1.0 + (rho * (h - z.log2() + 1.0)).exp2(),
        Version::List => 1.0 + (rho * (h - (z - list_offset(n_x)).log2() + 2.0)).exp2(),
    }
}

fn bob_converse_rhs(h: f64, hint_values: f64, n_x: usize, rho: f64, version: Version) -> f64 {
    let base = (rho * (h - hint_values.log2())).exp2();
    match version {
        Version::Guessing => ln_factor(n_x).powf(-rho) * base,
        Version::List => base,
    }
    .max(1.0)
}

/// A public hint `M_p` that Eve reads and a secret hint `M_s` that only Bob
/// reads. Hint 0 is public, hint 1 secret.
#[derive(Debug, Clone, PartialEq)]
pub struct SecretHintScheme {
    pub c: usize,
    pub version: Version,
    pub realization: Realization,
}

/// The descriptor takes `c |M_s|` values; its `c`-ary part is public.
pub fn build_secret_hint(
    joint: &JointPmf,
    c: usize,
    mp_size: usize,
    ms_size: usize,
    version: Version,
    rho: f64,
) -> Result<SecretHintScheme, SchemeError> {
    require(c >= 1 && ms_size >= 1, "c, |Ms| >= 1", c.min(ms_size), 1)?;
    require(c <= mp_size, "c <= |Mp|", c, mp_size)?;
    if version == Version::List {
        let off = list_offset(joint.n_x());
        require((c * ms_size) as f64 > off, "c |Ms| > log|X| + 2", c * ms_size, off)?;
        require((mp_size * ms_size) as f64 > off, "|Mp| |Ms| > log|X| + 2", mp_size * ms_size, off)?;
    }
    let enc = descriptor(joint, c * ms_size, version, rho);
    let mut r = Realization::new(joint.n_x(), joint.n_y(), vec![mp_size, ms_size]);
    for x in 0..joint.n_x() {
        for y in 0..joint.n_y() {
            let z = enc.describe(x, y);
            r.push(x, y, &[(z % c) as u32, (z / c) as u32], joint.p(x, y), BigRational::one());
        }
    }
    r.canonicalize();
    Ok(SecretHintScheme {
        c,
        version,
        realization: r,
    })
}

/// Bob's ambiguity, Eve's optimal moment from the public hint, and checks.
#[derive(Debug, Clone, PartialEq)]
pub struct VariantReport {
    pub bob: f64,
    pub eve: f64,
    pub checks: Vec<Check>,
}

pub fn verify_secret_hint(s: &SecretHintScheme, joint: &JointPmf, rho: f64) -> VariantReport {
    let theorem = match s.version {
        Version::Guessing => "secret-hint-guessing",
        Version::List => "secret-hint-list",
    };
    let real = &s.realization;
    let (mp, ms) = (real.hint_sizes()[0], real.hint_sizes()[1]);
    let h = moment_entropy(joint, rho);
    let nx = joint.n_x();
    let bob = bob_ambiguity(real, rho, s.version);
    let eve = real.view_moment(&[0], rho);
    let checks = vec![
        Check::at_most(theorem, "bob-direct", bob, bob_direct_rhs(h, (s.c * ms) as f64, nx, rho, s.version)),
        Check::at_least(
            theorem,
            "eve-direct",
            eve,
            ln_factor(nx).powf(-rho) * (rho * (h - (s.c as f64).log2())).exp2(),
        ),
        Check::at_least(theorem, "bob-converse", bob, bob_converse_rhs(h, (mp * ms) as f64, nx, rho, s.version)),
        Check::at_most(
            theorem,
            "eve-converse",
            eve,
            ((ms as f64).powf(rho) * bob).min((rho * h).exp2()),
        ),
    ];
    VariantReport { bob, eve, checks }
}

/// One hint `M = (M_s + K mod |K|, M_p)` and a key `K` shared with Bob.
/// Hint 0 is `M`, hint 1 the key.
#[derive(Debug, Clone, PartialEq)]
pub struct SecretKeyScheme {
    pub c: usize,
    pub key_size: usize,
    pub version: Version,
    pub realization: Realization,
}

pub fn build_secret_key(
    joint: &JointPmf,
    c: usize,
    key_size: usize,
    m_size: usize,
    version: Version,
    rho: f64,
) -> Result<SecretKeyScheme, SchemeError> {
    require(c >= 1 && key_size >= 1, "c, |K| >= 1", c.min(key_size), 1)?;
    require(c * key_size <= m_size, "c |K| <= |M|", c * key_size, m_size)?;
    if version == Version::List {
        let off = list_offset(joint.n_x());
        require((c * key_size) as f64 > off, "c |K| > log|X| + 2", c * key_size, off)?;
    }
    let enc = descriptor(joint, c * key_size, version, rho);
    let w = BigRational::new(1.into(), (key_size as i64).into());
    let mut r = Realization::new(joint.n_x(), joint.n_y(), vec![m_size, key_size]);
    for x in 0..joint.n_x() {
        for y in 0..joint.n_y() {
            let z = enc.describe(x, y);
            let (secret, public) = (z % key_size, z / key_size);
            for k in 0..key_size {
                let m = (secret + k) % key_size + key_size * public;
                r.push(x, y, &[m as u32, k as u32], joint.p(x, y), w.clone());
            }
        }
    }
    r.canonicalize();
    Ok(SecretKeyScheme {
        c,
        key_size,
        version,
        realization: r,
    })
}

pub fn verify_secret_key(s: &SecretKeyScheme, joint: &JointPmf, rho: f64) -> VariantReport {
    let theorem = match s.version {
        Version::Guessing => "secret-key-guessing",
        Version::List => "secret-key-list",
    };
    let real = &s.realization;
    let m = real.hint_sizes()[0];
    let h = moment_entropy(joint, rho);
    let nx = joint.n_x();
    let bob = bob_ambiguity(real, rho, s.version);
    let eve = real.view_moment(&[0], rho);
    let k = s.key_size;
    let masked = real.uniform_coordinate_tv(joint, k, |hints| hints[0] as usize % k);
    let checks = vec![
        Check::at_most(theorem, "bob-direct", bob, bob_direct_rhs(h, (s.c * k) as f64, nx, rho, s.version)),
        Check::at_least(
            theorem,
            "eve-direct",
            eve,
            ln_factor(nx).powf(-rho) * (rho * (h - (s.c as f64).log2())).exp2(),
        ),
        Check::at_least(theorem, "bob-converse", bob, bob_converse_rhs(h, m as f64, nx, rho, s.version)),
        Check::at_most(theorem, "eve-converse", eve, ((k as f64).powf(rho) * bob).min((rho * h).exp2())),
        Check::exactly_zero(theorem, "masked-uniform-independent", &masked),
    ];
    VariantReport { bob, eve, checks }
}

/// Hints that leave Eve with the full support of `X` given `Y`.
#[derive(Debug, Clone, PartialEq)]
pub struct EveListScheme {
    pub epsilon: u32,
    pub scale_size: usize,
    pub realization: Realization,
}

/// Smoothed descriptor pair `(v1', v2')`, drawn from `(v1, v2)` by the
/// kernel `(1 - 2^-eps) 1{v' = v} + 2^-eps / N`, followed by the padded
/// scale `floor(log2 G*(x | y, v1', v2'))`.
pub fn build_eve_list_scheme(
    joint: &JointPmf,
    m1_size: usize,
    m2_size: usize,
    epsilon: u32,
) -> Result<EveListScheme, SchemeError> {
    let nx = joint.n_x();
    let cs = scale_count(nx, 1);
    require(m1_size.min(m2_size) >= cs, "min(|M1|, |M2|) >= 1 + floor(log|X|)", m1_size.min(m2_size), cs)?;
    require(epsilon >= 1, "epsilon >= 1", epsilon, 1)?;
    let (c1, c2) = (m1_size / cs, m2_size / cs);
    let n = c1 * c2;
    let inner = side_info_encoder(joint, n);
    let spill = BigInt::from(2).pow(epsilon);
    let tail = BigRational::new(1.into(), &spill * BigInt::from(n));
    let stay = BigRational::one() - BigRational::new(1.into(), spill);
    let kernel = |v: usize, w: usize| {
        if v == w {
            &stay + &tail
        } else {
            tail.clone()
        }
    };
    // Joint of X and (y, v') for the scale guesser.
    let ny = joint.n_y();
    let mut aug = vec![0.0; nx * ny * n];
    for x in 0..nx {
        for y in 0..ny {
            let v = inner.describe(x, y);
            for w in 0..n {
                let k = num_traits::ToPrimitive::to_f64(&kernel(v, w)).expect("finite weight");
                aug[x * ny * n + y * n + w] = joint.p(x, y) * k;
            }
        }
    }
    let aug = JointPmf::from_table(nx, ny * n, aug).expect("smoothed law is a pmf");
    let g = optimal_guesser(&aug);
    let pad = BigRational::new(1.into(), (cs as i64).into());
    let mut r = Realization::new(nx, ny, vec![m1_size, m2_size]);
    for x in 0..nx {
        for y in 0..ny {
            let v = inner.describe(x, y);
            for w in 0..n {
                let scale = floor_log2(g.rank(x, y * n + w) as u64) as usize;
                let (v1, v2) = (w % c1, w / c1);
                let weight = kernel(v, w) * &pad;
                for u in 0..cs {
                    let m1 = (scale + u) % cs + cs * v1;
                    let m2 = u + cs * v2;
                    r.push(x, y, &[m1 as u32, m2 as u32], joint.p(x, y), weight.clone());
                }
            }
        }
    }
    r.canonicalize();
    Ok(EveListScheme {
        epsilon,
        scale_size: cs,
        realization: r,
    })
}

/// Bob's list moment, Eve's genie list moment and checks against
/// `E[|L_Y|^rho]` and Bob's bounds.
pub fn verify_eve_list(s: &EveListScheme, joint: &JointPmf, rho: f64) -> VariantReport {
    let theorem = "eve-list";
    let real = &s.realization;
    let (m1, m2) = (real.hint_sizes()[0] as f64, real.hint_sizes()[1] as f64);
    let h = moment_entropy(joint, rho);
    let bob = real.view_list_moment(&BOTH, rho);
    let eve = genie_list_moment(real, &single_views(), rho);
    let support = joint.support_moment(rho);
    let cs = s.scale_size as f64;
    let bob_rhs = 1.0 + (rho * (h - (m1 * m2).log2() + 2.0 * cs.log2() + 3.0)).exp2();
    let mut checks = vec![
        Check::close(theorem, "eve-list-equals-support", eve, support, 1e-12),
        Check::at_most(theorem, "bob-direct", bob, bob_rhs),
        Check::at_least(theorem, "bob-converse", bob, (rho * (h - (m1 * m2).log2())).exp2().max(1.0)),
    ];
    let weights_sum: BigRational = (0..real.len())
        .filter(|&a| real.x(a) == 0 && real.y(a) == 0)
        .map(|a| real.weight(a).clone())
        .fold(BigRational::zero(), |acc, w| acc + w);
    if joint.p(0, 0) > 0.0 {
        checks.push(Check::exactly_zero(theorem, "kernel-normalized", &(weights_sum - BigRational::one())));
    }
    VariantReport { bob, eve, checks }
}

/// With probability one half each: hints `(X, *)` or `(*, X)`, where `*` is
/// the extra value `|X|`.
pub fn build_either_hint(joint: &JointPmf) -> Realization {
    let nx = joint.n_x();
    let star = nx as u32;
    let half = BigRational::new(1.into(), 2.into());
    let mut r = Realization::new(nx, joint.n_y(), vec![nx + 1, nx + 1]);
    for x in 0..nx {
        for y in 0..joint.n_y() {
            r.push(x, y, &[x as u32, star], joint.p(x, y), half.clone());
            r.push(x, y, &[star, x as u32], joint.p(x, y), half.clone());
        }
    }
    r.canonicalize();
    r
}
