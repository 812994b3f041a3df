//! Hints on `delta` disks: any `nu` disks recover the description, any `eta`
//! disks learn nothing about its protected part.
//!
//! The description is `(V, W)` with `V` in GF(2^p)^nu and `W` in
//! GF(2^r)^(nu - eta). Disk `l` stores `([V G_V]_l, [(U, W) G]_l)` where `U`
//! is uniform on GF(2^r)^eta, `G_V` is a `nu x delta` Reed-Solomon generator
//! and `G` a nested one whose top `eta` rows multiply `U`.

use num_rational::BigRational;
use serde::Serialize;

use super::field::Field;
use super::matrix::{combinations, rs_generator, GenMatrix};
use crate::check::Check;
use crate::guessing::{moment_entropy, side_info_encoder};
use crate::prob::JointPmf;
use crate::scheme::eve::{
    committed_view_moment, enumerate_strategies, genie_ambiguity, worst_list_moment, worst_view_bounds, Combine,
    GenieAmbiguity, MinMaxBounds,
};
use crate::scheme::twohint::list_offset;
use crate::scheme::{require, Realization, SchemeError, Version};
use crate::task::{optimal_task_encoder, DetTaskEncoder};

/// Disk counts and bit allocations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DiskLayout {
    pub delta: usize,
    pub nu: usize,
    pub eta: usize,
    pub s: usize,
    pub p: usize,
    pub r: usize,
}

/// `ceil(log2 delta)`: the fewest bits per symbol for a length-`delta` code.
pub fn min_symbol_bits(delta: usize) -> usize {
    (usize::BITS - (delta.max(1) - 1).leading_zeros()) as usize
}

impl DiskLayout {
    /// Bits of description: `nu p + (nu - eta) r`.
    pub fn description_bits(&self) -> usize {
        self.nu * self.p + (self.nu - self.eta) * self.r
    }

    pub fn check(&self, n_x: usize, version: Version) -> Result<(), SchemeError> {
        let l = *self;
        require(l.nu >= 1 && l.nu <= l.delta, "1 <= nu <= delta", l.nu, l.delta)?;
        require(l.eta < l.nu, "eta < nu", l.eta, l.nu)?;
        require(l.p + l.r == l.s, "p + r = s", l.p + l.r, l.s)?;
        let min = min_symbol_bits(l.delta);
        require(l.p == 0 || l.p >= min, "p = 0 or p >= ceil(log delta)", l.p, min)?;
        require(l.r == 0 || l.r >= min, "r = 0 or r >= ceil(log delta)", l.r, min)?;
        require(l.p <= 16 && l.r <= 16, "p, r <= 16", l.p.max(l.r), 16)?;
        require(l.nu * l.s <= 40, "nu s <= 40", l.nu * l.s, 40)?;
        if version == Version::List {
            let off = list_offset(n_x);
            require((l.nu * l.s) as f64 > off.log2(), "2^(nu s) > log|X| + 2", l.nu * l.s, off)?;
            require(
                (self.description_bits() as f64).exp2() > off,
                "2^(nu s - eta r) > log|X| + 2",
                self.description_bits(),
                off,
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaHintScheme {
    pub layout: DiskLayout,
    pub version: Version,
    field_p: Option<Field>,
    field_r: Option<Field>,
    g_v: Option<GenMatrix>,
    g_uw: Option<GenMatrix>,
    pub descriptor: DetTaskEncoder,
    pub realization: Realization,
}

fn symbols(mut index: usize, count: usize, bits: usize) -> Vec<u16> {
    let mask = (1usize << bits) - 1;
    (0..count)
        .map(|_| {
            let v = index & mask;
            index >>= bits;
            v as u16
        })
        .collect()
}

fn index_of(symbols: &[u16], bits: usize) -> usize {
    symbols.iter().rev().fold(0usize, |acc, &v| (acc << bits) | v as usize)
}

pub fn build_delta_scheme(
    joint: &JointPmf,
    layout: DiskLayout,
    version: Version,
    rho: f64,
) -> Result<DeltaHintScheme, SchemeError> {
    layout.check(joint.n_x(), version)?;
    let DiskLayout { delta, nu, eta, s, p, r } = layout;
    let field_p = (p > 0).then(|| Field::new(p as u32)).transpose()?;
    let field_r = (r > 0).then(|| Field::new(r as u32)).transpose()?;
    let g_v = field_p.as_ref().map(|f| rs_generator(nu, delta, f)).transpose()?;
    let g_uw = field_r.as_ref().map(|f| rs_generator(nu, delta, f)).transpose()?;
    let z_count = 1usize << layout.description_bits();
    let descriptor = match version {
        Version::Guessing => side_info_encoder(joint, z_count),
        Version::List => optimal_task_encoder(joint, z_count, rho),
    };
    let pads = 1usize << (eta * r);
    let mut scheme = DeltaHintScheme {
        layout,
        version,
        field_p,
        field_r,
        g_v,
        g_uw,
        descriptor,
        realization: Realization::new(joint.n_x(), joint.n_y(), vec![1 << s; delta]),
    };
    let w = BigRational::new(1.into(), (pads as i64).into());
    let mut real = Realization::new(joint.n_x(), joint.n_y(), vec![1 << s; delta]);
    for x in 0..joint.n_x() {
        for y in 0..joint.n_y() {
            let z = scheme.descriptor.describe(x, y);
            for u in 0..pads {
                real.push(x, y, &scheme.disks(z, u), joint.p(x, y), w.clone());
            }
        }
    }
    real.canonicalize();
    scheme.realization = real;
    Ok(scheme)
}

impl DeltaHintScheme {
    /// Disk contents for description `z` and pad index `u`.
    pub fn disks(&self, z: usize, u: usize) -> Vec<u32> {
        let DiskLayout { delta, nu, eta, p, r, .. } = self.layout;
        let v_idx = z & ((1usize << (nu * p)) - 1);
        let w_idx = z >> (nu * p);
        let a = match (&self.field_p, &self.g_v) {
            (Some(f), Some(g)) => g.encode(f, &symbols(v_idx, nu, p)),
            _ => vec![0; delta],
        };
        let b = match (&self.field_r, &self.g_uw) {
            (Some(f), Some(g)) => {
                let mut msg = symbols(u, eta, r);
                msg.extend(symbols(w_idx, nu - eta, r));
                g.encode(f, &msg)
            }
            _ => vec![0; delta],
        };
        a.iter().zip(&b).map(|(&a, &b)| ((a as u32) << r) | b as u32).collect()
    }

    /// Recover `(z, u)` from the contents of the `nu` disks in `subset`.
    pub fn recover(&self, subset: &[usize], contents: &[u32]) -> Option<(usize, usize)> {
        let DiskLayout { nu, eta, p, r, .. } = self.layout;
        assert_eq!(subset.len(), nu);
        let a: Vec<u16> = contents.iter().map(|&c| (c >> r) as u16).collect();
        let b: Vec<u16> = contents.iter().map(|&c| (c & ((1 << r) - 1)) as u16).collect();
        let v_idx = match (&self.field_p, &self.g_v) {
            (Some(f), Some(g)) => index_of(&g.solve_on(f, subset, &a)?, p),
            _ => 0,
        };
        let (u, w_idx) = match (&self.field_r, &self.g_uw) {
            (Some(f), Some(g)) => {
                let msg = g.solve_on(f, subset, &b)?;
                (index_of(&msg[..eta], r), index_of(&msg[eta..], r))
            }
            _ => (0, 0),
        };
        Some((v_idx | (w_idx << (nu * p)), u))
    }

    pub fn generator_v(&self) -> Option<&GenMatrix> {
        self.g_v.as_ref()
    }

    pub fn generator_uw(&self) -> Option<&GenMatrix> {
        self.g_uw.as_ref()
    }

    /// Contents of every disk as big-endian bytes, `p` bits then `r` bits.
    pub fn shares(&self, z: usize, u: usize) -> Vec<Vec<u8>> {
        self.disks(z, u).iter().map(|&d| pack_share(d, self.layout.s)).collect()
    }

    pub fn recover_from_shares(&self, subset: &[usize], shares: &[Vec<u8>]) -> Option<(usize, usize)> {
        let contents: Vec<u32> = shares.iter().map(|b| unpack_share(b)).collect();
        self.recover(subset, &contents)
    }
}

pub fn pack_share(value: u32, bits: usize) -> Vec<u8> {
    let bytes = bits.div_ceil(8).max(1);
    value.to_be_bytes()[4 - bytes..].to_vec()
}

pub fn unpack_share(bytes: &[u8]) -> u32 {
    bytes.iter().fold(0u32, |acc, &b| (acc << 8) | b as u32)
}

/// Bob sees any `nu` disks, chosen against him.
pub fn bob_views(delta: usize, nu: usize) -> Vec<Vec<usize>> {
    combinations(delta, nu)
}

/// Eve is shown `eta` disks, chosen in her favor.
pub fn eve_views(delta: usize, eta: usize) -> Vec<Vec<usize>> {
    combinations(delta, eta)
}

/// Bob's min-max ambiguity: guessing version bracketed by the best single
/// subset and the per-subset optimal guessers, exact when the strategy
/// search fits `budget`; list version exact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BobMinMax {
    pub lower: f64,
    pub upper: f64,
    pub exact: Option<f64>,
}

pub fn bob_ambiguity_minmax(real: &Realization, nu: usize, rho: f64, version: Version, budget: u64) -> BobMinMax {
    let views = bob_views(real.hint_sizes().len(), nu);
    match version {
        Version::Guessing => {
            let MinMaxBounds { lower, upper } = worst_view_bounds(real, &views, rho);
            let exact = if (upper - lower).abs() <= 1e-12 * upper {
                Some(upper)
            } else {
                enumerate_strategies(real, &views, rho, Combine::Max, budget).ok()
            };
            BobMinMax { lower, upper, exact }
        }
        Version::List => {
            let v = worst_list_moment(real, &views, rho);
            BobMinMax {
                lower: v,
                upper: v,
                exact: Some(v),
            }
        }
    }
}

pub fn eve_ambiguity_minmin(real: &Realization, eta: usize, rho: f64, budget: u64) -> Result<GenieAmbiguity, SchemeError> {
    let views = eve_views(real.hint_sizes().len(), eta);
    Ok(genie_ambiguity(real, &views, rho, budget)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiskReport {
    pub bob: BobMinMax,
    pub eve: GenieAmbiguity,
    pub eve_committed: f64,
    pub checks: Vec<Check>,
}

fn ln_factor(n_x: usize) -> f64 {
    1.0 + (n_x as f64).ln()
}

/// Converses that hold for any hint law over disks of `log2 |M_l|` bits.
pub fn universal_disk_checks(
    real: &Realization,
    joint: &JointPmf,
    nu: usize,
    eta: usize,
    rho: f64,
    version: Version,
    budget: u64,
    theorem: &str,
) -> Result<DiskReport, SchemeError> {
    let mut bits: Vec<f64> = real.hint_sizes().iter().map(|&m| (m as f64).log2()).collect();
    bits.sort_by(f64::total_cmp);
    let recover_bits: f64 = bits[..nu].iter().sum();
    let missing_bits: f64 = bits[..nu - eta].iter().sum();
    let h = moment_entropy(joint, rho);
    let bob = bob_ambiguity_minmax(real, nu, rho, version, budget);
    let eve = eve_ambiguity_minmin(real, eta, rho, budget)?;
    let eve_committed = committed_view_moment(real, &eve_views(real.hint_sizes().len(), eta), rho);
    let floor = match version {
        Version::Guessing => ln_factor(joint.n_x()).powf(-rho) * (rho * (h - recover_bits)).exp2(),
        Version::List => (rho * (h - recover_bits)).exp2(),
    }
    .max(1.0);
    let ceiling = ((rho * missing_bits).exp2() * bob.lower).min((rho * h).exp2());
    let mut checks = vec![
        Check::at_least(theorem, "bob-converse", bob.lower, floor),
        Check::at_most(theorem, "eve-converse", eve.upper, ceiling),
        Check::at_most(theorem, "eve-converse-committed", eve_committed, ceiling),
        Check::at_most(theorem, "eve-genie-below-committed", eve.lower, eve_committed),
        Check::at_most(theorem, "bob-bracket", bob.lower, bob.upper),
    ];
    if let Some(e) = bob.exact {
        checks.push(Check::at_most(theorem, "bob-exact-in-bracket", bob.lower, e));
        checks.push(Check::at_most(theorem, "bob-exact-in-bracket", e, bob.upper));
    }
    Ok(DiskReport {
        bob,
        eve,
        eve_committed,
        checks,
    })
}

/// Direct parts, converses, recovery from any `nu` disks and exact secrecy
/// of the pad layer on any `eta` disks.
pub fn verify_disk_theorems(
    scheme: &DeltaHintScheme,
    joint: &JointPmf,
    rho: f64,
    budget: u64,
) -> Result<DiskReport, SchemeError> {
    let theorem = match scheme.version {
        Version::Guessing => "disks-guessing",
        Version::List => "disks-list",
    };
    let DiskLayout { delta, nu, eta, s, r, p } = scheme.layout;
    let real = &scheme.realization;
    let mut rep = universal_disk_checks(real, joint, nu, eta, rho, scheme.version, budget, theorem)?;
    let h = moment_entropy(joint, rho);
    let nx = joint.n_x();
    let (nu_f, eta_f, s_f, r_f) = (nu as f64, eta as f64, s as f64, r as f64);
    let bob_rhs = match scheme.version {
        Version::Guessing => 1.0 + (rho * (h - nu_f * s_f + eta_f * r_f + 1.0)).exp2(),
        Version::List => {
            let d = (nu_f * s_f - eta_f * r_f).exp2() - list_offset(nx);
            1.0 + (rho * (h - d.log2() + 2.0)).exp2()
        }
    };
    let eve_rhs =
        (rho * (h - eta_f * (s_f - r_f) - eta_f * (delta as f64).log2() - ln_factor(nx).log2())).exp2();
    rep.checks.push(Check::at_most(theorem, "bob-direct", rep.bob.upper, bob_rhs));
    rep.checks.push(Check::at_least(theorem, "eve-direct", rep.eve.lower, eve_rhs));

    let tuples = 1u64 << (nu * s);
    let subsets = bob_views(delta, nu);
    if tuples.saturating_mul(subsets.len() as u64) <= budget {
        let pads = 1usize << (eta * r);
        let ok = (0..1usize << scheme.layout.description_bits()).all(|z| {
            (0..pads).all(|u| {
                let d = scheme.disks(z, u);
                subsets.iter().all(|b| {
                    let contents: Vec<u32> = b.iter().map(|&i| d[i]).collect();
                    scheme.recover(b, &contents) == Some((z, u))
                })
            })
        });
        rep.checks.push(Check::holds(theorem, "any-nu-disks-recover", ok));
    }
    if r > 0 && eta > 0 {
        let pads = 1usize << (eta * r);
        let mask = (1u32 << r) - 1;
        for e in eve_views(delta, eta) {
            let tv = real.uniform_coordinate_tv(joint, pads, |m| {
                e.iter().fold(0usize, |acc, &i| (acc << r) | (m[i] & mask) as usize)
            });
            rep.checks.push(Check::exactly_zero(theorem, "eta-disk-pad-parts-uniform-independent", &tv));
        }
    }
    if p == 0 && eta > 0 {
        for l in 0..delta {
            let tv = real.uniform_coordinate_tv(joint, 1 << s, |m| m[l] as usize);
            rep.checks.push(Check::exactly_zero(theorem, "single-disk-independent", &tv));
        }
    }
    Ok(rep)
}
