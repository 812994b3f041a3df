//! Parameter choice, asymptotic exponents and the equal-size envelope for
//! the disk scheme.

use serde::Serialize;

use super::delta::{build_delta_scheme, min_symbol_bits, universal_disk_checks, verify_disk_theorems, DiskLayout};
use crate::check::Check;
use crate::guessing::moment_entropy;
use crate::prob::JointPmf;
use crate::scheme::twohint::{list_offset, on_boundary, ExponentValue};
use crate::scheme::{Realization, SchemeError, Version};

fn ln_factor(n_x: usize) -> f64 {
    1.0 + (n_x as f64).ln()
}

/// Output of [`choose_pr`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrChoice {
    pub p: usize,
    pub r: usize,
    /// Unclamped pad width; infinite when `eta = 0`.
    pub r_tilde: f64,
    /// Guaranteed lower bound on Eve's ambiguity.
    pub eve_floor: f64,
}

/// Smallest `u_bound` for which [`choose_pr`] succeeds.
pub fn disk_bound_needed(s: usize, nu: usize, entropy: f64, rho: f64, version: Version, n_x: usize) -> f64 {
    let ns = (nu * s) as f64;
    match version {
        Version::Guessing => 1.0 + (rho * (entropy - ns + 1.0)).exp2(),
        Version::List => {
            let d = ns.exp2() - list_offset(n_x);
            if d <= 0.0 {
                f64::INFINITY
            } else {
                1.0 + (rho * (entropy - d.log2() + 2.0)).exp2()
            }
        }
    }
}

/// Bob's converse floor for `nu` disks of `s` bits.
pub fn disk_bob_floor(s: usize, nu: usize, entropy: f64, rho: f64, version: Version, n_x: usize) -> f64 {
    let gap = rho * (entropy - (nu * s) as f64);
    match version {
        Version::Guessing => (gap.exp2() * ln_factor(n_x).powf(-rho)).max(1.0),
        Version::List => gap.exp2().max(1.0),
    }
}

/// Clamp `floor(r~)` onto the admissible pad widths.
fn clamp_r(r_tilde: f64, s: usize, delta: usize) -> usize {
    let log_d = (delta as f64).log2();
    let f = r_tilde.floor();
    if f < log_d {
        0
    } else if f < s as f64 - log_d {
        f as usize
    } else if f < s as f64 {
        s - min_symbol_bits(delta)
    } else {
        s
    }
}

/// Split `s` into `p + r` so that Bob's ambiguity stays below `u_bound` while
/// the pad is as wide as that allows.
#[allow(clippy::too_many_arguments)]
pub fn choose_pr(
    u_bound: f64,
    s: usize,
    nu: usize,
    eta: usize,
    delta: usize,
    entropy: f64,
    rho: f64,
    version: Version,
    n_x: usize,
) -> Result<PrChoice, SchemeError> {
    let h = entropy;
    let floor = disk_bob_floor(s, nu, h, rho, version, n_x);
    if u_bound < floor {
        return Err(SchemeError::Infeasible { bound: u_bound, floor });
    }
    let needed = disk_bound_needed(s, nu, h, rho, version, n_x);
    if u_bound < needed {
        return Err(SchemeError::Unreachable { bound: u_bound, needed });
    }
    let spare = (u_bound - 1.0).log2() / rho;
    let (nu_f, eta_f, s_f) = (nu as f64, eta as f64, s as f64);
    let off = list_offset(n_x);
    let r_tilde = if eta == 0 {
        f64::INFINITY
    } else {
        match version {
            Version::Guessing => (nu_f * s_f + spare - h - 1.0) / eta_f,
            Version::List => (nu_f * s_f - ((h - spare + 2.0).exp2() + off).log2()) / eta_f,
        }
    };
    let r = if eta == 0 { s } else { clamp_r(r_tilde, s, delta) };
    let layout = DiskLayout {
        delta,
        nu,
        eta,
        s,
        p: s - r,
        r,
    };
    layout.check(n_x, version)?;
    let d_eta = (delta as f64).powi(eta as i32);
    let two_d_eta = (2.0 * delta as f64).powf(rho * eta_f);
    let lead = (d_eta * ln_factor(n_x)).powf(-rho);
    let top = (rho * (nu_f - eta_f) * s_f).exp2();
    let full = (rho * h).exp2();
    let eve_floor = match version {
        Version::Guessing => lead * ((top * (u_bound - 1.0) / two_d_eta).min(full)),
        Version::List => {
            let a = (-3.0 * rho).exp2() * top * (u_bound - 1.0) / two_d_eta;
            let c = (2.0 * (2.0 * delta as f64).powf(eta_f) * (2.0 + (n_x as f64).log2())).powf(-rho) * top * full;
            lead * a.min(full).min(c)
        }
    };
    Ok(PrChoice {
        p: s - r,
        r,
        r_tilde,
        eve_floor,
    })
}

/// Eve's best exponent at per-disk storage rate `rate_s` while Bob's
/// ambiguity tends to one, or, with `e_bob`, grows at most like `2^{n e_bob}`.
pub fn disk_exponents(
    rate_s: f64,
    nu: usize,
    eta: usize,
    rho: f64,
    entropy_rate: f64,
    e_bob: Option<f64>,
) -> ExponentValue {
    assert!(eta < nu && rate_s >= 0.0 && rho > 0.0 && entropy_rate >= 0.0);
    let h = entropy_rate;
    let total = nu as f64 * rate_s;
    let hidden = rate_s * (nu - eta) as f64;
    let value = |v: f64| ExponentValue {
        value: v,
        undetermined: false,
        witness: None,
    };
    match e_bob {
        None => {
            if on_boundary(total, h) {
                ExponentValue::undetermined()
            } else if total < h {
                ExponentValue::minus_infinity()
            } else {
                value(rho * hidden.min(h))
            }
        }
        Some(eb) => {
            let target = h - eb / rho;
            if eb == 0.0 && on_boundary(total, h) {
                ExponentValue::undetermined()
            } else if total < target && !on_boundary(total, target) {
                ExponentValue::minus_infinity()
            } else {
                value((rho * hidden + eb).min(rho * h))
            }
        }
    }
}

/// Outcome of comparing disks of unequal sizes with equal disks of the
/// average size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeReport {
    pub sizes_bits: Vec<usize>,
    pub equal_bits: usize,
    pub unequal_bob: f64,
    pub unequal_eve: f64,
    pub target: f64,
    pub choice: PrChoice,
    pub equal_bob: f64,
    pub equal_eve: f64,
    pub checks: Vec<Check>,
}

/// Given any law over disks of `log2 |M_l|` bits, disks of
/// `floor(sum / delta)` bits reach a Bob level within
/// `1 + (ln-factor 2^{nu+1})^rho` of the unequal one, and a guaranteed Eve
/// level that falls short of the unequal Eve by at most
/// `(delta^eta ln-factor)^rho (2 delta)^{rho eta} 2^{rho (nu - eta)}`.
/// Guessing version.
pub fn equal_size_envelope(
    unequal: &Realization,
    joint: &JointPmf,
    nu: usize,
    eta: usize,
    rho: f64,
    budget: u64,
) -> Result<EnvelopeReport, SchemeError> {
    const THEOREM: &str = "equal-size-envelope";
    let sizes_bits: Vec<usize> = unequal
        .hint_sizes()
        .iter()
        .map(|&m| {
            assert!(m.is_power_of_two(), "disk sizes are whole bits");
            m.trailing_zeros() as usize
        })
        .collect();
    let delta = sizes_bits.len();
    let equal_bits = sizes_bits.iter().sum::<usize>() / delta;
    let uneq = universal_disk_checks(unequal, joint, nu, eta, rho, Version::Guessing, budget, THEOREM)?;
    let a_b = uneq.bob.exact.unwrap_or(uneq.bob.upper);
    let a_e = uneq.eve.upper;
    let h = moment_entropy(joint, rho);
    let ln = ln_factor(joint.n_x());
    let target = 1.0 + a_b * (ln * ((nu + 1) as f64).exp2()).powf(rho);
    let choice = choose_pr(target, equal_bits, nu, eta, delta, h, rho, Version::Guessing, joint.n_x())?;
    let layout = DiskLayout {
        delta,
        nu,
        eta,
        s: equal_bits,
        p: choice.p,
        r: choice.r,
    };
    let scheme = build_delta_scheme(joint, layout, Version::Guessing, rho)?;
    let rep = verify_disk_theorems(&scheme, joint, rho, budget)?;
    let factor = ((delta as f64).powi(eta as i32) * ln).powf(rho)
        * (2.0 * delta as f64).powf(rho * eta as f64)
        * (rho * (nu - eta) as f64).exp2();
    let mut checks = uneq.checks;
    checks.extend(rep.checks);
    checks.push(Check::at_most(THEOREM, "equal-bob-below-target", rep.bob.upper, target));
    checks.push(Check::at_least(THEOREM, "equal-eve-above-floor", rep.eve.lower, choice.eve_floor));
    checks.push(Check::at_most(THEOREM, "unequal-eve-within-envelope", a_e, factor * choice.eve_floor));
    Ok(EnvelopeReport {
        sizes_bits,
        equal_bits,
        unequal_bob: a_b,
        unequal_eve: a_e,
        target,
        choice,
        equal_bob: rep.bob.upper,
        equal_eve: rep.eve.lower,
        checks,
    })
}
