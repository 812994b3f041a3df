//! Two stored hints built from a deterministic descriptor `(v_s, v_1, v_2)`
//! and a one-time pad `U` on the shared coordinate:
//! `M_1 = (v_s + U mod c_s, v_1)` and `M_2 = (U, v_2)`.

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use super::eve::{committed_view_moment, genie_ambiguity, GenieAmbiguity};
use super::{require, Realization, SchemeError, Version};
use crate::check::Check;
use crate::guessing::{moment_entropy, side_info_encoder};
use crate::prob::JointPmf;
use crate::task::{floor_log2, optimal_task_encoder, scale_count, DetTaskEncoder};

/// Bob sees both hints.
pub const BOTH: [usize; 2] = [0, 1];

/// Eve is shown one of the two hints.
pub fn single_views() -> Vec<Vec<usize>> {
    vec![vec![0], vec![1]]
}

/// Sizes of the padded coordinate and of the two private coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Triple {
    pub cs: usize,
    pub c1: usize,
    pub c2: usize,
}

impl Triple {
    pub fn new(cs: usize, c1: usize, c2: usize) -> Self {
        Self { cs, c1, c2 }
    }

    pub fn descriptions(&self) -> usize {
        self.cs * self.c1 * self.c2
    }

    /// Cardinality conditions for hints of sizes `m1` and `m2`.
    pub fn check(&self, m1: usize, m2: usize, n_x: usize, version: Version) -> Result<(), SchemeError> {
        require(self.cs >= 1 && self.c1 >= 1 && self.c2 >= 1, "cs, c1, c2 >= 1", format!("{self:?}"), 1)?;
        require(self.cs <= m1.min(m2), "cs <= min(|M1|, |M2|)", self.cs, m1.min(m2))?;
        require(self.c1 <= m1 / self.cs, "c1 <= floor(|M1| / cs)", self.c1, m1 / self.cs)?;
        require(self.c2 <= m2 / self.cs, "c2 <= floor(|M2| / cs)", self.c2, m2 / self.cs)?;
        if version == Version::List {
            let floor = list_offset(n_x);
            require((m1 * m2) as f64 > floor, "|M1| |M2| > log|X| + 2", m1 * m2, floor)?;
            require(self.descriptions() as f64 > floor, "cs c1 c2 > log|X| + 2", self.descriptions(), floor)?;
        }
        Ok(())
    }

    /// Every triple admissible for the given hint sizes.
    pub fn admissible(m1: usize, m2: usize, n_x: usize, version: Version) -> Vec<Triple> {
        let mut out = Vec::new();
        for cs in 1..=m1.min(m2) {
            for c1 in 1..=m1 / cs {
                for c2 in 1..=m2 / cs {
                    let t = Triple::new(cs, c1, c2);
                    if t.check(m1, m2, n_x, version).is_ok() {
                        out.push(t);
                    }
                }
            }
        }
        out
    }
}

/// `log|X| + 2`, the list-size overhead of a good task encoder.
pub fn list_offset(n_x: usize) -> f64 {
    (n_x as f64).log2() + 2.0
}

fn ln_factor(n_x: usize) -> f64 {
    1.0 + (n_x as f64).ln()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoHintScheme {
    pub triple: Triple,
    pub m1_size: usize,
    pub m2_size: usize,
    pub version: Version,
    pub descriptor: DetTaskEncoder,
    pub realization: Realization,
}

/// JSON form of a scheme: the descriptor map indexed `[y][x]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoHintRecord {
    pub triple: Triple,
    pub m1_size: usize,
    pub m2_size: usize,
    pub version: Version,
    pub descriptor: Vec<Vec<u32>>,
}

/// Build the scheme for `triple`. The guessing version describes `x` by its
/// optimal rank modulo `cs c1 c2`; the list version uses the optimal list
/// partition on `cs c1 c2` descriptions, which depends on `rho`.
pub fn build_two_hint(
    joint: &JointPmf,
    triple: Triple,
    m1_size: usize,
    m2_size: usize,
    version: Version,
    rho: f64,
) -> Result<TwoHintScheme, SchemeError> {
    triple.check(m1_size, m2_size, joint.n_x(), version)?;
    let descriptor = match version {
        Version::Guessing => side_info_encoder(joint, triple.descriptions()),
        Version::List => optimal_task_encoder(joint, triple.descriptions(), rho),
    };
    Ok(from_descriptor(joint, triple, m1_size, m2_size, version, descriptor))
}

fn from_descriptor(
    joint: &JointPmf,
    triple: Triple,
    m1_size: usize,
    m2_size: usize,
    version: Version,
    descriptor: DetTaskEncoder,
) -> TwoHintScheme {
    let Triple { cs, c1, .. } = triple;
    let mut r = Realization::new(joint.n_x(), joint.n_y(), vec![m1_size, m2_size]);
    let w = BigRational::new(1.into(), (cs as i64).into());
    for x in 0..joint.n_x() {
        for y in 0..joint.n_y() {
            let p = joint.p(x, y);
            if p <= 0.0 {
                continue;
            }
            let z = descriptor.describe(x, y);
            let (vs, v1, v2) = (z % cs, (z / cs) % c1, z / (cs * c1));
            for u in 0..cs {
                let m1 = (vs + u) % cs + cs * v1;
                let m2 = u + cs * v2;
                r.push(x, y, &[m1 as u32, m2 as u32], p, w.clone());
            }
        }
    }
    r.canonicalize();
    TwoHintScheme {
        triple,
        m1_size,
        m2_size,
        version,
        descriptor,
        realization: r,
    }
}

impl TwoHintScheme {
    pub fn to_record(&self) -> TwoHintRecord {
        let d = &self.descriptor;
        let (nx, ny) = (self.realization.n_x(), self.realization.n_y());
        TwoHintRecord {
            triple: self.triple,
            m1_size: self.m1_size,
            m2_size: self.m2_size,
            version: self.version,
            descriptor: (0..ny).map(|y| (0..nx).map(|x| d.describe(x, y) as u32).collect()).collect(),
        }
    }

    pub fn from_record(joint: &JointPmf, rec: &TwoHintRecord) -> Result<Self, SchemeError> {
        rec.triple.check(rec.m1_size, rec.m2_size, joint.n_x(), rec.version)?;
        if rec.descriptor.len() != joint.n_y() || rec.descriptor.iter().any(|row| row.len() != joint.n_x()) {
            return Err(SchemeError::Record(format!(
                "descriptor must be {} rows of {} entries",
                joint.n_y(),
                joint.n_x()
            )));
        }
        let map: Vec<u32> = rec.descriptor.iter().flatten().copied().collect();
        let enc = DetTaskEncoder::new(joint.n_x(), joint.n_y(), rec.triple.descriptions(), map)
            .map_err(|e| SchemeError::Record(e.to_string()))?;
        Ok(from_descriptor(joint, rec.triple, rec.m1_size, rec.m2_size, rec.version, enc))
    }

    pub fn bob_ambiguity(&self, rho: f64, version: Version) -> f64 {
        bob_ambiguity(&self.realization, rho, version)
    }

    pub fn eve_ambiguity_exact(&self, rho: f64, budget: u64) -> Result<GenieAmbiguity, SchemeError> {
        eve_ambiguity_exact(&self.realization, rho, budget)
    }

    pub fn eve_ambiguity_weak(&self, rho: f64) -> f64 {
        eve_ambiguity_weak(&self.realization, rho)
    }
}

/// Guessing: optimal moment given `(Y, M_1, M_2)`. List: `E[|L(Y, M_1, M_2)|^rho]`.
pub fn bob_ambiguity(real: &Realization, rho: f64, version: Version) -> f64 {
    match version {
        Version::Guessing => real.view_moment(&BOTH, rho),
        Version::List => real.view_list_moment(&BOTH, rho),
    }
}

/// Eve's ambiguity when a genie shows her the more useful hint after seeing
/// the outcome.
pub fn eve_ambiguity_exact(real: &Realization, rho: f64, budget: u64) -> Result<GenieAmbiguity, SchemeError> {
    Ok(genie_ambiguity(real, &single_views(), rho, budget)?)
}

/// Eve's ambiguity when she must commit to one hint in advance.
pub fn eve_ambiguity_weak(real: &Realization, rho: f64) -> f64 {
    committed_view_moment(real, &single_views(), rho)
}

/// Values behind a verification run.
#[derive(Debug, Clone, PartialEq)]
pub struct AmbiguityReport {
    pub bob: f64,
    pub eve: GenieAmbiguity,
    pub eve_weak: f64,
    pub checks: Vec<Check>,
}

/// Converses valid for every two-hint law: Bob's floor, Eve's ceiling in
/// both notions and their ordering.
pub fn universal_checks(
    real: &Realization,
    joint: &JointPmf,
    rho: f64,
    version: Version,
    budget: u64,
    theorem: &str,
) -> Result<AmbiguityReport, SchemeError> {
    let h = moment_entropy(joint, rho);
    let (m1, m2) = (real.hint_sizes()[0], real.hint_sizes()[1]);
    let log_m = ((m1 * m2) as f64).log2();
    let bob = bob_ambiguity(real, rho, version);
    let bob_floor = match version {
        Version::Guessing => ln_factor(joint.n_x()).powf(-rho) * (rho * (h - log_m)).exp2(),
        Version::List => (rho * (h - log_m)).exp2(),
    }
    .max(1.0);
    let eve = eve_ambiguity_exact(real, rho, budget)?;
    let eve_weak = eve_ambiguity_weak(real, rho);
    let ceiling = ((m1.min(m2) as f64).powf(rho) * bob).min((rho * h).exp2());
    let checks = vec![
        Check::at_least(theorem, "bob-converse", bob, bob_floor),
        Check::at_most(theorem, "eve-converse", eve.upper, ceiling),
        Check::at_most(theorem, "eve-converse-committed", eve_weak, ceiling),
        Check::at_most(theorem, "eve-genie-below-committed", eve.lower, eve_weak),
    ];
    Ok(AmbiguityReport {
        bob,
        eve,
        eve_weak,
        checks,
    })
}

/// Direct parts and converses for a built scheme, measured in its own
/// version, plus exact pad secrecy.
pub fn verify_finite_blocklength(
    scheme: &TwoHintScheme,
    joint: &JointPmf,
    rho: f64,
    budget: u64,
) -> Result<AmbiguityReport, SchemeError> {
    let theorem = match scheme.version {
        Version::Guessing => "two-hint-guessing",
        Version::List => "two-hint-list",
    };
    let mut rep = universal_checks(&scheme.realization, joint, rho, scheme.version, budget, theorem)?;
    let h = moment_entropy(joint, rho);
    let nx = joint.n_x();
    let t = scheme.triple;
    let z = t.descriptions() as f64;
    let bob_rhs = match scheme.version {
        Version::Guessing => 1.0 + (rho * (h - z.log2() + 1.0)).exp2(),
        Version::List => 1.0 + (rho * (h - (z - list_offset(nx)).log2() + 2.0)).exp2(),
    };
    let eve_rhs = ln_factor(nx).powf(-rho) * (rho * (h - ((t.c1 + t.c2) as f64).log2())).exp2();
    rep.checks.push(Check::at_most(theorem, "bob-direct", rep.bob, bob_rhs));
    rep.checks.push(Check::at_least(theorem, "eve-direct", rep.eve.lower, eve_rhs));
    let cs = t.cs;
    let real = &scheme.realization;
    let pad = real.uniform_coordinate_tv(joint, cs, |m| m[1] as usize % cs);
    let padded = real.uniform_coordinate_tv(joint, cs, |m| m[0] as usize % cs);
    rep.checks.push(Check::exactly_zero(theorem, "pad-uniform-independent", &pad));
    rep.checks.push(Check::exactly_zero(theorem, "padded-uniform-independent", &padded));
    Ok(rep)
}

/// Append `floor(log2 G*(x | y, m1, m2))` to the first hint. Bob's list then
/// never exceeds his optimal guess count, and Eve loses at most the factor
/// `(1 + floor(log|X|))^rho`.
pub fn scale_hint_checks(real: &Realization, rho: f64, budget: u64) -> Result<Vec<Check>, SchemeError> {
    let theorem = "scale-hint";
    let s = scale_count(real.n_x(), 1);
    let extra: Vec<u32> = real.view_ranks(&BOTH).iter().map(|&g| floor_log2(g as u64)).collect();
    let refined = real.refine_hint(0, &extra, s);
    let mut checks = vec![Check::at_most(
        theorem,
        "list-within-guessing",
        refined.view_list_moment(&BOTH, rho),
        real.view_moment(&BOTH, rho),
    )];
    let before = eve_ambiguity_exact(real, rho, budget)?;
    let after = eve_ambiguity_exact(&refined, rho, budget)?;
    checks.push(Check::at_most(
        theorem,
        "eve-loss-bounded",
        before.lower,
        (s as f64).powf(rho) * after.upper,
    ));
    Ok(checks)
}

/// Output of [`choose_triple`], with hints in the caller's order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TripleChoice {
    pub triple: Triple,
    pub case: u8,
    pub eve_floor: f64,
    pub eve_ceiling: f64,
}

/// Pick `(cs, c1, c2)` so that Bob's ambiguity stays below `bound`, following
/// a three-case rule that favors the largest padded coordinate.
pub fn choose_triple(
    bound: f64,
    m1_size: usize,
    m2_size: usize,
    entropy: f64,
    rho: f64,
    version: Version,
    n_x: usize,
) -> Result<TripleChoice, SchemeError> {
    let swapped = m2_size > m1_size;
    let (big, small) = if swapped { (m2_size, m1_size) } else { (m1_size, m2_size) };
    let (bf, sf) = (big as f64, small as f64);
    let h = entropy;
    let ln = ln_factor(n_x);
    let off = list_offset(n_x);
    let gain = |t: f64| (rho * t).exp2();
    let (floor, needed) = match version {
        Version::Guessing => (
            (ln.powf(-rho) * (bf * sf).powf(-rho) * gain(h)).max(1.0),
            1.0 + gain(1.0) * (bf * sf).powf(-rho) * gain(h),
        ),
        Version::List => {
            require(bf * sf > off, "|M1| |M2| > log|X| + 2", big * small, off)?;
            (((bf * sf).powf(-rho) * gain(h)).max(1.0), 1.0 + gain(h - (bf * sf - off).log2() + 2.0))
        }
    };
    if bound < floor {
        return Err(SchemeError::Infeasible { bound, floor });
    }
    if bound < needed {
        return Err(SchemeError::Unreachable { bound, needed });
    }
    let ratio = big / small;
    // Bob's guaranteed level for a scheme with `d` descriptions.
    let level = |d: f64| match version {
        Version::Guessing => 1.0 + gain(h - d.log2() + 1.0),
        Version::List if d > off => 1.0 + gain(h - (d - off).log2() + 2.0),
        Version::List => f64::INFINITY,
    };
    let (triple, case) = if level(sf) <= bound {
        (Triple::new(small, 1, 1), 1)
    } else if level(sf * ratio as f64) <= bound {
        let spare = (bound - 1.0).log2() / rho;
        let c1 = match version {
            Version::Guessing => (h - sf.log2() + 1.0 - spare).exp2().ceil(),
            Version::List => (((h + 2.0 - spare).exp2() + off) / sf).ceil(),
        };
        let c1 = (c1.max(1.0) as usize).min(ratio);
        (Triple::new(small, c1, 1), 2)
    } else {
        let k = (1..=small)
            .rev()
            .find(|&k| level((k * (big / k) * (small / k)) as f64) <= bound)
            .expect("k = 1 meets the bound");
        (Triple::new(k, big / k, small / k), 3)
    };
    let triple = if swapped {
        Triple::new(triple.cs, triple.c2, triple.c1)
    } else {
        triple
    };
    let m = sf;
    let eve_floor = match version {
        Version::Guessing => {
            gain(-1.0) * ln.powf(-rho) * (gain(-4.0) * m.powf(rho) * (bound - 1.0)).min(gain(h))
        }
        Version::List => {
            let a = gain(-6.0) * m.powf(rho) * (bound - 1.0);
            let b = gain(-4.0) * off.powf(-rho) * m.powf(rho) * gain(h);
            gain(-1.0) * ln.powf(-rho) * a.min(b).min(gain(h))
        }
    };
    let eve_ceiling = (m.powf(rho) * bound).min(gain(h));
    Ok(TripleChoice {
        triple,
        case,
        eve_floor,
        eve_ceiling,
    })
}

/// `(R_s, R~1, R~2)`: padded rate and the two private rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateSplit {
    pub padded: f64,
    pub first: f64,
    pub second: f64,
}

/// A closed-form exponent; `undetermined` marks the boundary the formula
/// leaves open, where `value` is NaN.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentValue {
    pub value: f64,
    pub undetermined: bool,
    pub witness: Option<RateSplit>,
}

impl ExponentValue {
    pub fn undetermined() -> Self {
        Self {
            value: f64::NAN,
            undetermined: true,
            witness: None,
        }
    }

    pub fn minus_infinity() -> Self {
        Self {
            value: f64::NEG_INFINITY,
            undetermined: false,
            witness: None,
        }
    }
}

pub(crate) fn on_boundary(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * 1f64.max(a.abs()).max(b.abs())
}

/// Eve's best exponent for hint rates `r1`, `r2` while Bob's ambiguity tends
/// to one, or, with `e_bob`, while it grows at most like `2^{n e_bob}`.
pub fn two_hint_exponents(r1: f64, r2: f64, rho: f64, entropy_rate: f64, e_bob: Option<f64>) -> ExponentValue {
    assert!(r1 > 0.0 && r2 > 0.0 && rho > 0.0 && entropy_rate >= 0.0);
    let h = entropy_rate;
    let (lo, swapped) = if r2 <= r1 { (r2, false) } else { (r1, true) };
    let orient = |s: RateSplit| {
        if swapped {
            RateSplit {
                padded: s.padded,
                first: s.second,
                second: s.first,
            }
        } else {
            s
        }
    };
    match e_bob {
        None => {
            if on_boundary(r1 + r2, h) {
                return ExponentValue::undetermined();
            }
            if r1 + r2 < h {
                return ExponentValue::minus_infinity();
            }
            let value = rho * r1.min(r2).min(h);
            let eps = (r1 + r2 - h).min(if 2.0 * lo > h { 2.0 * lo - h } else { f64::INFINITY }) / 2.0;
            ExponentValue {
                value,
                undetermined: false,
                witness: Some(orient(split(lo, h, eps))),
            }
        }
        Some(eb) => {
            let target = h - eb / rho;
            if eb == 0.0 && on_boundary(r1 + r2, h) {
                return ExponentValue::undetermined();
            }
            if r1 + r2 < target && !on_boundary(r1 + r2, target) {
                return ExponentValue::minus_infinity();
            }
            ExponentValue {
                value: (rho * r1.min(r2) + eb).min(rho * h),
                undetermined: false,
                witness: Some(orient(split(lo, target.max(0.0), 0.0))),
            }
        }
    }
}

/// Rate split for a smaller hint rate `lo` meeting total rate `h + eps`.
fn split(lo: f64, h: f64, eps: f64) -> RateSplit {
    if lo <= h / 2.0 {
        RateSplit {
            padded: 0.0,
            first: h - lo + eps,
            second: lo,
        }
    } else if lo <= h {
        RateSplit {
            padded: 2.0 * lo - h - eps,
            first: h - lo + eps,
            second: h - lo + eps,
        }
    } else {
        RateSplit {
            padded: lo,
            first: 0.0,
            second: 0.0,
        }
    }
}

/// Eve's exponent attained by a split: she is short of `max(R~1, R~2)` bits
/// of the `h` she needs.
pub fn split_eve_exponent(s: &RateSplit, rho: f64, entropy_rate: f64) -> f64 {
    rho * (entropy_rate - s.first.max(s.second)).min(entropy_rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::random::{random_joint, seeded_rng};
    use proptest::prelude::*;

    const BUDGET: u64 = 50_000_000;

    fn uniform(n: usize) -> JointPmf {
        JointPmf::uniform(n)
    }

    #[test]
    fn pad_bit_scheme() {
        let j = uniform(2);
        for v in [Version::Guessing, Version::List] {
            let s = build_two_hint(&j, Triple::new(2, 1, 1), 2, 2, v, 1.0);
            match v {
                Version::Guessing => {
                    let s = s.unwrap();
                    assert_eq!(s.bob_ambiguity(1.0, Version::Guessing), 1.0);
                    assert_eq!(s.bob_ambiguity(1.0, Version::List), 1.0);
                    assert_eq!(s.eve_ambiguity_exact(1.0, BUDGET).unwrap().value, Some(1.0));
                    assert_eq!(s.eve_ambiguity_weak(1.0), 1.5);
                }
                // log 2 + 2 = 3 is not below cs c1 c2 = 2.
                Version::List => assert!(matches!(s, Err(SchemeError::Condition { .. }))),
            }
        }
    }

    #[test]
    fn first_hint_reveals_everything() {
        let j = uniform(4);
        let s = build_two_hint(&j, Triple::new(1, 4, 1), 4, 1, Version::Guessing, 1.0).unwrap();
        assert_eq!(s.bob_ambiguity(1.0, Version::Guessing), 1.0);
        assert_eq!(s.eve_ambiguity_exact(1.0, BUDGET).unwrap().value, Some(1.0));
    }

    #[test]
    fn uniform4_small_pad() {
        let j = uniform(4);
        let s = build_two_hint(&j, Triple::new(2, 2, 1), 4, 4, Version::Guessing, 1.0).unwrap();
        assert_eq!(s.bob_ambiguity(1.0, Version::Guessing), 1.0);
        let rep = verify_finite_blocklength(&s, &j, 1.0, BUDGET).unwrap();
        let direct = rep.checks.iter().find(|c| c.inequality == "bob-direct").unwrap();
        assert_eq!(direct.rhs, 3.0);
        assert!(rep.checks.iter().all(|c| c.pass), "{:?}", rep.checks);
    }

    #[test]
    fn constant_hints() {
        let j = uniform(2);
        let s = build_two_hint(&j, Triple::new(1, 1, 1), 1, 1, Version::Guessing, 1.0).unwrap();
        assert_eq!(s.bob_ambiguity(1.0, Version::Guessing), 1.5);
        assert_eq!(s.bob_ambiguity(1.0, Version::List), 2.0);
        assert_eq!(s.eve_ambiguity_weak(1.0), 1.5);
        // Two guessers that open with different symbols always hit first.
        assert_eq!(s.eve_ambiguity_exact(1.0, BUDGET).unwrap().value, Some(1.0));
    }

    #[test]
    fn single_symbol_source() {
        let j = uniform(1);
        let s = build_two_hint(&j, Triple::new(1, 1, 1), 2, 2, Version::Guessing, 1.0).unwrap();
        let rep = verify_finite_blocklength(&s, &j, 1.0, BUDGET).unwrap();
        assert_eq!((rep.bob, rep.eve.value, rep.eve_weak), (1.0, Some(1.0), 1.0));
        assert!(rep.checks.iter().all(|c| c.pass));
    }

    #[test]
    fn uniform4_sweep_passes() {
        let j = uniform(4);
        for v in [Version::Guessing, Version::List] {
            for t in Triple::admissible(4, 4, 4, v) {
                let s = build_two_hint(&j, t, 4, 4, v, 1.0).unwrap();
                let rep = verify_finite_blocklength(&s, &j, 1.0, BUDGET).unwrap();
                assert!(rep.eve.value.is_some());
                for c in &rep.checks {
                    assert!(c.pass, "{t:?} {v:?} {c:?}");
                }
                for c in scale_hint_checks(&s.realization, 1.0, BUDGET).unwrap() {
                    assert!(c.pass, "{t:?} {c:?}");
                }
            }
        }
    }

    #[test]
    fn record_round_trip() {
        let mut rng = seeded_rng(3);
        let j = random_joint(&mut rng, 5, 2);
        let s = build_two_hint(&j, Triple::new(2, 2, 2), 4, 4, Version::List, 1.0).unwrap();
        let text = serde_json::to_string(&s.to_record()).unwrap();
        let back = TwoHintScheme::from_record(&j, &serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn triple_conditions_are_named() {
        let err = Triple::new(3, 1, 1).check(4, 2, 4, Version::Guessing).unwrap_err();
        assert!(err.to_string().contains("cs <= min(|M1|, |M2|)"));
        let err = Triple::new(2, 3, 1).check(4, 4, 4, Version::Guessing).unwrap_err();
        assert!(err.to_string().contains("c1 <= floor(|M1| / cs)"));
    }

    #[test]
    fn choose_triple_cases() {
        // Uniform 4: H = 2.
        let c = choose_triple(1e6, 4, 4, 2.0, 1.0, Version::Guessing, 4).unwrap();
        assert_eq!((c.triple, c.case), (Triple::new(4, 1, 1), 1));
        let c = choose_triple(1.6, 4, 4, 2.0, 1.0, Version::Guessing, 4).unwrap();
        assert_eq!((c.triple, c.case), (Triple::new(1, 4, 4), 3));
        // 1 + 2 * 16^-1 * 4 = 1.5 is the guaranteed level; the floor is 4 / 16 -> 1.
        assert!(matches!(
            choose_triple(1.4, 4, 4, 2.0, 1.0, Version::Guessing, 4),
            Err(SchemeError::Unreachable { .. })
        ));
        assert!(matches!(
            choose_triple(1.0 - 1e-9, 4, 4, 2.0, 1.0, Version::Guessing, 4),
            Err(SchemeError::Infeasible { .. })
        ));
        // Second case: |M1| = 16, |M2| = 2, H = 4; c1 = 2^{4 - 1 + 1 - 2} = 4.
        let c = choose_triple(5.0, 16, 2, 4.0, 1.0, Version::Guessing, 16).unwrap();
        assert_eq!(c.case, 2);
        assert_eq!(c.triple, Triple::new(2, 4, 1));
        let c = choose_triple(5.0, 2, 16, 4.0, 1.0, Version::Guessing, 16).unwrap();
        assert_eq!(c.triple, Triple::new(2, 1, 4));
    }

    /// Every admissible triple, its exact Bob ambiguity and whether it meets
    /// the bound; the chosen triple must be one that does.
    fn search_confirms(j: &JointPmf, m1: usize, m2: usize, bound: f64, v: Version) {
        let h = moment_entropy(j, 1.0);
        let Ok(c) = choose_triple(bound, m1, m2, h, 1.0, v, j.n_x()) else {
            return;
        };
        assert!(Triple::admissible(m1, m2, j.n_x(), v).contains(&c.triple));
        let s = build_two_hint(j, c.triple, m1, m2, v, 1.0).unwrap();
        let bob = s.bob_ambiguity(1.0, v);
        assert!(bob < bound, "{c:?} gives {bob} >= {bound}");
        let eve = s.eve_ambiguity_exact(1.0, BUDGET).unwrap();
        assert!(eve.lower >= c.eve_floor - 1e-9, "{c:?} {eve:?}");
        assert!(eve.upper <= c.eve_ceiling + 1e-9, "{c:?} {eve:?}");
    }

    #[test]
    fn choose_triple_uniform4_bound_1_6() {
        search_confirms(&uniform(4), 4, 4, 1.6, Version::Guessing);
    }

    #[test]
    fn exponent_reference_values() {
        let e = two_hint_exponents(1.0, 1.0, 1.0, 1.5, None);
        assert_eq!(e.value, 1.0);
        assert_eq!(two_hint_exponents(0.5, 0.5, 1.0, 1.5, None).value, f64::NEG_INFINITY);
        assert!(two_hint_exponents(0.75, 0.75, 1.0, 1.5, None).undetermined);
        let m = two_hint_exponents(0.4, 0.4, 1.0, 1.2, Some(0.5));
        assert!((m.value - 0.9).abs() < 1e-15);
        assert_eq!(two_hint_exponents(0.1, 0.1, 1.0, 1.2, Some(0.5)).value, f64::NEG_INFINITY);
    }

    proptest! {
        #[test]
        fn witness_attains_exponent(r1 in 0.05f64..3.0, r2 in 0.05f64..3.0, h in 0.0f64..3.0, rho in 0.25f64..3.0) {
            let e = two_hint_exponents(r1, r2, rho, h, None);
            if let Some(w) = e.witness {
                prop_assert!(w.padded >= -1e-12 && w.first >= -1e-12 && w.second >= -1e-12);
                prop_assert!(w.padded + w.first <= r1 + 1e-9);
                prop_assert!(w.padded + w.second <= r2 + 1e-9);
                prop_assert!(w.padded + w.first + w.second > h);
                let got = split_eve_exponent(&w, rho, h);
                prop_assert!(got <= e.value + 1e-9);
                prop_assert!(got >= e.value - rho * (r1 + r2 - h) / 2.0 - 1e-9);
            }
        }

        #[test]
        fn modest_witness_attains_exponent(r1 in 0.05f64..3.0, r2 in 0.05f64..3.0, h in 0.0f64..3.0, eb in 0.01f64..2.0) {
            let e = two_hint_exponents(r1, r2, 1.0, h, Some(eb));
            if let Some(w) = e.witness {
                prop_assert!(w.padded + w.first <= r1 + 1e-9);
                prop_assert!(w.padded + w.second <= r2 + 1e-9);
                prop_assert!(w.padded + w.first + w.second >= h - eb - 1e-9);
                prop_assert!((split_eve_exponent(&w, 1.0, h) - e.value).abs() < 1e-9);
            }
        }

        #[test]
        fn random_sources_choose_triple(seed in any::<u64>(), nx in 2usize..6, bound in 1.05f64..6.0) {
            let mut rng = seeded_rng(seed);
            let j = random_joint(&mut rng, nx, 1);
            search_confirms(&j, 4, 3, bound, Version::Guessing);
            search_confirms(&j, 4, 4, bound + 2.0, Version::List);
        }

        #[test]
        fn random_schemes_meet_theorems(seed in any::<u64>(), nx in 2usize..6, ny in 1usize..3) {
            let mut rng = seeded_rng(seed);
            let j = random_joint(&mut rng, nx, ny);
            for v in [Version::Guessing, Version::List] {
                for t in Triple::admissible(3, 4, nx, v) {
                    let s = build_two_hint(&j, t, 3, 4, v, 1.0).unwrap();
                    let rep = verify_finite_blocklength(&s, &j, 1.0, BUDGET).unwrap();
                    for c in &rep.checks {
                        prop_assert!(c.pass, "{:?} {:?} {:?}", t, v, c);
                    }
                }
            }
        }
    }
}
