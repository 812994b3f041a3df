//! Verification suites over seeded desk-scale instances. Each returns a
//! report whose body depends only on the configuration.

use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::check::Check;
use crate::distortion::{brute_optimal_distortion_guesser, DistortionError, DistortionSpec, RdProblem};
use crate::exponents::{rd_exponent_functional, rd_function, rd_privacy_exponent, ExponentError, RdControls};
use crate::guessing::{
    arikan_bounds, ceil_moment, guess_moment, moment_entropy, optimal_guesser, optimal_moment, side_info_encoder,
    GuessError,
};
use crate::mds::bounds::disk_exponents;
use crate::mds::delta::{build_delta_scheme, verify_disk_theorems, DiskLayout};
use crate::mds::{mds_check, rs_generator, Field, MdsError};
use crate::prob::random::{random_joint, random_sparse_joint, seeded_rng};
use crate::prob::JointPmf;
use crate::report::Report;
use crate::scheme::eve::{committed_view_moment, genie_ambiguity};
use crate::scheme::trend::uniform_bit_trend;
use crate::scheme::twohint::{
    build_two_hint, scale_hint_checks, single_views, two_hint_exponents, verify_finite_blocklength, ExponentValue,
    Triple,
};
use crate::scheme::variants::{build_either_hint, build_eve_list_scheme, verify_eve_list};
use crate::scheme::{SchemeError, Version};
use crate::task::{
    best_list_bound, best_list_omega, ceil_guess_moment, decoding_lists, derandomize, encoder_from_guessing,
    encoder_list_moment, floor_log2, guessing_from_lists, list_moment, scale_count, EncoderLaw, StochTaskEncoder,
    TaskError,
};

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Task(#[from] TaskError),
    #[error(transparent)]
    Guess(#[from] GuessError),
    #[error(transparent)]
    Mds(#[from] MdsError),
    #[error(transparent)]
    Distortion(#[from] DistortionError),
    #[error(transparent)]
    Exponent(#[from] ExponentError),
    #[error("unknown suite {0:?}")]
    Unknown(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Step budget for exhaustive oracles.
    pub budget: u64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: 2024,
            budget: 20_000_000,
        }
    }
}

/// Suite ids in run order.
pub const SUITES: [&str; 11] = [
    "arikan",
    "side-info",
    "conversions",
    "derandomize",
    "two-hint-sweep",
    "secrecy-notions",
    "eve-list",
    "mds",
    "disk-scheme",
    "exponents",
    "rd-numerics",
];

pub fn run_suite(id: &str, cfg: &SuiteConfig) -> Result<Report, SuiteError> {
    match id {
        "arikan" => arikan(cfg),
        "side-info" => side_info(cfg),
        "conversions" => conversions(cfg),
        "derandomize" => derandomization(cfg),
        "two-hint-sweep" => two_hint_sweep(cfg),
        "secrecy-notions" => secrecy_notions(cfg),
        "eve-list" => eve_list(cfg),
        "mds" => mds(cfg),
        "disk-scheme" => disk_scheme(cfg),
        "exponents" => exponents(cfg),
        "rd-numerics" => rd_numerics(cfg),
        other => Err(SuiteError::Unknown(other.to_owned())),
    }
}

fn elapsed_ms(t: Instant) -> u64 {
    t.elapsed().as_millis() as u64
}

const RHOS: [f64; 3] = [0.5, 1.0, 2.0];

/// `P(k) proportional to 2^-k`.
pub fn geometric_source(n: usize) -> JointPmf {
    let w: Vec<f64> = (0..n).map(|k| (-(k as f64)).exp2()).collect();
    let total: f64 = w.iter().sum();
    JointPmf::unconditional(&w.iter().map(|v| v / total).collect::<Vec<_>>()).expect("normalized")
}

pub fn arikan(cfg: &SuiteConfig) -> Result<Report, SuiteError> {
    let mut rep = Report::new(cfg.seed);
    let mut rng = seeded_rng(cfg.seed);
    for i in 0..200 {
        let t = Instant::now();
        let (nx, ny) = (rng.random_range(1..=7), rng.random_range(1..=4));
        let rho = RHOS[i % 3];
        let j = random_joint(&mut rng, nx, ny);
        let m = optimal_moment(&j, rho);
        let b = arikan_bounds(&j, rho);
        let checks = [
            Check::at_least("optimal-guessing", "lower", m, b.lower),
            Check::at_most("optimal-guessing", "upper", m, b.upper),
        ];
        rep.push_checks("arikan", &format!("{i}:{nx}x{ny}:rho={rho}"), &checks, elapsed_ms(t));
    }
    Ok(rep)
}

pub fn side_info(cfg: &SuiteConfig) -> Result<Report, SuiteError> {
    let mut rep = Report::new(cfg.seed);
    let mut rng = seeded_rng(cfg.seed ^ 2);
    for i in 0..50 {
        let t = Instant::now();
        let (nx, ny, nz) = (rng.random_range(2..=7), rng.random_range(1..=3), rng.random_range(2..=4));
        let rho = RHOS[i % 3];
        let j = random_joint(&mut rng, nx, ny);
        let target = ceil_moment(&j, nz, rho);
        let built = optimal_moment(&side_info_encoder(&j, nz).augment(&j), rho);
        let best_random = (0..1000)
            .map(|_| optimal_moment(&StochTaskEncoder::random(&mut rng, nx, ny, nz).augment(&j), rho))
            .fold(f64::INFINITY, f64::min);
        let checks = [
            Check::close("side-information", "encoder-attains-ceiling", built, target, 1e-12),
            Check::at_least("side-information", "random-laws-no-better", best_random, built),
        ];
        rep.push_checks("side-info", &format!("{i}:{nx}x{ny}:z={nz}:rho={rho}"), &checks, elapsed_ms(t));
    }
    Ok(rep)
}

pub fn conversions(cfg: &SuiteConfig) -> Result<Report, SuiteError> {
    let mut rep = Report::new(cfg.seed);
    let mut rng = seeded_rng(cfg.seed ^ 3);
    for i in 0..100 {
        let t = Instant::now();
        let (nx, ny) = (rng.random_range(1..=7), rng.random_range(1..=2));
        let rho = RHOS[i % 3];
        let j = random_sparse_joint(&mut rng, nx, ny, 0.2);
        let g = optimal_guesser(&j);
        let mut checks = Vec::new();
        for omega in 1..=nx {
            let z = omega * scale_count(nx, omega);
            let enc = encoder_from_guessing(&g, omega, z)?;
            let lists = decoding_lists(&enc, &j)?;
            let lm = list_moment(&lists, &j, &enc, rho);
            checks.push(Check::at_most(
                "lists-from-guessing",
                &format!("omega={omega}"),
                lm,
                ceil_guess_moment(&g, &j, omega, rho),
            ));
            let back = guessing_from_lists(&lists, &j)?;
            checks.push(Check::at_most(
                "guessing-from-lists",
                &format!("omega={omega}"),
                guess_moment(&back, &j, rho)?,
                (z as f64).powf(rho) * lm,
            ));
        }
        for z in (1 + floor_log2(nx as u64) as usize)..=(2 * nx + 2) {
            let omega = best_list_omega(nx, z);
            let enc = encoder_from_guessing(&g, omega, z)?;
            checks.push(Check::at_most(
                "best-list",
                &format!("z={z}"),
                encoder_list_moment(&enc, &j, rho),
                best_list_bound(optimal_moment(&j, rho), nx, z, rho),
            ));
        }
        rep.push_checks("conversions", &format!("{i}:{nx}x{ny}:rho={rho}"), &checks, elapsed_ms(t));
    }
    Ok(rep)
}

pub fn derandomization(cfg: &SuiteConfig) -> Result<Report, SuiteError> {
    let mut rep = Report::new(cfg.seed);
    let mut rng = seeded_rng(cfg.seed ^ 4);
    for i in 0..200 {
        let t = Instant::now();
        let (nx, ny, nz) = (rng.random_range(1..=6), rng.random_range(1..=3), rng.random_range(1..=4));
        let rho = RHOS[i % 3];
        let j = random_joint(&mut rng, nx, ny);
        let stoch = StochTaskEncoder::random(&mut rng, nx, ny, nz);
        let det = derandomize(&stoch, &j)?;
        let checks = [Check::at_most(
            "derandomization",
            "deterministic-no-worse",
            encoder_list_moment(&det, &j, rho),
            encoder_list_moment(&stoch, &j, rho),
        )];
        rep.push_checks("derandomize", &format!("{i}:{nx}x{ny}:z={nz}:rho={rho}"), &checks, elapsed_ms(t));
    }
    Ok(rep)
}

pub fn two_hint_sweep(cfg: &SuiteConfig) -> Result<Report, SuiteError> {
    let mut rep = Report::new(cfg.seed);
    let mut rng = seeded_rng(cfg.seed ^ 5);
    let rho = 1.0;
    for nx in 4..=6 {
        let sources = [
            ("uniform", JointPmf::uniform(nx)),
            ("geometric", geometric_source(nx)),
            ("random", random_joint(&mut rng, nx, 1)),
        ];
        for (name, j) in &sources {
            for v in [Version::Guessing, Version::List] {
                for tr in Triple::admissible(4, 4, nx, v) {
                    let t = Instant::now();
                    let s = build_two_hint(j, tr, 4, 4, v, rho)?;
                    let r = verify_finite_blocklength(&s, j, rho, cfg.budget)?;
                    let mut checks = r.checks;
                    checks.push(Check::holds("two-hint", "eve-exact", r.eve.value.is_some()));
                    checks.extend(scale_hint_checks(&s.realization, rho, cfg.budget)?);
                    let id = format!("{name}{nx}:{v:?}:({},{},{})", tr.cs, tr.c1, tr.c2);
                    rep.push_checks("two-hint-sweep", &id, &checks, elapsed_ms(t));
                }
            }
        }
    }
    Ok(rep)
}

pub fn secrecy_notions(cfg: &SuiteConfig) -> Result<Report, SuiteError> {
    let mut rep = Report::new(cfg.seed);
    let bit = JointPmf::uniform(2);
    let t = Instant::now();
    let either = build_either_hint(&bit);
    let exact = genie_ambiguity(&either, &single_views(), 1.0, cfg.budget).map_err(SchemeError::from)?;
    let checks = [
        Check::holds("either-hint", "genie-exact", exact.value.is_some()),
        Check::close("either-hint", "genie-ambiguity", exact.upper, 1.0, 1e-12),
        Check::close("either-hint", "committed-ambiguity", committed_view_moment(&either, &single_views(), 1.0), 1.25, 1e-12),
    ];
    rep.push_checks("secrecy-notions", "either-hint-bit", &checks, elapsed_ms(t));
    let t = Instant::now();
    let pad = build_two_hint(&bit, Triple::new(2, 1, 1), 2, 2, Version::Guessing, 1.0)?;
    let exact = pad.eve_ambiguity_exact(1.0, cfg.budget)?;
    let checks = [
        Check::holds("pad-bit", "genie-exact", exact.value.is_some()),
        Check::close("pad-bit", "genie-ambiguity", exact.upper, 1.0, 1e-12),
        Check::close("pad-bit", "committed-ambiguity", pad.eve_ambiguity_weak(1.0), 1.5, 1e-12),
    ];
    rep.push_checks("secrecy-notions", "pad-bit", &checks, elapsed_ms(t));
    Ok(rep)
}

pub fn eve_list(cfg: &SuiteConfig) -> Result<Report, SuiteError> {
    let mut rep = Report::new(cfg.seed);
    let j = JointPmf::uniform(4);
    for rho in RHOS {
        let t = Instant::now();
        let s = build_eve_list_scheme(&j, 4, 4, 20)?;
        let r = verify_eve_list(&s, &j, rho);
        rep.push_checks("eve-list", &format!("uniform4:eps=20:rho={rho}"), &r.checks, elapsed_ms(t));
    }
    Ok(rep)
}

pub fn mds(cfg: &SuiteConfig) -> Result<Report, SuiteError> {
    let mut rep = Report::new(cfg.seed);
    for ell in 2..=4u32 {
        let field = Field::new(ell)?;
        let q = field.size();
        for n in 1..=q {
            for k in 1..=n {
                let t = Instant::now();
                let g = rs_generator(k, n, &field)?;
                let nested = (1..=k).all(|kk| mds_check(&g.first_rows(kk), &field));
                let checks = [Check::holds("mds", "generator-and-truncations", nested)];
                rep.push_checks("mds", &format!("q={q}:k={k}:n={n}"), &checks, elapsed_ms(t));
            }
        }
    }
    Ok(rep)
}

pub fn disk_scheme(cfg: &SuiteConfig) -> Result<Report, SuiteError> {
    let mut rep = Report::new(cfg.seed);
    let layout = DiskLayout {
        delta: 3,
        nu: 2,
        eta: 1,
        s: 4,
        p: 2,
        r: 2,
    };
    let mut rng = seeded_rng(cfg.seed ^ 9);
    let sources = [
        ("uniform16", JointPmf::uniform(16)),
        ("geometric16", geometric_source(16)),
        ("random16", random_joint(&mut rng, 16, 1)),
    ];
    for (name, j) in &sources {
        for v in [Version::Guessing, Version::List] {
            let t = Instant::now();
            let s = build_delta_scheme(j, layout, v, 1.0)?;
            let r = verify_disk_theorems(&s, j, 1.0, cfg.budget)?;
            let mut checks = r.checks;
            checks.push(Check::holds("disks", "eve-exact", r.eve.value.is_some()));
            rep.push_checks("disk-scheme", &format!("{name}:{v:?}"), &checks, elapsed_ms(t));
        }
    }
    Ok(rep)
}

fn exponent_check(theorem: &str, case: &str, got: ExponentValue, expected: f64) -> Check {
    if expected.is_nan() {
        Check::holds(theorem, &format!("{case}=undetermined"), got.undetermined)
    } else if expected == f64::NEG_INFINITY {
        let mut c = Check::holds(theorem, &format!("{case}=-inf"), got.value == f64::NEG_INFINITY);
        c.lhs = got.value;
        c.rhs = expected;
        c
    } else {
        Check::close(theorem, case, got.value, expected, 1e-12)
    }
}

pub fn exponents(cfg: &SuiteConfig) -> Result<Report, SuiteError> {
    let mut rep = Report::new(cfg.seed);
    let t = Instant::now();
    let und = f64::NAN;
    let ninf = f64::NEG_INFINITY;
    let checks = vec![
        exponent_check("two-hint", "(1,1,1,1.5)", two_hint_exponents(1.0, 1.0, 1.0, 1.5, None), 1.0),
        exponent_check("two-hint", "(0.5,0.5,1,1.5)", two_hint_exponents(0.5, 0.5, 1.0, 1.5, None), ninf),
        exponent_check("two-hint", "(0.75,0.75,1,1.5)", two_hint_exponents(0.75, 0.75, 1.0, 1.5, None), und),
        exponent_check("two-hint", "(0.4,0.4,1,1.2,eb=0.5)", two_hint_exponents(0.4, 0.4, 1.0, 1.2, Some(0.5)), 0.9),
        exponent_check("two-hint", "(0.1,0.1,1,1.2,eb=0.5)", two_hint_exponents(0.1, 0.1, 1.0, 1.2, Some(0.5)), ninf),
        exponent_check("disks", "(0.8,2,1,1,1.2)", disk_exponents(0.8, 2, 1, 1.0, 1.2, None), 0.8),
        exponent_check("disks", "(0.5,2,1,1,1.2)", disk_exponents(0.5, 2, 1, 1.0, 1.2, None), ninf),
        exponent_check("disks", "(0.6,2,1,1,1.2)", disk_exponents(0.6, 2, 1, 1.0, 1.2, None), und),
        exponent_check("disks", "(0.6,3,1,2,1.2)", disk_exponents(0.6, 3, 1, 2.0, 1.2, None), 2.4),
        exponent_check("disks", "(0.3,2,1,1,1.2,eb=0.6)", disk_exponents(0.3, 2, 1, 1.0, 1.2, Some(0.6)), 0.9),
        exponent_check("disks", "(0.2,2,1,1,1.2,eb=0.6)", disk_exponents(0.2, 2, 1, 1.0, 1.2, Some(0.6)), ninf),
        exponent_check("rd", "(1,1,1,1.5)", rd_privacy_exponent(1.0, 1.0, 1.0, 1.5, None), 1.0),
        exponent_check("rd", "(0.5,0.4,1,1.5)", rd_privacy_exponent(0.5, 0.4, 1.0, 1.5, None), ninf),
        exponent_check("rd", "(0.75,0.75,1,1.5)", rd_privacy_exponent(0.75, 0.75, 1.0, 1.5, None), und),
        exponent_check("rd", "(1,1,1,1.5,eb=0.5)", rd_privacy_exponent(1.0, 1.0, 1.0, 1.5, Some(0.5)), 1.5),
        exponent_check("rd", "(0.3,0.4,1,1.5,eb=0.5)", rd_privacy_exponent(0.3, 0.4, 1.0, 1.5, Some(0.5)), ninf),
    ];
    rep.push_checks("exponents", "closed-forms", &checks, elapsed_ms(t));

    let t = Instant::now();
    let rho = 1.0;
    let pts = uniform_bit_trend(8, rho, cfg.budget)?;
    let mut checks = Vec::new();
    for w in pts.windows(2) {
        checks.push(Check::at_most("trend", &format!("bob-nonincreasing-n={}", w[1].n), w[1].bob, w[0].bob));
    }
    let last = pts.last().expect("eight points");
    checks.push(Check::close("trend", "bob-at-n=8", last.bob, 1.0, 1e-12));
    // Hints of rate one on a fair-bit source: rho min(R1, R2, H) = rho.
    checks.push(Check::close("trend", "eve-exponent-at-n=8", last.eve_exponent, rho, 0.25));
    rep.push_checks("exponents", "uniform-bit-trend", &checks, elapsed_ms(t));
    Ok(rep)
}

fn h2(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }
}

/// Least mutual information over binary test channels meeting a Hamming
/// level, by a zooming grid along the constraint boundary.
pub fn binary_channel_grid_oracle(q0: f64, level: f64) -> f64 {
    let q1 = 1.0 - q0;
    let info = |a: f64, b: f64| {
        // Channel rows (1-a, a) and (b, 1-b).
        let px = [q0, q1];
        let w = [[1.0 - a, a], [b, 1.0 - b]];
        let out = [q0 * w[0][0] + q1 * w[1][0], q0 * w[0][1] + q1 * w[1][1]];
        let mut i = 0.0;
        for x in 0..2 {
            for h in 0..2 {
                if w[x][h] > 0.0 {
                    i += px[x] * w[x][h] * (w[x][h] / out[h]).log2();
                }
            }
        }
        i
    };
    let top = (level / q0).min(1.0);
    let eval = |a: f64| info(a, ((level - q0 * a) / q1).clamp(0.0, 1.0));
    let (mut lo, mut hi) = (0.0, top);
    let mut best = (f64::INFINITY, 0.0);
    for _ in 0..12 {
        let step = (hi - lo) / 1000.0;
        for k in 0..=1000 {
            let a = lo + step * k as f64;
            let v = eval(a);
            if v < best.0 {
                best = (v, a);
            }
        }
        lo = (best.1 - 2.0 * step).max(0.0);
        hi = (best.1 + 2.0 * step).min(top);
    }
    best.0
}

pub fn rd_numerics(cfg: &SuiteConfig) -> Result<Report, SuiteError> {
    let mut rep = Report::new(cfg.seed);
    let ctl = RdControls {
        seed: cfg.seed,
        ..RdControls::default()
    };
    for (q0, level) in [(0.3, 0.1), (0.5, 0.2), (0.2, 0.05), (0.45, 0.3), (0.1, 0.02)] {
        let t = Instant::now();
        let q = JointPmf::unconditional(&[q0, 1.0 - q0]).expect("binary law");
        let r = rd_function(&q, &DistortionSpec::hamming(2, level)?, &ctl)?.value;
        let checks = [
            Check::close("rate-distortion", "grid-oracle", r, binary_channel_grid_oracle(q0, level), 1e-6),
            Check::close("rate-distortion", "closed-form", r, h2(q0) - h2(level), 1e-6),
        ];
        rep.push_checks("rd-numerics", &format!("binary:q={q0}:level={level}"), &checks, elapsed_ms(t));
    }
    let mut rng = seeded_rng(cfg.seed ^ 11);
    let zero = DistortionSpec::hamming(3, 0.0)?;
    for i in 0..6 {
        let t = Instant::now();
        let ny = if i < 3 { 1 } else { 3 };
        let rho = RHOS[i % 3];
        let p = random_joint(&mut rng, 3, ny);
        let e = rd_exponent_functional(&p, &zero, rho, &ctl)?;
        let h = moment_entropy(&p, rho);
        let checks = [
            Check::close("functional", "level-zero-renyi", e.value, h, 1e-3),
            Check::at_most("functional", "bracket-lower", e.lower, e.value),
            Check::at_most("functional", "bracket-upper", e.value, e.upper),
        ];
        rep.push_checks("rd-numerics", &format!("functional:{i}:3x{ny}:rho={rho}"), &checks, elapsed_ms(t));
    }
    for (i, (nx, n)) in [(2, 1), (3, 1), (2, 2), (3, 2), (4, 1)].into_iter().enumerate() {
        let t = Instant::now();
        let rho = RHOS[i % 3];
        let base = random_joint(&mut rng, nx, 1);
        let problem = RdProblem::new(&base, &DistortionSpec::hamming(nx, 0.0)?, n, cfg.budget)?;
        let (_, moment) = brute_optimal_distortion_guesser(&problem, rho, cfg.budget)?;
        let exact = optimal_moment(&problem.joint, rho);
        let checks = [Check::close("distortion-guessing", "level-zero-is-exact-guessing", moment, exact, 1e-12)];
        rep.push_checks("rd-numerics", &format!("guessing:{nx}^{n}:rho={rho}"), &checks, elapsed_ms(t));
    }
    Ok(rep)
}
