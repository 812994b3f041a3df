//! Guessing a reconstruction within a distortion level: success functions,
//! exact and heuristic guessers over the reconstruction alphabet, and the
//! side-information and list conversions in that setting.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::check::Check;
use crate::guessing::{GuessError, GuessingFunction};
use crate::prob::{JointPmf, ProbError};
use crate::task::{encoder_from_guessing, DecodingListTable, DetTaskEncoder, EncoderLaw, TaskError};

/// Slack on ball membership, absorbing rounding in averaged distortions.
pub const BALL_SLACK: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistortionError {
    #[error("distortion table has {got} entries, expected {n_x}x{n_xhat}")]
    Shape { got: usize, n_x: usize, n_xhat: usize },
    #[error("distortion entry ({x}, {xhat}) is negative or not finite")]
    Entry { x: usize, xhat: usize },
    #[error("row {x} has no zero-distortion reconstruction")]
    NoZero { x: usize },
    #[error("distortion level {0} is negative")]
    Level(f64),
    #[error("tuples of length {0} and {1}")]
    Length(usize, usize),
    #[error("search over {needed} orders exceeds the budget of {budget}")]
    Budget { needed: u128, budget: u64 },
    #[error("x={x} in context {ctx} with description {z} has no reconstruction within the level in its list")]
    Fidelity { x: usize, ctx: usize, z: usize },
    #[error("malformed distortion table: {0}")]
    Table(String),
    #[error(transparent)]
    Prob(#[from] ProbError),
    #[error(transparent)]
    Task(#[from] TaskError),
    #[error(transparent)]
    Guess(#[from] GuessError),
}

/// Per-letter distortion `d(x, xhat)` and the level `Delta`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistortionSpec {
    pub x_labels: Vec<String>,
    pub xhat_labels: Vec<String>,
    d: Vec<f64>,
    pub level: f64,
}

fn labels(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

impl DistortionSpec {
    /// `d[x * n_xhat + xhat]`; every row must contain a zero.
    pub fn new(n_x: usize, n_xhat: usize, d: Vec<f64>, level: f64) -> Result<Self, DistortionError> {
        Self::labeled(labels(n_x), labels(n_xhat), d, level)
    }

    pub fn labeled(
        x_labels: Vec<String>,
        xhat_labels: Vec<String>,
        d: Vec<f64>,
        level: f64,
    ) -> Result<Self, DistortionError> {
        let (n_x, n_xhat) = (x_labels.len(), xhat_labels.len());
        if d.len() != n_x * n_xhat || n_xhat == 0 {
            return Err(DistortionError::Shape {
                got: d.len(),
                n_x,
                n_xhat,
            });
        }
        if !(level >= 0.0) {
            return Err(DistortionError::Level(level));
        }
        for x in 0..n_x {
            let row = &d[x * n_xhat..(x + 1) * n_xhat];
            if let Some(xhat) = row.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(DistortionError::Entry { x, xhat });
            }
            if !row.contains(&0.0) {
                return Err(DistortionError::NoZero { x });
            }
        }
        Ok(Self {
            x_labels,
            xhat_labels,
            d,
            level,
        })
    }

    pub fn hamming(n: usize, level: f64) -> Result<Self, DistortionError> {
        let d = (0..n * n).map(|i| f64::from(u8::from(i / n != i % n))).collect();
        Self::new(n, n, d, level)
    }

    pub fn n_x(&self) -> usize {
        self.x_labels.len()
    }

    pub fn n_xhat(&self) -> usize {
        self.xhat_labels.len()
    }

    pub fn d(&self, x: usize, xhat: usize) -> f64 {
        self.d[x * self.n_xhat() + xhat]
    }

    pub fn with_level(&self, level: f64) -> Result<Self, DistortionError> {
        Self::labeled(self.x_labels.clone(), self.xhat_labels.clone(), self.d.clone(), level)
    }

    /// Header `x,<xhat labels>`, then one row per source symbol.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["x".to_string()];
        header.extend(self.xhat_labels.iter().cloned());
        w.write_record(&header).expect("in-memory write");
        for x in 0..self.n_x() {
            let mut row = vec![self.x_labels[x].clone()];
            row.extend((0..self.n_xhat()).map(|xh| self.d(x, xh).to_string()));
            w.write_record(&row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    pub fn from_csv(text: &str, level: f64) -> Result<Self, DistortionError> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let header = r.headers().map_err(|e| DistortionError::Table(e.to_string()))?.clone();
        let xhat_labels: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut x_labels = Vec::new();
        let mut d = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| DistortionError::Table(e.to_string()))?;
            x_labels.push(rec.get(0).unwrap_or_default().to_string());
            for cell in rec.iter().skip(1) {
                let v: f64 = cell
                    .trim()
                    .parse()
                    .map_err(|_| DistortionError::Table(format!("row {}: bad number {cell:?}", line + 2)))?;
                d.push(v);
            }
        }
        Self::labeled(x_labels, xhat_labels, d, level)
    }
}

/// `(1/n) sum_i d(x_i, xhat_i)`.
pub fn avg_distortion(x: &[usize], xhat: &[usize], spec: &DistortionSpec) -> Result<f64, DistortionError> {
    if x.len() != xhat.len() {
        return Err(DistortionError::Length(x.len(), xhat.len()));
    }
    if x.is_empty() {
        return Ok(0.0);
    }
    Ok(x.iter().zip(xhat).map(|(&a, &b)| spec.d(a, b)).sum::<f64>() / x.len() as f64)
}

fn digits(mut i: usize, base: usize, n: usize) -> Vec<usize> {
    let mut d = vec![0usize; n];
    for k in (0..n).rev() {
        d[k] = i % base;
        i /= base;
    }
    d
}

/// A block problem: the `n`-fold source and which reconstruction tuples lie
/// within the level of which source tuples.
#[derive(Debug, Clone, PartialEq)]
pub struct RdProblem {
    pub joint: JointPmf,
    n_xhat: usize,
    covers: Vec<bool>,
}

impl RdProblem {
    /// Tuples are indexed in mixed radix, first coordinate most significant.
    pub fn new(base: &JointPmf, spec: &DistortionSpec, n: usize, budget: u64) -> Result<Self, DistortionError> {
        assert!(n >= 1);
        if base.n_x() != spec.n_x() {
            return Err(DistortionError::Shape {
                got: base.n_x(),
                n_x: spec.n_x(),
                n_xhat: spec.n_xhat(),
            });
        }
        let joint = if n == 1 { base.clone() } else { base.product(n, budget)? };
        let nx = joint.n_x();
        let n_xhat = spec.n_xhat().pow(n as u32);
        let cells = (nx as u128) * (n_xhat as u128);
        if cells > budget as u128 {
            return Err(DistortionError::Budget { needed: cells, budget });
        }
        let xhats: Vec<Vec<usize>> = (0..n_xhat).map(|i| digits(i, spec.n_xhat(), n)).collect();
        let covers = (0..nx)
            .flat_map(|x| {
                let xs = digits(x, spec.n_x(), n);
                xhats
                    .iter()
                    .map(|xh| avg_distortion(&xs, xh, spec).expect("equal lengths") <= spec.level + BALL_SLACK)
                    .collect::<Vec<_>>()
            })
            .collect();
        Ok(Self { joint, n_xhat, covers })
    }

    pub fn n_x(&self) -> usize {
        self.joint.n_x()
    }

    pub fn n_ctx(&self) -> usize {
        self.joint.n_y()
    }

    pub fn n_xhat(&self) -> usize {
        self.n_xhat
    }

    pub fn covers(&self, x: usize, xhat: usize) -> bool {
        self.covers[x * self.n_xhat + xhat]
    }

    /// The same reconstruction problem with each context refined by an
    /// encoder's description.
    pub fn augmented(&self, enc: &impl EncoderLaw) -> RdProblem {
        RdProblem {
            joint: enc.augment(&self.joint),
            n_xhat: self.n_xhat,
            covers: self.covers.clone(),
        }
    }

    fn masses(&self, ctx: usize) -> Vec<f64> {
        (0..self.n_x()).map(|x| self.joint.p(x, ctx)).collect()
    }
}

/// Ranks of the first reconstruction within the level under a guesser on
/// the reconstruction alphabet, and that reconstruction.
#[derive(Debug, Clone, PartialEq)]
pub struct SuccessFunction {
    pub ghat: GuessingFunction,
    n_x: usize,
    ranks: Vec<u32>,
    psi: Vec<u32>,
}

impl SuccessFunction {
    pub fn rank(&self, x: usize, ctx: usize) -> u32 {
        self.ranks[ctx * self.n_x + x]
    }

    pub fn psi(&self, x: usize, ctx: usize) -> usize {
        self.psi[ctx * self.n_x + x] as usize
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_ctx(&self) -> usize {
        self.ghat.n_ctx()
    }

    /// `E[G_Delta(X | ctx)^rho]`.
    pub fn moment(&self, problem: &RdProblem, rho: f64) -> f64 {
        let mut m = 0.0;
        for ctx in 0..problem.n_ctx() {
            for x in 0..problem.n_x() {
                let p = problem.joint.p(x, ctx);
                if p > 0.0 {
                    m += p * (self.rank(x, ctx) as f64).powf(rho);
                }
            }
        }
        m
    }

    /// `E[ceil(G_Delta / omega)^rho]`.
    pub fn ceil_moment(&self, problem: &RdProblem, omega: usize, rho: f64) -> f64 {
        let om = omega as u32;
        let mut m = 0.0;
        for ctx in 0..problem.n_ctx() {
            for x in 0..problem.n_x() {
                let p = problem.joint.p(x, ctx);
                if p > 0.0 {
                    m += p * (self.rank(x, ctx).div_ceil(om) as f64).powf(rho);
                }
            }
        }
        m
    }

    /// `{context: {x: [rank, psi]}}` with the problem's labels.
    pub fn to_json(&self, problem: &RdProblem) -> String {
        let xl = problem.joint.x_labels();
        let map: serde_json::Map<String, serde_json::Value> = (0..self.n_ctx())
            .map(|c| {
                let row: serde_json::Map<String, serde_json::Value> = (0..self.n_x)
                    .map(|x| (xl[x].clone(), serde_json::json!([self.rank(x, c), self.psi(x, c)])))
                    .collect();
                (problem.joint.y_labels()[c].clone(), serde_json::Value::Object(row))
            })
            .collect();
        serde_json::Value::Object(map).to_string()
    }
}

/// Success function of `ghat`, a guesser over the reconstruction alphabet
/// with one order per context.
pub fn success_function(ghat: &GuessingFunction, problem: &RdProblem) -> Result<SuccessFunction, DistortionError> {
    if ghat.n_x() != problem.n_xhat() || ghat.n_ctx() != problem.n_ctx() {
        return Err(GuessError::Mismatch {
            g_x: ghat.n_x(),
            g_ctx: ghat.n_ctx(),
            j_x: problem.n_xhat(),
            j_ctx: problem.n_ctx(),
        }
        .into());
    }
    let nx = problem.n_x();
    let mut ranks = vec![0u32; nx * ghat.n_ctx()];
    let mut psi = vec![0u32; nx * ghat.n_ctx()];
    for ctx in 0..ghat.n_ctx() {
        let order = ghat.order(ctx);
        for x in 0..nx {
            let (j, &xh) = order
                .iter()
                .enumerate()
                .find(|(_, &xh)| problem.covers(x, xh))
                .expect("every source tuple has a zero-distortion reconstruction");
            ranks[ctx * nx + x] = j as u32 + 1;
            psi[ctx * nx + x] = xh as u32;
        }
    }
    Ok(SuccessFunction {
        ghat: ghat.clone(),
        n_x: nx,
        ranks,
        psi,
    })
}

/// Cost of an order prefix: `sum_j j^rho * (mass first covered at step j)`.
fn order_cost(problem: &RdProblem, masses: &[f64], order: &[usize], rho: f64) -> f64 {
    let mut covered = vec![false; problem.n_x()];
    let mut cost = 0.0;
    for (j, &xh) in order.iter().enumerate() {
        let w = ((j + 1) as f64).powf(rho);
        for x in 0..problem.n_x() {
            if !covered[x] && problem.covers(x, xh) {
                covered[x] = true;
                cost += w * masses[x];
            }
        }
    }
    cost
}

fn complete(order: Vec<usize>, n: usize) -> Vec<usize> {
    let mut seen = vec![false; n];
    for &v in &order {
        seen[v] = true;
    }
    let mut order = order;
    order.extend((0..n).filter(|&v| !seen[v]));
    order
}

fn factorial(k: usize) -> u128 {
    (1..=k as u128).product()
}

/// Best order of one context by trying all permutations, split over the
/// first guess.
fn brute_context(problem: &RdProblem, ctx: usize, rho: f64) -> (f64, Vec<usize>) {
    let k = problem.n_xhat();
    let masses = problem.masses(ctx);
    (0..k)
        .into_par_iter()
        .map(|first| {
            let mut rest: Vec<usize> = (0..k).filter(|&v| v != first).collect();
            let mut best = (f64::INFINITY, Vec::new());
            let mut order = Vec::with_capacity(k);
            // Heap's algorithm over the remaining symbols.
            let mut c = vec![0usize; rest.len()];
            let mut visit = |rest: &[usize]| {
                order.clear();
                order.push(first);
                order.extend_from_slice(rest);
                let cost = order_cost(problem, &masses, &order, rho);
                if cost < best.0 - 1e-15 {
                    best = (cost, order.clone());
                }
            };
            visit(&rest);
            let mut i = 0;
            while i < rest.len() {
                if c[i] < i {
                    if i % 2 == 0 {
                        rest.swap(0, i);
                    } else {
                        rest.swap(c[i], i);
                    }
                    visit(&rest);
                    c[i] += 1;
                    i = 0;
                } else {
                    c[i] = 0;
                    i += 1;
                }
            }
            best
        })
        .reduce(
            || (f64::INFINITY, Vec::new()),
            |a, b| {
                if b.0 < a.0 - 1e-15 || (b.0 <= a.0 + 1e-15 && !b.1.is_empty() && (a.1.is_empty() || b.1 < a.1)) {
                    b
                } else {
                    a
                }
            },
        )
}

/// Exact optimum over all orders of the reconstruction alphabet by full
/// permutation search. `budget` caps the orders tried per context.
pub fn brute_optimal_distortion_guesser(
    problem: &RdProblem,
    rho: f64,
    budget: u64,
) -> Result<(SuccessFunction, f64), DistortionError> {
    let needed = factorial(problem.n_xhat());
    if needed > budget as u128 {
        return Err(DistortionError::Budget { needed, budget });
    }
    let orders: Vec<Vec<usize>> = (0..problem.n_ctx()).map(|ctx| brute_context(problem, ctx, rho).1).collect();
    let ghat = GuessingFunction::from_orders(problem.n_xhat(), &orders)?;
    let sf = success_function(&ghat, problem)?;
    let m = sf.moment(problem, rho);
    Ok((sf, m))
}

/// Exact optimum by dynamic programming over the set of reconstructions
/// already guessed: only that set, not its order, decides what remains.
pub fn subset_optimal_distortion_guesser(
    problem: &RdProblem,
    rho: f64,
    budget: u64,
) -> Result<(SuccessFunction, f64), DistortionError> {
    let k = problem.n_xhat();
    let needed = (1u128 << k.min(127)) * k as u128;
    if k >= 64 || needed > budget as u128 {
        return Err(DistortionError::Budget { needed, budget });
    }
    let orders: Vec<Vec<usize>> = (0..problem.n_ctx())
        .into_par_iter()
        .map(|ctx| subset_context(problem, ctx, rho))
        .collect();
    let ghat = GuessingFunction::from_orders(k, &orders)?;
    let sf = success_function(&ghat, problem)?;
    let m = sf.moment(problem, rho);
    Ok((sf, m))
}

fn subset_context(problem: &RdProblem, ctx: usize, rho: f64) -> Vec<usize> {
    let k = problem.n_xhat();
    let masses = problem.masses(ctx);
    let support: Vec<usize> = (0..problem.n_x()).filter(|&x| masses[x] > 0.0).collect();
    // Bitmask of supported source tuples covered by each reconstruction.
    let words = support.len().div_ceil(64).max(1);
    let ball: Vec<Vec<u64>> = (0..k)
        .map(|xh| {
            let mut b = vec![0u64; words];
            for (i, &x) in support.iter().enumerate() {
                if problem.covers(x, xh) {
                    b[i / 64] |= 1 << (i % 64);
                }
            }
            b
        })
        .collect();
    let n_states = 1usize << k;
    let mut cover: Vec<Vec<u64>> = vec![vec![0u64; words]; n_states];
    for s in 1..n_states {
        let low = s.trailing_zeros() as usize;
        let prev = s & (s - 1);
        cover[s] = cover[prev].iter().zip(&ball[low]).map(|(a, b)| a | b).collect();
    }
    let gain = |s: usize, xh: usize| -> f64 {
        let mut g = 0.0;
        for (w, (&c, &b)) in cover[s].iter().zip(&ball[xh]).enumerate() {
            let mut fresh = b & !c;
            while fresh != 0 {
                let i = w * 64 + fresh.trailing_zeros() as usize;
                g += masses[support[i]];
                fresh &= fresh - 1;
            }
        }
        g
    };
    let mut best = vec![f64::INFINITY; n_states];
    let mut choice = vec![usize::MAX; n_states];
    best[0] = 0.0;
    for s in 0..n_states {
        if best[s].is_infinite() {
            continue;
        }
        let step = ((s.count_ones() + 1) as f64).powf(rho);
        for xh in 0..k {
            if s >> xh & 1 == 1 {
                continue;
            }
            let t = s | 1 << xh;
            let v = best[s] + step * gain(s, xh);
            if v < best[t] - 1e-15 {
                best[t] = v;
                choice[t] = xh;
            }
        }
    }
    let mut order = Vec::with_capacity(k);
    let mut s = n_states - 1;
    while s != 0 {
        let xh = choice[s];
        order.push(xh);
        s &= !(1 << xh);
    }
    order.reverse();
    order
}

/// Guess the reconstruction covering the most uncovered posterior mass
/// next, ties by index; not certified optimal.
pub fn greedy_cover_guesser(problem: &RdProblem) -> Result<SuccessFunction, DistortionError> {
    let k = problem.n_xhat();
    let orders: Vec<Vec<usize>> = (0..problem.n_ctx())
        .map(|ctx| {
            let masses = problem.masses(ctx);
            let mut covered: Vec<bool> = masses.iter().map(|&m| m <= 0.0).collect();
            let mut used = vec![false; k];
            let mut order = Vec::with_capacity(k);
            while covered.iter().any(|c| !c) {
                let (xh, _) = (0..k)
                    .filter(|&xh| !used[xh])
                    .map(|xh| {
                        let g: f64 = (0..problem.n_x())
                            .filter(|&x| !covered[x] && problem.covers(x, xh))
                            .map(|x| masses[x])
                            .sum();
                        (xh, g)
                    })
                    .fold((usize::MAX, -1.0), |acc, (xh, g)| if g > acc.1 { (xh, g) } else { acc });
                used[xh] = true;
                order.push(xh);
                for x in 0..problem.n_x() {
                    if problem.covers(x, xh) {
                        covered[x] = true;
                    }
                }
            }
            complete(order, k)
        })
        .collect();
    let ghat = GuessingFunction::from_orders(k, &orders)?;
    success_function(&ghat, problem)
}

/// Describe `x` by the remainder of the rank of its reconstruction modulo
/// `z_count`.
pub fn rd_side_info_encoder(sf: &SuccessFunction, z_count: usize) -> DetTaskEncoder {
    assert!(z_count >= 1);
    let z = z_count as u32;
    let map = (0..sf.n_ctx())
        .flat_map(|ctx| (0..sf.n_x()).map(move |x| (ctx, x)))
        .map(|(ctx, x)| (sf.ghat.rank(sf.psi(x, ctx), ctx) - 1) % z)
        .collect();
    DetTaskEncoder::new(sf.n_x(), sf.n_ctx(), z_count, map).expect("remainders are in range")
}

/// For `(ctx, z)`: reconstructions with remainder `z` first, ranked by
/// quotient, then the others in the original order.
pub fn quotient_guesser(sf: &SuccessFunction, z_count: usize) -> GuessingFunction {
    let k = sf.ghat.n_x();
    let mut orders = Vec::with_capacity(sf.n_ctx() * z_count);
    for ctx in 0..sf.n_ctx() {
        let base = sf.ghat.order(ctx);
        for z in 0..z_count {
            let first: Vec<usize> = base.iter().copied().skip(z).step_by(z_count).collect();
            orders.push(complete(first, k));
        }
        debug_assert!(base.len() == k);
    }
    GuessingFunction::from_orders(k, &orders).expect("orders are permutations")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RdSideInfoReport {
    pub z_count: usize,
    pub optimal_moment: f64,
    pub input_moment: f64,
    pub input_optimal: bool,
    pub quotient_moment: f64,
    pub with_description: f64,
    pub ceil_moment: f64,
    pub floor: f64,
    pub checks: Vec<Check>,
}

/// Build the remainder encoder from `sf` and compare the best guesser given
/// the description with the ceiling moment and the universal floor.
pub fn rd_side_info_checks(
    sf: &SuccessFunction,
    problem: &RdProblem,
    z_count: usize,
    rho: f64,
    budget: u64,
) -> Result<(DetTaskEncoder, RdSideInfoReport), DistortionError> {
    const THEOREM: &str = "rd-side-information";
    let (_, optimal) = subset_optimal_distortion_guesser(problem, rho, budget)?;
    let input = sf.moment(problem, rho);
    let input_optimal = (input - optimal).abs() <= 1e-12 * optimal.max(1.0);
    let enc = rd_side_info_encoder(sf, z_count);
    let refined = problem.augmented(&enc);
    let (_, with_z) = subset_optimal_distortion_guesser(&refined, rho, budget)?;
    let q = success_function(&quotient_guesser(sf, z_count), &refined)?;
    let quotient = q.moment(&refined, rho);
    let ceil = sf.ceil_moment(problem, z_count, rho);
    let floor = ((z_count as f64).powf(-rho) * optimal).max(1.0);
    let checks = vec![
        Check::holds(THEOREM, "input-guesser-optimal", input_optimal),
        Check::at_most(THEOREM, "quotient-guesser-within-ceiling", quotient, ceil),
        Check::at_most(THEOREM, "best-given-z-within-ceiling", with_z, ceil),
        Check::at_least(THEOREM, "best-given-z-above-floor", with_z, floor),
        Check::at_most(THEOREM, "best-given-z-within-quotient", with_z, quotient),
    ];
    Ok((
        enc,
        RdSideInfoReport {
            z_count,
            optimal_moment: optimal,
            input_moment: input,
            input_optimal,
            quotient_moment: quotient,
            with_description: with_z,
            ceil_moment: ceil,
            floor,
            checks,
        },
    ))
}

/// Encode `x` through its reconstruction: `f(psi(x | ctx) | ctx)` with the
/// remainder-and-scale encoder of `sf.ghat`. Lists hold the reconstructions
/// reachable under each description.
pub fn rd_encoder_from_guessing(
    sf: &SuccessFunction,
    problem: &RdProblem,
    omega: usize,
    z_count: usize,
) -> Result<(DetTaskEncoder, DecodingListTable), DistortionError> {
    let inner = encoder_from_guessing(&sf.ghat, omega, z_count)?;
    let nx = sf.n_x();
    let map: Vec<u32> = (0..sf.n_ctx())
        .flat_map(|ctx| (0..nx).map(move |x| (ctx, x)))
        .map(|(ctx, x)| inner.describe(sf.psi(x, ctx), ctx) as u32)
        .collect();
    let enc = DetTaskEncoder::new(nx, sf.n_ctx(), z_count, map)?;
    let lists = reconstruction_lists(&enc, problem, sf);
    Ok((enc, lists))
}

/// For each `(ctx, z)`: `{psi(x | ctx) : x reachable with description z}`,
/// in index order.
pub fn reconstruction_lists(enc: &impl EncoderLaw, problem: &RdProblem, sf: &SuccessFunction) -> DecodingListTable {
    let nz = enc.z_count();
    let mut member = vec![false; problem.n_ctx() * nz * problem.n_xhat()];
    for ctx in 0..problem.n_ctx() {
        for x in 0..problem.n_x() {
            if problem.joint.p(x, ctx) > 0.0 {
                for (z, _) in enc.emissions(x, ctx) {
                    member[(ctx * nz + z) * problem.n_xhat() + sf.psi(x, ctx)] = true;
                }
            }
        }
    }
    let lists = member
        .chunks(problem.n_xhat())
        .map(|row| (0..row.len()).filter(|&i| row[i]).collect())
        .collect();
    DecodingListTable::new(nz, lists)
}

/// Every positive-mass `(x, ctx, z)` must find a reconstruction within the
/// level in its list.
pub fn check_fidelity(
    lists: &DecodingListTable,
    enc: &impl EncoderLaw,
    problem: &RdProblem,
) -> Result<(), DistortionError> {
    for ctx in 0..problem.n_ctx() {
        for x in 0..problem.n_x() {
            if problem.joint.p(x, ctx) > 0.0 {
                for (z, _) in enc.emissions(x, ctx) {
                    if !lists.list(ctx, z).iter().any(|&xh| problem.covers(x, xh)) {
                        return Err(DistortionError::Fidelity { x, ctx, z });
                    }
                }
            }
        }
    }
    Ok(())
}

/// `E[|L(ctx, Z)|^rho]`.
pub fn rd_list_moment(lists: &DecodingListTable, enc: &impl EncoderLaw, problem: &RdProblem, rho: f64) -> f64 {
    let mut m = 0.0;
    for ctx in 0..problem.n_ctx() {
        for x in 0..problem.n_x() {
            let p = problem.joint.p(x, ctx);
            if p > 0.0 {
                for (z, w) in enc.emissions(x, ctx) {
                    m += p * w * (lists.list(ctx, z).len() as f64).powf(rho);
                }
            }
        }
    }
    m
}

/// Guess list by list in increasing size, skipping reconstructions already
/// guessed. The lists must meet the fidelity condition for `enc`.
pub fn rd_guessing_from_lists(
    lists: &DecodingListTable,
    enc: &impl EncoderLaw,
    problem: &RdProblem,
) -> Result<SuccessFunction, DistortionError> {
    check_fidelity(lists, enc, problem)?;
    let k = problem.n_xhat();
    let orders: Vec<Vec<usize>> = (0..problem.n_ctx())
        .map(|ctx| {
            let mut zs: Vec<usize> = (0..lists.z_count()).filter(|&z| !lists.list(ctx, z).is_empty()).collect();
            zs.sort_by_key(|&z| (lists.list(ctx, z).len(), z));
            let mut seen = vec![false; k];
            let mut order = Vec::with_capacity(k);
            for z in zs {
                for &xh in lists.list(ctx, z) {
                    if !std::mem::replace(&mut seen[xh], true) {
                        order.push(xh);
                    }
                }
            }
            complete(order, k)
        })
        .collect();
    let ghat = GuessingFunction::from_orders(k, &orders)?;
    success_function(&ghat, problem)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RdConversionReport {
    pub omega: usize,
    pub z_count: usize,
    pub guess_moment: f64,
    pub list_moment: f64,
    pub reguess_moment: f64,
    pub checks: Vec<Check>,
}

/// Guess to lists and back: `E|L|^rho <= E[ceil(G/omega)^rho]` and the
/// guesser rebuilt from those lists has `E[G^rho] <= |Z|^rho E|L|^rho`.
pub fn rd_conversion_checks(
    sf: &SuccessFunction,
    problem: &RdProblem,
    omega: usize,
    z_count: usize,
    rho: f64,
) -> Result<RdConversionReport, DistortionError> {
    const THEOREM: &str = "rd-lists-and-guesses";
    let (enc, lists) = rd_encoder_from_guessing(sf, problem, omega, z_count)?;
    check_fidelity(&lists, &enc, problem)?;
    let lm = rd_list_moment(&lists, &enc, problem, rho);
    let back = rd_guessing_from_lists(&lists, &enc, problem)?;
    let gm = back.moment(problem, rho);
    let zr = (z_count as f64).powf(rho);
    Ok(RdConversionReport {
        omega,
        z_count,
        guess_moment: sf.moment(problem, rho),
        list_moment: lm,
        reguess_moment: gm,
        checks: vec![
            Check::at_most(THEOREM, "list-within-ceiling", lm, sf.ceil_moment(problem, omega, rho)),
            Check::at_most(THEOREM, "guess-within-lists", gm, zr * lm),
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::guessing::{optimal_guesser, optimal_moment, side_info_encoder};
    use crate::prob::random::{permutation, random_joint, seeded_rng};
    use crate::task::{decoding_lists, guessing_from_lists, scale_count, StochTaskEncoder};
    use proptest::prelude::*;

    const BUDGET: u64 = 10_000_000;

    fn problem(j: &JointPmf, spec: &DistortionSpec, n: usize) -> RdProblem {
        RdProblem::new(j, spec, n, BUDGET).unwrap()
    }

    fn asym3(level: f64) -> DistortionSpec {
        DistortionSpec::new(3, 3, vec![0.0, 0.4, 1.0, 0.7, 0.0, 0.3, 0.2, 0.9, 0.0], level).unwrap()
    }

    #[test]
    fn average_distortion() {
        let h = DistortionSpec::hamming(2, 0.0).unwrap();
        assert_eq!(avg_distortion(&[0, 1, 1], &[0, 1, 1], &h).unwrap(), 0.0);
        assert_eq!(avg_distortion(&[0, 1, 1], &[1, 0, 0], &h).unwrap(), 1.0);
        assert!((avg_distortion(&[0, 1, 1], &[0, 0, 1], &h).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(avg_distortion(&[0], &[0, 1], &h), Err(DistortionError::Length(1, 2)));
    }

    #[test]
    fn spec_validation() {
        assert_eq!(
            DistortionSpec::new(2, 2, vec![0.0, 1.0, 0.5, 1.0], 0.0),
            Err(DistortionError::NoZero { x: 1 })
        );
        assert!(matches!(DistortionSpec::hamming(2, -1.0), Err(DistortionError::Level(_))));
        let s = asym3(0.5);
        let back = DistortionSpec::from_csv(&s.to_csv(), 0.5).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn one_ball_covers_everything() {
        let j = random_joint(&mut seeded_rng(1), 3, 2);
        let p = problem(&j, &asym3(1.0), 2);
        let (sf, m) = brute_optimal_distortion_guesser(&p, 1.0, BUDGET).unwrap();
        assert_eq!(m, 1.0);
        assert!((0..p.n_ctx()).all(|c| (0..p.n_x()).all(|x| sf.rank(x, c) == 1)));
        let g = greedy_cover_guesser(&p).unwrap();
        assert_eq!(g.moment(&p, 1.0), 1.0);
    }

    #[test]
    fn zero_level_hamming_is_exact_guessing() {
        let mut rng = seeded_rng(2);
        for _ in 0..10 {
            let j = random_joint(&mut rng, 5, 3);
            let p = problem(&j, &DistortionSpec::hamming(5, 0.0).unwrap(), 1);
            let g = optimal_guesser(&j);
            let sf = success_function(&g, &p).unwrap();
            for c in 0..3 {
                for x in 0..5 {
                    assert_eq!(sf.rank(x, c), g.rank(x, c));
                    assert_eq!(sf.psi(x, c), x);
                }
            }
            for rho in [0.5, 1.0, 2.0] {
                let opt = optimal_moment(&j, rho);
                assert!((sf.moment(&p, rho) - opt).abs() < 1e-12);
                let (_, dp) = subset_optimal_distortion_guesser(&p, rho, BUDGET).unwrap();
                assert!((dp - opt).abs() < 1e-12);
                let greedy = greedy_cover_guesser(&p).unwrap();
                assert!((greedy.moment(&p, rho) - opt).abs() < 1e-12);
            }
            for z in 1..6 {
                assert_eq!(rd_side_info_encoder(&sf, z), side_info_encoder(&j, z));
            }
            let omega = 2;
            let zc = omega * scale_count(5, omega);
            let (enc, lists) = rd_encoder_from_guessing(&sf, &p, omega, zc).unwrap();
            let plain = encoder_from_guessing(&g, omega, zc).unwrap();
            assert_eq!(enc, plain);
            assert_eq!(lists, decoding_lists(&plain, &j).unwrap());
            let back = rd_guessing_from_lists(&lists, &enc, &p).unwrap();
            assert_eq!(back.ghat, guessing_from_lists(&lists, &j).unwrap());
        }
    }

    /// Ranks on a 3-letter alphabet at level 0.5, read off the table: row
    /// `x` is covered by the reconstructions with `d <= 0.5`.
    #[test]
    fn asymmetric_table_by_direct_scan() {
        let j = JointPmf::unconditional(&[0.5, 0.3, 0.2]).unwrap();
        let p = problem(&j, &asym3(0.5), 1);
        // Balls: 0 -> {0, 1}, 1 -> {1, 2}, 2 -> {0, 2}.
        let ghat = GuessingFunction::from_orders(3, &[vec![1, 0, 2]]).unwrap();
        let sf = success_function(&ghat, &p).unwrap();
        assert_eq!([sf.rank(0, 0), sf.rank(1, 0), sf.rank(2, 0)], [1, 1, 2]);
        assert_eq!([sf.psi(0, 0), sf.psi(1, 0), sf.psi(2, 0)], [1, 1, 0]);
        let (_, m) = brute_optimal_distortion_guesser(&p, 1.0, BUDGET).unwrap();
        assert!((m - 1.2).abs() < 1e-12);
    }

    #[test]
    fn greedy_gap_on_a_bad_table() {
        // Greedy takes the heavy middle ball first and then needs two more.
        let d = vec![
            0.0, 0.0, 1.0, 1.0, //
            1.0, 0.0, 0.0, 1.0, //
            1.0, 1.0, 0.0, 0.0, //
            0.0, 1.0, 1.0, 0.0,
        ];
        let spec = DistortionSpec::new(4, 4, d, 0.0).unwrap();
        let j = JointPmf::unconditional(&[0.3, 0.2, 0.3, 0.2]).unwrap();
        let p = problem(&j, &spec, 1);
        let (_, best) = brute_optimal_distortion_guesser(&p, 1.0, BUDGET).unwrap();
        let greedy = greedy_cover_guesser(&p).unwrap().moment(&p, 1.0);
        assert!(greedy >= best - 1e-12);
        assert!((best - 1.5).abs() < 1e-12, "{best}");
    }

    #[test]
    fn factorial_budget() {
        let j = JointPmf::uniform(3);
        let p = problem(&j, &asym3(0.0), 2);
        assert!(matches!(
            brute_optimal_distortion_guesser(&p, 1.0, 1000),
            Err(DistortionError::Budget { .. })
        ));
    }

    #[test]
    fn fidelity_violation_is_reported() {
        let j = JointPmf::uniform(3);
        let p = problem(&j, &DistortionSpec::hamming(3, 0.0).unwrap(), 1);
        let enc = DetTaskEncoder::new(3, 1, 1, vec![0, 0, 0]).unwrap();
        let lists = DecodingListTable::new(1, vec![vec![0, 1]]);
        assert_eq!(
            rd_guessing_from_lists(&lists, &enc, &p),
            Err(DistortionError::Fidelity { x: 2, ctx: 0, z: 0 })
        );
    }

    #[test]
    fn side_info_on_pairs() {
        let mut rng = seeded_rng(3);
        for _ in 0..5 {
            let j = random_joint(&mut rng, 2, 2);
            let spec = DistortionSpec::hamming(2, 0.5).unwrap();
            let p = problem(&j, &spec, 2);
            let (sf, _) = subset_optimal_distortion_guesser(&p, 1.0, BUDGET).unwrap();
            for z in 1..=4 {
                let (_, rep) = rd_side_info_checks(&sf, &p, z, 1.0, BUDGET).unwrap();
                assert!(rep.checks.iter().all(|c| c.pass), "{:?}", rep.checks);
            }
        }
    }

    #[test]
    fn singleton_lists_and_one_big_list() {
        let j = JointPmf::uniform(4);
        let p = problem(&j, &DistortionSpec::hamming(4, 0.0).unwrap(), 1);
        let (sf, _) = subset_optimal_distortion_guesser(&p, 1.0, BUDGET).unwrap();
        let (enc, lists) = rd_encoder_from_guessing(&sf, &p, 1, 3).unwrap();
        // omega = 1: remainder is constant, scale floor(log2 rank) takes 3 values.
        assert!((rd_list_moment(&lists, &enc, &p, 1.0) - 1.5).abs() < 1e-12);
        assert!(rd_list_moment(&lists, &enc, &p, 1.0) <= sf.moment(&p, 1.0));
        let all = DecodingListTable::new(1, vec![vec![0, 1, 2, 3]]);
        let one = DetTaskEncoder::new(4, 1, 1, vec![0; 4]).unwrap();
        let g = rd_guessing_from_lists(&all, &one, &p).unwrap();
        assert!(g.moment(&p, 1.0) <= 4.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn permutation_search_matches_subset_program(seed in any::<u64>(), level in 0.0f64..1.0, rho in 0.3f64..3.0) {
            let mut rng = seeded_rng(seed);
            let j = random_joint(&mut rng, 3, 2);
            let p = problem(&j, &asym3(level), 1);
            let (_, brute) = brute_optimal_distortion_guesser(&p, rho, BUDGET).unwrap();
            let (sf, dp) = subset_optimal_distortion_guesser(&p, rho, BUDGET).unwrap();
            prop_assert!((brute - dp).abs() <= 1e-12 * brute);
            let greedy = greedy_cover_guesser(&p).unwrap().moment(&p, rho);
            prop_assert!(greedy >= dp - 1e-12);
            for x in 0..3 {
                for c in 0..2 {
                    prop_assert!(p.covers(x, sf.psi(x, c)));
                }
            }
        }

        #[test]
        fn moment_falls_with_level(seed in any::<u64>(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let mut rng = seeded_rng(seed);
            let j = random_joint(&mut rng, 2, 2);
            let spec = DistortionSpec::hamming(2, lo).unwrap();
            let m_lo = brute_optimal_distortion_guesser(&problem(&j, &spec, 3), 1.0, BUDGET).unwrap().1;
            let m_hi = brute_optimal_distortion_guesser(&problem(&j, &spec.with_level(hi).unwrap(), 3), 1.0, BUDGET).unwrap().1;
            prop_assert!(m_hi <= m_lo + 1e-12);
        }

        #[test]
        fn conversions_hold(seed in any::<u64>(), level in 0.0f64..0.6, omega in 1usize..5, extra in 0usize..3, rho in 0.5f64..2.0) {
            let mut rng = seeded_rng(seed);
            let j = random_joint(&mut rng, 2, 2);
            let p = problem(&j, &DistortionSpec::hamming(2, level).unwrap(), 2);
            let (sf, _) = subset_optimal_distortion_guesser(&p, rho, BUDGET).unwrap();
            let zc = omega * scale_count(4, omega) + extra;
            let rep = rd_conversion_checks(&sf, &p, omega, zc, rho).unwrap();
            for c in &rep.checks {
                prop_assert!(c.pass, "{:?}", c);
            }
            // Any guesser, optimal or not.
            let orders: Vec<Vec<usize>> = (0..p.n_ctx()).map(|_| permutation(&mut rng, 4)).collect();
            let other = success_function(&GuessingFunction::from_orders(4, &orders).unwrap(), &p).unwrap();
            let rep = rd_conversion_checks(&other, &p, omega, zc, rho).unwrap();
            prop_assert!(rep.checks.iter().all(|c| c.pass));
        }

        #[test]
        fn stochastic_lists_give_guessers(seed in any::<u64>(), zc in 1usize..4, level in 0.0f64..0.6) {
            let mut rng = seeded_rng(seed);
            let j = random_joint(&mut rng, 2, 1);
            let p = problem(&j, &DistortionSpec::hamming(2, level).unwrap(), 2);
            let enc = StochTaskEncoder::random(&mut rng, 4, 1, zc);
            let (sf, _) = subset_optimal_distortion_guesser(&p, 1.0, BUDGET).unwrap();
            let lists = reconstruction_lists(&enc, &p, &sf);
            let g = rd_guessing_from_lists(&lists, &enc, &p).unwrap();
            let bound = (zc as f64) * rd_list_moment(&lists, &enc, &p, 1.0);
            prop_assert!(g.moment(&p, 1.0) <= bound * (1.0 + 1e-12));
        }
    }
}
