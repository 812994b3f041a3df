//! Asymptotic calculators: the conditional rate-distortion function, the
//! guessing functional built on it, the matching privacy exponents, and the
//! variational form of the conditional Renyi entropy.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::distortion::DistortionSpec;
use crate::guessing::moment_entropy;
use crate::prob::random::{dirichlet, seeded_rng};
use crate::prob::{kl_divergence, shannon_cond_entropy, JointPmf, ProbError};
use crate::scheme::twohint::{on_boundary, ExponentValue};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExponentError {
    #[error("alternating minimization stalled at gap {gap} after {iterations} iterations")]
    NoConvergence { gap: f64, iterations: usize },
    #[error("distortion table is {d_x} rows but the source has {n_x} symbols")]
    Mismatch { d_x: usize, n_x: usize },
    #[error("invalid optimizer controls: {0}")]
    Controls(&'static str),
    #[error(transparent)]
    Prob(#[from] ProbError),
}

/// Optimizer settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RdControls {
    /// Log-spaced slopes in the initial sweep.
    pub slopes: usize,
    /// Stop when the bracket on the per-slope value is this narrow.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Largest bracket accepted when the iteration cap is hit; slopes where
    /// the optimal output law changes support converge sublinearly.
    pub stall_gap: f64,
    /// Quasi-random starting laws for the functional.
    pub grid_points: usize,
    pub polish_runs: usize,
    pub polish_steps: usize,
    pub seed: u64,
}

impl Default for RdControls {
    fn default() -> Self {
        Self {
            slopes: 20,
            tolerance: 1e-12,
            max_iterations: 20_000,
            stall_gap: 1e-4,
            grid_points: 10_000,
            polish_runs: 20,
            polish_steps: 600,
            seed: 0,
        }
    }
}

impl RdControls {
    fn validate(&self) -> Result<(), ExponentError> {
        if self.slopes < 2 {
            return Err(ExponentError::Controls("at least two slopes"));
        }
        if !(self.tolerance > 0.0 && self.tolerance <= 1e-6) {
            return Err(ExponentError::Controls("tolerance in (0, 1e-6]"));
        }
        if self.max_iterations == 0 || self.polish_runs == 0 {
            return Err(ExponentError::Controls("iteration counts must be positive"));
        }
        Ok(())
    }

    /// Coarser settings for ranking many candidate laws.
    fn screening(&self) -> Self {
        Self {
            tolerance: 1e-7,
            slopes: self.slopes.min(12),
            ..*self
        }
    }
}

/// `R_{X|Y}(Q, Delta)` with a certified bracket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RdValue {
    pub value: f64,
    /// Best dual value: `F(beta) - beta Delta` at a lower bound on `F`.
    pub lower: f64,
    /// Mutual information of a test channel meeting the level.
    pub upper: f64,
    /// Slope of the dual optimum; infinite at level zero.
    pub slope: f64,
}

/// `F(beta) = min_W I(X; Xhat | Y) + beta E[d]`, bracketed, with the
/// distortion and information of the minimizing channel.
#[derive(Debug, Clone, Copy)]
struct SlopePoint {
    f_lo: f64,
    f_hi: f64,
    distortion: f64,
    information: f64,
}

/// Alternating minimization on one context with posterior `p`.
fn slope_slice(p: &[f64], spec: &DistortionSpec, beta: f64, ctl: &RdControls) -> Result<SlopePoint, ExponentError> {
    let (nx, nh) = (spec.n_x(), spec.n_xhat());
    let kernel: Vec<f64> = (0..nx * nh)
        .map(|i| {
            let d = spec.d(i / nh, i % nh);
            if beta.is_infinite() {
                f64::from(u8::from(d == 0.0))
            } else {
                (-beta * d).exp2()
            }
        })
        .collect();
    let xs: Vec<usize> = (0..nx).filter(|&x| p[x] > 0.0).collect();
    let mut r = vec![1.0 / nh as f64; nh];
    let mut c = vec![0.0; nx];
    let mut w = vec![0.0; nh];
    let mut iterations = 0;
    let (f_lo, f_hi) = loop {
        for &x in &xs {
            c[x] = (0..nh).map(|h| r[h] * kernel[x * nh + h]).sum();
        }
        let hi: f64 = -xs.iter().map(|&x| p[x] * c[x].log2()).sum::<f64>();
        for h in 0..nh {
            w[h] = xs.iter().map(|&x| p[x] * kernel[x * nh + h] / c[x]).sum();
        }
        let peak = w.iter().cloned().fold(0.0, f64::max);
        let lo = hi - peak.log2();
        iterations += 1;
        if hi - lo <= ctl.tolerance * hi.abs().max(1.0) {
            break (lo, hi);
        }
        if iterations >= ctl.max_iterations {
            let gap = hi - lo;
            if gap > ctl.stall_gap {
                return Err(ExponentError::NoConvergence { gap, iterations });
            }
            break (lo, hi);
        }
        for h in 0..nh {
            r[h] *= w[h];
        }
    };
    // Channel for the final output law and its statistics.
    let mut out = vec![0.0; nh];
    let mut distortion = 0.0;
    let q = |x: usize, h: usize| r[h] * kernel[x * nh + h] / c[x];
    for &x in &xs {
        for h in 0..nh {
            let v = p[x] * q(x, h);
            out[h] += v;
            distortion += v * spec.d(x, h);
        }
    }
    let mut information = 0.0;
    for &x in &xs {
        for h in 0..nh {
            let v = q(x, h);
            if v > 0.0 {
                information += p[x] * v * (v / out[h]).log2();
            }
        }
    }
    Ok(SlopePoint {
        f_lo,
        f_hi,
        distortion,
        information,
    })
}

fn slope_point(q: &JointPmf, spec: &DistortionSpec, beta: f64, ctl: &RdControls) -> Result<SlopePoint, ExponentError> {
    let py = q.marginal_y();
    let mut acc = SlopePoint {
        f_lo: 0.0,
        f_hi: 0.0,
        distortion: 0.0,
        information: 0.0,
    };
    for (y, &m) in py.iter().enumerate() {
        if m <= 0.0 {
            continue;
        }
        let post: Vec<f64> = (0..q.n_x()).map(|x| q.p(x, y) / m).collect();
        let s = slope_slice(&post, spec, beta, ctl)?;
        acc.f_lo += m * s.f_lo;
        acc.f_hi += m * s.f_hi;
        acc.distortion += m * s.distortion;
        acc.information += m * s.information;
    }
    Ok(acc)
}

/// Conditional rate-distortion function by a sweep over a common slope for
/// all contexts, refined by golden-section search on the concave dual.
pub fn rd_function(q: &JointPmf, spec: &DistortionSpec, ctl: &RdControls) -> Result<RdValue, ExponentError> {
    ctl.validate()?;
    if q.n_x() != spec.n_x() {
        return Err(ExponentError::Mismatch {
            d_x: spec.n_x(),
            n_x: q.n_x(),
        });
    }
    let level = spec.level;
    let zero = slope_point(q, spec, f64::INFINITY, ctl)?;
    let mut upper = zero.information;
    if level == 0.0 {
        let mid = 0.5 * (zero.f_lo + zero.f_hi);
        return Ok(RdValue {
            value: mid,
            lower: zero.f_lo,
            upper: upper.max(zero.f_lo),
            slope: f64::INFINITY,
        });
    }
    let mut lower = 0.0f64;
    let eval = |beta: f64, upper: &mut f64, lower: &mut f64| -> Result<f64, ExponentError> {
        let s = slope_point(q, spec, beta, ctl)?;
        if s.distortion <= level + 1e-15 {
            *upper = upper.min(s.information);
        }
        *lower = lower.max(s.f_lo - beta * level);
        Ok(s.f_lo - beta * level)
    };
    let n = ctl.slopes;
    let grid: Vec<f64> = (0..n).map(|i| 10f64.powf(-2.0 + 5.0 * i as f64 / (n - 1) as f64)).collect();
    let mut vals = Vec::with_capacity(n);
    for &b in &grid {
        vals.push(eval(b, &mut upper, &mut lower)?);
    }
    let best = (0..n).max_by(|&a, &b| vals[a].total_cmp(&vals[b])).expect("nonempty grid");
    let (mut a, mut b) = (
        if best == 0 { 1e-9f64.ln() } else { grid[best - 1].ln() },
        grid[(best + 1).min(n - 1)].ln(),
    );
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let mut f1 = eval(x1.exp(), &mut upper, &mut lower)?;
    let mut f2 = eval(x2.exp(), &mut upper, &mut lower)?;
    while b - a > 1e-7 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = eval(x2.exp(), &mut upper, &mut lower)?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = eval(x1.exp(), &mut upper, &mut lower)?;
        }
    }
    let (slope, mut value) = if f1 >= f2 { (x1.exp(), f1) } else { (x2.exp(), f2) };
    if vals[best] > value {
        value = vals[best];
    }
    // The dual at slope zero is zero.
    let value = value.max(0.0);
    Ok(RdValue {
        value,
        lower: lower.min(value),
        upper: upper.max(value),
        slope,
    })
}

/// The functional `sup_Q [R(Q, Delta) - D(Q || P) / rho]` with its witness.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentResult {
    pub value: f64,
    /// Certified by the witness: its rate lower bound minus its penalty.
    pub lower: f64,
    /// `H_{1/(1+rho)}(X|Y)` of `P`, which bounds the functional for any level.
    pub upper: f64,
    /// Witness law, row-major `x * n_y + y`.
    pub witness: Vec<f64>,
    pub evaluations: usize,
}

impl ExponentResult {
    /// FNV-1a over the witness rounded to 12 decimals.
    pub fn witness_hash(&self) -> String {
        let mut h: u64 = 0xcbf29ce484222325;
        for v in &self.witness {
            for b in format!("{v:.12}").bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x100000001b3);
            }
        }
        format!("{h:016x}")
    }
}

/// Cells of `P` with positive mass; laws `Q` live on these.
fn support(p: &JointPmf) -> Vec<usize> {
    (0..p.table().len()).filter(|&i| p.table()[i] > 0.0).collect()
}

fn law_from(p: &JointPmf, cells: &[usize], weights: &[f64]) -> JointPmf {
    let total: f64 = weights.iter().sum();
    let mut t = vec![0.0; p.table().len()];
    for (&c, &w) in cells.iter().zip(weights) {
        t[c] = w / total;
    }
    JointPmf::from_table(p.n_x(), p.n_y(), t).expect("normalized weights")
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    logits.iter().map(|&l| (l - m).exp()).collect()
}

/// The Halton point `index` in `dim` dimensions.
fn halton(index: usize, dim: usize) -> Vec<f64> {
    const PRIMES: [usize; 24] = [
        2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
    ];
    (0..dim)
        .map(|k| {
            let base = PRIMES[k % PRIMES.len()];
            let (mut f, mut r, mut i) = (1.0, 0.0, index + 1);
            while i > 0 {
                f /= base as f64;
                r += f * (i % base) as f64;
                i /= base;
            }
            r
        })
        .collect()
}

/// (1+1) evolution strategy on logits with the one-fifth success rule.
fn polish<F: Fn(&[f64]) -> f64>(f: &F, start: Vec<f64>, steps: usize, rng: &mut impl Rng) -> (Vec<f64>, f64) {
    let mut best = start;
    let mut best_v = f(&best);
    let mut sigma = 0.5;
    for _ in 0..steps {
        let cand: Vec<f64> = best
            .iter()
            .map(|&l| {
                let z: f64 = StandardNormal.sample(rng);
                l + sigma * z
            })
            .collect::<Vec<f64>>();
        let v = f(&cand);
        if v > best_v {
            best = cand;
            best_v = v;
            sigma *= 1.5;
        } else {
            sigma *= 0.9;
        }
        sigma = sigma.clamp(1e-7, 4.0);
    }
    (best, best_v)
}

/// The functional by quasi-random screening of the simplex followed by
/// local polish from the best starts. `P` itself and the tilted law that is
/// optimal at level zero always enter as starts.
pub fn rd_exponent_functional(
    p: &JointPmf,
    spec: &DistortionSpec,
    rho: f64,
    ctl: &RdControls,
) -> Result<ExponentResult, ExponentError> {
    ctl.validate()?;
    assert!(rho > 0.0);
    let cells = support(p);
    let screen = ctl.screening();
    let objective = |q: &JointPmf, c: &RdControls| -> Result<(f64, f64), ExponentError> {
        let r = rd_function(q, spec, c)?;
        let pen = kl_divergence(q, p)? / rho;
        Ok((r.value - pen, r.lower - pen))
    };
    let mut starts: Vec<Vec<f64>> = vec![cells.iter().map(|&c| p.table()[c]).collect()];
    starts.push(cells.iter().map(|&c| tilted(p, rho).table()[c]).collect());
    let dim = cells.len();
    starts.extend((0..ctl.grid_points).map(|i| halton(i, dim).into_iter().map(|u| -(1.0 - u).ln()).collect()));
    let scored: Vec<(usize, f64)> = starts
        .par_iter()
        .enumerate()
        .map(|(i, w)| {
            let q = law_from(p, &cells, w);
            (i, objective(&q, &screen).map(|v| v.0).unwrap_or(f64::NEG_INFINITY))
        })
        .collect();
    let mut ranked = scored;
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let chosen: Vec<usize> = ranked.iter().take(ctl.polish_runs).map(|&(i, _)| i).collect();
    let value_of = |logits: &[f64]| -> f64 {
        let q = law_from(p, &cells, &softmax(logits));
        objective(&q, &screen).map(|v| v.0).unwrap_or(f64::NEG_INFINITY)
    };
    let polished: Vec<(Vec<f64>, f64)> = chosen
        .par_iter()
        .map(|&i| {
            let mut rng = seeded_rng(ctl.seed ^ (i as u64).wrapping_mul(0x9e3779b97f4a7c15));
            let logits: Vec<f64> = starts[i].iter().map(|&w| w.max(1e-300).ln()).collect();
            polish(&value_of, logits, ctl.polish_steps, &mut rng)
        })
        .collect();
    let (best_logits, _) = polished
        .into_iter()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one polish run");
    let mut witness = law_from(p, &cells, &softmax(&best_logits));
    let (mut value, mut lower) = objective(&witness, ctl)?;
    // Screening noise must not leave us below the trivial choice Q = P.
    let at_p = objective(p, ctl)?;
    if at_p.0 > value {
        witness = p.clone();
        (value, lower) = at_p;
    }
    Ok(ExponentResult {
        value,
        lower,
        upper: moment_entropy(p, rho),
        witness: witness.table().to_vec(),
        evaluations: starts.len() + ctl.polish_runs * (ctl.polish_steps + 1),
    })
}

/// Eve's best exponent at hint rates `r1`, `r2` when the guessing functional
/// takes the role of the entropy rate.
pub fn rd_privacy_exponent(r1: f64, r2: f64, rho: f64, functional: f64, e_bob: Option<f64>) -> ExponentValue {
    assert!(r1 >= 0.0 && r2 >= 0.0 && rho > 0.0);
    let e = functional;
    let total = r1 + r2;
    let value = |v: f64| ExponentValue {
        value: v,
        undetermined: false,
        witness: None,
    };
    match e_bob {
        None => {
            if on_boundary(total, e) {
                ExponentValue::undetermined()
            } else if total < e {
                ExponentValue::minus_infinity()
            } else {
                value(rho * r1.min(r2).min(e))
            }
        }
        Some(eb) => {
            let target = e - eb / rho;
            if eb == 0.0 && on_boundary(total, e) {
                ExponentValue::undetermined()
            } else if total < target && !on_boundary(total, target) {
                ExponentValue::minus_infinity()
            } else {
                value((rho * r1.min(r2) + eb).min(rho * e))
            }
        }
    }
}

/// The law attaining the variational form: posteriors tilted to the power
/// `1/(1+rho)` and contexts weighted by their tilted norms.
pub fn tilted(p: &JointPmf, rho: f64) -> JointPmf {
    let alpha = 1.0 / (1.0 + rho);
    let (nx, ny) = (p.n_x(), p.n_y());
    let norms: Vec<f64> = (0..ny).map(|y| (0..nx).map(|x| p.p(x, y).powf(alpha)).sum()).collect();
    // Context weights are norms to the power 1/alpha; work in logs so large
    // rho does not overflow.
    let logs: Vec<f64> = norms.iter().map(|&s| if s > 0.0 { s.ln() / alpha } else { f64::NEG_INFINITY }).collect();
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut t = vec![0.0; nx * ny];
    for y in 0..ny {
        if norms[y] <= 0.0 {
            continue;
        }
        let weight = (logs[y] - top).exp();
        for x in 0..nx {
            t[x * ny + y] = weight * p.p(x, y).powf(alpha) / norms[y];
        }
    }
    let total: f64 = t.iter().sum();
    for v in &mut t {
        *v /= total;
    }
    JointPmf::from_table(nx, ny, t).expect("tilted law is a pmf")
}

/// `H_W(X|Y) - D(W || P) / rho` for a joint `W`.
pub fn variational_objective(w: &JointPmf, p: &JointPmf, rho: f64) -> Result<f64, ExponentError> {
    Ok(shannon_cond_entropy(w) - kl_divergence(w, p)? / rho)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariationalReport {
    pub renyi: f64,
    /// Largest sampled objective; never above `renyi`.
    pub max_sampled: f64,
    pub violations: usize,
    /// `renyi` minus the objective at the tilted law.
    pub tilted_gap: f64,
    /// `renyi` minus the best objective found by local search from uniform.
    pub search_gap: f64,
}

/// Sample laws `W = Q x V`, check the objective never exceeds
/// `H_{1/(1+rho)}(X|Y)`, and check that the tilted law and a local search
/// both come within reach of it.
pub fn variational_renyi_check(
    p: &JointPmf,
    rho: f64,
    samples: usize,
    seed: u64,
) -> Result<VariationalReport, ExponentError> {
    assert!(samples >= 1 && rho > 0.0);
    let renyi = moment_entropy(p, rho);
    let cells = support(p);
    let mut rng = seeded_rng(seed);
    let mut max_sampled = f64::NEG_INFINITY;
    let mut violations = 0;
    for _ in 0..samples {
        let w = law_from(p, &cells, &dirichlet(&mut rng, cells.len()));
        let v = variational_objective(&w, p, rho)?;
        if v > renyi + 1e-12 {
            violations += 1;
        }
        max_sampled = max_sampled.max(v);
    }
    let tilted_gap = renyi - variational_objective(&tilted(p, rho), p, rho)?;
    let f = |logits: &[f64]| {
        let w = law_from(p, &cells, &softmax(logits));
        variational_objective(&w, p, rho).unwrap_or(f64::NEG_INFINITY)
    };
    let (_, best) = polish(&f, vec![0.0; cells.len()], 4000, &mut rng);
    Ok(VariationalReport {
        renyi,
        max_sampled,
        violations,
        tilted_gap,
        search_gap: renyi - best,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::random::random_joint;
    use crate::suites::binary_channel_grid_oracle;
    use proptest::prelude::*;

    fn h2(p: f64) -> f64 {
        if p <= 0.0 || p >= 1.0 {
            0.0
        } else {
            -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
        }
    }

    #[test]
    fn binary_hamming_matches_grid_and_closed_form() {
        let spec = DistortionSpec::hamming(2, 0.1).unwrap();
        let q = JointPmf::unconditional(&[0.3, 0.7]).unwrap();
        let r = rd_function(&q, &spec, &RdControls::default()).unwrap();
        let reference = h2(0.3) - h2(0.1);
        assert!((r.value - reference).abs() < 1e-6, "{r:?} vs {reference}");
        assert!((r.value - binary_channel_grid_oracle(0.3, 0.1)).abs() < 1e-6);
        assert!((r.value - 0.412).abs() < 5e-4);
        assert!(r.lower <= r.value && r.value <= r.upper);
    }

    #[test]
    fn zero_level_and_large_level() {
        let q = random_joint(&mut seeded_rng(1), 3, 2);
        let h = DistortionSpec::hamming(3, 0.0).unwrap();
        let r = rd_function(&q, &h, &RdControls::default()).unwrap();
        assert!((r.value - shannon_cond_entropy(&q)).abs() < 1e-10);
        let r = rd_function(&q, &h.with_level(1.0).unwrap(), &RdControls::default()).unwrap();
        assert!(r.value.abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn contexts_share_one_slope() {
        // Two contexts with different posteriors: the conditional function
        // is not the average of per-context functions at the same level.
        let q = JointPmf::from_table(2, 2, vec![0.45, 0.1, 0.05, 0.4]).unwrap();
        let spec = DistortionSpec::hamming(2, 0.1).unwrap();
        let r = rd_function(&q, &spec, &RdControls::default()).unwrap();
        // Brute force over the split of the level between the contexts.
        let py = q.marginal_y();
        let post = [0.45 / py[0], 0.1 / py[1]];
        let mut best = f64::INFINITY;
        for k in 0..=20_000 {
            let d0 = 0.2 * k as f64 / 20_000.0;
            let d1 = (0.1 - py[0] * d0) / py[1];
            if !(0.0..=0.5).contains(&d1) {
                continue;
            }
            let piece = |p: f64, d: f64| if d >= p.min(1.0 - p) { 0.0 } else { h2(p) - h2(d) };
            best = best.min(py[0] * piece(post[0], d0) + py[1] * piece(post[1], d1));
        }
        assert!((r.value - best).abs() < 1e-6, "{} vs {best}", r.value);
    }

    #[test]
    fn convex_and_decreasing_in_level() {
        let q = random_joint(&mut seeded_rng(2), 3, 2);
        let base = DistortionSpec::new(3, 3, vec![0.0, 0.4, 1.0, 0.7, 0.0, 0.3, 0.2, 0.9, 0.0], 0.0).unwrap();
        let levels: Vec<f64> = (0..12).map(|i| 0.05 * i as f64).collect();
        let vals: Vec<f64> = levels
            .iter()
            .map(|&l| rd_function(&q, &base.with_level(l).unwrap(), &RdControls::default()).unwrap().value)
            .collect();
        for i in 1..vals.len() {
            assert!(vals[i] <= vals[i - 1] + 1e-8);
        }
        for i in 1..vals.len() - 1 {
            assert!(vals[i] <= 0.5 * (vals[i - 1] + vals[i + 1]) + 1e-8, "{vals:?}");
        }
    }

    fn quick() -> RdControls {
        RdControls {
            grid_points: 300,
            polish_runs: 6,
            polish_steps: 300,
            ..RdControls::default()
        }
    }

    #[test]
    fn functional_at_level_zero_is_renyi_entropy() {
        let mut rng = seeded_rng(3);
        for _ in 0..3 {
            let p = random_joint(&mut rng, 3, 3);
            let spec = DistortionSpec::hamming(3, 0.0).unwrap();
            let e = rd_exponent_functional(&p, &spec, 1.0, &quick()).unwrap();
            assert!((e.value - moment_entropy(&p, 1.0)).abs() < 1e-3, "{e:?}");
            assert!(e.lower <= e.value + 1e-12 && e.value <= e.upper + 1e-9);
        }
    }

    #[test]
    fn uniform_source_is_its_own_witness() {
        let p = JointPmf::uniform(3);
        let e = rd_exponent_functional(&p, &DistortionSpec::hamming(3, 0.0).unwrap(), 2.0, &quick()).unwrap();
        for w in &e.witness {
            assert!((w - 1.0 / 3.0).abs() < 1e-2, "{:?}", e.witness);
        }
        assert!((e.value - 3f64.log2()).abs() < 1e-6);
    }

    #[test]
    fn rho_limits() {
        // Small rho pins the witness to P; large rho frees it, and for
        // Hamming distortion the uniform law then maximizes the rate:
        // log 3 - h(0.2) - 0.2.
        let p = JointPmf::unconditional(&[0.6, 0.3, 0.1]).unwrap();
        let spec = DistortionSpec::hamming(3, 0.2).unwrap();
        let r = rd_function(&p, &spec, &RdControls::default()).unwrap();
        let small = rd_exponent_functional(&p, &spec, 1e-3, &quick()).unwrap();
        assert!(small.value >= r.value - 1e-9);
        assert!(small.value - r.value < 1e-3, "{} vs {}", small.value, r.value);
        let large = rd_exponent_functional(&p, &spec, 1e3, &quick()).unwrap();
        let uniform = 3f64.log2() - h2(0.2) - 0.2;
        let penalty = kl_divergence(&JointPmf::uniform(3), &p).unwrap() / 1e3;
        assert!((large.value - (uniform - penalty)).abs() < 1e-3, "{}", large.value);
    }

    #[test]
    fn privacy_exponent_cases() {
        assert_eq!(rd_privacy_exponent(0.5, 0.4, 1.0, 1.5, None).value, f64::NEG_INFINITY);
        assert_eq!(rd_privacy_exponent(1.0, 1.0, 1.0, 1.5, None).value, 1.0);
        assert_eq!(rd_privacy_exponent(1.0, 1.0, 1.0, 1.5, Some(0.5)).value, 1.5);
        assert_eq!(rd_privacy_exponent(0.3, 0.4, 1.0, 1.5, Some(0.5)).value, f64::NEG_INFINITY);
        assert!(rd_privacy_exponent(0.75, 0.75, 1.0, 1.5, None).undetermined);
    }

    #[test]
    fn variational_identity() {
        let mut rng = seeded_rng(4);
        for rho in [0.5, 1.0, 2.0] {
            let p = random_joint(&mut rng, 3, 3);
            let rep = variational_renyi_check(&p, rho, 500, 9).unwrap();
            assert_eq!(rep.violations, 0);
            assert!(rep.tilted_gap.abs() < 1e-12, "{rep:?}");
            assert!(rep.search_gap >= -1e-12 && rep.search_gap < 1e-3, "{rep:?}");
        }
        let point = JointPmf::unconditional(&[1.0, 0.0]).unwrap();
        let rep = variational_renyi_check(&point, 1.0, 10, 1).unwrap();
        assert_eq!(rep.renyi, 0.0);
        assert!(rep.max_sampled.abs() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn three_letter_functions_bracket(seed in any::<u64>(), level in 0.0f64..0.8) {
            let q = random_joint(&mut seeded_rng(seed), 3, 1);
            let spec = DistortionSpec::new(3, 3, vec![0.0, 0.4, 1.0, 0.7, 0.0, 0.3, 0.2, 0.9, 0.0], level).unwrap();
            let r = rd_function(&q, &spec, &RdControls::default()).unwrap();
            prop_assert!(r.lower <= r.value + 1e-12 && r.value <= r.upper + 1e-12);
            prop_assert!(r.upper - r.lower < 1e-5, "{:?}", r);
            prop_assert!(r.value <= shannon_cond_entropy(&q) + 1e-12);
        }

        #[test]
        fn sampled_laws_stay_below(seed in any::<u64>(), rho in 0.2f64..4.0) {
            let p = random_joint(&mut seeded_rng(seed), 3, 2);
            let rep = variational_renyi_check(&p, rho, 50, seed).unwrap();
            prop_assert_eq!(rep.violations, 0);
            prop_assert!(rep.tilted_gap.abs() < 1e-10);
        }

        #[test]
        fn functional_never_below_source_rate(seed in any::<u64>(), level in 0.0f64..0.5, rho in 0.2f64..3.0) {
            let p = random_joint(&mut seeded_rng(seed), 3, 2);
            let spec = DistortionSpec::hamming(3, level).unwrap();
            let ctl = RdControls { grid_points: 50, polish_runs: 2, polish_steps: 40, ..RdControls::default() };
            let e = rd_exponent_functional(&p, &spec, rho, &ctl).unwrap();
            let r = rd_function(&p, &spec, &ctl).unwrap();
            prop_assert!(e.value >= r.value - 1e-12);
            prop_assert!(e.value <= e.upper + 1e-9);
        }
    }
}
