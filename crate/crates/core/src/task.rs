//! Task encoders, decoding lists, and the conversions between lists and
//! guessing orders.

use serde::Serialize;
use thiserror::Error;

use crate::guessing::{moment_entropy, optimal_guesser, optimal_order, GuessingFunction};
use crate::prob::JointPmf;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TaskError {
    #[error("encoder covers {enc_x}x{enc_ctx} but the joint is {j_x}x{j_ctx}")]
    Mismatch {
        enc_x: usize,
        enc_ctx: usize,
        j_x: usize,
        j_ctx: usize,
    },
    #[error("description {z} out of range for an alphabet of {z_count}")]
    OutOfRange { z: u32, z_count: usize },
    #[error("row for x={x}, ctx={ctx} is not a distribution over descriptions")]
    BadRow { x: usize, ctx: usize },
    #[error("{z_count} descriptions cannot hold omega={omega} remainders times {s_count} scales")]
    Capacity {
        z_count: usize,
        omega: usize,
        s_count: usize,
    },
    #[error("omega must lie in 1..={n_x}, got {omega}")]
    Omega { omega: usize, n_x: usize },
    #[error("x={x} has positive mass in context {ctx} but appears in none of its lists")]
    Coverage { x: usize, ctx: usize },
}

/// Law of a task encoder: which descriptions it may emit for `(x, ctx)`.
pub trait EncoderLaw: Sync {
    fn n_x(&self) -> usize;
    fn n_ctx(&self) -> usize;
    fn z_count(&self) -> usize;
    /// `(z, probability)` pairs with positive probability.
    fn emissions(&self, x: usize, ctx: usize) -> Vec<(usize, f64)>;

    fn check_shape(&self, joint: &JointPmf) -> Result<(), TaskError> {
        if self.n_x() != joint.n_x() || self.n_ctx() != joint.n_y() {
            return Err(TaskError::Mismatch {
                enc_x: self.n_x(),
                enc_ctx: self.n_ctx(),
                j_x: joint.n_x(),
                j_ctx: joint.n_y(),
            });
        }
        Ok(())
    }

    /// Joint law of `X` and the refined context `(ctx, Z)`, indexed `ctx * z_count + z`.
    fn augment(&self, joint: &JointPmf) -> JointPmf {
        self.check_shape(joint).expect("encoder shape matches joint");
        let (nx, nz) = (joint.n_x(), self.z_count());
        let n_ctx = joint.n_y() * nz;
        let mut p = vec![0.0; nx * n_ctx];
        for x in 0..nx {
            for c in 0..joint.n_y() {
                let mass = joint.p(x, c);
                if mass > 0.0 {
                    for (z, w) in self.emissions(x, c) {
                        p[x * n_ctx + c * nz + z] += mass * w;
                    }
                }
            }
        }
        renormalized(nx, n_ctx, p)
    }
}

// Rounding in products can leave the total a few ulps from 1.
fn renormalized(nx: usize, ny: usize, mut p: Vec<f64>) -> JointPmf {
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-15 {
        for v in &mut p {
            *v /= total;
        }
    }
    JointPmf::from_table(nx, ny, p).expect("augmented law is a pmf")
}

/// A deterministic encoder `f(x | ctx)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DetTaskEncoder {
    n_x: usize,
    n_ctx: usize,
    z_count: usize,
    map: Vec<u32>,
}

impl DetTaskEncoder {
    /// `map[ctx * n_x + x]` is the description of `x` in context `ctx`.
    pub fn new(n_x: usize, n_ctx: usize, z_count: usize, map: Vec<u32>) -> Result<Self, TaskError> {
        assert_eq!(map.len(), n_x * n_ctx, "encoder table shape");
        if let Some(&z) = map.iter().find(|&&z| z as usize >= z_count) {
            return Err(TaskError::OutOfRange { z, z_count });
        }
        Ok(Self {
            n_x,
            n_ctx,
            z_count,
            map,
        })
    }

    pub fn describe(&self, x: usize, ctx: usize) -> usize {
        self.map[ctx * self.n_x + x] as usize
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("encoder serializes")
    }
}

impl EncoderLaw for DetTaskEncoder {
    fn n_x(&self) -> usize {
        self.n_x
    }
    fn n_ctx(&self) -> usize {
        self.n_ctx
    }
    fn z_count(&self) -> usize {
        self.z_count
    }
    fn emissions(&self, x: usize, ctx: usize) -> Vec<(usize, f64)> {
        vec![(self.describe(x, ctx), 1.0)]
    }
}

/// A stochastic encoder with law `w(z | x, ctx)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StochTaskEncoder {
    n_x: usize,
    n_ctx: usize,
    z_count: usize,
    weights: Vec<f64>,
}

impl StochTaskEncoder {
    /// `weights[(ctx * n_x + x) * z_count + z]`; each row must sum to 1.
    pub fn new(n_x: usize, n_ctx: usize, z_count: usize, weights: Vec<f64>) -> Result<Self, TaskError> {
        assert_eq!(weights.len(), n_x * n_ctx * z_count, "encoder table shape");
        for ctx in 0..n_ctx {
            for x in 0..n_x {
                let row = &weights[(ctx * n_x + x) * z_count..][..z_count];
                let total: f64 = row.iter().sum();
                if row.iter().any(|&w| w < 0.0) || (total - 1.0).abs() > 1e-9 {
                    return Err(TaskError::BadRow { x, ctx });
                }
            }
        }
        Ok(Self {
            n_x,
            n_ctx,
            z_count,
            weights,
        })
    }

    /// Seeded random encoder; each row is a flat Dirichlet draw on a random
    /// nonempty subset of the descriptions.
    pub fn random(rng: &mut impl rand::Rng, n_x: usize, n_ctx: usize, z_count: usize) -> Self {
        let mut weights = Vec::with_capacity(n_x * n_ctx * z_count);
        for _ in 0..n_x * n_ctx {
            let mut row = crate::prob::random::dirichlet(rng, z_count);
            let keep = rng.random_range(0..z_count);
            for (z, w) in row.iter_mut().enumerate() {
                if z != keep && rng.random::<f64>() < 0.5 {
                    *w = 0.0;
                }
            }
            let total: f64 = row.iter().sum();
            weights.extend(row.into_iter().map(|w| w / total));
        }
        Self::new(n_x, n_ctx, z_count, weights).expect("normalized rows")
    }

    pub fn from_det(enc: &DetTaskEncoder) -> Self {
        let mut weights = vec![0.0; enc.n_x * enc.n_ctx * enc.z_count];
        for ctx in 0..enc.n_ctx {
            for x in 0..enc.n_x {
                weights[(ctx * enc.n_x + x) * enc.z_count + enc.describe(x, ctx)] = 1.0;
            }
        }
        Self::new(enc.n_x, enc.n_ctx, enc.z_count, weights).expect("indicator rows")
    }

    pub fn weight(&self, z: usize, x: usize, ctx: usize) -> f64 {
        self.weights[(ctx * self.n_x + x) * self.z_count + z]
    }
}

impl EncoderLaw for StochTaskEncoder {
    fn n_x(&self) -> usize {
        self.n_x
    }
    fn n_ctx(&self) -> usize {
        self.n_ctx
    }
    fn z_count(&self) -> usize {
        self.z_count
    }
    fn emissions(&self, x: usize, ctx: usize) -> Vec<(usize, f64)> {
        (0..self.z_count)
            .map(|z| (z, self.weight(z, x, ctx)))
            .filter(|&(_, w)| w > 0.0)
            .collect()
    }
}

/// Per `(ctx, z)`: the symbols with positive posterior, in index order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodingListTable {
    z_count: usize,
    lists: Vec<Vec<usize>>,
}

impl DecodingListTable {
    pub fn new(z_count: usize, lists: Vec<Vec<usize>>) -> Self {
        assert!(z_count > 0 && lists.len().is_multiple_of(z_count), "list table shape");
        Self { z_count, lists }
    }

    pub fn z_count(&self) -> usize {
        self.z_count
    }

    pub fn n_ctx(&self) -> usize {
        self.lists.len() / self.z_count
    }

    pub fn list(&self, ctx: usize, z: usize) -> &[usize] {
        &self.lists[ctx * self.z_count + z]
    }

    /// CSV rows `ctx,z,member,member,...`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for ctx in 0..self.n_ctx() {
            for z in 0..self.z_count {
                let members: Vec<String> = self.list(ctx, z).iter().map(|x| x.to_string()).collect();
                out.push_str(&format!("{ctx},{z}"));
                for m in members {
                    out.push(',');
                    out.push_str(&m);
                }
                out.push('\n');
            }
        }
        out
    }
}

/// Lists of every `x` with positive joint mass that the encoder can map to `z`.
/// Membership is decided by exact positivity, never by a threshold.
pub fn decoding_lists(enc: &impl EncoderLaw, joint: &JointPmf) -> Result<DecodingListTable, TaskError> {
    enc.check_shape(joint)?;
    let nz = enc.z_count();
    let mut lists = vec![Vec::new(); joint.n_y() * nz];
    for ctx in 0..joint.n_y() {
        for x in 0..joint.n_x() {
            if joint.p(x, ctx) > 0.0 {
                for (z, _) in enc.emissions(x, ctx) {
                    lists[ctx * nz + z].push(x);
                }
            }
        }
    }
    Ok(DecodingListTable::new(nz, lists))
}

/// `E[|L(ctx, Z)|^rho]` under the encoder's law.
pub fn list_moment(lists: &DecodingListTable, joint: &JointPmf, enc: &impl EncoderLaw, rho: f64) -> f64 {
    let mut m = 0.0;
    for ctx in 0..joint.n_y() {
        for x in 0..joint.n_x() {
            let p = joint.p(x, ctx);
            if p > 0.0 {
                for (z, w) in enc.emissions(x, ctx) {
                    m += p * w * (lists.list(ctx, z).len() as f64).powf(rho);
                }
            }
        }
    }
    m
}

/// Decoding lists and their moment in one call.
pub fn encoder_list_moment(enc: &impl EncoderLaw, joint: &JointPmf, rho: f64) -> f64 {
    let lists = decoding_lists(enc, joint).expect("encoder shape matches joint");
    list_moment(&lists, joint, enc, rho)
}

/// Map each `(x, ctx)` to its shortest list, ties by smallest description.
pub fn derandomize(enc: &StochTaskEncoder, joint: &JointPmf) -> Result<DetTaskEncoder, TaskError> {
    let lists = decoding_lists(enc, joint)?;
    let mut map = vec![0u32; enc.n_x * enc.n_ctx];
    for ctx in 0..enc.n_ctx {
        for x in 0..enc.n_x {
            let best = enc
                .emissions(x, ctx)
                .into_iter()
                .map(|(z, _)| z)
                .min_by_key(|&z| (lists.list(ctx, z).len(), z))
                .unwrap_or(0);
            map[ctx * enc.n_x + x] = best as u32;
        }
    }
    DetTaskEncoder::new(enc.n_x, enc.n_ctx, enc.z_count, map)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ListBounds {
    /// `None` when `|Z| <= log|X| + 2`.
    pub achievability: Option<f64>,
    pub converse: f64,
}

/// Bounds on the best list moment achievable with `z_count` descriptions.
pub fn list_bounds(joint: &JointPmf, z_count: usize, rho: f64) -> ListBounds {
    let h = moment_entropy(joint, rho);
    let log_x = (joint.n_x() as f64).log2();
    let z = z_count as f64;
    let achievability = (z > log_x + 2.0).then(|| 1.0 + (rho * (h - (z - log_x - 2.0).log2() + 2.0)).exp2());
    let converse = (rho * (h - z.log2())).exp2().max(1.0);
    ListBounds { achievability, converse }
}

/// Size of the scale alphabet used by [`encoder_from_guessing`].
pub fn scale_count(n_x: usize, omega: usize) -> usize {
    1 + floor_log2(n_x.div_ceil(omega) as u64) as usize
}

pub fn floor_log2(k: u64) -> u32 {
    assert!(k >= 1);
    63 - k.leading_zeros()
}

/// Describe `x` by the remainder `O` of its rank modulo `omega` and the scale
/// `S = floor(log2 ceil(rank / omega))`, flattened as `O * |S| + S`.
pub fn encoder_from_guessing(g: &GuessingFunction, omega: usize, z_count: usize) -> Result<DetTaskEncoder, TaskError> {
    let n_x = g.n_x();
    if omega == 0 || omega > n_x {
        return Err(TaskError::Omega { omega, n_x });
    }
    let s_count = scale_count(n_x, omega);
    if z_count < omega * s_count {
        return Err(TaskError::Capacity {
            z_count,
            omega,
            s_count,
        });
    }
    let om = omega as u32;
    let mut map = Vec::with_capacity(n_x * g.n_ctx());
    for ctx in 0..g.n_ctx() {
        for x in 0..n_x {
            let rank = g.rank(x, ctx);
            let o = (rank - 1) % om;
            let s = floor_log2(rank.div_ceil(om) as u64);
            map.push(o * s_count as u32 + s);
        }
    }
    DetTaskEncoder::new(n_x, g.n_ctx(), z_count, map)
}

/// `E[ceil(G(X|ctx) / omega)^rho]` for a given guesser.
pub fn ceil_guess_moment(g: &GuessingFunction, joint: &JointPmf, omega: usize, rho: f64) -> f64 {
    let om = omega as u32;
    let mut m = 0.0;
    for x in 0..joint.n_x() {
        for ctx in 0..joint.n_y() {
            let p = joint.p(x, ctx);
            if p > 0.0 {
                m += p * (g.rank(x, ctx).div_ceil(om) as f64).powf(rho);
            }
        }
    }
    m
}

/// Guess list by list in increasing size (ties by description), skipping
/// symbols already guessed; unlisted symbols come last in index order.
pub fn guessing_from_lists(lists: &DecodingListTable, joint: &JointPmf) -> Result<GuessingFunction, TaskError> {
    let nx = joint.n_x();
    let mut orders = Vec::with_capacity(lists.n_ctx());
    for ctx in 0..lists.n_ctx() {
        let mut zs: Vec<usize> = (0..lists.z_count()).filter(|&z| !lists.list(ctx, z).is_empty()).collect();
        zs.sort_by_key(|&z| (lists.list(ctx, z).len(), z));
        let mut guessed = vec![false; nx];
        let mut order = Vec::with_capacity(nx);
        for z in zs {
            for &x in lists.list(ctx, z) {
                if !std::mem::replace(&mut guessed[x], true) {
                    order.push(x);
                }
            }
        }
        for x in 0..nx {
            if !guessed[x] {
                if ctx < joint.n_y() && joint.p(x, ctx) > 0.0 {
                    return Err(TaskError::Coverage { x, ctx });
                }
                order.push(x);
            }
        }
        orders.push(order);
    }
    Ok(GuessingFunction::from_orders(nx, &orders).expect("orders are permutations"))
}

/// `|{k' : floor(log2 k') = floor(log2 k)}| = 2^floor(log2 k)`, never above `k`.
pub fn fact1_census(k: u64) -> u64 {
    let c = 1u64 << floor_log2(k);
    debug_assert!(c <= k);
    c
}

/// The remainder width used for the best-list bound.
/// Clamped to `|X|`, beyond which every list is already a singleton.
pub fn best_list_omega(n_x: usize, z_count: usize) -> usize {
    (z_count / (1 + floor_log2(n_x as u64) as usize)).min(n_x)
}

/// `1 + 2^rho E[G^rho] (|Z| / (1 + log|X|) - 1)^-rho`; infinite when the
/// base is not positive.
pub fn best_list_bound(guess_moment: f64, n_x: usize, z_count: usize, rho: f64) -> f64 {
    let base = z_count as f64 / (1.0 + (n_x as f64).log2()) - 1.0;
    if base <= 0.0 {
        return f64::INFINITY;
    }
    1.0 + 2f64.powf(rho) * guess_moment * base.powf(-rho)
}

/// The encoder minimizing `E[|L|^rho]` over deterministic maps into
/// `z_count` descriptions: per context, symbols sorted by decreasing mass are
/// split into contiguous runs by dynamic programming.
pub fn optimal_task_encoder(joint: &JointPmf, z_count: usize, rho: f64) -> DetTaskEncoder {
    assert!(z_count >= 1);
    let nx = joint.n_x();
    let mut map = vec![0u32; nx * joint.n_y()];
    for ctx in 0..joint.n_y() {
        let column: Vec<f64> = (0..nx).map(|x| joint.p(x, ctx)).collect();
        let order: Vec<usize> = optimal_order(&column).into_iter().filter(|&x| column[x] > 0.0).collect();
        let n = order.len();
        if n == 0 {
            continue;
        }
        let blocks = z_count.min(n);
        let mut prefix = vec![0.0; n + 1];
        for (i, &x) in order.iter().enumerate() {
            prefix[i + 1] = prefix[i] + column[x];
        }
        let cost = |a: usize, b: usize| (prefix[b] - prefix[a]) * ((b - a) as f64).powf(rho);
        // best[k][i]: first i symbols in at most k runs.
        let mut best = vec![vec![f64::INFINITY; n + 1]; blocks + 1];
        let mut cut = vec![vec![0usize; n + 1]; blocks + 1];
        best[0][0] = 0.0;
        for k in 1..=blocks {
            best[k][0] = 0.0;
            for i in 1..=n {
                let (mut v, mut c) = (best[k - 1][i], i);
                for j in 0..i {
                    let cand = best[k - 1][j] + cost(j, i);
                    if cand < v - 1e-15 {
                        v = cand;
                        c = j;
                    }
                }
                best[k][i] = v;
                cut[k][i] = c;
            }
        }
        let mut runs = Vec::new();
        let (mut k, mut i) = (blocks, n);
        while i > 0 {
            let j = cut[k][i];
            if j < i {
                runs.push((j, i));
            }
            i = j;
            k -= 1;
        }
        runs.reverse();
        for (z, &(a, b)) in runs.iter().enumerate() {
            for &x in &order[a..b] {
                map[ctx * nx + x] = z as u32;
            }
        }
    }
    DetTaskEncoder::new(nx, joint.n_y(), z_count, map).expect("runs fit the alphabet")
}

/// The scale-only encoder `floor(log2 G*(x|ctx))` on `1 + floor(log2 |X|)`
/// descriptions.
pub fn scale_encoder(joint: &JointPmf) -> DetTaskEncoder {
    let g = optimal_guesser(joint);
    let s_count = scale_count(joint.n_x(), 1);
    encoder_from_guessing(&g, 1, s_count).expect("scale alphabet is large enough")
}
