//! Exact and bounding oracles for an observer who may pick, per outcome, the
//! most helpful of several views.
//!
//! The observer's ambiguity is `min_{G_1..G_K} E[min_k G_k(X | Y, M_{view k})^rho]`.
//! Fixing the guessers, the best genie picks the argmin view; fixing a
//! deterministic genie, the best guessers sort each context by assigned mass.
//! Both searches below run over genie maps.

use rayon::prelude::*;
use thiserror::Error;

use super::{min_cost_assignment, Realization};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("search needs {needed} steps, budget is {budget}")]
    Budget { needed: u128, budget: u64 },
    #[error("no views to choose from")]
    NoViews,
}

/// How per-view guess counts combine into the cost of one outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Combine {
    Min,
    Max,
}

/// Outcomes, their candidate contexts (one per view) and masses, sorted by
/// decreasing mass.
#[derive(Debug, Clone)]
pub struct GenieProblem {
    mass: Vec<f64>,
    symbol: Vec<u32>,
    options: Vec<Vec<u32>>,
    bucket_count: usize,
    rho: f64,
}

/// Value found by a genie search together with the chosen view per outcome
/// (in the problem's sorted point order).
#[derive(Debug, Clone, PartialEq)]
pub struct GenieSolution {
    pub value: f64,
    pub choice: Vec<u8>,
}

impl GenieProblem {
    pub fn new(real: &Realization, views: &[Vec<usize>], rho: f64) -> Result<Self, OracleError> {
        if views.is_empty() {
            return Err(OracleError::NoViews);
        }
        let mut offset = 0u32;
        let mut per_view = Vec::with_capacity(views.len());
        for v in views {
            let ctx = real.contexts(v);
            per_view.push((offset, ctx.of_atom));
            offset += ctx.count as u32;
        }
        let mut order: Vec<usize> = (0..real.len()).collect();
        order.sort_by(|&a, &b| real.mass(b).total_cmp(&real.mass(a)).then(a.cmp(&b)));
        let options = order
            .iter()
            .map(|&a| per_view.iter().map(|(off, of)| off + of[a]).collect())
            .collect();
        Ok(Self {
            mass: order.iter().map(|&a| real.mass(a)).collect(),
            symbol: order.iter().map(|&a| real.x(a) as u32).collect(),
            options,
            bucket_count: offset as usize,
            rho,
        })
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn view_count(&self) -> usize {
        self.options.first().map_or(0, |o| o.len())
    }

    pub fn bucket_count(&self) -> usize {
        self.bucket_count
    }

    /// True when no symbol can reach the same context through two outcomes,
    /// so that every rank assignment is realizable by a guesser.
    pub fn is_unique(&self) -> bool {
        let mut seen = std::collections::HashSet::new();
        for (p, opts) in self.options.iter().enumerate() {
            let mut mine: Vec<u32> = opts.clone();
            mine.sort_unstable();
            mine.dedup();
            for b in mine {
                if !seen.insert((b, self.symbol[p])) {
                    return false;
                }
            }
        }
        true
    }

    /// Cost of a genie map under optimal guessers.
    pub fn evaluate(&self, choice: &[u8]) -> f64 {
        let mut buckets: Vec<Vec<(u32, f64)>> = vec![Vec::new(); self.bucket_count];
        for (p, &c) in choice.iter().enumerate() {
            buckets[self.options[p][c as usize] as usize].push((self.symbol[p], self.mass[p]));
        }
        buckets.iter_mut().map(|b| bucket_cost(b, self.rho)).sum()
    }

    /// Assign outcomes in decreasing mass to the view whose context grows the
    /// least; an upper bound on the optimum.
    pub fn greedy(&self) -> GenieSolution {
        let mut buckets: Vec<Vec<(u32, f64)>> = vec![Vec::new(); self.bucket_count];
        let mut costs = vec![0.0; self.bucket_count];
        let mut choice = Vec::with_capacity(self.len());
        for p in 0..self.len() {
            let mut best = (f64::INFINITY, 0u8, 0.0);
            for (k, &b) in self.options[p].iter().enumerate() {
                let bucket = &mut buckets[b as usize];
                bucket.push((self.symbol[p], self.mass[p]));
                let c = bucket_cost(&mut bucket.clone(), self.rho);
                bucket.pop();
                let delta = c - costs[b as usize];
                if delta < best.0 {
                    best = (delta, k as u8, c);
                }
            }
            let b = self.options[p][best.1 as usize] as usize;
            buckets[b].push((self.symbol[p], self.mass[p]));
            costs[b] = best.2;
            choice.push(best.1);
        }
        let value = self.evaluate(&choice);
        GenieSolution { value, choice }
    }

    /// Minimum-cost matching of outcomes to `(context, rank)` slots. Always an
    /// upper bound; exact when [`Self::is_unique`] holds.
    pub fn matching(&self, budget: u64) -> Result<GenieSolution, OracleError> {
        let mut cap = vec![0usize; self.bucket_count];
        for opts in &self.options {
            let mut mine = opts.clone();
            mine.sort_unstable();
            mine.dedup();
            for b in mine {
                cap[b as usize] += 1;
            }
        }
        let mut first_slot = vec![0usize; self.bucket_count + 1];
        for b in 0..self.bucket_count {
            first_slot[b + 1] = first_slot[b] + cap[b];
        }
        let cols = first_slot[self.bucket_count];
        let needed = self.len() as u128 * cols as u128;
        if needed > budget as u128 {
            return Err(OracleError::Budget { needed, budget });
        }
        let cost: Vec<Vec<f64>> = (0..self.len())
            .map(|p| {
                let mut row = vec![f64::INFINITY; cols];
                for &b in &self.options[p] {
                    let b = b as usize;
                    for r in 0..cap[b] {
                        row[first_slot[b] + r] = self.mass[p] * ((r + 1) as f64).powf(self.rho);
                    }
                }
                row
            })
            .collect();
        let (assign, _) = min_cost_assignment(&cost).expect("every outcome has a slot");
        let choice: Vec<u8> = assign
            .iter()
            .enumerate()
            .map(|(p, &col)| {
                let b = first_slot.partition_point(|&s| s <= col) - 1;
                self.options[p].iter().position(|&o| o as usize == b).expect("slot of an option") as u8
            })
            .collect();
        let value = self.evaluate(&choice);
        Ok(GenieSolution { value, choice })
    }

    /// Lower bound when [`Self::is_unique`] holds: at most one outcome per
    /// context sits at each rank, so the `k`-th heaviest outcome pays at least
    /// `ceil(k / contexts)^rho`.
    pub fn counting_bound(&self) -> f64 {
        let c = self.bucket_count.max(1);
        self.mass
            .iter()
            .enumerate()
            .map(|(k, m)| m * ((k / c + 1) as f64).powf(self.rho))
            .sum()
    }

    /// Exact optimum by depth-first branch and bound over genie maps.
    ///
    /// The first few outcomes are fixed per task and the tasks run in
    /// parallel; each task prunes only against its own incumbent and the
    /// shared seed, so the result does not depend on scheduling.
    pub fn branch_and_bound(&self, budget: u64) -> Result<GenieSolution, OracleError> {
        let n = self.len();
        let k = self.view_count();
        if n == 0 {
            return Ok(GenieSolution { value: 0.0, choice: Vec::new() });
        }
        let seed = self.greedy();
        let mut depth = 0;
        let mut tasks = 1usize;
        while depth < n && tasks * k <= 4096 {
            depth += 1;
            tasks *= k;
        }
        let per_task = (budget / tasks as u64).max(1);
        let mut suffix = vec![0.0; n + 1];
        for p in (0..n).rev() {
            suffix[p] = suffix[p + 1] + self.mass[p];
        }
        let results: Vec<Result<Option<GenieSolution>, u128>> = (0..tasks)
            .into_par_iter()
            .map(|t| {
                let mut prefix = Vec::with_capacity(depth);
                let mut r = t;
                for _ in 0..depth {
                    prefix.push((r % k) as u8);
                    r /= k;
                }
                let mut search = Search::new(self, &suffix, seed.value, per_task);
                for (p, &c) in prefix.iter().enumerate() {
                    search.push(p, c);
                }
                search.dfs(depth)?;
                Ok(search.best)
            })
            .collect();
        let mut best = seed;
        for r in results {
            match r {
                Err(nodes) => {
                    return Err(OracleError::Budget {
                        needed: nodes * tasks as u128,
                        budget,
                    })
                }
                Ok(Some(s)) if s.value < best.value => best = s,
                Ok(_) => {}
            }
        }
        best.value = self.evaluate(&best.choice);
        Ok(best)
    }
}

struct Search<'a> {
    prob: &'a GenieProblem,
    suffix: &'a [f64],
    buckets: Vec<Vec<(u32, f64)>>,
    costs: Vec<f64>,
    partial: f64,
    choice: Vec<u8>,
    incumbent: f64,
    best: Option<GenieSolution>,
    nodes: u64,
    limit: u64,
}

impl<'a> Search<'a> {
    fn new(prob: &'a GenieProblem, suffix: &'a [f64], incumbent: f64, limit: u64) -> Self {
        Self {
            prob,
            suffix,
            buckets: vec![Vec::new(); prob.bucket_count],
            costs: vec![0.0; prob.bucket_count],
            partial: 0.0,
            choice: Vec::with_capacity(prob.len()),
            incumbent,
            best: None,
            nodes: 0,
            limit,
        }
    }

    fn push(&mut self, p: usize, c: u8) -> (usize, f64) {
        let b = self.prob.options[p][c as usize] as usize;
        self.buckets[b].push((self.prob.symbol[p], self.prob.mass[p]));
        let old = self.costs[b];
        let new = bucket_cost(&mut self.buckets[b].clone(), self.prob.rho);
        self.costs[b] = new;
        self.partial += new - old;
        self.choice.push(c);
        (b, old)
    }

    fn pop(&mut self, (b, old): (usize, f64)) {
        self.buckets[b].pop();
        self.partial += old - self.costs[b];
        self.costs[b] = old;
        self.choice.pop();
    }

    fn dfs(&mut self, p: usize) -> Result<(), u128> {
        self.nodes += 1;
        if self.nodes > self.limit {
            return Err(self.nodes as u128);
        }
        let slack = 1e-12 * self.incumbent.abs();
        if self.partial + self.suffix[p] >= self.incumbent - slack {
            return Ok(());
        }
        if p == self.prob.len() {
            self.incumbent = self.partial;
            self.best = Some(GenieSolution {
                value: self.partial,
                choice: self.choice.clone(),
            });
            return Ok(());
        }
        for c in 0..self.prob.options[p].len() as u8 {
            let undo = self.push(p, c);
            let r = self.dfs(p + 1);
            self.pop(undo);
            r?;
        }
        Ok(())
    }
}

/// `sum_j m_(j) j^rho` over the merged per-symbol masses, sorted decreasingly.
fn bucket_cost(bucket: &mut [(u32, f64)], rho: f64) -> f64 {
    bucket.sort_by_key(|e| e.0);
    let mut merged: Vec<f64> = Vec::with_capacity(bucket.len());
    let mut last = None;
    for &(x, m) in bucket.iter() {
        if last == Some(x) {
            *merged.last_mut().expect("nonempty") += m;
        } else {
            merged.push(m);
            last = Some(x);
        }
    }
    crate::guessing::sorted_moment(&mut merged, rho)
}

/// `min_k min_G E[G(X | Y, M_{view k})^rho]`: the observer commits to one
/// view before seeing anything.
pub fn committed_view_moment(real: &Realization, views: &[Vec<usize>], rho: f64) -> f64 {
    views
        .iter()
        .map(|v| real.view_moment(v, rho))
        .fold(f64::INFINITY, f64::min)
}

/// `E[min_k |L(Y, M_{view k})|^rho]`: the list an observer must form when a
/// genie shows the view with the shortest list.
pub fn genie_list_moment(real: &Realization, views: &[Vec<usize>], rho: f64) -> f64 {
    let sizes: Vec<Vec<u32>> = views.iter().map(|v| real.view_list_sizes(v)).collect();
    (0..real.len())
        .map(|a| {
            let s = sizes.iter().map(|s| s[a]).min().expect("views nonempty");
            real.mass(a) * (s as f64).powf(rho)
        })
        .sum()
}

/// `E[max_k |L(Y, M_{view k})|^rho]`: the list a receiver must form when an
/// adversary shows the view with the longest list.
pub fn worst_list_moment(real: &Realization, views: &[Vec<usize>], rho: f64) -> f64 {
    let sizes: Vec<Vec<u32>> = views.iter().map(|v| real.view_list_sizes(v)).collect();
    (0..real.len())
        .map(|a| {
            let s = sizes.iter().map(|s| s[a]).max().expect("views nonempty");
            real.mass(a) * (s as f64).powf(rho)
        })
        .sum()
}

/// Bounds on `min_G E[max_k G_k^rho]`: the best single view optimum below and
/// the per-view optimal guessers combined above.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinMaxBounds {
    pub lower: f64,
    pub upper: f64,
}

pub fn worst_view_bounds(real: &Realization, views: &[Vec<usize>], rho: f64) -> MinMaxBounds {
    let lower = views.iter().map(|v| real.view_moment(v, rho)).fold(0.0, f64::max);
    let ranks: Vec<Vec<u32>> = views.iter().map(|v| real.view_ranks(v)).collect();
    let upper = (0..real.len())
        .map(|a| {
            let r = ranks.iter().map(|r| r[a]).max().expect("views nonempty");
            real.mass(a) * (r as f64).powf(rho)
        })
        .sum();
    MinMaxBounds { lower, upper }
}

/// Exhaustive search over one guessing order per context of every view.
/// Returns `min E[combine_k G_k(X | ...)^rho]`.
pub fn enumerate_strategies(
    real: &Realization,
    views: &[Vec<usize>],
    rho: f64,
    combine: Combine,
    budget: u64,
) -> Result<f64, OracleError> {
    if views.is_empty() {
        return Err(OracleError::NoViews);
    }
    // Per view context: its symbols; per atom and view: (bucket, local index).
    let mut buckets: Vec<Vec<u32>> = Vec::new();
    let mut locate: Vec<Vec<(usize, usize)>> = vec![Vec::new(); real.len()];
    for v in views {
        let ctx = real.contexts(v);
        let base = buckets.len();
        buckets.extend((0..ctx.count).map(|_| Vec::new()));
        for a in 0..real.len() {
            let b = &mut buckets[base + ctx.of_atom[a] as usize];
            if !b.contains(&(real.x(a) as u32)) {
                b.push(real.x(a) as u32);
            }
        }
        for a in 0..real.len() {
            let b = base + ctx.of_atom[a] as usize;
            let i = buckets[b].iter().position(|&s| s == real.x(a) as u32).expect("symbol placed");
            locate[a].push((b, i));
        }
    }
    let perms: Vec<Vec<Vec<u32>>> = buckets.iter().map(|b| rank_tables(b.len())).collect();
    let mut needed: u128 = real.len() as u128;
    for p in &perms {
        needed = needed.saturating_mul(p.len() as u128);
    }
    if needed > budget as u128 {
        return Err(OracleError::Budget { needed, budget });
    }
    let radices: Vec<usize> = perms.iter().map(|p| p.len()).collect();
    let total: usize = radices.iter().product();
    let cost_of = |mut idx: usize| {
        let mut pick = vec![0usize; radices.len()];
        for (d, &r) in radices.iter().enumerate() {
            pick[d] = idx % r;
            idx /= r;
        }
        (0..real.len())
            .map(|a| {
                let ranks = locate[a].iter().map(|&(b, i)| perms[b][pick[b]][i]);
                let r = match combine {
                    Combine::Min => ranks.min(),
                    Combine::Max => ranks.max(),
                }
                .expect("views nonempty");
                real.mass(a) * (r as f64).powf(rho)
            })
            .sum::<f64>()
    };
    let best = (0..total)
        .into_par_iter()
        .map(cost_of)
        .reduce(|| f64::INFINITY, f64::min);
    Ok(best)
}

/// Every rank table of `n` items: `table[i]` is the 1-based rank of item `i`.
fn rank_tables(n: usize) -> Vec<Vec<u32>> {
    fn go(n: usize, cur: &mut Vec<u32>, used: &mut Vec<bool>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for r in 0..n {
            if !used[r] {
                used[r] = true;
                cur.push(r as u32 + 1);
                go(n, cur, used, out);
                cur.pop();
                used[r] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(n, &mut Vec::with_capacity(n), &mut vec![false; n], &mut out);
    out
}

/// How an observer ambiguity was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMethod {
    Matching,
    BranchAndBound,
    BoundsOnly,
}

/// Result of [`genie_ambiguity`]: `value` is set when exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenieAmbiguity {
    pub value: Option<f64>,
    pub lower: f64,
    pub upper: f64,
    pub method: OracleMethod,
}

/// `min_{G_1..G_K} E[min_k G_k(X | Y, M_{view k})^rho]`, exactly when the
/// budget allows and as a bracket otherwise.
pub fn genie_ambiguity(real: &Realization, views: &[Vec<usize>], rho: f64, budget: u64) -> Result<GenieAmbiguity, OracleError> {
    let prob = GenieProblem::new(real, views, rho)?;
    let unique = prob.is_unique();
    if unique {
        if let Ok(sol) = prob.matching(budget) {
            return Ok(exact(sol.value, OracleMethod::Matching));
        }
    }
    match prob.branch_and_bound(budget) {
        Ok(sol) => Ok(exact(sol.value, OracleMethod::BranchAndBound)),
        Err(OracleError::Budget { .. }) => {
            let upper = prob.greedy().value.min(committed_view_moment(real, views, rho));
            let lower = if unique { prob.counting_bound() } else { real.total_mass() };
            Ok(GenieAmbiguity {
                value: None,
                lower,
                upper,
                method: OracleMethod::BoundsOnly,
            })
        }
        Err(e) => Err(e),
    }
}

fn exact(v: f64, method: OracleMethod) -> GenieAmbiguity {
    GenieAmbiguity {
        value: Some(v),
        lower: v,
        upper: v,
        method,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::random::seeded_rng;
    use num_rational::BigRational;
    use proptest::prelude::*;
    use rand::Rng;

    fn half() -> BigRational {
        BigRational::new(1.into(), 2.into())
    }

    fn pad_bit() -> Realization {
        let mut r = Realization::new(2, 1, vec![2, 2]);
        for x in 0..2u32 {
            for u in 0..2u32 {
                r.push(x as usize, 0, &[x ^ u, u], 0.5, half());
            }
        }
        r.canonicalize();
        r
    }

    /// Hints are `(X, *)` or `(*, X)` with equal probability; `*` is value 2.
    fn either_hint_bit() -> Realization {
        let mut r = Realization::new(2, 1, vec![3, 3]);
        for x in 0..2u32 {
            r.push(x as usize, 0, &[x, 2], 0.5, half());
            r.push(x as usize, 0, &[2, x], 0.5, half());
        }
        r.canonicalize();
        r
    }

    fn views() -> Vec<Vec<usize>> {
        vec![vec![0], vec![1]]
    }

    #[test]
    fn pad_bit_genie_value() {
        let r = pad_bit();
        let a = genie_ambiguity(&r, &views(), 1.0, 1_000_000).unwrap();
        assert_eq!(a.value, Some(1.0));
        let prob = GenieProblem::new(&r, &views(), 1.0).unwrap();
        assert!(prob.is_unique());
        assert_eq!(prob.branch_and_bound(1_000_000).unwrap().value, 1.0);
        assert_eq!(enumerate_strategies(&r, &views(), 1.0, Combine::Min, 1_000_000).unwrap(), 1.0);
        assert_eq!(committed_view_moment(&r, &views(), 1.0), 1.5);
    }

    #[test]
    fn either_hint_values() {
        let r = either_hint_bit();
        let a = genie_ambiguity(&r, &views(), 1.0, 1_000_000).unwrap();
        assert_eq!(a.value, Some(1.0));
        assert_eq!(committed_view_moment(&r, &views(), 1.0), 1.25);
        assert_eq!(enumerate_strategies(&r, &views(), 1.0, Combine::Min, 1_000_000).unwrap(), 1.0);
    }

    #[test]
    fn two_guessers_split_a_constant_view() {
        let mut r = Realization::new(3, 1, vec![1, 1]);
        for (x, p) in [0.5, 0.3, 0.2].into_iter().enumerate() {
            r.push(x, 0, &[0, 0], p, BigRational::from_integer(1.into()));
        }
        let a = genie_ambiguity(&r, &views(), 1.0, 1_000_000).unwrap();
        // Each guesser opens with a different symbol: 0.5 + 0.3 + 2 * 0.2.
        assert!((a.value.unwrap() - 1.2).abs() < 1e-12);
        assert!((committed_view_moment(&r, &views(), 1.0) - 1.7).abs() < 1e-12);
    }

    #[test]
    fn worst_view_of_full_recovery_is_one() {
        let r = pad_bit();
        let b = worst_view_bounds(&r, &[vec![0, 1]], 1.0);
        assert_eq!((b.lower, b.upper), (1.0, 1.0));
        assert_eq!(worst_list_moment(&r, &[vec![0, 1]], 1.0), 1.0);
        assert_eq!(genie_list_moment(&r, &views(), 1.0), 2.0);
    }

    #[test]
    fn budget_is_enforced() {
        let r = pad_bit();
        assert!(matches!(
            enumerate_strategies(&r, &views(), 1.0, Combine::Min, 3),
            Err(OracleError::Budget { .. })
        ));
    }

    /// A random realization over `nx` symbols with two small hints drawn from
    /// random conditional laws.
    fn random_realization(seed: u64, nx: usize, h: usize) -> Realization {
        let mut rng = seeded_rng(seed);
        let px = crate::prob::random::dirichlet(&mut rng, nx);
        let mut r = Realization::new(nx, 1, vec![h, h]);
        for (x, &p) in px.iter().enumerate() {
            let mut w: Vec<u32> = (0..h * h).map(|_| rng.random_range(0..3)).collect();
            if w.iter().all(|&v| v == 0) {
                w[0] = 1;
            }
            let total: u32 = w.iter().sum();
            for (i, &wi) in w.iter().enumerate() {
                if wi > 0 {
                    let q = BigRational::new((wi as i64).into(), (total as i64).into());
                    r.push(x, 0, &[(i / h) as u32, (i % h) as u32], p, q);
                }
            }
        }
        r.canonicalize();
        r
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn genie_search_matches_strategy_search(seed in any::<u64>(), nx in 2usize..4) {
            let r = random_realization(seed, nx, 2);
            let prob = GenieProblem::new(&r, &views(), 1.0).unwrap();
            let bnb = prob.branch_and_bound(10_000_000).unwrap().value;
            let strat = enumerate_strategies(&r, &views(), 1.0, Combine::Min, 100_000_000).unwrap();
            prop_assert!((bnb - strat).abs() < 1e-12, "{} vs {}", bnb, strat);
            prop_assert!(bnb <= committed_view_moment(&r, &views(), 1.0) + 1e-12);
            prop_assert!(prob.greedy().value >= bnb - 1e-12);
            if let Ok(m) = prob.matching(1_000_000) {
                prop_assert!(m.value >= bnb - 1e-12);
                if prob.is_unique() {
                    prop_assert!((m.value - bnb).abs() < 1e-12);
                    prop_assert!(prob.counting_bound() <= bnb + 1e-12);
                }
            }
        }
    }
}
