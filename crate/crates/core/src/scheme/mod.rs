//! Realized joint laws of a secret, its context and a tuple of stored hints,
//! with the observer-side quantities computed from them.

pub mod eve;
mod hungarian;
pub mod trend;
pub mod twohint;
pub mod variants;

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::guessing::sorted_moment;
use crate::prob::JointPmf;

pub use hungarian::min_cost_assignment;

/// Whether the legitimate receiver guesses or forms a list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Version {
    Guessing,
    List,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SchemeError {
    #[error("condition {condition} fails: {lhs} vs {rhs}")]
    Condition {
        condition: &'static str,
        lhs: String,
        rhs: String,
    },
    #[error("bound {bound} is below the converse floor {floor}")]
    Infeasible { bound: f64, floor: f64 },
    #[error("bound {bound} is below the guaranteed level {needed}")]
    Unreachable { bound: f64, needed: f64 },
    #[error(transparent)]
    Oracle(#[from] eve::OracleError),
    #[error(transparent)]
    Field(#[from] crate::mds::MdsError),
    #[error("malformed scheme record: {0}")]
    Record(String),
}

pub(crate) fn require(ok: bool, condition: &'static str, lhs: impl ToString, rhs: impl ToString) -> Result<(), SchemeError> {
    if ok {
        Ok(())
    } else {
        Err(SchemeError::Condition {
            condition,
            lhs: lhs.to_string(),
            rhs: rhs.to_string(),
        })
    }
}

/// Explicit law of `(X, Y, M_1, ..., M_k)`: one atom per positive-probability
/// outcome. `weight` is the exact conditional probability of the hints given
/// `(x, y)`; `mass` is `P(x, y) * weight` in floating point.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    n_x: usize,
    n_y: usize,
    hint_sizes: Vec<usize>,
    xs: Vec<u32>,
    ys: Vec<u32>,
    hints: Vec<u32>,
    mass: Vec<f64>,
    weight: Vec<BigRational>,
}

/// Indices of the hints an observer sees, always together with `Y`.
pub type View = Vec<usize>;

/// Context assignment of every atom under one view.
#[derive(Debug, Clone)]
pub struct Contexts {
    pub of_atom: Vec<u32>,
    pub count: usize,
}

impl Realization {
    pub fn new(n_x: usize, n_y: usize, hint_sizes: Vec<usize>) -> Self {
        Self {
            n_x,
            n_y,
            hint_sizes,
            xs: Vec::new(),
            ys: Vec::new(),
            hints: Vec::new(),
            mass: Vec::new(),
            weight: Vec::new(),
        }
    }

    /// Add an outcome; zero-weight outcomes are dropped, repeated outcomes merged.
    pub fn push(&mut self, x: usize, y: usize, hints: &[u32], p_xy: f64, weight: BigRational) {
        debug_assert_eq!(hints.len(), self.hint_sizes.len());
        debug_assert!(hints.iter().zip(&self.hint_sizes).all(|(&h, &s)| (h as usize) < s));
        if weight.is_zero() || p_xy <= 0.0 {
            return;
        }
        let w = num_traits::ToPrimitive::to_f64(&weight).unwrap_or(0.0);
        self.xs.push(x as u32);
        self.ys.push(y as u32);
        self.hints.extend_from_slice(hints);
        self.mass.push(p_xy * w);
        self.weight.push(weight);
    }

    /// Merge atoms with identical `(x, y, hints)` and sort them canonically.
    pub fn canonicalize(&mut self) {
        let k = self.hint_sizes.len();
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| {
            (self.xs[a], self.ys[a], &self.hints[a * k..(a + 1) * k]).cmp(&(
                self.xs[b],
                self.ys[b],
                &self.hints[b * k..(b + 1) * k],
            ))
        });
        let mut out = Realization::new(self.n_x, self.n_y, self.hint_sizes.clone());
        for &i in &idx {
            let h = &self.hints[i * k..(i + 1) * k];
            let last = out.len();
            if last > 0 && out.xs[last - 1] == self.xs[i] && out.ys[last - 1] == self.ys[i] && out.hint(last - 1) == h {
                out.mass[last - 1] += self.mass[i];
                out.weight[last - 1] += &self.weight[i];
            } else {
                out.xs.push(self.xs[i]);
                out.ys.push(self.ys[i]);
                out.hints.extend_from_slice(h);
                out.mass.push(self.mass[i]);
                out.weight.push(self.weight[i].clone());
            }
        }
        *self = out;
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    /// A random hint law with small-integer rational weights, for testing
    /// statements that hold for every scheme.
    pub fn random(rng: &mut impl rand::Rng, joint: &JointPmf, hint_sizes: Vec<usize>, sparsity: f64) -> Realization {
        let total: usize = hint_sizes.iter().product();
        let mut r = Realization::new(joint.n_x(), joint.n_y(), hint_sizes.clone());
        for x in 0..joint.n_x() {
            for y in 0..joint.n_y() {
                let p = joint.p(x, y);
                if p <= 0.0 {
                    continue;
                }
                let mut w: Vec<i64> = (0..total)
                    .map(|_| if rng.random::<f64>() < sparsity { 0 } else { rng.random_range(1..=4) })
                    .collect();
                if w.iter().all(|&v| v == 0) {
                    w[rng.random_range(0..total)] = 1;
                }
                let sum: i64 = w.iter().sum();
                for (i, &wi) in w.iter().enumerate() {
                    let mut rest = i;
                    let hints: Vec<u32> = hint_sizes
                        .iter()
                        .map(|&s| {
                            let h = rest % s;
                            rest /= s;
                            h as u32
                        })
                        .collect();
                    r.push(x, y, &hints, p, BigRational::new(wi.into(), sum.into()));
                }
            }
        }
        r.canonicalize();
        r
    }


    /// Replace hint `index` by the pair `(hint, extra[atom])`, encoded as
    /// `hint + size * extra`.
    pub fn refine_hint(&self, index: usize, extra: &[u32], extra_size: usize) -> Realization {
        assert_eq!(extra.len(), self.len());
        let k = self.hint_sizes.len();
        let size = self.hint_sizes[index];
        let mut out = self.clone();
        out.hint_sizes[index] = size * extra_size;
        for (a, &e) in extra.iter().enumerate() {
            debug_assert!((e as usize) < extra_size);
            out.hints[a * k + index] += size as u32 * e;
        }
        out
    }


    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_y(&self) -> usize {
        self.n_y
    }

    pub fn hint_sizes(&self) -> &[usize] {
        &self.hint_sizes
    }

    pub fn x(&self, atom: usize) -> usize {
        self.xs[atom] as usize
    }

    pub fn y(&self, atom: usize) -> usize {
        self.ys[atom] as usize
    }

    pub fn hint(&self, atom: usize) -> &[u32] {
        let k = self.hint_sizes.len();
        &self.hints[atom * k..(atom + 1) * k]
    }

    pub fn mass(&self, atom: usize) -> f64 {
        self.mass[atom]
    }

    pub fn weight(&self, atom: usize) -> &BigRational {
        &self.weight[atom]
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// Number of hint values that carry positive probability, per hint.
    pub fn used_hint_values(&self) -> Vec<usize> {
        (0..self.hint_sizes.len())
            .map(|h| {
                let mut seen = vec![false; self.hint_sizes[h]];
                for a in 0..self.len() {
                    seen[self.hint(a)[h] as usize] = true;
                }
                seen.iter().filter(|&&s| s).count()
            })
            .collect()
    }

    /// Exact probability of every atom under the source's exact table.
    pub fn exact_masses(&self, joint: &JointPmf) -> Vec<BigRational> {
        let table = joint.exact_table();
        (0..self.len())
            .map(|a| &table[self.x(a) * self.n_y + self.y(a)] * &self.weight[a])
            .collect()
    }

    /// Contexts `(y, hints in view)` numbered in increasing key order.
    pub fn contexts(&self, view: &[usize]) -> Contexts {
        let keys: Vec<u128> = (0..self.len()).map(|a| self.view_key(a, view)).collect();
        let mut sorted = keys.clone();
        sorted.sort_unstable();
        sorted.dedup();
        let of_atom = keys
            .iter()
            .map(|k| sorted.binary_search(k).expect("key present") as u32)
            .collect();
        Contexts {
            of_atom,
            count: sorted.len(),
        }
    }

    fn view_key(&self, atom: usize, view: &[usize]) -> u128 {
        let mut key = self.ys[atom] as u128;
        let h = self.hint(atom);
        for &i in view {
            key = key
                .checked_mul(self.hint_sizes[i] as u128)
                .and_then(|k| k.checked_add(h[i] as u128))
                .expect("context key fits in 128 bits");
        }
        key
    }

    /// Per context, the mass of every symbol that occurs there, by symbol index.
    pub fn context_masses(&self, ctx: &Contexts) -> Vec<Vec<(u32, f64)>> {
        let mut per: Vec<Vec<(u32, f64)>> = vec![Vec::new(); ctx.count];
        for a in 0..self.len() {
            per[ctx.of_atom[a] as usize].push((self.xs[a], self.mass[a]));
        }
        for entries in &mut per {
            entries.sort_by_key(|e| e.0);
            let mut merged: Vec<(u32, f64)> = Vec::with_capacity(entries.len());
            for &(x, m) in entries.iter() {
                match merged.last_mut() {
                    Some(last) if last.0 == x => last.1 += m,
                    _ => merged.push((x, m)),
                }
            }
            *entries = merged;
        }
        per
    }

    /// `min_G E[G(X | Y, M_view)^rho]`.
    pub fn view_moment(&self, view: &[usize], rho: f64) -> f64 {
        let ctx = self.contexts(view);
        self.context_masses(&ctx)
            .into_iter()
            .map(|entries| {
                let mut m: Vec<f64> = entries.into_iter().map(|e| e.1).collect();
                sorted_moment(&mut m, rho)
            })
            .sum()
    }

    /// Rank of each atom's symbol under the optimal guesser for `view`.
    pub fn view_ranks(&self, view: &[usize]) -> Vec<u32> {
        let ctx = self.contexts(view);
        let per = self.context_masses(&ctx);
        let ranks: Vec<Vec<(u32, u32)>> = per
            .into_iter()
            .map(|entries| {
                let mut order = entries.clone();
                order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
                let mut r: Vec<(u32, u32)> = order.iter().enumerate().map(|(j, e)| (e.0, j as u32 + 1)).collect();
                r.sort_by_key(|e| e.0);
                r
            })
            .collect();
        (0..self.len())
            .map(|a| {
                let r = &ranks[ctx.of_atom[a] as usize];
                let i = r.binary_search_by_key(&self.xs[a], |e| e.0).expect("symbol in context");
                r[i].1
            })
            .collect()
    }

    /// Size of the posterior support of each atom's context under `view`.
    pub fn view_list_sizes(&self, view: &[usize]) -> Vec<u32> {
        let ctx = self.contexts(view);
        let sizes: Vec<u32> = self.context_masses(&ctx).iter().map(|e| e.len() as u32).collect();
        (0..self.len()).map(|a| sizes[ctx.of_atom[a] as usize]).collect()
    }

    /// `E[|L(Y, M_view)|^rho]`.
    pub fn view_list_moment(&self, view: &[usize], rho: f64) -> f64 {
        self.view_list_sizes(view)
            .iter()
            .zip(&self.mass)
            .map(|(&s, &m)| m * (s as f64).powf(rho))
            .sum()
    }

    /// Marginal law of `(X, Y)` implied by the atoms.
    pub fn source_law(&self) -> Vec<f64> {
        let mut p = vec![0.0; self.n_x * self.n_y];
        for a in 0..self.len() {
            p[self.x(a) * self.n_y + self.y(a)] += self.mass[a];
        }
        p
    }

    /// Exact total variation between the law of `(X, Y, T)` and `P(X, Y)`
    /// times the uniform law on `0..t_count`, with `T = coord(hints)`.
    pub fn uniform_coordinate_tv(
        &self,
        joint: &JointPmf,
        t_count: usize,
        coord: impl Fn(&[u32]) -> usize,
    ) -> BigRational {
        let exact = self.exact_masses(joint);
        let table = joint.exact_table();
        let mut law = vec![BigRational::zero(); self.n_x * self.n_y * t_count];
        for a in 0..self.len() {
            let t = coord(self.hint(a));
            law[(self.x(a) * self.n_y + self.y(a)) * t_count + t] += &exact[a];
        }
        let share = BigRational::new(1.into(), (t_count as i64).into());
        let mut tv = BigRational::zero();
        for xy in 0..self.n_x * self.n_y {
            let target = &table[xy] * &share;
            for t in 0..t_count {
                tv += (&law[xy * t_count + t] - &target).abs();
            }
        }
        tv / BigRational::from_integer(2.into())
    }

    /// Exact total variation between the joint law of `(A, B)` and the
    /// product of its marginals, for atom features `A` and `B`.
    pub fn independence_tv(
        &self,
        joint: &JointPmf,
        a_of: impl Fn(usize) -> u64,
        b_of: impl Fn(usize) -> u64,
    ) -> BigRational {
        use std::collections::BTreeMap;
        let exact = self.exact_masses(joint);
        let mut pair: BTreeMap<(u64, u64), BigRational> = BTreeMap::new();
        let mut pa: BTreeMap<u64, BigRational> = BTreeMap::new();
        let mut pb: BTreeMap<u64, BigRational> = BTreeMap::new();
        for (atom, q) in exact.iter().enumerate() {
            let (a, b) = (a_of(atom), b_of(atom));
            *pair.entry((a, b)).or_insert_with(BigRational::zero) += q;
            *pa.entry(a).or_insert_with(BigRational::zero) += q;
            *pb.entry(b).or_insert_with(BigRational::zero) += q;
        }
        let mut tv = BigRational::zero();
        for (a, qa) in &pa {
            for (b, qb) in &pb {
                let joint_ab = pair.get(&(*a, *b)).cloned().unwrap_or_else(BigRational::zero);
                tv += (joint_ab - qa * qb).abs();
            }
        }
        tv / BigRational::from_integer(2.into())
    }
}
