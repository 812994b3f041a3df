//! Finite probability spaces and the entropy functionals built on them.

mod exact;
pub mod random;
mod renyi;

use std::collections::HashSet;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use exact::{parse_probability, rational_of};
pub use renyi::{kl_divergence, renyi_cond_entropy, shannon_cond_entropy, RenyiOrder};

/// Default absolute tolerance for normalization and floating comparisons.
pub const TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProbError {
    #[error("negative probability {value} at index {index}")]
    Negative { index: usize, value: f64 },
    #[error("probabilities sum to {sum}, expected 1")]
    Normalization { sum: f64 },
    #[error("duplicate symbol {0:?}")]
    DuplicateSymbol(String),
    #[error("table has {got} entries, expected {expected}")]
    Shape { got: usize, expected: usize },
    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),
    #[error("Renyi order must be nonnegative, got {0}")]
    Order(f64),
    #[error("product of {n} copies has {size} outcomes, above the budget of {budget}")]
    Budget { n: usize, size: u128, budget: u64 },
    #[error("cannot parse probability literal {0:?}")]
    Literal(String),
    #[error("alphabet is empty")]
    Empty,
    #[error("malformed pmf document: {0}")]
    Document(String),
}

/// Problems found by [`validate`]. Empty means the table is a valid PMF.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub negative: Vec<(usize, f64)>,
    pub normalization_gap: f64,
    pub duplicates: Vec<String>,
}

impl Diagnostics {
    pub fn is_ok(&self) -> bool {
        self.negative.is_empty() && self.normalization_gap <= TOL && self.duplicates.is_empty()
    }
}

/// Report negative entries, distance of the total from 1, and repeated labels.
pub fn validate(probs: &[f64], symbols: &[String]) -> Diagnostics {
    let negative = probs
        .iter()
        .enumerate()
        .filter(|(_, &p)| p < 0.0 || p.is_nan())
        .map(|(i, &p)| (i, p))
        .collect();
    let sum: f64 = probs.iter().sum();
    let mut seen = HashSet::new();
    let duplicates = symbols
        .iter()
        .filter(|s| !seen.insert(s.as_str()))
        .cloned()
        .collect();
    Diagnostics {
        negative,
        normalization_gap: (sum - 1.0).abs(),
        duplicates,
    }
}

fn check(probs: &[f64], symbols: &[String]) -> Result<(), ProbError> {
    let diag = validate(probs, symbols);
    if let Some(&(index, value)) = diag.negative.first() {
        return Err(ProbError::Negative { index, value });
    }
    if let Some(d) = diag.duplicates.first() {
        return Err(ProbError::DuplicateSymbol(d.clone()));
    }
    if diag.normalization_gap > TOL {
        return Err(ProbError::Normalization {
            sum: probs.iter().sum(),
        });
    }
    Ok(())
}

pub(crate) fn index_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

/// A PMF on a finite alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    symbols: Vec<String>,
    probs: Vec<f64>,
}

impl Pmf {
    pub fn new(symbols: Vec<String>, probs: Vec<f64>) -> Result<Self, ProbError> {
        if probs.is_empty() {
            return Err(ProbError::Empty);
        }
        if symbols.len() != probs.len() {
            return Err(ProbError::Shape {
                got: probs.len(),
                expected: symbols.len(),
            });
        }
        check(&probs, &symbols)?;
        Ok(Self { symbols, probs })
    }

    pub fn from_probs(probs: Vec<f64>) -> Result<Self, ProbError> {
        Self::new(index_labels(probs.len()), probs)
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            symbols: index_labels(n),
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// The joint law of this variable with a trivial (single-valued) context.
    pub fn with_null_context(&self) -> JointPmf {
        JointPmf {
            x: self.symbols.clone(),
            y: vec!["*".into()],
            p: self.probs.clone(),
            exact: None,
        }
    }
}

/// Joint PMF of a secret `X` and a context `Y`, stored row-major by `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPmf {
    x: Vec<String>,
    y: Vec<String>,
    p: Vec<f64>,
    exact: Option<Vec<BigRational>>,
}

#[derive(Serialize, Deserialize)]
struct JointDoc {
    x: Vec<String>,
    y: Vec<String>,
    p: Vec<Vec<serde_json::Value>>,
}

impl JointPmf {
    /// Build from labelled alphabets and rows `p[x][y]`.
    pub fn new(x: Vec<String>, y: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self, ProbError> {
        if x.is_empty() || y.is_empty() {
            return Err(ProbError::Empty);
        }
        if rows.len() != x.len() {
            return Err(ProbError::Shape {
                got: rows.len(),
                expected: x.len(),
            });
        }
        let mut p = Vec::with_capacity(x.len() * y.len());
        for row in rows {
            if row.len() != y.len() {
                return Err(ProbError::Shape {
                    got: row.len(),
                    expected: y.len(),
                });
            }
            p.extend(row);
        }
        Self::from_flat(x, y, p)
    }

    fn from_flat(x: Vec<String>, y: Vec<String>, p: Vec<f64>) -> Result<Self, ProbError> {
        check(&p, &[])?;
        for (name, labels) in [("x", &x), ("y", &y)] {
            let mut seen = HashSet::new();
            if let Some(d) = labels.iter().find(|s| !seen.insert(s.as_str())) {
                return Err(ProbError::DuplicateSymbol(format!("{name}:{d}")));
            }
        }
        Ok(Self { x, y, p, exact: None })
    }

    /// Build from a flat row-major table with index labels.
    pub fn from_table(n_x: usize, n_y: usize, p: Vec<f64>) -> Result<Self, ProbError> {
        if n_x == 0 || n_y == 0 {
            return Err(ProbError::Empty);
        }
        if p.len() != n_x * n_y {
            return Err(ProbError::Shape {
                got: p.len(),
                expected: n_x * n_y,
            });
        }
        Self::from_flat(index_labels(n_x), index_labels(n_y), p)
    }

    /// A source with no side information.
    pub fn unconditional(probs: &[f64]) -> Result<Self, ProbError> {
        Self::from_table(probs.len(), 1, probs.to_vec())
    }

    pub fn uniform(n_x: usize) -> Self {
        Pmf::uniform(n_x).with_null_context()
    }

    /// Build from exact rationals; the float table is their nearest doubles.
    pub fn from_rationals(
        x: Vec<String>,
        y: Vec<String>,
        exact: Vec<BigRational>,
    ) -> Result<Self, ProbError> {
        use num_traits::{One, Signed, ToPrimitive, Zero};
        if exact.len() != x.len() * y.len() {
            return Err(ProbError::Shape {
                got: exact.len(),
                expected: x.len() * y.len(),
            });
        }
        if let Some(i) = exact.iter().position(|q| q.is_negative()) {
            return Err(ProbError::Negative {
                index: i,
                value: exact[i].to_f64().unwrap_or(f64::NAN),
            });
        }
        let total = exact.iter().fold(BigRational::zero(), |a, b| a + b);
        if !total.is_one() {
            return Err(ProbError::Normalization {
                sum: total.to_f64().unwrap_or(f64::NAN),
            });
        }
        let p = exact.iter().map(|q| q.to_f64().unwrap_or(0.0)).collect();
        let mut joint = Self::from_flat(x, y, p)?;
        joint.exact = Some(exact);
        Ok(joint)
    }

    pub fn x_labels(&self) -> &[String] {
        &self.x
    }

    pub fn y_labels(&self) -> &[String] {
        &self.y
    }

    pub fn n_x(&self) -> usize {
        self.x.len()
    }

    pub fn n_y(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self, x: usize, y: usize) -> f64 {
        self.p[x * self.y.len() + y]
    }

    /// Row-major table `p[x * n_y + y]`.
    pub fn table(&self) -> &[f64] {
        &self.p
    }

    /// Exact probabilities: the rational table if one was supplied, otherwise
    /// the exact values of the stored doubles.
    pub fn exact_table(&self) -> Vec<BigRational> {
        match &self.exact {
            Some(q) => q.clone(),
            None => self.p.iter().map(|&v| rational_of(v)).collect(),
        }
    }

    pub fn has_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn marginal_x(&self) -> Vec<f64> {
        (0..self.n_x())
            .map(|x| (0..self.n_y()).map(|y| self.p(x, y)).sum())
            .collect()
    }

    pub fn marginal_y(&self) -> Vec<f64> {
        (0..self.n_y())
            .map(|y| (0..self.n_x()).map(|x| self.p(x, y)).sum())
            .collect()
    }

    /// Number of `x` with positive mass in context `y`.
    pub fn support_size(&self, y: usize) -> usize {
        (0..self.n_x()).filter(|&x| self.p(x, y) > 0.0).count()
    }

    /// `E[|supp(X | Y)|^rho]`.
    pub fn support_moment(&self, rho: f64) -> f64 {
        let py = self.marginal_y();
        (0..self.n_y())
            .map(|y| py[y] * (self.support_size(y) as f64).powf(rho))
            .sum()
    }

    /// Swap the roles of `x` and `y`.
    pub fn transposed(&self) -> JointPmf {
        let (nx, ny) = (self.n_x(), self.n_y());
        let mut p = vec![0.0; nx * ny];
        for x in 0..nx {
            for y in 0..ny {
                p[y * nx + x] = self.p(x, y);
            }
        }
        JointPmf {
            x: self.y.clone(),
            y: self.x.clone(),
            p,
            exact: None,
        }
    }

    /// The `n`-fold IID extension. Tuples are indexed in mixed radix with the
    /// first coordinate most significant.
    pub fn product(&self, n: usize, budget: u64) -> Result<JointPmf, ProbError> {
        assert!(n >= 1, "product needs at least one copy");
        let size = (self.p.len() as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
        if size > budget as u128 {
            return Err(ProbError::Budget { n, size, budget });
        }
        let (nx, ny) = (self.n_x(), self.n_y());
        let nxn = nx.pow(n as u32);
        let nyn = ny.pow(n as u32);
        let mut p = vec![0.0; nxn * nyn];
        let digits = |mut i: usize, base: usize| {
            let mut d = vec![0usize; n];
            for k in (0..n).rev() {
                d[k] = i % base;
                i /= base;
            }
            d
        };
        for xi in 0..nxn {
            let xs = digits(xi, nx);
            for yi in 0..nyn {
                let ys = digits(yi, ny);
                p[xi * nyn + yi] = xs.iter().zip(&ys).map(|(&a, &b)| self.p(a, b)).product();
            }
        }
        let tuple_labels = |labels: &[String], count: usize, base: usize| -> Vec<String> {
            (0..count)
                .map(|i| {
                    digits(i, base)
                        .iter()
                        .map(|&d| labels[d].as_str())
                        .collect::<Vec<_>>()
                        .join(",")
                })
                .collect()
        };
        Ok(JointPmf {
            x: tuple_labels(&self.x, nxn, nx),
            y: tuple_labels(&self.y, nyn, ny),
            p,
            exact: None,
        })
    }

    /// Parse `{"x": [...], "y": [...], "p": [[...]]}`. Entries may be numbers
    /// or strings; strings are read exactly (decimals or `a/b`).
    pub fn from_json(text: &str) -> Result<Self, ProbError> {
        let doc: JointDoc =
            serde_json::from_str(text).map_err(|e| ProbError::Document(e.to_string()))?;
        let any_string = doc.p.iter().flatten().any(|v| v.is_string());
        if any_string {
            let mut exact = Vec::new();
            for v in doc.p.iter().flatten() {
                exact.push(match v {
                    serde_json::Value::String(s) => parse_probability(s)?,
                    serde_json::Value::Number(n) => {
                        rational_of(n.as_f64().ok_or_else(|| ProbError::Literal(n.to_string()))?)
                    }
                    other => return Err(ProbError::Literal(other.to_string())),
                });
            }
            if doc.p.len() != doc.x.len() || doc.p.iter().any(|r| r.len() != doc.y.len()) {
                return Err(ProbError::Shape {
                    got: exact.len(),
                    expected: doc.x.len() * doc.y.len(),
                });
            }
            return Self::from_rationals(doc.x, doc.y, exact);
        }
        let rows = doc
            .p
            .iter()
            .map(|r| {
                r.iter()
                    .map(|v| v.as_f64().ok_or_else(|| ProbError::Literal(v.to_string())))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(doc.x, doc.y, rows)
    }

    pub fn to_json(&self) -> String {
        let p = (0..self.n_x())
            .map(|x| {
                (0..self.n_y())
                    .map(|y| match &self.exact {
                        Some(q) => serde_json::Value::String(q[x * self.n_y() + y].to_string()),
                        None => serde_json::json!(self.p(x, y)),
                    })
                    .collect()
            })
            .collect();
        serde_json::to_string(&JointDoc {
            x: self.x.clone(),
            y: self.y.clone(),
            p,
        })
        .expect("pmf serializes")
    }
}

/// A conditional PMF: one row per source index over a common target alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct CondPmf {
    n_to: usize,
    rows: Vec<f64>,
}

impl CondPmf {
    pub fn new(n_to: usize, rows: Vec<Vec<f64>>) -> Result<Self, ProbError> {
        let mut flat = Vec::with_capacity(rows.len() * n_to);
        for row in &rows {
            if row.len() != n_to {
                return Err(ProbError::Shape {
                    got: row.len(),
                    expected: n_to,
                });
            }
            check(row, &[])?;
            flat.extend_from_slice(row);
        }
        Ok(Self { n_to, rows: flat })
    }

    pub fn n_from(&self) -> usize {
        self.rows.len() / self.n_to
    }

    pub fn n_to(&self) -> usize {
        self.n_to
    }

    pub fn row(&self, from: usize) -> &[f64] {
        &self.rows[from * self.n_to..(from + 1) * self.n_to]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validate_flags_problems() {
        let labels = index_labels(3);
        assert!(validate(&[0.5, 0.25, 0.25], &labels).is_ok());
        assert!(validate(&[0.5, 0.25, 0.249999999], &labels).is_ok());
        let d = validate(&[0.5, -0.1, 0.6], &labels);
        assert_eq!(d.negative, vec![(1, -0.1)]);
        let d = validate(&[0.5, 0.5], &["a".into(), "a".into()]);
        assert_eq!(d.duplicates, vec!["a".to_string()]);
        assert!(validate(&[0.5, 0.4], &[]).normalization_gap > 0.09);
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(matches!(
            JointPmf::from_table(2, 1, vec![0.5, 0.6]),
            Err(ProbError::Normalization { .. })
        ));
        assert!(matches!(
            JointPmf::from_table(2, 1, vec![1.5, -0.5]),
            Err(ProbError::Negative { index: 1, .. })
        ));
        assert!(matches!(
            JointPmf::from_table(2, 2, vec![1.0]),
            Err(ProbError::Shape { .. })
        ));
    }

    #[test]
    fn product_of_fair_bit() {
        let bit = JointPmf::uniform(2);
        let three = bit.product(3, 1 << 20).unwrap();
        assert_eq!(three.n_x(), 8);
        assert!(three.table().iter().all(|&p| (p - 0.125).abs() < 1e-15));
        assert_eq!(three.x_labels()[5], "1,0,1");
        assert_eq!(bit.product(1, 10).unwrap(), bit);
        assert!(matches!(bit.product(30, 1000), Err(ProbError::Budget { .. })));
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{"x":["a","b"],"y":["u","v"],"p":[[0.1,0.2],[0.3,0.4]]}"#;
        let j = JointPmf::from_json(text).unwrap();
        assert_eq!(j.p(1, 0), 0.3);
        assert_eq!(JointPmf::from_json(&j.to_json()).unwrap(), j);

        let exact = r#"{"x":["a","b","c"],"y":["*"],"p":[["1/3"],["1/3"],["0.333333333333333333333333333333333333333333333333333333333333333333333333333333333333333333333333333333333333333333333333333333333333333333333333333334"]]}"#;
        assert!(JointPmf::from_json(exact).is_err());
        let exact = r#"{"x":["a","b","c"],"y":["*"],"p":[["1/3"],["1/3"],["1/3"]]}"#;
        let j = JointPmf::from_json(exact).unwrap();
        assert!(j.has_exact());
        assert_eq!(JointPmf::from_json(&j.to_json()).unwrap(), j);
    }

    #[test]
    fn support_moment_counts_positive_entries() {
        let j = JointPmf::from_table(3, 2, vec![0.25, 0.0, 0.25, 0.5, 0.0, 0.0]).unwrap();
        assert_eq!(j.support_size(0), 2);
        assert_eq!(j.support_size(1), 1);
        assert!((j.support_moment(1.0) - (0.5 * 2.0 + 0.5)).abs() < 1e-15);
    }
}
