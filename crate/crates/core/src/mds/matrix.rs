//! Generator matrices over GF(2^ell) and the MDS property.

use rayon::prelude::*;

use super::field::Field;
use super::MdsError;

/// A `k x n` matrix stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenMatrix {
    k: usize,
    n: usize,
    entries: Vec<u16>,
}

impl GenMatrix {
    pub fn new(k: usize, n: usize, entries: Vec<u16>) -> Self {
        assert_eq!(entries.len(), k * n);
        Self { k, n, entries }
    }

    pub fn rows(&self) -> usize {
        self.k
    }

    pub fn cols(&self) -> usize {
        self.n
    }

    pub fn get(&self, row: usize, col: usize) -> u16 {
        self.entries[row * self.n + col]
    }

    /// The first `k` rows.
    pub fn first_rows(&self, k: usize) -> GenMatrix {
        assert!(k <= self.k);
        GenMatrix::new(k, self.n, self.entries[..k * self.n].to_vec())
    }

    /// Rows `from..to`.
    pub fn row_range(&self, from: usize, to: usize) -> GenMatrix {
        GenMatrix::new(to - from, self.n, self.entries[from * self.n..to * self.n].to_vec())
    }

    /// `u G` for a row vector `u` of length `k`.
    pub fn encode(&self, field: &Field, u: &[u16]) -> Vec<u16> {
        assert_eq!(u.len(), self.k);
        (0..self.n)
            .map(|c| {
                u.iter()
                    .enumerate()
                    .fold(0u16, |acc, (r, &ur)| field.add(acc, field.mul(ur, self.get(r, c))))
            })
            .collect()
    }

    /// Solve `u G_C = target` on the `k` columns `cols`; `None` if singular.
    pub fn solve_on(&self, field: &Field, cols: &[usize], target: &[u16]) -> Option<Vec<u16>> {
        let k = self.k;
        assert_eq!(cols.len(), k);
        // Rows of the system: column c of G gives sum_r u_r G[r][c] = target_c.
        let mut a: Vec<Vec<u16>> = cols
            .iter()
            .zip(target)
            .map(|(&c, &t)| {
                let mut row: Vec<u16> = (0..k).map(|r| self.get(r, c)).collect();
                row.push(t);
                row
            })
            .collect();
        for col in 0..k {
            let pivot = (col..k).find(|&i| a[i][col] != 0)?;
            a.swap(col, pivot);
            let inv = field.inv(a[col][col]).expect("pivot nonzero");
            for v in a[col].iter_mut() {
                *v = field.mul(*v, inv);
            }
            for i in 0..k {
                if i != col && a[i][col] != 0 {
                    let f = a[i][col];
                    for j in col..=k {
                        let t = field.mul(f, a[col][j]);
                        a[i][j] = field.add(a[i][j], t);
                    }
                }
            }
        }
        Some(a.iter().map(|row| row[k]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for r in 0..self.k {
            let row: Vec<String> = (0..self.n).map(|c| self.get(r, c).to_string()).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Reed-Solomon generator: column 0 is `(1, 0, ..., 0)` and column `c >= 1`
/// is `(1, a, a^2, ..., a^{k-1})` with `a = alpha^{c-1}`, i.e. evaluation of
/// the message polynomial at `0, 1, alpha, alpha^2, ...`.
pub fn rs_generator(k: usize, n: usize, field: &Field) -> Result<GenMatrix, MdsError> {
    let q = field.size();
    if k == 0 || k > n || n > q {
        return Err(MdsError::Shape { k, n, q });
    }
    let mut entries = vec![0u16; k * n];
    for r in 0..k {
        entries[r * n] = u16::from(r == 0);
        for c in 1..n {
            entries[r * n + c] = field.alpha_pow(((c - 1) * r) as i64);
        }
    }
    Ok(GenMatrix::new(k, n, entries))
}

/// Next `k`-subset of `0..n` in lexicographic order.
pub(crate) fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// All `k`-subsets of `0..n`, lexicographic.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k > n {
        return Vec::new();
    }
    let mut c: Vec<usize> = (0..k).collect();
    let mut out = vec![c.clone()];
    if k == 0 {
        return out;
    }
    while next_combination(&mut c, n) {
        out.push(c.clone());
    }
    out
}

fn nonsingular(m: &GenMatrix, field: &Field, cols: &[usize]) -> bool {
    let k = m.rows();
    let mut a: Vec<Vec<u16>> = cols.iter().map(|&c| (0..k).map(|r| m.get(r, c)).collect()).collect();
    for col in 0..k {
        let Some(pivot) = (col..k).find(|&i| a[i][col] != 0) else {
            return false;
        };
        a.swap(col, pivot);
        let inv = field.inv(a[col][col]).expect("pivot nonzero");
        for i in col + 1..k {
            if a[i][col] != 0 {
                let f = field.mul(a[i][col], inv);
                for j in col..k {
                    let t = field.mul(f, a[col][j]);
                    a[i][j] = field.add(a[i][j], t);
                }
            }
        }
    }
    true
}

/// Every `k x k` column submatrix is nonsingular.
pub fn mds_check(m: &GenMatrix, field: &Field) -> bool {
    let (k, n) = (m.rows(), m.cols());
    if k > n {
        return false;
    }
    combinations(n, k).par_iter().all(|cols| nonsingular(m, field, cols))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_row_is_all_ones() {
        let f = Field::new(3).unwrap();
        let g = rs_generator(1, 8, &f).unwrap();
        assert!((0..8).all(|c| g.get(0, c) == 1));
        assert!(mds_check(&g, &f));
    }

    #[test]
    fn gf4_pairs() {
        let f = Field::new(2).unwrap();
        let g = rs_generator(2, 4, &f).unwrap();
        assert_eq!(combinations(4, 2).len(), 6);
        for cols in combinations(4, 2) {
            assert!(nonsingular(&g, &f, &cols), "{cols:?}");
        }
    }

    #[test]
    fn square_and_identity() {
        let f = Field::new(3).unwrap();
        assert!(mds_check(&rs_generator(8, 8, &f).unwrap(), &f));
        let id = GenMatrix::new(3, 3, vec![1, 0, 0, 0, 1, 0, 0, 0, 1]);
        assert!(mds_check(&id, &f));
    }

    #[test]
    fn repeated_column_fails() {
        let f = Field::new(3).unwrap();
        let m = GenMatrix::new(2, 3, vec![1, 1, 2, 3, 3, 5]);
        assert!(!mds_check(&m, &f));
    }

    #[test]
    fn bad_shapes() {
        let f = Field::new(2).unwrap();
        assert!(matches!(rs_generator(2, 5, &f), Err(MdsError::Shape { .. })));
        assert!(rs_generator(3, 2, &f).is_err());
    }

    #[test]
    fn solve_recovers_message() {
        let f = Field::new(4).unwrap();
        let g = rs_generator(3, 7, &f).unwrap();
        let u = vec![5, 0, 11];
        let c = g.encode(&f, &u);
        for cols in combinations(7, 3) {
            let t: Vec<u16> = cols.iter().map(|&i| c[i]).collect();
            assert_eq!(g.solve_on(&f, &cols, &t).unwrap(), u);
        }
    }
}
