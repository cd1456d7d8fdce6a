//! Exact rectangular linear sum assignment.
//!
//! Rows are candidate slots, columns are the items that must each be placed
//! in a distinct row. The solver is the shortest-augmenting-path form of the
//! Hungarian method with row/column potentials, run natively on the tall
//! matrix (no square padding), so its cost is O(cols² · rows).

use crate::error::{Error, Result};

/// Dense row-major cost matrix with at least as many rows as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Empty("cost matrix"));
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension {
                expected: rows * cols,
                got: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / cols,
                col: pos % cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::Dimension {
                    expected: cols,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(rows.len(), cols, data)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    /// Sum of the entries picked by `col_to_row`, accumulated in column order.
    pub fn total(&self, col_to_row: &[usize]) -> f64 {
        col_to_row
            .iter()
            .enumerate()
            .map(|(c, &r)| self.get(r, c))
            .sum()
    }
}

/// Injective column → row map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssignmentVector {
    pub col_to_row: Vec<usize>,
}

impl AssignmentVector {
    pub fn len(&self) -> usize {
        self.col_to_row.len()
    }

    pub fn is_empty(&self) -> bool {
        self.col_to_row.is_empty()
    }

    pub fn is_injective(&self, rows: usize) -> bool {
        let mut seen = vec![false; rows];
        self.col_to_row.iter().all(|&r| {
            if r >= rows || seen[r] {
                false
            } else {
                seen[r] = true;
                true
            }
        })
    }
}

/// Minimize `Σ_c cost[row(c), c]` over injective column → row maps.
///
/// Deterministic: among equal reductions the lowest row index wins, so a
/// fixed input always yields the same assignment.
pub fn solve_min(cost: &CostMatrix) -> Result<(AssignmentVector, f64)> {
    let n = cost.cols();
    let m = cost.rows();
    if m < n {
        return Err(Error::TooFewRows { rows: m, cols: n });
    }

    // 1-based indexing; index 0 is the virtual root of each search tree.
    // Left vertices are columns, right vertices are rows.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    let mut minv = vec![0.0f64; m + 1];
    let mut used = vec![false; m + 1];

    for col in 1..=n {
        owner[0] = col;
        let mut j0 = 0usize;
        minv.fill(f64::INFINITY);
        used.fill(false);

        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost.get(j - 1, i0 - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }

        // Augment along the alternating path back to the root.
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut col_to_row = vec![usize::MAX; n];
    for (j, &c) in owner.iter().enumerate().skip(1) {
        if c != 0 {
            col_to_row[c - 1] = j - 1;
        }
    }
    debug_assert!(col_to_row.iter().all(|&r| r < m));
    let total = cost.total(&col_to_row);
    Ok((AssignmentVector { col_to_row }, total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Exhaustive minimum over all injective maps; returns the lexicographically
    /// first optimum.
    fn brute_force(cost: &CostMatrix) -> (Vec<usize>, f64) {
        fn rec(
            cost: &CostMatrix,
            col: usize,
            used: &mut Vec<bool>,
            cur: &mut Vec<usize>,
            best: &mut Option<(Vec<usize>, f64)>,
        ) {
            if col == cost.cols() {
                let total = cost.total(cur);
                if best.as_ref().is_none_or(|(_, b)| total < *b) {
                    *best = Some((cur.clone(), total));
                }
                return;
            }
            for r in 0..cost.rows() {
                if !used[r] {
                    used[r] = true;
                    cur.push(r);
                    rec(cost, col + 1, used, cur, best);
                    cur.pop();
                    used[r] = false;
                }
            }
        }
        let mut best = None;
        rec(cost, 0, &mut vec![false; cost.rows()], &mut Vec::new(), &mut best);
        best.unwrap()
    }

    fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CostMatrix {
        let data = (0..rows * cols).map(|_| rng.random_range(-5.0..5.0)).collect();
        CostMatrix::new(rows, cols, data).unwrap()
    }

    #[test]
    fn zero_diagonal_is_optimal() {
        let c = CostMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let (a, total) = solve_min(&c).unwrap();
        assert_eq!(a.col_to_row, vec![0, 1]);
        assert_eq!(total, 0.0);
    }

    #[test]
    fn single_entry() {
        let c = CostMatrix::from_rows(&[vec![4.0]]).unwrap();
        let (a, total) = solve_min(&c).unwrap();
        assert_eq!(a.col_to_row, vec![0]);
        assert_eq!(total, 4.0);
    }

    #[test]
    fn seeded_five_by_four_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(54);
        let c = random_matrix(&mut rng, 5, 4);
        let (a, total) = solve_min(&c).unwrap();
        let (best, best_total) = brute_force(&c);
        assert_eq!(a.col_to_row, best);
        assert_eq!(total, best_total);
        assert!(a.is_injective(5));
    }

    #[test]
    fn rejects_wide_and_non_finite() {
        let wide = CostMatrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        assert_eq!(
            solve_min(&wide).unwrap_err(),
            Error::TooFewRows { rows: 1, cols: 2 }
        );
        let err = CostMatrix::from_rows(&[vec![1.0, f64::NAN]]).unwrap_err();
        assert_eq!(err, Error::NonFinite { row: 0, col: 1 });
        assert!(CostMatrix::new(0, 0, vec![]).is_err());
    }

    #[test]
    fn ties_are_deterministic() {
        let c = CostMatrix::new(4, 3, vec![1.0; 12]).unwrap();
        let first = solve_min(&c).unwrap();
        for _ in 0..5 {
            assert_eq!(solve_min(&c).unwrap(), first);
        }
        assert!(first.0.is_injective(4));
    }

    fn matrix_strategy() -> impl Strategy<Value = CostMatrix> {
        (1usize..=7, 1usize..=7).prop_flat_map(|(a, b)| {
            let (rows, cols) = if a >= b { (a, b) } else { (b, a) };
            proptest::collection::vec(-100.0f64..100.0, rows * cols)
                .prop_map(move |data| CostMatrix::new(rows, cols, data).unwrap())
        })
    }

    proptest! {
        #[test]
        fn optimal_against_enumeration(c in matrix_strategy()) {
            let (a, total) = solve_min(&c).unwrap();
            let (_, best) = brute_force(&c);
            prop_assert!(a.is_injective(c.rows()));
            prop_assert!((total - best).abs() <= 1e-9 * (1.0 + best.abs()));
        }

        #[test]
        fn column_permutation_equivariance(c in matrix_strategy(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut perm: Vec<usize> = (0..c.cols()).collect();
            perm.shuffle(&mut rng);
            // column k of the permuted matrix is column perm[k] of the original
            let data = (0..c.rows())
                .flat_map(|r| perm.iter().map(move |&p| (r, p)))
                .map(|(r, p)| c.get(r, p))
                .collect();
            let permuted = CostMatrix::new(c.rows(), c.cols(), data).unwrap();
            let (a, total) = solve_min(&c).unwrap();
            let (b, ptotal) = solve_min(&permuted).unwrap();
            prop_assert!((total - ptotal).abs() <= 1e-9 * (1.0 + total.abs()));
            // continuous random entries make the optimum unique
            for (k, &p) in perm.iter().enumerate() {
                prop_assert_eq!(b.col_to_row[k], a.col_to_row[p]);
            }
        }

        #[test]
        fn column_shift_invariance(c in matrix_strategy(), shift in -50.0f64..50.0, col in 0usize..7) {
            let col = col % c.cols();
            let mut data = Vec::with_capacity(c.rows() * c.cols());
            for r in 0..c.rows() {
                for k in 0..c.cols() {
                    data.push(c.get(r, k) + if k == col { shift } else { 0.0 });
                }
            }
            let shifted = CostMatrix::new(c.rows(), c.cols(), data).unwrap();
            let (a, total) = solve_min(&c).unwrap();
            let (b, stotal) = solve_min(&shifted).unwrap();
            prop_assert_eq!(a, b);
            prop_assert!((stotal - total - shift).abs() <= 1e-9 * (1.0 + total.abs() + shift.abs()));
        }
    }
}
