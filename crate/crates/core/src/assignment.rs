//! Maximum-weight assignment on square matrices.
//!
//! The solver is the O(n³) shortest-augmenting-path form of the Hungarian
//! (Kuhn-Munkres) method. Weights are turned into nonnegative costs by
//! negating and shifting, so the public contract is maximization. Among all
//! optimal matchings the lexicographically smallest one is returned.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct AssignmentResult {
    /// `matching[row]` is the column assigned to `row`.
    pub matching: Vec<usize>,
    /// Sum of the selected weights.
    pub total: f64,
}

/// Solves the assignment problem for a square matrix given as rows.
pub fn solve_max_assignment<R: AsRef<[f64]>>(weights: &[R]) -> Result<AssignmentResult> {
    let n = weights.len();
    let mut flat = Vec::with_capacity(n * n);
    for (i, row) in weights.iter().enumerate() {
        let row = row.as_ref();
        if row.len() != n {
            return Err(Error::Domain(format!(
                "assignment matrix is not square: row {i} has {} entries, expected {n}",
                row.len()
            )));
        }
        flat.extend_from_slice(row);
    }
    solve_max_assignment_flat(&flat, n)
}

/// Same as [`solve_max_assignment`] for a row-major `n × n` buffer.
pub fn solve_max_assignment_flat(weights: &[f64], n: usize) -> Result<AssignmentResult> {
    if n == 0 {
        return Err(Error::Domain(
            "assignment matrix must have at least one row".into(),
        ));
    }
    if weights.len() != n * n {
        return Err(Error::Domain(format!(
            "assignment matrix is not square: {} entries for n = {n}",
            weights.len()
        )));
    }
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::Domain(
            "assignment matrix has non-finite entries".into(),
        ));
    }

    let max = weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = weights.iter().copied().fold(f64::INFINITY, f64::min);
    let cost: Vec<f64> = weights.iter().map(|w| max - w).collect();
    let scale = (max - min).abs().max(max.abs()).max(1.0);

    let mut solver = Hungarian::new(&cost, n);
    solver.run();
    let mut matching = solver.matching();
    solver.lexicographic_refine(&mut matching, 1e-11 * scale);

    let total = matching
        .iter()
        .enumerate()
        .map(|(i, &j)| weights[i * n + j])
        .sum();
    Ok(AssignmentResult { matching, total })
}

/// Minimum-cost solver with 1-based potentials; index 0 is the virtual
/// row/column used by the augmentation.
struct Hungarian<'a> {
    cost: &'a [f64],
    n: usize,
    u: Vec<f64>,
    v: Vec<f64>,
    /// `p[j]` = row matched to column `j` (1-based, 0 = free).
    p: Vec<usize>,
}

impl<'a> Hungarian<'a> {
    fn new(cost: &'a [f64], n: usize) -> Self {
        Hungarian {
            cost,
            n,
            u: vec![0.0; n + 1],
            v: vec![0.0; n + 1],
            p: vec![0; n + 1],
        }
    }

    #[inline]
    fn c(&self, i: usize, j: usize) -> f64 {
        self.cost[(i - 1) * self.n + (j - 1)]
    }

    fn run(&mut self) {
        let n = self.n;
        let mut way = vec![0usize; n + 1];
        let mut minv = vec![0f64; n + 1];
        let mut used = vec![false; n + 1];
        for i in 1..=n {
            self.p[0] = i;
            let mut j0 = 0usize;
            minv.fill(f64::INFINITY);
            used.fill(false);
            loop {
                used[j0] = true;
                let i0 = self.p[j0];
                let mut delta = f64::INFINITY;
                let mut j1 = 0usize;
                for j in 1..=n {
                    if used[j] {
                        continue;
                    }
                    let cur = self.c(i0, j) - self.u[i0] - self.v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
                for j in 0..=n {
                    if used[j] {
                        self.u[self.p[j]] += delta;
                        self.v[j] -= delta;
                    } else {
                        minv[j] -= delta;
                    }
                }
                j0 = j1;
                if self.p[j0] == 0 {
                    break;
                }
            }
            loop {
                let j1 = way[j0];
                self.p[j0] = self.p[j1];
                j0 = j1;
                if j0 == 0 {
                    break;
                }
            }
        }
    }

    /// 0-based `matching[row] = column`.
    fn matching(&self) -> Vec<usize> {
        let mut matching = vec![0usize; self.n];
        for j in 1..=self.n {
            matching[self.p[j] - 1] = j - 1;
        }
        matching
    }

    /// Every optimal matching uses only edges that are tight under the
    /// optimal potentials. Walking rows in order, each row takes the
    /// smallest tight column that still admits a perfect matching of the
    /// remaining rows, found by an alternating-path search.
    fn lexicographic_refine(&self, matching: &mut [usize], tol: f64) {
        let n = self.n;
        let tight =
            |i: usize, j: usize| self.c(i + 1, j + 1) - self.u[i + 1] - self.v[j + 1] <= tol;
        let mut row_of_col = vec![0usize; n];
        for (i, &j) in matching.iter().enumerate() {
            row_of_col[j] = i;
        }
        let mut locked = vec![false; n];
        let mut visited = vec![false; n];

        for i in 0..n {
            for j in 0..n {
                if locked[j] || !tight(i, j) {
                    continue;
                }
                if matching[i] == j {
                    locked[j] = true;
                    break;
                }
                let freed = matching[i];
                let displaced = row_of_col[j];
                visited.fill(false);
                visited[j] = true;
                let mut search = PathSearch {
                    n,
                    tight: &tight,
                    locked: &locked,
                    visited: &mut visited,
                    matching,
                    row_of_col: &mut row_of_col,
                    freed,
                };
                if search.reroute(displaced) {
                    matching[i] = j;
                    row_of_col[j] = i;
                    locked[j] = true;
                    break;
                }
            }
        }
    }
}

struct PathSearch<'s, F> {
    n: usize,
    tight: &'s F,
    locked: &'s [bool],
    visited: &'s mut [bool],
    matching: &'s mut [usize],
    row_of_col: &'s mut [usize],
    freed: usize,
}

impl<F: Fn(usize, usize) -> bool> PathSearch<'_, F> {
    /// Moves `row` to another tight column, shifting displaced rows along an
    /// alternating path that ends in the freed column.
    fn reroute(&mut self, row: usize) -> bool {
        for c in 0..self.n {
            if self.locked[c] || self.visited[c] || !(self.tight)(row, c) {
                continue;
            }
            self.visited[c] = true;
            if c == self.freed || self.reroute(self.row_of_col[c]) {
                self.matching[row] = c;
                self.row_of_col[c] = row;
                return true;
            }
        }
        false
    }
}
