use crate::error::{Error, Result};

/// Dense row-major `rows x cols` cost matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::shape(format!(
                "{} entries for a {rows}x{cols} cost matrix",
                entries.len()
            )));
        }
        Ok(Self { rows, cols, entries })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::shape("ragged cost matrix".to_string()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.cols + col]
    }
}

/// Result of a minimum-cost assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    /// `(row, col)` pairs in ascending row order.
    pub pairs: Vec<(usize, usize)>,
    /// Sum of the matched entries, accumulated in row order.
    pub total_cost: f64,
    /// Unassigned indices of the larger side (rows if `rows > cols`, else columns).
    pub unmatched: Vec<usize>,
}

/// Minimum-cost assignment of `min(rows, cols)` pairs.
///
/// Shortest augmenting paths with row/column potentials, O(n^3) in
/// `n = max(rows, cols)`. Rectangular inputs are padded with zero-cost dummy
/// rows or columns which are dropped from the result.
pub fn hungarian(cost: &CostMatrix) -> Result<Matching> {
    for (i, &c) in cost.entries.iter().enumerate() {
        if c.is_nan() {
            return Err(Error::NanCost {
                row: i / cost.cols.max(1),
                col: i % cost.cols.max(1),
            });
        }
        if c.is_infinite() {
            return Err(Error::invalid(format!(
                "infinite cost at ({}, {})",
                i / cost.cols,
                i % cost.cols
            )));
        }
    }
    let n = cost.rows.max(cost.cols);
    if n == 0 {
        return Ok(Matching {
            pairs: Vec::new(),
            total_cost: 0.0,
            unmatched: Vec::new(),
        });
    }
    let at = |i: usize, j: usize| -> f64 {
        if i < cost.rows && j < cost.cols {
            cost.get(i, j)
        } else {
            0.0
        }
    };

    // 1-based arrays; index 0 is the virtual root of each augmenting search.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut col_owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut min_slack = vec![0.0f64; n + 1];
    let mut used = vec![false; n + 1];

    for row in 1..=n {
        col_owner[0] = row;
        let mut j0 = 0usize;
        min_slack.iter_mut().for_each(|s| *s = f64::INFINITY);
        used.iter_mut().for_each(|b| *b = false);
        loop {
            used[j0] = true;
            let i0 = col_owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let reduced = at(i0 - 1, j - 1) - u[i0] - v[j];
                if reduced < min_slack[j] {
                    min_slack[j] = reduced;
                    way[j] = j0;
                }
                if min_slack[j] < delta {
                    delta = min_slack[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[col_owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_slack[j] -= delta;
                }
            }
            j0 = j1;
            if col_owner[j0] == 0 {
                break;
            }
        }
        // flip the augmenting path
        loop {
            let j1 = way[j0];
            col_owner[j0] = col_owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut row_to_col = vec![usize::MAX; n];
    for j in 1..=n {
        if col_owner[j] > 0 {
            row_to_col[col_owner[j] - 1] = j - 1;
        }
    }
    let mut pairs = Vec::with_capacity(cost.rows.min(cost.cols));
    for (i, &j) in row_to_col.iter().enumerate().take(cost.rows) {
        if j < cost.cols {
            pairs.push((i, j));
        }
    }
    let total_cost = pairs.iter().map(|&(i, j)| cost.get(i, j)).sum();
    let unmatched = if cost.rows > cost.cols {
        let mut taken = vec![false; cost.rows];
        pairs.iter().for_each(|&(i, _)| taken[i] = true);
        (0..cost.rows).filter(|&i| !taken[i]).collect()
    } else {
        let mut taken = vec![false; cost.cols];
        pairs.iter().for_each(|&(_, j)| taken[j] = true);
        (0..cost.cols).filter(|&j| !taken[j]).collect()
    };
    Ok(Matching {
        pairs,
        total_cost,
        unmatched,
    })
}
