//! Small exact simplex for feasibility of `A x = b, x >= 0`.
//! Dense tableau, phase one only.

use std::time::Instant;

use num_traits::{One, Signed, Zero};

use crate::num::Q;

/// Returns a nonnegative solution of `A x = b` if one exists.
pub fn feasible(a: &[Vec<Q>], b: &[Q], ncols: usize) -> Option<Vec<Q>> {
    feasible_until(a, b, ncols, None)
}

/// As `feasible`, but gives up (returning `None`) once `until` has passed.
pub fn feasible_until(a: &[Vec<Q>], b: &[Q], ncols: usize, until: Option<Instant>) -> Option<Vec<Q>> {
    let m = a.len();
    // tableau columns: ncols structural, m artificial, then rhs
    let width = ncols + m + 1;
    let mut t: Vec<Vec<Q>> = Vec::with_capacity(m + 1);
    for i in 0..m {
        let flip = b[i].is_negative();
        let mut row = vec![Q::zero(); width];
        for (j, v) in a[i].iter().enumerate().take(ncols) {
            row[j] = if flip { -v.clone() } else { v.clone() };
        }
        row[ncols + i] = Q::one();
        row[width - 1] = if flip { -b[i].clone() } else { b[i].clone() };
        t.push(row);
    }
    // objective: minimise the sum of artificials, written as reduced costs
    let mut obj = vec![Q::zero(); width];
    for row in &t {
        for j in 0..ncols {
            obj[j] -= &row[j];
        }
        obj[width - 1] -= &row[width - 1];
    }
    t.push(obj);
    let mut basis: Vec<usize> = (ncols..ncols + m).collect();
    let mut stalled = 0usize;
    loop {
        if until.is_some_and(|d| Instant::now() >= d) {
            return None;
        }
        let z = m;
        // most negative reduced cost; Bland's first-negative rule after a run
        // of degenerate pivots, which rules out cycling
        let col = if stalled < 50 {
            (0..ncols + m).filter(|&j| t[z][j].is_negative()).min_by(|&a, &b| t[z][a].cmp(&t[z][b]))
        } else {
            (0..ncols + m).find(|&j| t[z][j].is_negative())
        };
        let Some(col) = col else { break };
        let mut best: Option<(usize, Q)> = None;
        for i in 0..m {
            if t[i][col].is_positive() {
                let ratio = &t[i][width - 1] / &t[i][col];
                let better = match &best {
                    None => true,
                    Some((bi, br)) => ratio < *br || (ratio == *br && basis[i] < basis[*bi]),
                };
                if better {
                    best = Some((i, ratio));
                }
            }
        }
        let Some((row, ratio)) = best else { break };
        stalled = if ratio.is_zero() { stalled + 1 } else { 0 };
        pivot(&mut t, row, col);
        basis[row] = col;
    }
    if !t[m][width - 1].is_zero() {
        return None;
    }
    let mut x = vec![Q::zero(); ncols];
    for (i, &bv) in basis.iter().enumerate() {
        if bv < ncols {
            x[bv] = t[i][width - 1].clone();
        }
    }
    Some(x)
}

fn pivot(t: &mut [Vec<Q>], row: usize, col: usize) {
    let p = t[row][col].clone();
    if !p.is_one() {
        for v in t[row].iter_mut() {
            if !v.is_zero() {
                *v /= &p;
            }
        }
    }
    let prow = t[row].clone();
    let nz: Vec<usize> = (0..prow.len()).filter(|&j| !prow[j].is_zero()).collect();
    for (i, r) in t.iter_mut().enumerate() {
        if i == row || r[col].is_zero() {
            continue;
        }
        let k = r[col].clone();
        for &j in &nz {
            let d = &k * &prow[j];
            r[j] -= d;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::qi;

    fn m(rows: &[&[i64]]) -> Vec<Vec<Q>> {
        rows.iter().map(|r| r.iter().map(|v| qi(*v)).collect()).collect()
    }

    #[test]
    fn small_feasible() {
        // x + y = 2, x - y = 0
        let a = m(&[&[1, 1], &[1, -1]]);
        let x = feasible(&a, &[qi(2), qi(0)], 2).unwrap();
        assert_eq!(x, vec![qi(1), qi(1)]);
    }

    #[test]
    fn small_infeasible() {
        // x + y = -1 with x, y >= 0
        let a = m(&[&[1, 1]]);
        assert!(feasible(&a, &[qi(-1)], 2).is_none());
        // x - y = 1, y - x = 1
        let a = m(&[&[1, -1], &[-1, 1]]);
        assert!(feasible(&a, &[qi(1), qi(1)], 2).is_none());
    }

    #[test]
    fn degenerate_rows() {
        let a = m(&[&[1, 1, 0], &[1, 1, 0], &[0, 0, 1]]);
        let x = feasible(&a, &[qi(3), qi(3), qi(0)], 3).unwrap();
        assert_eq!(&x[0] + &x[1], qi(3));
    }
}
