//! Rectangular linear assignment and Murty's k-best ranking.
//!
//! Costs are `f64`; `f64::INFINITY` marks a forbidden pairing. Rows must not
//! outnumber columns.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Minimum-cost assignment of every row to a distinct column.
///
/// Returns the column chosen for each row and the total cost, or `None` if
/// no assignment avoids forbidden entries.
pub fn solve(cost: &[Vec<f64>]) -> Option<(Vec<usize>, f64)> {
    let n = cost.len();
    if n == 0 {
        return Some((Vec::new(), 0.0));
    }
    let m = cost[0].len();
    assert!(cost.iter().all(|r| r.len() == m), "ragged cost matrix");
    assert!(n <= m, "more rows ({n}) than columns ({m})");

    // Shortest augmenting paths with row/column potentials; index 0 is a
    // sentinel column, rows and columns are 1-based below.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let c = cost[i0 - 1][j - 1];
                if c.is_finite() {
                    let cur = c - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            if !delta.is_finite() {
                return None;
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
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut cols = vec![0usize; n];
    for j in 1..=m {
        if owner[j] > 0 {
            cols[owner[j] - 1] = j - 1;
        }
    }
    let total = cols.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
    Some((cols, total))
}

#[derive(Debug)]
struct Node {
    total: f64,
    cols: Vec<usize>,
    cost: Vec<Vec<f64>>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // min-heap on total cost, then on the assignment for determinism
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .total
            .total_cmp(&self.total)
            .then_with(|| other.cols.cmp(&self.cols))
    }
}

/// The `k` cheapest distinct assignments, in nondecreasing cost order
/// (Murty's partitioning).
pub fn k_best(cost: &[Vec<f64>], k: usize) -> Vec<(Vec<usize>, f64)> {
    let mut out = Vec::new();
    if k == 0 {
        return out;
    }
    let Some((cols, total)) = solve(cost) else {
        return out;
    };
    let mut heap = BinaryHeap::new();
    heap.push(Node {
        total,
        cols,
        cost: cost.to_vec(),
    });
    while let Some(node) = heap.pop() {
        out.push((node.cols.clone(), node.total));
        if out.len() == k {
            break;
        }
        // Partition: child t keeps rows < t fixed to this solution and forbids
        // row t's current column.
        let mut sub = node.cost.clone();
        for t in 0..node.cols.len() {
            let mut child = sub.clone();
            child[t][node.cols[t]] = f64::INFINITY;
            if let Some((cols, total)) = solve(&child) {
                heap.push(Node { total, cols, cost: child });
            }
            fix(&mut sub, t, node.cols[t]);
        }
    }
    out
}

fn fix(cost: &mut [Vec<f64>], row: usize, col: usize) {
    for (i, r) in cost.iter_mut().enumerate() {
        for (j, c) in r.iter_mut().enumerate() {
            if (i == row) != (j == col) {
                *c = f64::INFINITY;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const INF: f64 = f64::INFINITY;

    /// All injective row→column maps with their costs, by enumeration.
    fn brute_force(cost: &[Vec<f64>]) -> Vec<(Vec<usize>, f64)> {
        fn rec(cost: &[Vec<f64>], row: usize, used: &mut Vec<bool>, cur: &mut Vec<usize>, out: &mut Vec<(Vec<usize>, f64)>) {
            if row == cost.len() {
                let t: f64 = cur.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
                if t.is_finite() {
                    out.push((cur.clone(), t));
                }
                return;
            }
            for j in 0..used.len() {
                if !used[j] {
                    used[j] = true;
                    cur.push(j);
                    rec(cost, row + 1, used, cur, out);
                    cur.pop();
                    used[j] = false;
                }
            }
        }
        let mut out = Vec::new();
        let m = cost.first().map_or(0, |r| r.len());
        rec(cost, 0, &mut vec![false; m], &mut Vec::new(), &mut out);
        out.sort_by(|a, b| a.1.total_cmp(&b.1));
        out
    }

    #[test]
    fn small_square_problem() {
        let cost = vec![vec![4.0, 1.0, 3.0], vec![2.0, 0.0, 5.0], vec![3.0, 2.0, 2.0]];
        let (cols, total) = solve(&cost).unwrap();
        assert_eq!(total, 5.0);
        assert_eq!(cols, vec![1, 0, 2]);
    }

    #[test]
    fn infeasible_problem() {
        let cost = vec![vec![1.0, INF], vec![2.0, INF]];
        assert!(solve(&cost).is_none());
        assert!(k_best(&cost, 3).is_empty());
    }

    #[test]
    fn empty_problem_has_one_solution() {
        assert_eq!(k_best(&[], 4), vec![(vec![], 0.0)]);
    }

    fn matrix() -> impl Strategy<Value = Vec<Vec<f64>>> {
        (1usize..=3, 0usize..=3).prop_flat_map(|(n, extra)| {
            prop::collection::vec(
                prop::collection::vec(prop_oneof![4 => 0.0f64..10.0, 1 => Just(INF)], n + extra),
                n,
            )
        })
    }

    proptest! {
        #[test]
        fn k_best_matches_enumeration(cost in matrix(), k in 1usize..30) {
            let all = brute_force(&cost);
            let got = k_best(&cost, k);
            prop_assert_eq!(got.len(), all.len().min(k));
            for (g, e) in got.iter().zip(&all) {
                prop_assert!((g.1 - e.1).abs() < 1e-9, "{:?} vs {:?}", g, e);
            }
            let mut seen: Vec<&Vec<usize>> = got.iter().map(|g| &g.0).collect();
            seen.sort();
            seen.dedup();
            prop_assert_eq!(seen.len(), got.len());
        }
    }
}
