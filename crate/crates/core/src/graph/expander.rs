//! Exhaustive expansion checks for small pattern-regular graphs.

use super::NeuralGraph;
use crate::error::{Error, Result};

/// Largest subset size the exhaustive check will enumerate.
pub const SUBSET_BUDGET: usize = 3;

/// `⌊α·n⌋`, robust to `α·n` landing a hair below an integer.
pub fn subset_limit(alpha: f64, n: usize) -> usize {
    (alpha * n as f64 + 1e-9).floor() as usize
}

struct Neighborhoods {
    words: usize,
    bits: Vec<u64>,
}

impl Neighborhoods {
    fn new(g: &NeuralGraph) -> Self {
        let words = g.m().div_ceil(64).max(1);
        let mut bits = vec![0u64; words * g.n()];
        for j in 0..g.n() {
            for i in g.neighbors(j) {
                bits[j * words + i / 64] |= 1 << (i % 64);
            }
        }
        Neighborhoods { words, bits }
    }

    fn of(&self, j: usize) -> &[u64] {
        &self.bits[j * self.words..(j + 1) * self.words]
    }

    fn union_size(&self, set: &[usize]) -> usize {
        (0..self.words)
            .map(|w| set.iter().fold(0u64, |acc, &j| acc | self.of(j)[w]).count_ones() as usize)
            .sum()
    }
}

fn for_each_subset(n: usize, size: usize, f: &mut impl FnMut(&[usize]) -> bool) -> bool {
    fn rec(start: usize, n: usize, left: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize]) -> bool) -> bool {
        if left == 0 {
            return f(cur);
        }
        for j in start..=n - left {
            cur.push(j);
            let keep_going = rec(j + 1, n, left - 1, cur, f);
            cur.pop();
            if !keep_going {
                return false;
            }
        }
        true
    }
    size <= n && rec(0, n, size, &mut Vec::with_capacity(size), f)
}

/// True iff every set `P` of pattern neurons with `|P| ≤ ⌊αn⌋` has
/// `|N(P)| > β·d_p·|P|`.
///
/// The graph must be regular on the pattern side, and `⌊αn⌋` must lie in
/// `1..=3`.
pub fn is_expander(g: &NeuralGraph, alpha: f64, beta: f64) -> Result<bool> {
    let dp = g.pattern_regular_degree().ok_or(Error::IrregularGraph)?;
    let limit = subset_limit(alpha, g.n());
    if limit < 1 {
        return Err(Error::Config(format!("alpha*n must be at least 1, got alpha={alpha} n={}", g.n())));
    }
    if limit > SUBSET_BUDGET {
        return Err(Error::BudgetExceeded {
            size: limit,
            budget: SUBSET_BUDGET,
        });
    }
    let nb = Neighborhoods::new(g);
    for size in 1..=limit {
        let need = beta * (dp * size) as f64;
        let ok = for_each_subset(g.n(), size, &mut |set| nb.union_size(set) as f64 > need);
        if !ok {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Binary entropy in bits.
pub fn binary_entropy(a: f64) -> f64 {
    if a <= 0.0 || a >= 1.0 {
        return 0.0;
    }
    -a * a.log2() - (1.0 - a) * (1.0 - a).log2()
}

/// Lower bound on the neighbor count of an `αn` pattern set in a random
/// `(d_p, d_c)`-regular graph:
/// `n·((d_p/d_c)(1 − (1 − α)^d_c) − sqrt(2·d_c·α·h(α)/log2 e))`.
pub fn expansion_lower_bound(n: usize, dp: usize, dc: usize, alpha: f64) -> f64 {
    let (dp, dc) = (dp as f64, dc as f64);
    let mean = dp / dc * (1.0 - (1.0 - alpha).powf(dc));
    let dev = (2.0 * dc * alpha * binary_entropy(alpha) / std::f64::consts::LOG2_E).sqrt();
    n as f64 * (mean - dev)
}

/// `⌊αn⌋ + 1` when `β > 1/2 + 1/(4·d_p)`, `None` when the condition fails.
pub fn min_distance_bound(dp: usize, beta: f64, alpha: f64, n: usize) -> Option<usize> {
    (beta > 0.5 + 1.0 / (4.0 * dp as f64)).then(|| subset_limit(alpha, n) + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize, m: usize, nbrs: &[&[usize]]) -> NeuralGraph {
        let mut edges = Vec::new();
        for (j, list) in nbrs.iter().enumerate() {
            for &i in *list {
                edges.push((j, i, 1.0));
            }
        }
        NeuralGraph::from_edges(n, m, 3, &edges).unwrap()
    }

    #[test]
    fn disjoint_neighborhoods_expand() {
        let g = graph(4, 12, &[&[0, 1, 2], &[3, 4, 5], &[6, 7, 8], &[9, 10, 11]]);
        assert!(is_expander(&g, 0.5, 0.99).unwrap());
    }

    #[test]
    fn shared_neighborhoods_fail() {
        let g = graph(4, 6, &[&[0, 1, 2], &[0, 1, 2], &[3, 4, 5], &[0, 3, 4]]);
        assert!(!is_expander(&g, 0.5, 0.5).unwrap());
        // singletons alone are fine
        assert!(is_expander(&g, 0.25, 0.99).unwrap());
    }

    #[test]
    fn rejects_irregular_and_oversized() {
        let g = graph(2, 3, &[&[0, 1], &[2]]);
        assert!(matches!(is_expander(&g, 0.5, 0.5), Err(Error::IrregularGraph)));
        let g = graph(8, 8, &[&[0], &[1], &[2], &[3], &[4], &[5], &[6], &[7]]);
        assert!(matches!(is_expander(&g, 0.5, 0.5), Err(Error::BudgetExceeded { size: 4, .. })));
        assert!(is_expander(&g, 0.1, 0.5).is_err());
    }

    #[test]
    fn min_distance_examples() {
        assert_eq!(min_distance_bound(4, 0.6, 0.1, 100), Some(11));
        assert_eq!(min_distance_bound(4, 0.55, 0.1, 100), None);
        for dp in 1..10 {
            assert!(min_distance_bound(dp, 1.0, 0.1, 30).is_some());
        }
    }

    #[test]
    fn bound_vanishes_at_zero() {
        assert!(expansion_lower_bound(100, 4, 8, 1e-12).abs() < 1e-3);
        assert_eq!(binary_entropy(0.5), 1.0);
    }
}
