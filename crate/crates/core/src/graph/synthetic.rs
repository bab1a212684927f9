//! Synthetic pattern-regular graphs with a known memorized pattern set.
//!
//! Learned graphs are irregular, so the expander guarantees are exercised on
//! graphs built here: a pattern-regular support, a random generator `G` with
//! entries in `1..=9`, and real weights on each constraint's support chosen
//! from the null space of the corresponding columns of `G`. Every pattern
//! `u·G` is then memorized.

use rand::Rng as _;

use super::NeuralGraph;
use crate::error::{Error, Result};
use crate::patterns::{build_training_set, GeneratorMatrix, ModelSpec, Pattern, SampleSize};
use crate::seed::Rng;

const SUPPORT_ATTEMPTS: usize = 200;
const GENERATOR_ATTEMPTS: usize = 200;
const WEIGHT_ATTEMPTS: usize = 50;

/// Builds a support where each of `n` pattern neurons has `dp` distinct
/// constraint neighbors, loads are kept balanced, and no two pattern neurons
/// share more than `max_shared` constraints. Returns the neighbor list of each
/// pattern neuron, or `None` if the randomized greedy construction failed.
pub fn overlap_limited_support(n: usize, m: usize, dp: usize, max_shared: usize, rng: &mut Rng) -> Option<Vec<Vec<usize>>> {
    if dp > m || n * dp < m {
        return None;
    }
    'attempt: for _ in 0..SUPPORT_ATTEMPTS {
        let mut load = vec![0usize; m];
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); m];
        let mut out = Vec::with_capacity(n);
        for j in 0..n {
            let mut order: Vec<(usize, f64, usize)> = (0..m).map(|c| (load[c], rng.gen::<f64>(), c)).collect();
            order.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
            let mut shared = vec![0usize; j];
            let mut chosen = Vec::with_capacity(dp);
            for &(_, _, c) in &order {
                if adj[c].iter().any(|&p| shared[p] + 1 > max_shared) {
                    continue;
                }
                for &p in &adj[c] {
                    shared[p] += 1;
                }
                chosen.push(c);
                if chosen.len() == dp {
                    break;
                }
            }
            if chosen.len() < dp {
                continue 'attempt;
            }
            chosen.sort_unstable();
            for &c in &chosen {
                load[c] += 1;
                adj[c].push(j);
            }
            out.push(chosen);
        }
        if load.iter().all(|&l| l > 0) {
            return Some(out);
        }
    }
    None
}

/// A synthetic memory: graph, generator, and every memorized pattern.
#[derive(Debug, Clone)]
pub struct SyntheticMemory {
    pub graph: NeuralGraph,
    pub generator: GeneratorMatrix,
    pub spec: ModelSpec,
    /// all `2^k` patterns `u·G` with `u ∈ {0,1}^k`
    pub patterns: Vec<Pattern>,
    /// `(1,…,1)·G`, every entry in `1..=Q−2`, so ±1 noise is never clipped
    pub reference: Pattern,
}

/// Null-space basis of a small dense `rows×cols` matrix via reduced row
/// echelon form.
fn null_space(a: &[Vec<f64>], cols: usize) -> Vec<Vec<f64>> {
    let mut r: Vec<Vec<f64>> = a.to_vec();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        let Some(p) = (row..r.len()).max_by(|&x, &y| r[x][col].abs().total_cmp(&r[y][col].abs())) else {
            break;
        };
        if r[p][col].abs() < 1e-9 {
            continue;
        }
        r.swap(row, p);
        let lead = r[row][col];
        for v in r[row].iter_mut() {
            *v /= lead;
        }
        for i in 0..r.len() {
            if i != row && r[i][col] != 0.0 {
                let f = r[i][col];
                let pivot = r[row].clone();
                for (v, p) in r[i].iter_mut().zip(&pivot) {
                    *v -= f * p;
                }
            }
        }
        pivots.push(col);
        row += 1;
        if row == r.len() {
            break;
        }
    }
    (0..cols)
        .filter(|c| !pivots.contains(c))
        .map(|free| {
            let mut v = vec![0.0; cols];
            v[free] = 1.0;
            for (i, &pc) in pivots.iter().enumerate() {
                v[pc] = -r[i][free];
            }
            v
        })
        .collect()
}

/// Entries uniform in `1..=9`, so columns are almost surely in general
/// position.
fn random_generator(k: usize, n: usize, rng: &mut Rng) -> Result<GeneratorMatrix> {
    let rows: Vec<Vec<u32>> = (0..k).map(|_| (0..n).map(|_| rng.gen_range(1..10)).collect()).collect();
    GeneratorMatrix::from_rows(&rows, 10)
}

/// No zero weight, and no two weights of equal magnitude: two ±1 errors on
/// one constraint can then never cancel.
fn is_generic(w: &[f64], scale: f64) -> bool {
    let tol = 1e-3 * scale;
    let mut mags: Vec<f64> = w.iter().map(|v| v.abs()).collect();
    mags.sort_by(f64::total_cmp);
    mags[0] > tol && mags.windows(2).all(|p| p[1] - p[0] > tol)
}

fn weights_for(support: &[usize], g: &GeneratorMatrix, rng: &mut Rng) -> Option<Vec<f64>> {
    let a: Vec<Vec<f64>> = (0..g.k())
        .map(|i| support.iter().map(|&j| g.get(i, j) as f64).collect())
        .collect();
    let basis = null_space(&a, support.len());
    if basis.is_empty() {
        return None;
    }
    for _ in 0..WEIGHT_ATTEMPTS {
        let mut w = vec![0.0; support.len()];
        for b in &basis {
            let c: f64 = rng.gen_range(-1.0..1.0);
            for (wi, bi) in w.iter_mut().zip(b) {
                *wi += c * bi;
            }
        }
        let scale = w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale > 0.0 && is_generic(&w, scale) {
            return Some(w.into_iter().map(|v| v / scale).collect());
        }
    }
    None
}

/// Builds a memory of dimension `k` on the given support (neighbor lists of
/// the pattern neurons). Needs `k` below every constraint degree.
pub fn synthetic_memory(support: &[Vec<usize>], m: usize, k: usize, rng: &mut Rng) -> Result<SyntheticMemory> {
    let n = support.len();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); m];
    for (j, list) in support.iter().enumerate() {
        for &c in list {
            if c >= m {
                return Err(Error::Config(format!("constraint {c} outside 0..{m}")));
            }
            members[c].push(j);
        }
    }
    let min_dc = members.iter().map(Vec::len).min().unwrap_or(0);
    if k == 0 || k >= min_dc {
        return Err(Error::Infeasible(format!("need 1 <= k < smallest constraint degree {min_dc}, got k={k}")));
    }
    'gen: for _ in 0..GENERATOR_ATTEMPTS {
        let g = match random_generator(k, n, rng) {
            Ok(g) => g,
            Err(_) => continue,
        };
        let mut edges = Vec::new();
        for (c, cols) in members.iter().enumerate() {
            let Some(w) = weights_for(cols, &g, rng) else {
                continue 'gen;
            };
            edges.extend(cols.iter().zip(w).map(|(&j, v)| (j, c, v)));
        }
        let colsum: Vec<u32> = (0..n).map(|j| (0..k).map(|i| g.get(i, j)).sum()).collect();
        let q = colsum.iter().max().copied().unwrap_or(0) + 2;
        let graph = NeuralGraph::from_edges(n, m, q, &edges)?;
        let spec = ModelSpec::new(q, n, k)?;
        let set = build_training_set(spec, &g, 2, SampleSize::All, rng)?;
        let reference = Pattern::new(colsum, q)?;
        let memorized = |x: &Pattern| graph.apply(x.as_slice()).iter().all(|h| h.abs() < 1e-9);
        if !set.patterns().iter().all(memorized) || !memorized(&reference) {
            continue;
        }
        return Ok(SyntheticMemory {
            graph,
            generator: g,
            spec,
            patterns: set.patterns().to_vec(),
            reference,
        });
    }
    Err(Error::Infeasible(format!(
        "no generator with generic null-space weights after {GENERATOR_ATTEMPTS} draws"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    #[test]
    fn null_space_is_orthogonal() {
        let a = vec![vec![1.0, 0.0, 1.0, 1.0], vec![0.0, 1.0, 1.0, 0.0]];
        let basis = null_space(&a, 4);
        assert_eq!(basis.len(), 2);
        for b in &basis {
            for row in &a {
                let d: f64 = row.iter().zip(b).map(|(x, y)| x * y).sum();
                assert!(d.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn support_respects_overlap() {
        let mut rng = rng_from_seed(4);
        let s = overlap_limited_support(20, 30, 5, 1, &mut rng).unwrap();
        for a in 0..20 {
            assert_eq!(s[a].len(), 5);
            for b in 0..a {
                let shared = s[a].iter().filter(|c| s[b].contains(c)).count();
                assert!(shared <= 1);
            }
        }
    }

    #[test]
    fn memory_is_consistent() {
        let mut rng = rng_from_seed(5);
        let s = overlap_limited_support(24, 24, 4, 1, &mut rng).unwrap();
        let mem = synthetic_memory(&s, 24, 2, &mut rng).unwrap();
        assert_eq!(mem.patterns.len(), 4);
        assert_eq!(mem.graph.pattern_regular_degree(), Some(4));
        assert!(mem.reference.as_slice().iter().all(|&v| v >= 1 && v + 2 <= mem.spec.q));
    }
}
