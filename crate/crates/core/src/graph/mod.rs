//! The bipartite neural graph between `n` pattern neurons and `m` constraint
//! neurons, its degree statistics, and the backward-weight views used by the
//! recall decoders.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::io::{fmt_weight, parse_header, read_data_lines};

pub mod expander;
pub mod synthetic;

pub use expander::{expansion_lower_bound, is_expander, min_distance_bound};

/// Row- and column-indexed sparse storage of an `m×n` real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_cols: usize,
    rows: Vec<Vec<(usize, f64)>>,
    cols: Vec<Vec<(usize, f64)>>,
}

impl SparseMatrix {
    pub fn from_rows(n_cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let mut cols = vec![Vec::new(); n_cols];
        for (i, r) in rows.iter().enumerate() {
            for &(j, w) in r {
                cols[j].push((i, w));
            }
        }
        SparseMatrix { n_cols, rows, cols }
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    /// Nonzeros of row `i` as `(column, value)`, columns ascending.
    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    /// Nonzeros of column `j` as `(row, value)`, rows ascending.
    pub fn col(&self, j: usize) -> &[(usize, f64)] {
        &self.cols[j]
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> SparseMatrix {
        let rows = self
            .rows
            .iter()
            .map(|r| r.iter().map(|&(j, w)| (j, f(w))).collect())
            .collect();
        SparseMatrix::from_rows(self.n_cols, rows)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|r| {
                let mut d = vec![0.0; self.n_cols];
                for &(j, w) in r {
                    d[j] = w;
                }
                d
            })
            .collect()
    }
}

/// Weighted bipartite graph; row `i` of the weight matrix holds the incoming
/// weights of constraint neuron `i`. Edges are the nonzero weights.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuralGraph {
    q: u32,
    weights: SparseMatrix,
}

impl NeuralGraph {
    /// Builds a graph from dense constraint rows. Every row needs at least one
    /// nonzero entry.
    pub fn from_dense_rows<R: AsRef<[f64]>>(n: usize, q: u32, rows: &[R]) -> Result<Self> {
        let mut sparse = Vec::with_capacity(rows.len());
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: r.len(),
                });
            }
            let entries: Vec<(usize, f64)> = r
                .iter()
                .enumerate()
                .filter(|(_, &w)| w != 0.0)
                .map(|(j, &w)| (j, w))
                .collect();
            if entries.is_empty() {
                return Err(Error::Config(format!("constraint row {i} has no edges")));
            }
            if entries.iter().any(|(_, w)| !w.is_finite()) {
                return Err(Error::Config(format!("constraint row {i} has a non-finite weight")));
            }
            sparse.push(entries);
        }
        Ok(NeuralGraph {
            q,
            weights: SparseMatrix::from_rows(n, sparse),
        })
    }

    /// Builds a graph from `(pattern, constraint, weight)` triples.
    pub fn from_edges(n: usize, m: usize, q: u32, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut dense = vec![vec![0.0; n]; m];
        for &(p, c, w) in edges {
            if p >= n || c >= m {
                return Err(Error::Config(format!("edge ({p}, {c}) outside a {n}x{m} graph")));
            }
            if w == 0.0 {
                return Err(Error::Config(format!("edge ({p}, {c}) has zero weight")));
            }
            dense[c][p] = w;
        }
        Self::from_dense_rows(n, q, &dense)
    }

    /// Number of pattern neurons.
    pub fn n(&self) -> usize {
        self.weights.n_cols()
    }

    /// Number of constraint neurons.
    pub fn m(&self) -> usize {
        self.weights.n_rows()
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn weights(&self) -> &SparseMatrix {
        &self.weights
    }

    pub fn edge_count(&self) -> usize {
        self.weights.nnz()
    }

    pub fn dense_rows(&self) -> Vec<Vec<f64>> {
        self.weights.to_dense()
    }

    pub fn pattern_degrees(&self) -> Vec<usize> {
        (0..self.n()).map(|j| self.weights.col(j).len()).collect()
    }

    pub fn constraint_degrees(&self) -> Vec<usize> {
        (0..self.m()).map(|i| self.weights.row(i).len()).collect()
    }

    /// Constraint neighbors of pattern neuron `j`.
    pub fn neighbors(&self, j: usize) -> impl Iterator<Item = usize> + '_ {
        self.weights.col(j).iter().map(|&(i, _)| i)
    }

    /// `Some(d)` when every pattern neuron has degree `d`.
    pub fn pattern_regular_degree(&self) -> Option<usize> {
        let degs = self.pattern_degrees();
        let d = *degs.first()?;
        degs.iter().all(|&x| x == d).then_some(d)
    }

    /// `W·x` over real weights.
    pub fn apply(&self, x: &[u32]) -> Vec<f64> {
        (0..self.m())
            .map(|i| self.weights.row(i).iter().map(|&(j, w)| w * x[j] as f64).sum())
            .collect()
    }

    /// Writes the weights format: header `m n Q seed theta_final`, then one
    /// line of `n` reals per constraint.
    pub fn write_weights<W: Write>(&self, mut out: W, seed: u64, theta_final: f64) -> Result<()> {
        writeln!(out, "{} {} {} {} {}", self.m(), self.n(), self.q, seed, fmt_weight(theta_final))?;
        for row in self.dense_rows() {
            let line: Vec<String> = row.into_iter().map(fmt_weight).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        Ok(())
    }

    pub fn read_weights<R: BufRead>(input: R) -> Result<(Self, WeightsHeader)> {
        let mut lines = read_data_lines(input)?;
        let (hline, header) = lines.next().ok_or_else(|| Error::parse(0, "missing header"))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(Error::parse(hline, "weights header needs `m n Q seed theta_final`"));
        }
        let [m, n, q, seed]: [u64; 4] = parse_header(hline, &fields[..4].join(" "))?;
        let theta_final: f64 = fields[4]
            .parse()
            .map_err(|e| Error::parse(hline, format!("theta_final: {e}")))?;
        let (m, n) = (m as usize, n as usize);
        let mut rows = Vec::with_capacity(m);
        for _ in 0..m {
            let (ln, line) = lines
                .next()
                .ok_or_else(|| Error::parse(hline, "fewer rows than the header declares"))?;
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|e| Error::parse(ln, format!("{t:?}: {e}"))))
                .collect::<Result<_>>()?;
            if row.len() != n {
                return Err(Error::parse(ln, format!("expected {n} weights, found {}", row.len())));
            }
            rows.push(row);
        }
        let g = NeuralGraph::from_dense_rows(n, q as u32, &rows)?;
        Ok((g, WeightsHeader { seed, theta_final }))
    }

    /// Writes the edge-list format: header `n m d_p d_c`, then
    /// `pattern constraint weight` lines. `d_p`/`d_c` are 0 when that side is
    /// irregular.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> Result<()> {
        let dp = self.pattern_regular_degree().unwrap_or(0);
        let cdeg = self.constraint_degrees();
        let dc = match cdeg.first() {
            Some(&d) if cdeg.iter().all(|&x| x == d) => d,
            _ => 0,
        };
        writeln!(out, "{} {} {} {}", self.n(), self.m(), dp, dc)?;
        for j in 0..self.n() {
            for &(i, w) in self.weights.col(j) {
                writeln!(out, "{j} {i} {}", fmt_weight(w))?;
            }
        }
        Ok(())
    }

    /// Reads the edge-list format. The declared `d_p` must match the pattern
    /// degrees when it is nonzero.
    pub fn read_edge_list<R: BufRead>(input: R, q: u32) -> Result<Self> {
        let mut lines = read_data_lines(input)?;
        let (hline, header) = lines.next().ok_or_else(|| Error::parse(0, "missing header"))?;
        let [n, m, dp, _dc]: [usize; 4] = parse_header(hline, &header)?;
        let mut edges = Vec::new();
        for (ln, line) in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 3 {
                return Err(Error::parse(ln, "edge lines are `pattern constraint weight`"));
            }
            let p: usize = f[0].parse().map_err(|e| Error::parse(ln, format!("{e}")))?;
            let c: usize = f[1].parse().map_err(|e| Error::parse(ln, format!("{e}")))?;
            let w: f64 = f[2].parse().map_err(|e| Error::parse(ln, format!("{e}")))?;
            edges.push((p, c, w));
        }
        let g = NeuralGraph::from_edges(n, m, q, &edges)?;
        if dp != 0 && g.pattern_regular_degree() != Some(dp) {
            return Err(Error::parse(hline, format!("graph is not {dp}-regular on the pattern side")));
        }
        Ok(g)
    }
}

/// Metadata stored alongside learned weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightsHeader {
    pub seed: u64,
    pub theta_final: f64,
}

/// Edge-perspective degree distributions of a graph.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeDistribution {
    /// degree → fraction of edges incident to pattern neurons of that degree
    pub lambda: BTreeMap<usize, f64>,
    /// degree → fraction of edges incident to constraint neurons of that degree
    pub rho: BTreeMap<usize, f64>,
    /// average pattern-neuron degree over all `n` pattern neurons
    pub dbar: f64,
}

fn poly(dist: &BTreeMap<usize, f64>, z: f64) -> f64 {
    dist.iter().map(|(&d, &f)| f * z.powi(d as i32 - 1)).sum()
}

impl DegreeDistribution {
    /// `λ(z) = Σ λ_d z^(d−1)`.
    pub fn lambda_poly(&self, z: f64) -> f64 {
        poly(&self.lambda, z)
    }

    /// `ρ(z) = Σ ρ_d z^(d−1)`.
    pub fn rho_poly(&self, z: f64) -> f64 {
        poly(&self.rho, z)
    }

    /// Distribution of a graph whose pattern neurons all have degree `d`.
    pub fn pattern_regular(d: usize) -> Self {
        DegreeDistribution {
            lambda: BTreeMap::from([(d, 1.0)]),
            rho: BTreeMap::new(),
            dbar: d as f64,
        }
    }
}

fn edge_fractions(degrees: &[usize]) -> BTreeMap<usize, f64> {
    let total: usize = degrees.iter().sum();
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &d in degrees.iter().filter(|&&d| d > 0) {
        *counts.entry(d).or_default() += d;
    }
    counts
        .into_iter()
        .map(|(d, e)| (d, e as f64 / total as f64))
        .collect()
}

pub fn degree_distributions(g: &NeuralGraph) -> Result<DegreeDistribution> {
    let pdeg = g.pattern_degrees();
    let edges: usize = pdeg.iter().sum();
    if edges == 0 {
        return Err(Error::EmptyGraph);
    }
    Ok(DegreeDistribution {
        lambda: edge_fractions(&pdeg),
        rho: edge_fractions(&g.constraint_degrees()),
        dbar: edges as f64 / g.n() as f64,
    })
}

/// Fraction of nonzero entries, `κ/n`.
pub fn sparsity_measure(w: &[f64]) -> f64 {
    if w.is_empty() {
        return 0.0;
    }
    w.iter().filter(|&&v| v != 0.0).count() as f64 / w.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackwardMode {
    /// `W^b_ij = sign(W_ij)`
    Sign,
    /// `W^b_ij = W_ij`
    Symmetric,
}

/// Weights used for the constraint → pattern messages.
#[derive(Debug, Clone, PartialEq)]
pub struct BackwardWeights {
    pub mode: BackwardMode,
    pub matrix: SparseMatrix,
}

pub fn backward_weights(g: &NeuralGraph, mode: BackwardMode) -> BackwardWeights {
    let matrix = match mode {
        BackwardMode::Sign => g.weights().map_values(f64::signum),
        BackwardMode::Symmetric => g.weights().clone(),
    };
    BackwardWeights { mode, matrix }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn degrees_122() -> NeuralGraph {
        // pattern degrees (1, 2, 2); constraint degrees (2, 3)
        NeuralGraph::from_dense_rows(3, 4, &[vec![0.3, -2.0, 0.0], vec![0.0, 1.0, 0.5]])
            .map(|_| ())
            .unwrap();
        NeuralGraph::from_dense_rows(3, 4, &[vec![0.0, -2.0, 1.5], vec![0.7, 1.0, 0.5]]).unwrap()
    }

    #[test]
    fn rejects_empty_rows() {
        assert!(NeuralGraph::from_dense_rows(2, 3, &[vec![0.0, 0.0]]).is_err());
        assert!(NeuralGraph::from_dense_rows(2, 3, &[vec![1.0]]).is_err());
    }

    #[test]
    fn degree_fractions_by_count() {
        let g = degrees_122();
        assert_eq!(g.pattern_degrees(), vec![1, 2, 2]);
        let dd = degree_distributions(&g).unwrap();
        assert!((dd.lambda[&1] - 0.2).abs() < 1e-15);
        assert!((dd.lambda[&2] - 0.8).abs() < 1e-15);
        assert!((dd.rho[&2] - 0.4).abs() < 1e-15);
        assert!((dd.rho[&3] - 0.6).abs() < 1e-15);
        assert!((dd.dbar - 5.0 / 3.0).abs() < 1e-15);
        assert!((dd.lambda_poly(1.0) - 1.0).abs() < 1e-12);
        assert!((dd.rho_poly(1.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn regular_lambda_is_a_monomial() {
        let rows = vec![vec![1.0, -1.0, 2.0], vec![0.5, 0.5, -0.5], vec![1.0, 1.0, 1.0]];
        let g = NeuralGraph::from_dense_rows(3, 5, &rows).unwrap();
        let dd = degree_distributions(&g).unwrap();
        for z in [0.0, 0.3, 0.9] {
            assert!((dd.lambda_poly(z) - z.powi(2)).abs() < 1e-15);
        }
    }

    #[test]
    fn sparsity_examples() {
        assert_eq!(sparsity_measure(&[0.0; 4]), 0.0);
        assert_eq!(sparsity_measure(&[1.0, 0.0, 0.0, 2.0]), 0.5);
        assert_eq!(sparsity_measure(&[1.0, -3.0]), 1.0);
    }

    #[test]
    fn backward_weight_modes() {
        let g = NeuralGraph::from_dense_rows(3, 4, &[vec![0.3, -2.0, 0.0]]).unwrap();
        let sign = backward_weights(&g, BackwardMode::Sign);
        assert_eq!(sign.matrix.to_dense(), vec![vec![1.0, -1.0, 0.0]]);
        let sym = backward_weights(&g, BackwardMode::Symmetric);
        assert_eq!(sym.matrix, *g.weights());
    }

    #[test]
    fn weights_and_edge_list_round_trip() {
        let g = degrees_122();
        let mut buf = Vec::new();
        g.write_weights(&mut buf, 42, 0.0155).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("2 3 4 42 0.0155\n0 -2 1.5\n"));
        let (back, header) = NeuralGraph::read_weights(&buf[..]).unwrap();
        assert_eq!(back, g);
        assert_eq!(header, WeightsHeader { seed: 42, theta_final: 0.0155 });

        let mut buf = Vec::new();
        g.write_edge_list(&mut buf).unwrap();
        let back = NeuralGraph::read_edge_list(&buf[..], 4).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn edge_list_checks_declared_degree() {
        let text = "2 1 2 2\n0 0 1.0\n1 0 -1.0\n";
        assert!(NeuralGraph::read_edge_list(text.as_bytes(), 3).is_err());
        let text = "2 2 1 1\n0 0 1.0\n1 1 -1.0\n";
        let g = NeuralGraph::read_edge_list(text.as_bytes(), 3).unwrap();
        assert_eq!(g.pattern_regular_degree(), Some(1));
    }
}
