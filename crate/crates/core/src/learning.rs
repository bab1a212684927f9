//! Learning sparse constraint vectors orthogonal to a training set.
//!
//! Each constraint is found by a stochastic pass-based rule that pulls the
//! iterate toward the null space of the patterns while shrinking its small
//! entries. `m` independent instances, each from its own sparse random start,
//! make up the neural graph.

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::NeuralGraph;
use crate::linalg::{dot, norm2, numeric_rank};
use crate::patterns::{Pattern, TrainingSet};
use crate::seed::{derive_seed, rng_from_seed, Rng};

/// Probability that an entry of the random initial vector is nonzero.
pub const INIT_DENSITY: f64 = 0.2;
/// Rows whose absolute cosine with an earlier row exceeds this are duplicates.
pub const DEDUP_COSINE: f64 = 0.95;
/// Fresh restarts tried for a duplicated row before it is dropped.
pub const DEDUP_RETRIES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearningConfig {
    pub alpha0: f64,
    pub eta: f64,
    pub theta0: f64,
    pub epsilon: f64,
    pub max_passes: usize,
    /// number of constraints to learn
    pub m: usize,
}

impl LearningConfig {
    /// `α_t = α0/t`.
    pub fn alpha(&self, t: usize) -> f64 {
        self.alpha0 / t as f64
    }

    /// `θ_t = θ0/t`.
    pub fn theta(&self, t: usize) -> f64 {
        self.theta0 / t as f64
    }

    /// Checks ranges and the all-zero guard. Since `α_t` is largest at
    /// `t = 1`, `2·α0·η < 1` covers every pass.
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive and finite, got {v}")))
            }
        };
        positive("alpha0", self.alpha0)?;
        positive("theta0", self.theta0)?;
        positive("epsilon", self.epsilon)?;
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::Config(format!("eta must be non-negative, got {}", self.eta)));
        }
        if self.max_passes == 0 {
            return Err(Error::Config("max_passes must be at least 1".into()));
        }
        check_guard(self.alpha0, self.eta)
    }
}

fn check_guard(alpha_t: f64, eta: f64) -> Result<()> {
    if 2.0 * alpha_t * eta < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "step size {alpha_t} and penalty {eta} violate 2*alpha*eta < 1; the iterate can collapse to zero"
        )))
    }
}

/// A constraint vector; output vectors are unit-norm.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintVector(pub Vec<f64>);

impl ConstraintVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> f64 {
        norm2(&self.0)
    }
}

/// `y = x·w`.
pub fn project(x: &Pattern, w: &ConstraintVector) -> Result<f64> {
    if x.len() != w.len() {
        return Err(Error::DimensionMismatch {
            expected: w.len(),
            got: x.len(),
        });
    }
    Ok(x.as_slice().iter().zip(&w.0).map(|(&a, b)| a as f64 * b).sum())
}

/// `Γ_i = w_i` when `|w_i| ≤ θ`, else 0.
pub fn sparsity_gradient(w: &[f64], theta: f64) -> Vec<f64> {
    w.iter().map(|&v| if v.abs() <= theta { v } else { 0.0 }).collect()
}

/// One update `w − α·[y·(x − y·w/‖w‖²) + η·Γ(w)]` with `y = x·w`.
pub fn learning_step(w: &[f64], x: &[f64], alpha_t: f64, eta: f64, theta_t: f64) -> Result<Vec<f64>> {
    if x.len() != w.len() {
        return Err(Error::DimensionMismatch {
            expected: w.len(),
            got: x.len(),
        });
    }
    check_guard(alpha_t, eta)?;
    let mut out = w.to_vec();
    step_in_place(&mut out, x, alpha_t, eta, theta_t)?;
    Ok(out)
}

fn step_in_place(w: &mut [f64], x: &[f64], alpha: f64, eta: f64, theta: f64) -> Result<()> {
    let ww = dot(w, w);
    if !(ww > 0.0 && ww.is_finite()) {
        return Err(Error::ZeroIterate);
    }
    let y = dot(x, w);
    let c = y / ww;
    for (wi, &xi) in w.iter_mut().zip(x) {
        let gamma = if wi.abs() <= theta { *wi } else { 0.0 };
        *wi -= alpha * (y * (xi - c * *wi) + eta * gamma);
    }
    Ok(())
}

/// `Σ_µ (x^µ·w)²`.
pub fn residual_energy(x: &TrainingSet, w: &[f64]) -> f64 {
    x.patterns()
        .iter()
        .map(|p| {
            let y: f64 = p.as_slice().iter().zip(w).map(|(&a, b)| a as f64 * b).sum();
            y * y
        })
        .sum()
}

/// Sparse random start: each entry nonzero with probability 0.2, uniform in
/// `[−1, 1]`, then normalized.
pub fn sparse_initial_vector(n: usize, rng: &mut Rng) -> Vec<f64> {
    loop {
        let w: Vec<f64> = (0..n)
            .map(|_| {
                if rng.gen_bool(INIT_DENSITY) {
                    rng.gen_range(-1.0..=1.0)
                } else {
                    0.0
                }
            })
            .collect();
        let norm = norm2(&w);
        if norm > 0.0 {
            return w.into_iter().map(|v| v / norm).collect();
        }
    }
}

/// Normalize, zero entries with `|w_i| ≤ θ`, and normalize again. `None` if
/// nothing survives.
pub fn prune(w: &[f64], theta: f64) -> Option<Vec<f64>> {
    let norm = norm2(w);
    if norm == 0.0 {
        return None;
    }
    let pruned: Vec<f64> = w
        .iter()
        .map(|&v| {
            let u = v / norm;
            if u.abs() <= theta {
                0.0
            } else {
                u
            }
        })
        .collect();
    let norm = norm2(&pruned);
    (norm > 0.0).then(|| pruned.into_iter().map(|v| v / norm).collect())
}

/// A converged constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnedConstraint {
    /// unit-norm, pruned
    pub w: ConstraintVector,
    /// passes used (0 when the start already satisfied the residual bound)
    pub passes: usize,
    pub residual: f64,
    /// pruning threshold applied to `w` (0 when unpruned)
    pub theta_final: f64,
}

fn unit_rows(x: &TrainingSet) -> Vec<Vec<f64>> {
    x.patterns()
        .iter()
        .map(|p| {
            let v = p.to_f64();
            let norm = norm2(&v);
            if norm == 0.0 {
                v
            } else {
                v.into_iter().map(|a| a / norm).collect()
            }
        })
        .collect()
}

/// The last pruned candidate of a learning run, converged or not.
#[derive(Debug, Clone, PartialEq)]
pub struct LearningAttempt {
    /// `None` when every pass pruned the iterate to zero
    pub candidate: Option<LearnedConstraint>,
    pub converged: bool,
    /// residual of the last candidate (of the start when there is none)
    pub residual: f64,
}

/// Runs the learning rule until the pruned candidate has residual energy at
/// most `ε` or `max_passes` is reached, keeping the last candidate.
///
/// Updates are driven by unit-normalized patterns. This leaves the null space
/// unchanged while keeping the effective step independent of the pattern
/// magnitudes, which otherwise make the rule diverge for `α0` near 1.
/// The iterate itself is never pruned; after each pass a pruned, normalized
/// copy is tested against the raw patterns.
pub fn learn_attempt(x: &TrainingSet, cfg: &LearningConfig, rng: &mut Rng) -> Result<LearningAttempt> {
    cfg.validate()?;
    let n = x.spec().n;
    let mut w = sparse_initial_vector(n, rng);
    let initial = residual_energy(x, &w);
    if initial <= cfg.epsilon {
        return Ok(LearningAttempt {
            candidate: Some(LearnedConstraint {
                w: ConstraintVector(w),
                passes: 0,
                residual: initial,
                theta_final: 0.0,
            }),
            converged: true,
            residual: initial,
        });
    }
    let rows = unit_rows(x);
    let mut order: Vec<usize> = (0..rows.len()).collect();
    let mut last = None;
    let mut residual = initial;
    for t in 1..=cfg.max_passes {
        let (alpha, theta) = (cfg.alpha(t), cfg.theta(t));
        order.shuffle(rng);
        for &mu in &order {
            step_in_place(&mut w, &rows[mu], alpha, cfg.eta, theta)?;
        }
        if let Some(candidate) = prune(&w, theta) {
            residual = residual_energy(x, &candidate);
            let lc = LearnedConstraint {
                w: ConstraintVector(candidate),
                passes: t,
                residual,
                theta_final: theta,
            };
            if residual <= cfg.epsilon {
                return Ok(LearningAttempt {
                    candidate: Some(lc),
                    converged: true,
                    residual,
                });
            }
            last = Some(lc);
        }
    }
    Ok(LearningAttempt {
        candidate: last,
        converged: false,
        residual,
    })
}

/// [`learn_attempt`], failing with `NotConverged` when the bound is not met.
pub fn learn_constraint(x: &TrainingSet, cfg: &LearningConfig, rng: &mut Rng) -> Result<LearnedConstraint> {
    let a = learn_attempt(x, cfg, rng)?;
    match a.candidate {
        Some(lc) if a.converged => Ok(lc),
        _ => Err(Error::NotConverged {
            passes: cfg.max_passes,
            residual: a.residual,
            epsilon: cfg.epsilon,
        }),
    }
}

/// Per-row learning diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct RowReport {
    pub passes: usize,
    pub residual: f64,
    pub theta_final: f64,
    /// fresh restarts used to escape a duplicate
    pub restarts: usize,
    pub sparsity: f64,
}

/// The outcome of learning a whole graph.
#[derive(Debug, Clone)]
pub struct LearnedGraph {
    pub graph: NeuralGraph,
    /// one entry per kept row, in row order
    pub rows: Vec<RowReport>,
    pub requested: usize,
    /// rows kept after deduplication
    pub distinct: usize,
    /// numeric rank of the kept rows
    pub rank: usize,
    pub seed: u64,
    /// smallest pruning threshold over the kept rows
    pub theta_final: f64,
}

fn is_duplicate(w: &[f64], kept: &[Vec<f64>]) -> bool {
    kept.iter().any(|k| dot(w, k).abs() > DEDUP_COSINE)
}

/// Learns `cfg.m` constraints in parallel. Instance `i`, attempt `a` uses the
/// seed derived from `(seed, i, a)`, so the result does not depend on thread
/// scheduling. Rows are deduplicated in index order; a duplicate is re-learned
/// from fresh starts and dropped if it stays a duplicate.
pub fn learn_graph(x: &TrainingSet, cfg: &LearningConfig, seed: u64) -> Result<LearnedGraph> {
    cfg.validate()?;
    let spec = x.spec();
    let attempt = |i: usize, a: usize| {
        let mut rng = rng_from_seed(derive_seed(seed, &[i as u64, a as u64]));
        learn_constraint(x, cfg, &mut rng).map_err(|e| e.in_stage(format!("constraint {i}")))
    };
    let first: Vec<LearnedConstraint> = (0..cfg.m)
        .into_par_iter()
        .map(|i| attempt(i, 0))
        .collect::<Result<_>>()?;

    let mut kept: Vec<Vec<f64>> = Vec::with_capacity(cfg.m);
    let mut rows = Vec::with_capacity(cfg.m);
    for (i, mut lc) in first.into_iter().enumerate() {
        let mut restarts = 0;
        while is_duplicate(lc.w.as_slice(), &kept) && restarts < DEDUP_RETRIES {
            restarts += 1;
            lc = attempt(i, restarts)?;
        }
        if is_duplicate(lc.w.as_slice(), &kept) {
            continue;
        }
        rows.push(RowReport {
            passes: lc.passes,
            residual: lc.residual,
            theta_final: lc.theta_final,
            restarts,
            sparsity: crate::graph::sparsity_measure(lc.w.as_slice()),
        });
        kept.push(lc.w.0);
    }
    let rank = numeric_rank(&kept, 1e-8);
    let theta_final = rows.iter().map(|r| r.theta_final).fold(f64::INFINITY, f64::min);
    let graph = NeuralGraph::from_dense_rows(spec.n, spec.q, &kept)?;
    Ok(LearnedGraph {
        graph,
        distinct: rows.len(),
        rows,
        requested: cfg.m,
        rank,
        seed,
        theta_final: if theta_final.is_finite() { theta_final } else { 0.0 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patterns::ModelSpec;
    use crate::seed::rng_from_seed;

    fn cfg(m: usize) -> LearningConfig {
        LearningConfig {
            alpha0: 0.95,
            eta: 0.45,
            theta0: 0.01,
            epsilon: 1e-3,
            // four patterns per pass: the decaying schedule needs many passes
            max_passes: 3000,
            m,
        }
    }

    fn small_set() -> TrainingSet {
        let spec = ModelSpec::new(11, 4, 2).unwrap();
        let rows = [[0, 0, 0, 0], [1, 0, 1, 0], [0, 1, 0, 1], [1, 1, 1, 1]];
        let pats = rows
            .iter()
            .map(|r| Pattern::new(r.to_vec(), 11).unwrap())
            .collect();
        TrainingSet::new(spec, pats, 0).unwrap()
    }

    #[test]
    fn projection_examples() {
        let x = Pattern::new(vec![1, 1, 1, 1], 2).unwrap();
        let w = ConstraintVector(vec![0.5, 0.5, -0.5, -0.5]);
        assert_eq!(project(&x, &w).unwrap(), 0.0);
        let x = Pattern::new(vec![1, 0, 0, 0], 2).unwrap();
        let w = ConstraintVector(vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(project(&x, &w).unwrap(), 1.0);
        assert!(project(&x, &ConstraintVector(vec![1.0])).is_err());
    }

    #[test]
    fn gradient_includes_the_boundary() {
        assert_eq!(sparsity_gradient(&[0.001, 0.5], 0.01), vec![0.001, 0.0]);
        assert_eq!(sparsity_gradient(&[0.02, -0.005, 0.01], 0.01), vec![0.0, -0.005, 0.01]);
        assert_eq!(sparsity_gradient(&[0.0; 3], 0.01), vec![0.0; 3]);
    }

    #[test]
    fn step_cases() {
        // y = 0, all entries above threshold
        let w = [0.5, -0.25];
        let x = [1.0, 2.0];
        assert_eq!(learning_step(&w, &x, 0.4, 1.0, 0.1).unwrap(), w.to_vec());
        // y = 0, one small entry shrinks by (1 − αη)
        let w = [0.005, 0.0, 0.9];
        let x = [0.0, 1.0, 0.0];
        let out = learning_step(&w, &x, 0.2, 1.5, 0.01).unwrap();
        assert!((out[0] - 0.005 * (1.0 - 0.3)).abs() < 1e-15);
        assert_eq!(out[2], 0.9);
        // zero step
        assert_eq!(learning_step(&[0.3, 0.1], &[1.0, 2.0], 0.0, 1.0, 0.5).unwrap(), vec![0.3, 0.1]);
        // guard
        assert!(matches!(learning_step(&w, &x, 0.5, 1.0, 0.01), Err(Error::Config(_))));
        assert!(matches!(learning_step(&[0.0, 0.0], &[1.0, 1.0], 0.1, 1.0, 0.01), Err(Error::ZeroIterate)));
    }

    #[test]
    fn residual_examples() {
        let spec = ModelSpec::new(2, 2, 1).unwrap();
        let x = TrainingSet::new(spec, vec![Pattern::new(vec![1, 0], 2).unwrap()], 0).unwrap();
        assert!((residual_energy(&x, &[0.6, 0.8]) - 0.36).abs() < 1e-15);
        assert!((residual_energy(&x, &[1.2, 1.6]) - 4.0 * 0.36).abs() < 1e-12);
        assert_eq!(residual_energy(&x, &[0.0, 1.0]), 0.0);
    }

    #[test]
    fn config_guard() {
        let mut c = cfg(1);
        assert!(c.validate().is_ok());
        c.eta = 1.0;
        assert!(c.validate().is_err());
        c.alpha0 = 0.45;
        assert!(c.validate().is_ok());
        c.alpha0 = 0.95;
        assert!((c.alpha(5) - 0.19).abs() < 1e-15);
    }

    #[test]
    fn zero_data_returns_the_start() {
        let spec = ModelSpec::new(3, 5, 1).unwrap();
        let x = TrainingSet::new(spec, vec![Pattern::new(vec![0; 5], 3).unwrap()], 0).unwrap();
        let mut a = rng_from_seed(9);
        let got = learn_constraint(&x, &cfg(1), &mut a).unwrap();
        let mut b = rng_from_seed(9);
        assert_eq!(got.w.0, sparse_initial_vector(5, &mut b));
        assert_eq!(got.passes, 0);
    }

    #[test]
    fn full_rank_data_does_not_converge() {
        let spec = ModelSpec::new(3, 3, 3).unwrap();
        let pats = [[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 1]]
            .iter()
            .map(|r| Pattern::new(r.to_vec(), 3).unwrap())
            .collect();
        let x = TrainingSet::new(spec, pats, 0).unwrap();
        let mut c = cfg(1);
        c.max_passes = 30;
        let err = learn_constraint(&x, &c, &mut rng_from_seed(1)).unwrap_err();
        assert!(matches!(err, Error::NotConverged { .. } | Error::ZeroIterate), "{err}");
    }

    #[test]
    fn small_subspace_constraint() {
        let x = small_set();
        // |x·w| <= 1e-2 per row needs a residual bound of 1e-4
        let c = LearningConfig {
            epsilon: 1e-4,
            max_passes: 30_000,
            ..cfg(1)
        };
        for s in 0..10 {
            let lc = learn_constraint(&x, &c, &mut rng_from_seed(s)).unwrap();
            assert!((lc.w.norm() - 1.0).abs() < 1e-12);
            for g in [[1.0, 0.0, 1.0, 0.0], [0.0, 1.0, 0.0, 1.0]] {
                assert!(dot(&g, lc.w.as_slice()).abs() <= 1e-2);
            }
            assert!(lc.residual <= 1e-4);
        }
    }

    #[test]
    fn small_graph_spans_the_complement() {
        let x = small_set();
        let lg = learn_graph(&x, &cfg(2), 3).unwrap();
        assert_eq!(lg.requested, 2);
        assert!(lg.distinct >= 1);
        assert_eq!(lg.rank, lg.distinct);
        // every kept row lies in span{(1,0,−1,0), (0,1,0,−1)}
        for row in lg.graph.dense_rows() {
            assert!((row[0] + row[2]).abs() < 0.05 && (row[1] + row[3]).abs() < 0.05, "{row:?}");
        }
    }

    #[test]
    fn empty_graph_is_allowed() {
        let x = small_set();
        let lg = learn_graph(&x, &cfg(0), 3).unwrap();
        assert_eq!(lg.graph.m(), 0);
        assert_eq!(lg.rank, 0);
    }

    #[test]
    fn graph_learning_is_deterministic() {
        let x = small_set();
        let a = learn_graph(&x, &cfg(2), 11).unwrap();
        let b = learn_graph(&x, &cfg(2), 11).unwrap();
        assert_eq!(a.graph, b.graph);
        assert_eq!(a.rows, b.rows);
    }
}
