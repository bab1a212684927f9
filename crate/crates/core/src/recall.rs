//! Iterative noise removal on the neural graph.
//!
//! Constraint neurons report which way their weighted sum is off; pattern
//! neurons that collect enough agreeing feedback step by ±1. Three decoders:
//! winner-take-all (one neuron per round), majority voting with sign feedback,
//! and majority voting with the real weights normalized by column `ℓ1` norm.

use rand::seq::index;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::graph::{backward_weights, BackwardMode, BackwardWeights, NeuralGraph, SparseMatrix};
use crate::patterns::Pattern;
use crate::seed::Rng;

/// Signed ±1 noise before clipping. Zero off the support.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NoiseVector(pub Vec<i32>);

impl NoiseVector {
    pub fn weight(&self) -> usize {
        self.0.iter().filter(|&&z| z != 0).count()
    }
}

/// Adds ±1 (uniform sign) at `e` distinct uniformly chosen positions and
/// clips to `[0, Q−1]`.
pub fn inject_noise(x: &Pattern, e: usize, q: u32, rng: &mut Rng) -> Result<(Pattern, NoiseVector)> {
    let n = x.len();
    if e > n {
        return Err(Error::Config(format!("cannot corrupt {e} of {n} positions")));
    }
    let mut z = vec![0i32; n];
    let mut out = x.as_slice().to_vec();
    for j in index::sample(rng, n, e) {
        let s = if rng.gen_bool(0.5) { 1 } else { -1 };
        z[j] = s;
        out[j] = (out[j] as i64 + s as i64).clamp(0, q as i64 - 1) as u32;
    }
    Ok((Pattern::new(out, q)?, NoiseVector(z)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecallVariant {
    Wta,
    Mv,
    MvL1,
}

impl RecallVariant {
    pub fn name(self) -> &'static str {
        match self {
            RecallVariant::Wta => "wta",
            RecallVariant::Mv => "mv",
            RecallVariant::MvL1 => "mv_l1",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "wta" => Ok(RecallVariant::Wta),
            "mv" => Ok(RecallVariant::Mv),
            "mv_l1" | "mvl1" => Ok(RecallVariant::MvL1),
            other => Err(Error::Config(format!("unknown recall variant {other:?}"))),
        }
    }

    fn backward_mode(self) -> BackwardMode {
        match self {
            RecallVariant::MvL1 => BackwardMode::Symmetric,
            _ => BackwardMode::Sign,
        }
    }

    fn norm(self) -> Norm {
        match self {
            RecallVariant::MvL1 => Norm::L1,
            _ => Norm::L0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecallConfig {
    pub phi: f64,
    pub tmax: usize,
    pub variant: RecallVariant,
    /// `|h_i|` at or below this counts as a satisfied constraint
    pub zero_tol: f64,
}

impl RecallConfig {
    pub const DEFAULT_ZERO_TOL: f64 = 1e-9;

    pub fn new(variant: RecallVariant, phi: f64, tmax: usize) -> Self {
        RecallConfig {
            phi,
            tmax,
            variant,
            zero_tol: Self::DEFAULT_ZERO_TOL,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.phi > 0.0 && self.phi <= 1.0) {
            return Err(Error::Config(format!("phi must lie in (0, 1], got {}", self.phi)));
        }
        if self.tmax < 1 {
            return Err(Error::Config("tmax must be at least 1".into()));
        }
        if self.zero_tol.is_nan() || self.zero_tol < 0.0 {
            return Err(Error::Config(format!("zero_tol must be non-negative, got {}", self.zero_tol)));
        }
        Ok(())
    }
}

/// `max(1, factor·e)`.
pub fn tmax_for(errors: usize, factor: usize) -> usize {
    (factor * errors).max(1)
}

/// `h = M·x` and `y_i = −sign(h_i)`, with `|h_i| ≤ zero_tol` mapped to 0.
pub fn forward_iteration(weights: &SparseMatrix, x: &[u32], zero_tol: f64) -> (Vec<f64>, Vec<i8>) {
    let h: Vec<f64> = (0..weights.n_rows())
        .map(|i| weights.row(i).iter().map(|&(j, w)| w * x[j] as f64).sum())
        .collect();
    let y = h
        .iter()
        .map(|&v| {
            if v.abs() <= zero_tol {
                0
            } else if v < 0.0 {
                1
            } else {
                -1
            }
        })
        .collect();
    (h, y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    /// normalize by the pattern neuron's degree
    L0,
    /// normalize by the `ℓ1` norm of the pattern neuron's backward weights
    L1,
}

fn denominators(wb: &SparseMatrix, norm: Norm) -> Vec<f64> {
    (0..wb.n_cols())
        .map(|j| match norm {
            Norm::L0 => wb.col(j).len() as f64,
            Norm::L1 => wb.col(j).iter().map(|(_, w)| w.abs()).sum(),
        })
        .collect()
}

fn feedback(wb: &SparseMatrix, denom: &[f64], y: &[i8]) -> (Vec<f64>, Vec<f64>) {
    let mut g1 = vec![0.0; wb.n_cols()];
    let mut g2 = vec![0.0; wb.n_cols()];
    for j in 0..wb.n_cols() {
        if denom[j] == 0.0 {
            continue;
        }
        let (mut s1, mut s2) = (0.0, 0.0);
        for &(i, w) in wb.col(j) {
            let v = w * y[i] as f64;
            s1 += v;
            s2 += v.abs();
        }
        g1[j] = s1 / denom[j];
        g2[j] = s2 / denom[j];
    }
    (g1, g2)
}

/// `g1_j = Σ_i Wb_ij·y_i / D_j` and `g2_j = Σ_i |Wb_ij·y_i| / D_j`.
pub fn backward_feedback(wb: &BackwardWeights, y: &[i8], norm: Norm) -> (Vec<f64>, Vec<f64>) {
    feedback(&wb.matrix, &denominators(&wb.matrix, norm), y)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecallOutcome {
    pub x_out: Pattern,
    /// state after the first round (the input when it was already consistent)
    pub x_first: Pattern,
    pub converged: bool,
    /// rounds run
    pub iterations: usize,
}

impl RecallOutcome {
    pub fn bit_errors_first(&self, truth: &Pattern) -> usize {
        self.x_first.hamming(truth)
    }

    pub fn bit_errors_final(&self, truth: &Pattern) -> usize {
        self.x_out.hamming(truth)
    }
}

/// A graph prepared for repeated recall with one configuration.
#[derive(Debug, Clone)]
pub struct Decoder<'g> {
    graph: &'g NeuralGraph,
    backward: BackwardWeights,
    denom: Vec<f64>,
    cfg: RecallConfig,
}

impl<'g> Decoder<'g> {
    pub fn new(graph: &'g NeuralGraph, cfg: RecallConfig) -> Result<Self> {
        cfg.validate()?;
        let backward = backward_weights(graph, cfg.variant.backward_mode());
        let denom = denominators(&backward.matrix, cfg.variant.norm());
        Ok(Decoder {
            graph,
            backward,
            denom,
            cfg,
        })
    }

    pub fn config(&self) -> &RecallConfig {
        &self.cfg
    }

    /// Runs up to `tmax` rounds with the given cap overriding the configured one.
    pub fn recall_with_tmax(&self, x0: &Pattern, tmax: usize) -> Result<RecallOutcome> {
        if x0.len() != self.graph.n() {
            return Err(Error::DimensionMismatch {
                expected: self.graph.n(),
                got: x0.len(),
            });
        }
        let q = self.graph.q() as i64;
        let mut x = x0.as_slice().to_vec();
        let mut first = None;
        let tmax = tmax.max(1);
        for it in 0..tmax {
            let (_, y) = forward_iteration(self.graph.weights(), &x, self.cfg.zero_tol);
            if y.iter().all(|&v| v == 0) {
                let out = Pattern::new(x, self.graph.q())?;
                return Ok(RecallOutcome {
                    x_first: first.unwrap_or_else(|| out.clone()),
                    x_out: out,
                    converged: true,
                    iterations: it,
                });
            }
            let (g1, g2) = feedback(&self.backward.matrix, &self.denom, &y);
            let step = |v: u32, g: f64| (v as i64 + g.signum() as i64).clamp(0, q - 1) as u32;
            match self.cfg.variant {
                RecallVariant::Wta => {
                    let mut best = 0;
                    for j in 1..g2.len() {
                        if g2[j] > g2[best] {
                            best = j;
                        }
                    }
                    if g1[best] != 0.0 {
                        x[best] = step(x[best], g1[best]);
                    }
                }
                RecallVariant::Mv | RecallVariant::MvL1 => {
                    let phi = self.cfg.phi;
                    // with φ = 1 a strict comparison could never fire
                    let fires = |g: f64| if phi >= 1.0 { g >= phi - 1e-12 } else { g > phi };
                    for j in 0..x.len() {
                        if fires(g2[j].abs()) && g1[j] != 0.0 {
                            x[j] = step(x[j], g1[j]);
                        }
                    }
                }
            }
            if it == 0 {
                first = Some(Pattern::new(x.clone(), self.graph.q())?);
            }
        }
        let (_, y) = forward_iteration(self.graph.weights(), &x, self.cfg.zero_tol);
        let out = Pattern::new(x, self.graph.q())?;
        Ok(RecallOutcome {
            x_first: first.unwrap_or_else(|| out.clone()),
            x_out: out,
            converged: y.iter().all(|&v| v == 0),
            iterations: tmax,
        })
    }

    pub fn recall(&self, x0: &Pattern) -> Result<RecallOutcome> {
        self.recall_with_tmax(x0, self.cfg.tmax)
    }
}

/// Winner-take-all recall: one pattern neuron (largest `g2`, lowest index on
/// ties) moves by `sign(g1)` per round.
pub fn wta_recall(g: &NeuralGraph, x0: &Pattern, cfg: &RecallConfig) -> Result<RecallOutcome> {
    if cfg.variant != RecallVariant::Wta {
        return Err(Error::Config("wta_recall needs the wta variant".into()));
    }
    Decoder::new(g, *cfg)?.recall(x0)
}

/// Majority-voting recall: every pattern neuron whose `g2` clears `φ` moves
/// by `sign(g1)`.
pub fn mv_recall(g: &NeuralGraph, x0: &Pattern, cfg: &RecallConfig) -> Result<RecallOutcome> {
    if cfg.variant == RecallVariant::Wta {
        return Err(Error::Config("mv_recall needs the mv or mv_l1 variant".into()));
    }
    Decoder::new(g, *cfg)?.recall(x0)
}
