//! Predicted recall error rates from degree statistics.
//!
//! After one round of majority voting a correct pattern neuron goes wrong
//! when all (or a `φ` fraction) of its constraints sit in the neighborhood of
//! the error set; an erroneous neuron may stay wrong when it shares at least
//! half of its constraints with other errors. Both are binomial tails in the
//! fraction `S/m` of constraints touched by the errors.

use rand::seq::index;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::DegreeDistribution;
use crate::seed::{derived_rng, Rng};

/// Expected number of constraints adjacent to `e` errors:
/// `m·(1 − (1 − d̄/m)^e)`.
pub fn neighborhood_size(e: usize, dbar: f64, m: usize) -> f64 {
    let m = m as f64;
    m * (1.0 - (1.0 - dbar / m).powi(e as i32))
}

/// `Σ_{i=start}^{d} C(d,i)·p^i·(1−p)^(d−i)`, summed in log space.
pub fn binomial_tail(d: usize, start: usize, p: f64) -> f64 {
    if start > d {
        return 0.0;
    }
    if start == 0 {
        return 1.0;
    }
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    let (lp, lq) = (p.ln(), (1.0 - p).ln());
    // ln C(d, start) built up incrementally
    let mut lc = 0.0;
    for i in 0..start {
        lc += ((d - i) as f64).ln() - ((i + 1) as f64).ln();
    }
    let mut sum = 0.0;
    for i in start..=d {
        sum += (lc + i as f64 * lp + (d - i) as f64 * lq).exp();
        if i < d {
            lc += ((d - i) as f64).ln() - ((i + 1) as f64).ln();
        }
    }
    sum.min(1.0)
}

fn ceil_frac(phi: f64, d: usize) -> usize {
    (phi * d as f64 - 1e-9).ceil().max(0.0) as usize
}

/// Probability that a correct neuron of degree `dx` sees at least
/// `⌈φ·dx⌉` of its constraints inside a neighborhood of size `S`.
pub fn p1x(dx: usize, s: f64, m: usize, phi: f64) -> f64 {
    binomial_tail(dx, ceil_frac(phi, dx), s / m as f64)
}

/// `E_λ[P1x]`.
pub fn pe1(dd: &DegreeDistribution, s: f64, m: usize, phi: f64) -> f64 {
    dd.lambda.iter().map(|(&d, &f)| f * p1x(d, s, m, phi)).sum()
}

/// Probability that an erroneous neuron of degree `dx` shares at least half
/// of its constraints with a neighborhood of size `S*`.
pub fn p2x(dx: usize, s_star: f64, m: usize) -> f64 {
    binomial_tail(dx, dx.div_ceil(2), s_star / m as f64)
}

/// `E_λ[P2x]` with `S* = S(e0 − 1)`.
pub fn pe2(dd: &DegreeDistribution, e0: usize, m: usize) -> f64 {
    if e0 == 0 {
        return 0.0;
    }
    let s_star = neighborhood_size(e0 - 1, dd.dbar, m);
    dd.lambda.iter().map(|(&d, &f)| f * p2x(d, s_star, m)).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisInput {
    pub dd: DegreeDistribution,
    pub m: usize,
    pub n: usize,
    pub phi: f64,
    pub e0: usize,
}

impl AnalysisInput {
    pub fn validate(&self) -> Result<()> {
        if self.e0 > self.n {
            return Err(Error::Config(format!("e0={} exceeds n={}", self.e0, self.n)));
        }
        if !(self.phi > 0.0 && self.phi <= 1.0) {
            return Err(Error::Config(format!("phi must lie in (0, 1], got {}", self.phi)));
        }
        if self.m == 0 || !(self.dd.dbar > 0.0 && self.dd.dbar <= self.m as f64) {
            return Err(Error::Config(format!("need 0 < dbar <= m, got dbar={} m={}", self.dd.dbar, self.m)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorBoundReport {
    /// neighborhood size `S` of the initial error set
    pub s: f64,
    pub pe1: f64,
    pub pe2: f64,
    pub pb: f64,
    pub pe_block: f64,
    /// the headline bound, equal to `pe_block` after one round
    pub pe_bound: f64,
}

/// `1 − (1 − P_b)^n`.
pub fn block_error(pb: f64, n: usize) -> f64 {
    1.0 - (1.0 - pb).powi(n as i32)
}

fn bound_for(dd: &DegreeDistribution, m: usize, n: usize, phi: f64, e0: usize) -> ErrorBoundReport {
    let s = neighborhood_size(e0, dd.dbar, m);
    let pe1 = pe1(dd, s, m, phi);
    let pe2 = pe2(dd, e0, m);
    let (nf, ef) = (n as f64, e0 as f64);
    let pb = (nf - ef) / nf * pe1 + ef / nf * pe2;
    let pe_block = block_error(pb, n);
    for v in [pe1, pe2, pb, pe_block] {
        assert!((0.0..=1.0).contains(&v), "probability {v} outside [0, 1]");
    }
    ErrorBoundReport {
        s,
        pe1,
        pe2,
        pb,
        pe_block,
        pe_bound: pe_block,
    }
}

/// Bit and block error probabilities after the first round.
pub fn error_bound(ai: &AnalysisInput) -> Result<ErrorBoundReport> {
    ai.validate()?;
    Ok(bound_for(&ai.dd, ai.m, ai.n, ai.phi, ai.e0))
}

/// Diagnostic multi-round estimate: the expected error count after round `t`
/// is fed back as `|E_{t+1}| ≈ n·P_b(t)`, rounded to the nearest integer.
pub fn bound_trajectory(ai: &AnalysisInput, rounds: usize) -> Result<Vec<ErrorBoundReport>> {
    ai.validate()?;
    let mut out = Vec::with_capacity(rounds);
    let mut e = ai.e0;
    for _ in 0..rounds {
        let r = bound_for(&ai.dd, ai.m, ai.n, ai.phi, e);
        e = ((ai.n as f64 * r.pb).round() as usize).min(ai.n);
        out.push(r);
        if e == 0 {
            break;
        }
    }
    Ok(out)
}

/// How a pattern neuron of degree `d_x` chooses its constraints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeighborSampling {
    /// `d_x` distinct constraints, independently across neurons
    DistinctPerNode,
    /// `d_x` independent uniform picks; repeats collapse
    WithReplacement,
}

/// Empirical mean of `|N(E_e)|` for `e = 1..=n`, averaged over `trials`
/// random graphs built one pattern neuron at a time. Trial `t` uses the seed
/// derived from `(seed, t)`; counts are summed as integers so the result does
/// not depend on thread scheduling.
pub fn monte_carlo_neighborhood<F>(
    n: usize,
    m: usize,
    degree: F,
    sampling: NeighborSampling,
    trials: usize,
    seed: u64,
) -> Result<Vec<(usize, f64)>>
where
    F: Fn(&mut Rng) -> usize + Sync,
{
    if trials == 0 || m == 0 {
        return Err(Error::Config("need at least one trial and one constraint".into()));
    }
    let one = |t: usize| {
        let mut rng = derived_rng(seed, &[t as u64]);
        let mut hit = vec![false; m];
        let mut size = 0u64;
        let mut sizes = Vec::with_capacity(n);
        for _ in 0..n {
            let d = degree(&mut rng).min(m);
            let mut mark = |c: usize| {
                if !hit[c] {
                    hit[c] = true;
                    size += 1;
                }
            };
            match sampling {
                NeighborSampling::DistinctPerNode => index::sample(&mut rng, m, d).into_iter().for_each(&mut mark),
                NeighborSampling::WithReplacement => {
                    for _ in 0..d {
                        mark(rand::Rng::gen_range(&mut rng, 0..m));
                    }
                }
            }
            sizes.push(size);
        }
        sizes
    };
    let totals = (0..trials)
        .into_par_iter()
        .map(one)
        .reduce(|| vec![0u64; n], |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect());
    Ok(totals
        .into_iter()
        .enumerate()
        .map(|(e, c)| (e + 1, c as f64 / trials as f64))
        .collect())
}
