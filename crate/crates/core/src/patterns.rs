//! Subspace-structured integer patterns.
//!
//! Patterns are built as `x = u·G` where `G` is a sparse non-negative integer
//! generator matrix and `u` a message with entries in `0..υ`. Every pattern
//! lies in the `k`-dimensional row space of `G`, and when
//! `Q − 1 ≥ d*·(γ − 1)·(υ − 1)` every one of the `υ^k` messages yields a valid
//! pattern, so the number of storable patterns grows exponentially in `n`.

use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, Write};

use rand::seq::{index, SliceRandom};
use rand::Rng;

use crate::error::{Error, Result};
use crate::io::{parse_header, read_data_lines};
use crate::linalg::exact_rank;

/// The triplet `(Q, n, k)`: alphabet size, pattern length, subspace dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModelSpec {
    pub q: u32,
    pub n: usize,
    pub k: usize,
}

impl ModelSpec {
    pub fn new(q: u32, n: usize, k: usize) -> Result<Self> {
        let spec = ModelSpec { q, n, k };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.q < 2 {
            return Err(Error::Config(format!("Q must be at least 2, got {}", self.q)));
        }
        if self.k < 1 || self.k > self.n {
            return Err(Error::Config(format!(
                "need 1 <= k <= n, got k={} n={}",
                self.k, self.n
            )));
        }
        Ok(())
    }

    /// Target number of constraints, `n − k`.
    pub fn m(&self) -> usize {
        self.n - self.k
    }
}

/// A length-`n` integer pattern with entries in `0..Q`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Pattern(Vec<u32>);

impl Pattern {
    /// Wraps `values` after checking that every entry is below `q`.
    pub fn new(values: Vec<u32>, q: u32) -> Result<Self> {
        if let Some(&bad) = values.iter().find(|&&v| v >= q) {
            return Err(Error::Config(format!("pattern entry {bad} outside 0..{q}")));
        }
        Ok(Pattern(values))
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<u32> {
        self.0
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&v| v as f64).collect()
    }

    /// Number of coordinates where `self` and `other` differ.
    pub fn hamming(&self, other: &Pattern) -> usize {
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_row(f, &self.0)
    }
}

fn write_row<W: fmt::Write, T: fmt::Display>(w: &mut W, row: &[T]) -> fmt::Result {
    for (j, v) in row.iter().enumerate() {
        if j > 0 {
            w.write_char(' ')?;
        }
        write!(w, "{v}")?;
    }
    Ok(())
}

/// A `k×n` non-negative integer generator matrix of full row rank.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorMatrix {
    k: usize,
    n: usize,
    entries: Vec<u32>,
    gamma: u32,
    dstar: usize,
    seed: u64,
}

impl GeneratorMatrix {
    /// Builds a generator from explicit rows. `gamma` bounds the entries
    /// (`0..gamma`); `d*` is measured as the largest column weight.
    pub fn from_rows(rows: &[Vec<u32>], gamma: u32) -> Result<Self> {
        let k = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if k == 0 || n == 0 {
            return Err(Error::Config("generator matrix must be non-empty".into()));
        }
        let mut entries = Vec::with_capacity(k * n);
        for r in rows {
            if r.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: r.len(),
                });
            }
            entries.extend_from_slice(r);
        }
        Self::from_entries(k, n, entries, gamma, 0)
    }

    fn from_entries(k: usize, n: usize, entries: Vec<u32>, gamma: u32, seed: u64) -> Result<Self> {
        if gamma < 2 {
            return Err(Error::Config(format!("gamma must be at least 2, got {gamma}")));
        }
        if let Some(&bad) = entries.iter().find(|&&e| e >= gamma) {
            return Err(Error::Config(format!(
                "generator entry {bad} outside 0..{gamma}"
            )));
        }
        let mut g = GeneratorMatrix {
            k,
            n,
            entries,
            gamma,
            dstar: 0,
            seed,
        };
        g.dstar = g.max_column_weight();
        let rank = g.rank();
        if rank != k {
            return Err(Error::Infeasible(format!(
                "generator matrix has rank {rank}, expected {k}"
            )));
        }
        Ok(g)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn gamma(&self) -> u32 {
        self.gamma
    }

    /// Largest number of nonzeros in any column.
    pub fn dstar(&self) -> usize {
        self.dstar
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u32]> {
        self.entries.chunks_exact(self.n)
    }

    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.entries[i * self.n + j]
    }

    fn max_column_weight(&self) -> usize {
        (0..self.n)
            .map(|j| (0..self.k).filter(|&i| self.get(i, j) != 0).count())
            .max()
            .unwrap_or(0)
    }

    /// Exact rank over the rationals.
    pub fn rank(&self) -> usize {
        let rows: Vec<Vec<i64>> = self
            .rows()
            .map(|r| r.iter().map(|&v| v as i64).collect())
            .collect();
        exact_rank(&rows)
    }

    /// Writes the text form: header `k n gamma dstar seed`, then `k` rows.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{} {} {} {} {}", self.k, self.n, self.gamma, self.dstar, self.seed)?;
        for r in self.rows() {
            let mut line = String::new();
            write_row(&mut line, r).expect("writing to a String");
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = read_data_lines(input)?;
        let (hline, header) = lines.next().ok_or_else(|| Error::parse(0, "missing header"))?;
        let [k, n, gamma, _dstar, seed]: [u64; 5] = parse_header(hline, &header)?;
        let (k, n) = (k as usize, n as usize);
        let mut entries = Vec::with_capacity(k * n);
        for _ in 0..k {
            let (ln, line) = lines
                .next()
                .ok_or_else(|| Error::parse(hline, "fewer rows than the header declares"))?;
            let row = parse_u32_row(ln, &line, n)?;
            entries.extend(row);
        }
        Self::from_entries(k, n, entries, gamma as u32, seed)
    }
}

pub(crate) fn parse_u32_row(line_no: usize, line: &str, n: usize) -> Result<Vec<u32>> {
    let row: Vec<u32> = line
        .split_whitespace()
        .map(|t| t.parse::<u32>().map_err(|e| Error::parse(line_no, format!("{t:?}: {e}"))))
        .collect::<Result<_>>()?;
    if row.len() != n {
        return Err(Error::parse(
            line_no,
            format!("expected {n} entries, found {}", row.len()),
        ));
    }
    Ok(row)
}

/// True iff `Q − 1 ≥ d*·(γ − 1)·(υ − 1)`, which guarantees that every
/// message yields a pattern inside the alphabet.
pub fn capacity_check(dstar: u64, gamma: u64, upsilon: u64, q: u64) -> bool {
    let worst = (dstar as u128)
        * (gamma.saturating_sub(1) as u128)
        * (upsilon.saturating_sub(1) as u128);
    (q.saturating_sub(1) as u128) >= worst
}

const RANK_REDRAWS: usize = 100;

/// Draws a random generator matrix: every column gets exactly `min(d*, k)`
/// nonzero positions chosen uniformly, with values uniform in `1..γ`.
/// Re-draws until the matrix has full row rank, up to 100 attempts.
pub fn generate_generator_matrix<R: Rng + ?Sized>(
    spec: ModelSpec,
    gamma: u32,
    dstar: usize,
    rng: &mut R,
) -> Result<GeneratorMatrix> {
    spec.validate()?;
    if gamma < 2 {
        return Err(Error::Config(format!("gamma must be at least 2, got {gamma}")));
    }
    let (k, n) = (spec.k, spec.n);
    let weight = dstar.min(k);
    if weight * n < k {
        return Err(Error::Infeasible(format!(
            "column weight {weight} over {n} columns cannot reach rank {k}"
        )));
    }
    let seed: u64 = rng.gen();
    for _ in 0..RANK_REDRAWS {
        let mut entries = vec![0u32; k * n];
        for j in 0..n {
            for i in index::sample(rng, k, weight) {
                entries[i * n + j] = rng.gen_range(1..gamma);
            }
        }
        let candidate = GeneratorMatrix {
            k,
            n,
            entries,
            gamma,
            dstar: 0,
            seed,
        };
        if candidate.rank() == k {
            let dstar = candidate.max_column_weight();
            return Ok(GeneratorMatrix { dstar, ..candidate });
        }
    }
    Err(Error::Infeasible(format!(
        "no rank-{k} generator found in {RANK_REDRAWS} draws (n={n}, d*={dstar}, gamma={gamma})"
    )))
}

/// Computes `x = u·G`. Returns `Ok(None)` when some entry reaches `Q`.
pub fn synthesize_pattern(u: &[u32], g: &GeneratorMatrix, q: u32) -> Result<Option<Pattern>> {
    if u.len() != g.k {
        return Err(Error::DimensionMismatch {
            expected: g.k,
            got: u.len(),
        });
    }
    let mut x = vec![0u64; g.n];
    for (i, &ui) in u.iter().enumerate() {
        if ui == 0 {
            continue;
        }
        for (xj, &gij) in x.iter_mut().zip(g.row(i)) {
            *xj += ui as u64 * gij as u64;
        }
    }
    if x.iter().any(|&v| v >= q as u64) {
        return Ok(None);
    }
    Ok(Some(Pattern(x.into_iter().map(|v| v as u32).collect())))
}

/// How many patterns to draw for a training set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleSize {
    /// Enumerate every message.
    All,
    Count(usize),
}

/// Where a training set came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub generator: GeneratorMatrix,
    pub upsilon: u32,
    pub messages: Vec<Vec<u32>>,
}

/// A `C×n` collection of distinct patterns from one subspace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingSet {
    spec: ModelSpec,
    patterns: Vec<Pattern>,
    seed: u64,
    provenance: Option<Provenance>,
}

const ENUMERATION_LIMIT: u128 = 1 << 24;

impl TrainingSet {
    pub fn new(spec: ModelSpec, patterns: Vec<Pattern>, seed: u64) -> Result<Self> {
        spec.validate()?;
        for p in &patterns {
            if p.len() != spec.n {
                return Err(Error::DimensionMismatch {
                    expected: spec.n,
                    got: p.len(),
                });
            }
            if p.0.iter().any(|&v| v >= spec.q) {
                return Err(Error::Config(format!("pattern entry outside 0..{}", spec.q)));
            }
        }
        Ok(TrainingSet {
            spec,
            patterns,
            seed,
            provenance: None,
        })
    }

    pub fn spec(&self) -> ModelSpec {
        self.spec
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn patterns(&self) -> &[Pattern] {
        &self.patterns
    }

    pub fn pattern(&self, i: usize) -> &Pattern {
        &self.patterns[i]
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    /// Exact rank of the pattern matrix. Cost grows quickly with `C·n`; meant
    /// for desk-scale sets.
    pub fn rank(&self) -> usize {
        let rows: Vec<Vec<i64>> = self
            .patterns
            .iter()
            .map(|p| p.0.iter().map(|&v| v as i64).collect())
            .collect();
        exact_rank(&rows)
    }

    /// Writes the text form: header `n k Q C seed`, then `C` rows.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        let s = self.spec;
        writeln!(out, "{} {} {} {} {}", s.n, s.k, s.q, self.patterns.len(), self.seed)?;
        for p in &self.patterns {
            writeln!(out, "{p}")?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = read_data_lines(input)?;
        let (hline, header) = lines.next().ok_or_else(|| Error::parse(0, "missing header"))?;
        let [n, k, q, c, seed]: [u64; 5] = parse_header(hline, &header)?;
        let spec = ModelSpec::new(q as u32, n as usize, k as usize)?;
        let mut patterns = Vec::with_capacity(c as usize);
        for _ in 0..c {
            let (ln, line) = lines
                .next()
                .ok_or_else(|| Error::parse(hline, "fewer patterns than the header declares"))?;
            let row = parse_u32_row(ln, &line, spec.n)?;
            patterns.push(Pattern::new(row, spec.q).map_err(|e| Error::parse(ln, e.to_string()))?);
        }
        TrainingSet::new(spec, patterns, seed)
    }
}

fn message_count(upsilon: u32, k: usize) -> Option<u128> {
    (upsilon as u128).checked_pow(k as u32)
}

fn enumerate_messages(upsilon: u32, k: usize) -> impl Iterator<Item = Vec<u32>> {
    let total = message_count(upsilon, k).unwrap_or(u128::MAX);
    let mut next = Some(vec![0u32; k]);
    let mut produced = 0u128;
    std::iter::from_fn(move || {
        if produced >= total {
            return None;
        }
        let current = next.take()?;
        produced += 1;
        let mut succ = current.clone();
        // little-endian mixed-radix increment
        for d in succ.iter_mut() {
            *d += 1;
            if *d < upsilon {
                next = Some(succ);
                return Some(current);
            }
            *d = 0;
        }
        Some(current)
    })
}

/// Builds a training set of distinct accepted patterns `u·G`.
///
/// With [`SampleSize::All`] every one of the `υ^k` messages is tried; with a
/// count, messages are sampled without replacement and rejected patterns are
/// skipped and resampled.
pub fn build_training_set<R: Rng + ?Sized>(
    spec: ModelSpec,
    g: &GeneratorMatrix,
    upsilon: u32,
    count: SampleSize,
    rng: &mut R,
) -> Result<TrainingSet> {
    spec.validate()?;
    if g.k != spec.k || g.n != spec.n {
        return Err(Error::Config(format!(
            "generator is {}x{}, model wants k={} n={}",
            g.k, g.n, spec.k, spec.n
        )));
    }
    if upsilon < 1 {
        return Err(Error::Config("upsilon must be at least 1".into()));
    }
    let seed: u64 = rng.gen();
    let total = message_count(upsilon, spec.k);
    let enumerable = total.is_some_and(|t| t <= ENUMERATION_LIMIT);

    let mut messages = Vec::new();
    let mut patterns = Vec::new();
    match count {
        SampleSize::All => {
            if !enumerable {
                return Err(Error::Infeasible(format!(
                    "{upsilon}^{} messages is too many to enumerate",
                    spec.k
                )));
            }
            for u in enumerate_messages(upsilon, spec.k) {
                if let Some(x) = synthesize_pattern(&u, g, spec.q)? {
                    messages.push(u);
                    patterns.push(x);
                }
            }
        }
        SampleSize::Count(c) => {
            if total.is_some_and(|t| (c as u128) > t) {
                return Err(Error::Infeasible(format!(
                    "{c} distinct patterns requested but only {upsilon}^{} messages exist",
                    spec.k
                )));
            }
            if enumerable && (c as u128) * 2 > total.unwrap_or(0) {
                // dense request: enumerate, then pick a random subset
                let mut all: Vec<(Vec<u32>, Pattern)> = enumerate_messages(upsilon, spec.k)
                    .filter_map(|u| match synthesize_pattern(&u, g, spec.q) {
                        Ok(Some(x)) => Some(Ok((u, x))),
                        Ok(None) => None,
                        Err(e) => Some(Err(e)),
                    })
                    .collect::<Result<_>>()?;
                if all.len() < c {
                    return Err(Error::Infeasible(format!(
                        "only {} valid patterns exist, {c} requested",
                        all.len()
                    )));
                }
                all.shuffle(rng);
                all.truncate(c);
                for (u, x) in all {
                    messages.push(u);
                    patterns.push(x);
                }
            } else {
                let mut seen: HashSet<Vec<u32>> = HashSet::with_capacity(c);
                let budget = 50 * c + 10_000;
                let mut draws = 0;
                while patterns.len() < c {
                    if draws == budget {
                        return Err(Error::Infeasible(format!(
                            "collected {} of {c} distinct valid patterns in {budget} draws",
                            patterns.len()
                        )));
                    }
                    draws += 1;
                    let u: Vec<u32> = (0..spec.k).map(|_| rng.gen_range(0..upsilon)).collect();
                    if !seen.insert(u.clone()) {
                        continue;
                    }
                    if let Some(x) = synthesize_pattern(&u, g, spec.q)? {
                        messages.push(u);
                        patterns.push(x);
                    }
                }
            }
        }
    }
    Ok(TrainingSet {
        spec,
        patterns,
        seed,
        provenance: Some(Provenance {
            generator: g.clone(),
            upsilon,
            messages,
        }),
    })
}
