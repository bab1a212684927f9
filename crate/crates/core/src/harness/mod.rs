//! End-to-end experiments: generate, learn, recall, and compare with the
//! predicted error bound.

use std::io::{BufRead, Write};

use rand::Rng as _;
use rayon::prelude::*;

use crate::analysis::{error_bound, AnalysisInput, ErrorBoundReport};
use crate::error::{Error, Result};
use crate::graph::{degree_distributions, NeuralGraph};
use crate::learning::{learn_graph, LearnedGraph};
use crate::patterns::{build_training_set, generate_generator_matrix, Pattern, SampleSize};
use crate::recall::{inject_noise, Decoder, RecallConfig};
use crate::seed::{derive_seed, derived_rng};

mod config;

pub use config::ExperimentConfig;

/// Column names of the report CSV, in order.
pub const REPORT_HEADER: &str = "scenario,n,k,m,variant,phi,e0,trials,per_first,per_final,bound,ci_halfwidth";

const STAGE_GENERATOR: u64 = 0;
const STAGE_PATTERNS: u64 = 1;
const STAGE_LEARN: u64 = 2;
const STAGE_RECALL: u64 = 3;

/// One `(scenario, e0)` row.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub scenario: String,
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub variant: String,
    pub phi: f64,
    pub e0: usize,
    pub trials: usize,
    pub per_first: f64,
    pub per_final: f64,
    pub bound: f64,
    pub ci_halfwidth: f64,
}

/// Learning diagnostics of one ensemble member.
#[derive(Debug, Clone, PartialEq)]
pub struct MemberDiagnostics {
    pub member: usize,
    pub requested: usize,
    pub distinct: usize,
    pub rank: usize,
    pub max_passes_used: usize,
    pub mean_passes: f64,
    pub mean_sparsity: f64,
    /// counts of row sparsity in ten equal bins over `[0, 1]`
    pub sparsity_histogram: [usize; 10],
    pub theta_final: f64,
    pub dbar: f64,
}

impl MemberDiagnostics {
    pub const CSV_HEADER: &'static str =
        "member,requested,distinct,rank,max_passes_used,mean_passes,mean_sparsity,theta_final,dbar,sparsity_histogram";

    fn from_learned(member: usize, lg: &LearnedGraph) -> Self {
        let rows = lg.rows.len().max(1) as f64;
        let mut hist = [0usize; 10];
        for r in &lg.rows {
            hist[((r.sparsity * 10.0) as usize).min(9)] += 1;
        }
        let dbar = if lg.graph.n() == 0 {
            0.0
        } else {
            lg.graph.edge_count() as f64 / lg.graph.n() as f64
        };
        MemberDiagnostics {
            member,
            requested: lg.requested,
            distinct: lg.distinct,
            rank: lg.rank,
            max_passes_used: lg.rows.iter().map(|r| r.passes).max().unwrap_or(0),
            mean_passes: lg.rows.iter().map(|r| r.passes as f64).sum::<f64>() / rows,
            mean_sparsity: lg.rows.iter().map(|r| r.sparsity).sum::<f64>() / rows,
            sparsity_histogram: hist,
            theta_final: lg.theta_final,
            dbar,
        }
    }

    fn csv_line(&self) -> String {
        let hist: Vec<String> = self.sparsity_histogram.iter().map(ToString::to_string).collect();
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.member,
            self.requested,
            self.distinct,
            self.rank,
            self.max_passes_used,
            self.mean_passes,
            self.mean_sparsity,
            self.theta_final,
            self.dbar,
            hist.join(";")
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub rows: Vec<ReportRow>,
    pub learning: Vec<MemberDiagnostics>,
}

/// Pattern-error counts from a batch of recall trials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RecallStats {
    pub trials: usize,
    pub errors_first: usize,
    pub errors_final: usize,
}

impl RecallStats {
    pub fn per_first(&self) -> f64 {
        ratio(self.errors_first, self.trials)
    }

    pub fn per_final(&self) -> f64 {
        ratio(self.errors_final, self.trials)
    }

    fn add(self, o: RecallStats) -> RecallStats {
        RecallStats {
            trials: self.trials + o.trials,
            errors_first: self.errors_first + o.errors_first,
            errors_final: self.errors_final + o.errors_final,
        }
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Half-width of the normal-approximation 95% interval for a rate.
pub fn ci_halfwidth(p: f64, trials: usize) -> f64 {
    if trials == 0 {
        0.0
    } else {
        1.96 * (p * (1.0 - p) / trials as f64).sqrt()
    }
}

/// Runs `trials` recall trials with `e0` errors each. Trial `t` draws a
/// stored pattern and its noise from the seed derived from `(seed, t)`. A
/// trial is a pattern error when the output differs from the stored pattern
/// anywhere.
pub fn simulate_recall(
    graph: &NeuralGraph,
    patterns: &[Pattern],
    cfg: &RecallConfig,
    e0: usize,
    trials: usize,
    seed: u64,
) -> Result<RecallStats> {
    if patterns.is_empty() && trials > 0 {
        return Err(Error::Config("no stored patterns to recall".into()));
    }
    let decoder = Decoder::new(graph, *cfg)?;
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = derived_rng(seed, &[t as u64]);
            let truth = &patterns[rng.gen_range(0..patterns.len())];
            let (noisy, _) = inject_noise(truth, e0, graph.q(), &mut rng)?;
            let out = decoder.recall(&noisy)?;
            Ok(RecallStats {
                trials: 1,
                errors_first: usize::from(out.x_first != *truth),
                errors_final: usize::from(out.x_out != *truth),
            })
        })
        .try_reduce(RecallStats::default, |a, b| Ok(a.add(b)))
}

/// The first-round bound for `e0` errors using the measured degree data of
/// `graph`.
pub fn graph_bound(graph: &NeuralGraph, phi: f64, e0: usize) -> Result<ErrorBoundReport> {
    error_bound(&AnalysisInput {
        dd: degree_distributions(graph)?,
        m: graph.m(),
        n: graph.n(),
        phi,
        e0,
    })
}

struct Member {
    diagnostics: MemberDiagnostics,
    stats: Vec<RecallStats>,
    bounds: Vec<f64>,
}

fn run_member(cfg: &ExperimentConfig, member: usize) -> Result<Member> {
    let spec = cfg.spec()?;
    let master = cfg.seed;
    let mb = member as u64;
    let g = generate_generator_matrix(spec, cfg.gamma, cfg.dstar, &mut derived_rng(master, &[mb, STAGE_GENERATOR]))
        .map_err(|e| e.in_stage("generator"))?;
    let set = build_training_set(
        spec,
        &g,
        cfg.upsilon,
        SampleSize::Count(cfg.c_sample),
        &mut derived_rng(master, &[mb, STAGE_PATTERNS]),
    )
    .map_err(|e| e.in_stage("training set"))?;
    let lg = learn_graph(&set, &cfg.learning()?, derive_seed(master, &[mb, STAGE_LEARN]))
        .map_err(|e| e.in_stage("learning"))?;
    let diagnostics = MemberDiagnostics::from_learned(member, &lg);
    let mut stats = Vec::new();
    let mut bounds = Vec::new();
    if cfg.trials > 0 {
        for &e0 in &cfg.error_counts {
            let seed = derive_seed(master, &[mb, STAGE_RECALL, e0 as u64]);
            let s = simulate_recall(&lg.graph, set.patterns(), &cfg.recall(e0), e0, cfg.trials, seed)
                .map_err(|e| e.in_stage(format!("recall e0={e0}")))?;
            stats.push(s);
            let b = graph_bound(&lg.graph, cfg.phi, e0).map_err(|e| e.in_stage(format!("bound e0={e0}")))?;
            bounds.push(b.pe_bound);
        }
    }
    Ok(Member {
        diagnostics,
        stats,
        bounds,
    })
}

/// Runs every ensemble member and aggregates per error count. The bound
/// column is the mean bound over members. Every number is determined by the
/// config, including its master seed.
pub fn run_scenario(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let name = cfg.scenario_name();
    let members: Vec<Member> = (0..cfg.ensemble_size)
        .map(|i| run_member(cfg, i).map_err(|e| e.in_stage(format!("scenario {name}, member {i}"))))
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    if cfg.trials > 0 {
        for (idx, &e0) in cfg.error_counts.iter().enumerate() {
            let total = members.iter().fold(RecallStats::default(), |a, m| a.add(m.stats[idx]));
            let bound = members.iter().map(|m| m.bounds[idx]).sum::<f64>() / members.len() as f64;
            rows.push(ReportRow {
                scenario: name.clone(),
                n: cfg.n,
                k: cfg.k,
                m: cfg.n - cfg.k,
                variant: cfg.variant.name().to_string(),
                phi: cfg.phi,
                e0,
                trials: total.trials,
                per_first: total.per_first(),
                per_final: total.per_final(),
                bound,
                ci_halfwidth: ci_halfwidth(total.per_final(), total.trials),
            });
        }
    }
    Ok(ExperimentReport {
        config: cfg.clone(),
        rows,
        learning: members.into_iter().map(|m| m.diagnostics).collect(),
    })
}

/// Writes the report CSV: the header line, then one row per `(scenario, e0)`.
pub fn write_report<W: Write>(rows: &[ReportRow], mut out: W) -> Result<()> {
    writeln!(out, "{REPORT_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.scenario, r.n, r.k, r.m, r.variant, r.phi, r.e0, r.trials, r.per_first, r.per_final, r.bound, r.ci_halfwidth
        )?;
    }
    Ok(())
}

/// Writes the report CSV to `path`, plus two sidecars next to it:
/// `<path>.config` with the resolved config and seed, and
/// `<path>.learning.csv` with per-member learning diagnostics.
pub fn emit_report(r: &ExperimentReport, path: &std::path::Path) -> Result<()> {
    let mut buf = Vec::new();
    write_report(&r.rows, &mut buf)?;
    std::fs::write(path, buf)?;
    std::fs::write(sidecar(path, "config"), r.config.to_text())?;
    let mut learn = format!("{}\n", MemberDiagnostics::CSV_HEADER);
    for d in &r.learning {
        learn.push_str(&d.csv_line());
        learn.push('\n');
    }
    std::fs::write(sidecar(path, "learning.csv"), learn)?;
    Ok(())
}

/// `<path>.<ext>`.
pub fn sidecar(path: &std::path::Path, ext: &str) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    s.into()
}

/// Reads the tabular part of a report back.
pub fn parse_report<R: BufRead>(input: R) -> Result<Vec<ReportRow>> {
    let mut lines = input.lines().enumerate();
    match lines.next() {
        Some((_, Ok(h))) if h == REPORT_HEADER => {}
        Some((_, Err(e))) => return Err(e.into()),
        _ => return Err(Error::parse(1, "missing report header")),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let line = line?;
        let ln = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 12 {
            return Err(Error::parse(ln, format!("expected 12 fields, found {}", f.len())));
        }
        let u = |s: &str| s.parse::<usize>().map_err(|e| Error::parse(ln, format!("{s:?}: {e}")));
        let x = |s: &str| s.parse::<f64>().map_err(|e| Error::parse(ln, format!("{s:?}: {e}")));
        rows.push(ReportRow {
            scenario: f[0].to_string(),
            n: u(f[1])?,
            k: u(f[2])?,
            m: u(f[3])?,
            variant: f[4].to_string(),
            phi: x(f[5])?,
            e0: u(f[6])?,
            trials: u(f[7])?,
            per_first: x(f[8])?,
            per_final: x(f[9])?,
            bound: x(f[10])?,
            ci_halfwidth: x(f[11])?,
        });
    }
    Ok(rows)
}
