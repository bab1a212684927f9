use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use subspace_assoc::analysis::{error_bound, AnalysisInput};
use subspace_assoc::graph::expander::{is_expander, min_distance_bound, subset_limit};
use subspace_assoc::graph::{degree_distributions, NeuralGraph};
use subspace_assoc::harness::{
    ci_halfwidth, emit_report, graph_bound, run_scenario, sidecar, simulate_recall, write_report, ExperimentConfig, ReportRow,
};
use subspace_assoc::learning::learn_graph;
use subspace_assoc::patterns::{build_training_set, generate_generator_matrix, SampleSize, TrainingSet};
use subspace_assoc::recall::RecallVariant;
use subspace_assoc::seed::{derive_seed, derived_rng};
use subspace_assoc::Error;

#[derive(Parser)]
#[command(name = "subspace-assoc", version, about = "Subspace-structured neural associative memory")]
struct Cli {
    /// master seed; overrides the config file's `seed`
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// flat `key = value` config file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// output file (stdout when omitted, except where a file is required)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// worker threads (defaults to all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a training set to --out and its generator to <out>.generator
    GenData,
    /// Learn a constraint graph and write its weights
    Learn {
        /// training set file
        #[arg(long)]
        data: PathBuf,
    },
    /// Run recall trials on stored patterns and print one report row per e0
    RecallSim {
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        recall: RecallArgs,
        /// trials per error count (config `trials` when omitted)
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Predicted error rates from the degree data of a weights file
    Analyze {
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        phi: Option<f64>,
        /// largest error count (config `error_counts` when omitted)
        #[arg(long)]
        max_e0: Option<usize>,
    },
    /// Exhaustive expansion check on an edge-list graph
    ExpanderCheck {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        /// alphabet size attached to the graph
        #[arg(long, default_value_t = 2)]
        q: u32,
    },
    /// Full experiment from the config; writes the report CSV and sidecars
    Experiment,
}

#[derive(Args)]
struct RecallArgs {
    /// comma-separated error counts
    #[arg(long, value_delimiter = ',')]
    e0: Option<Vec<usize>>,
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    phi: Option<f64>,
}

fn load_config(cli: &Cli) -> subspace_assoc::Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::parse(&std::fs::read_to_string(p)?)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn open(p: &Path) -> subspace_assoc::Result<BufReader<File>> {
    Ok(BufReader::new(File::open(p)?))
}

fn output(out: &Option<PathBuf>) -> subspace_assoc::Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn require_out(cli: &Cli) -> subspace_assoc::Result<&Path> {
    cli.out
        .as_deref()
        .ok_or_else(|| Error::Config("this subcommand needs --out".into()))
}

fn run(cli: &Cli) -> subspace_assoc::Result<()> {
    let cfg = load_config(cli)?;
    match &cli.cmd {
        Cmd::GenData => {
            let out = require_out(cli)?;
            let spec = cfg.spec()?;
            let g = generate_generator_matrix(spec, cfg.gamma, cfg.dstar, &mut derived_rng(cfg.seed, &[0]))?;
            let set = build_training_set(
                spec,
                &g,
                cfg.upsilon,
                SampleSize::Count(cfg.c_sample),
                &mut derived_rng(cfg.seed, &[1]),
            )?;
            let mut w = BufWriter::new(File::create(out)?);
            set.write_to(&mut w)?;
            w.flush()?;
            let mut w = BufWriter::new(File::create(sidecar(out, "generator"))?);
            g.write_to(&mut w)?;
            w.flush()?;
        }
        Cmd::Learn { data } => {
            let set = TrainingSet::read_from(open(data)?)?;
            let mut lc = cfg.learning()?;
            lc.m = set.spec().m();
            let lg = learn_graph(&set, &lc, cfg.seed)?;
            eprintln!(
                "learned {} of {} constraints, rank {}",
                lg.distinct, lg.requested, lg.rank
            );
            let mut w = output(&cli.out)?;
            lg.graph.write_weights(&mut w, lg.seed, lg.theta_final)?;
            w.flush()?;
        }
        Cmd::RecallSim {
            weights,
            data,
            recall,
            trials,
        } => {
            let (graph, _) = NeuralGraph::read_weights(open(weights)?)?;
            let set = TrainingSet::read_from(open(data)?)?;
            if set.spec().n != graph.n() {
                return Err(Error::DimensionMismatch {
                    expected: graph.n(),
                    got: set.spec().n,
                });
            }
            let mut cfg = cfg.clone();
            if let Some(v) = &recall.variant {
                cfg.variant = RecallVariant::parse(v)?;
            }
            if let Some(phi) = recall.phi {
                cfg.phi = phi;
            }
            let trials = trials.unwrap_or(cfg.trials);
            let counts = recall.e0.clone().unwrap_or_else(|| cfg.error_counts.clone());
            let mut rows = Vec::new();
            for e0 in counts {
                if e0 > graph.n() {
                    return Err(Error::Config(format!("e0={e0} exceeds n={}", graph.n())));
                }
                let rc = cfg.recall(e0);
                let stats = simulate_recall(&graph, set.patterns(), &rc, e0, trials, derive_seed(cfg.seed, &[e0 as u64]))?;
                let bound = if e0 == 0 {
                    0.0
                } else {
                    graph_bound(&graph, cfg.phi, e0)?.pe_bound
                };
                rows.push(ReportRow {
                    scenario: "recall-sim".into(),
                    n: graph.n(),
                    k: set.spec().k,
                    m: graph.m(),
                    variant: cfg.variant.name().into(),
                    phi: cfg.phi,
                    e0,
                    trials,
                    per_first: stats.per_first(),
                    per_final: stats.per_final(),
                    bound,
                    ci_halfwidth: ci_halfwidth(stats.per_final(), trials),
                });
            }
            let mut w = output(&cli.out)?;
            write_report(&rows, &mut w)?;
            w.flush()?;
        }
        Cmd::Analyze { weights, phi, max_e0 } => {
            let (graph, _) = NeuralGraph::read_weights(open(weights)?)?;
            let dd = degree_distributions(&graph)?;
            let phi = phi.unwrap_or(cfg.phi);
            let counts: Vec<usize> = match max_e0 {
                Some(e) => (1..=*e).collect(),
                None => cfg.error_counts.clone(),
            };
            let mut w = output(&cli.out)?;
            writeln!(w, "e0,S,pe1,pe2,pb,pe_bound")?;
            for e0 in counts {
                let r = error_bound(&AnalysisInput {
                    dd: dd.clone(),
                    m: graph.m(),
                    n: graph.n(),
                    phi,
                    e0,
                })?;
                writeln!(w, "{e0},{},{},{},{},{}", r.s, r.pe1, r.pe2, r.pb, r.pe_bound)?;
            }
            w.flush()?;
        }
        Cmd::ExpanderCheck { graph, alpha, beta, q } => {
            let g = NeuralGraph::read_edge_list(open(graph)?, *q)?;
            let dp = g.pattern_regular_degree().ok_or(Error::IrregularGraph)?;
            let expander = is_expander(&g, *alpha, *beta)?;
            let dmin = match min_distance_bound(dp, *beta, *alpha, g.n()) {
                Some(d) if expander => d.to_string(),
                _ => "none".into(),
            };
            let mut w = output(&cli.out)?;
            writeln!(w, "n,m,d_p,alpha,beta,subset_limit,expander,min_distance_bound")?;
            writeln!(
                w,
                "{},{},{dp},{alpha},{beta},{},{expander},{dmin}",
                g.n(),
                g.m(),
                subset_limit(*alpha, g.n())
            )?;
            w.flush()?;
        }
        Cmd::Experiment => {
            let out = require_out(cli)?;
            let report = run_scenario(&cfg)?;
            emit_report(&report, out)?;
        }
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::Config(_)
        | Error::Parse { .. }
        | Error::DimensionMismatch { .. }
        | Error::Infeasible(_)
        | Error::IrregularGraph
        | Error::BudgetExceeded { .. } => 2,
        Error::Io(_) => 3,
        Error::NotConverged { .. } | Error::ZeroIterate => 4,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
