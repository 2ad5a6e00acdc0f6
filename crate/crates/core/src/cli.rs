//! Command-line front end. Every subcommand reads plain-text inputs, writes
//! its outputs under `--out`, and maps errors to exit codes
//! (1 usage/config, 2 data, 3 numerical).

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::attacks::{
    adaptive_greedy, apply_trace, cross_class_attack, dice_attack, pgd_attack, random_attack, structack,
    AttackBudget, AttackMethod, AttackTrace,
};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::features::{feature_hidenseek, FeatureScorer};
use crate::graph::{AttackPair, Graph};
use crate::harness::{
    bypassable_rate, filtered_classification, original_order, tradeoff_curve, train_clean_gcn, Benchmark, FilterOutcome,
};
use crate::io;
use crate::noticeability::{measure_for_adaptive, ReportRecord};
use crate::rng::DeterministicRng;
use crate::scorers::EdgeScorer;
use crate::stats;

#[derive(Parser, Debug)]
#[command(name = "graphnotice", version, about = "Graph attacks and noticeability measures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// `key = value` config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Config override, repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args, Debug, Clone)]
struct Input {
    /// Dataset directory (edges.txt, features.csv, labels.txt) or an edge-list file.
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    features: Option<PathBuf>,
    #[arg(long)]
    labels: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct Attacked {
    /// Edge list of the attacked graph.
    #[arg(long, conflicts_with = "trace")]
    attacked: Option<PathBuf>,
    /// Trace replayed in full onto the clean graph.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Graph statistics summary.
    Stats {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        name: Option<String>,
    },
    /// Emit an attack trace.
    Attack {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        method: Option<String>,
        #[arg(long)]
        gamma: Option<f64>,
        /// Emit the candidate pool (Δ_C operations) instead of Δ.
        #[arg(long)]
        pool: bool,
        #[arg(long)]
        name: Option<String>,
    },
    /// Greedy adaptive reordering of a candidate pool against a measure.
    Adaptive {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        candidates: PathBuf,
        #[arg(long)]
        measure: Option<String>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        name: Option<String>,
    },
    /// One-shot noticeability report.
    Measure {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        attacked: Attacked,
        #[arg(long)]
        measure: Option<String>,
        #[arg(long)]
        name: Option<String>,
    },
    /// Edge score table over the union of original and attacked edges.
    Score {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        attacked: Attacked,
        #[arg(long)]
        scorer: Option<String>,
        #[arg(long)]
        name: Option<String>,
    },
    /// Accuracy/noticeability trade-off curve of a trace.
    Curve {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        measure: Option<String>,
        #[arg(long)]
        gamma: Option<f64>,
        /// Replay the first Δ operations in seeded random order.
        #[arg(long)]
        shuffle: bool,
        #[arg(long)]
        name: Option<String>,
    },
    /// Bypassable rate from an original-order and an adaptive curve.
    Bypass {
        #[arg(long)]
        original: PathBuf,
        #[arg(long)]
        adaptive: PathBuf,
        #[arg(long)]
        name: Option<String>,
    },
    /// Remove the least plausible edges and compare retrained accuracies.
    Filter {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        attacked: Attacked,
        #[arg(long)]
        scorer: Option<String>,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        name: Option<String>,
    },
    /// Feature-domain noticeability report.
    Featmeasure {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        attacked_features: PathBuf,
        /// `lfo` or `cooccur`.
        #[arg(long, default_value = "lfo")]
        scorer: String,
        #[arg(long)]
        name: Option<String>,
    },
}

/// Runs the CLI on `args` (without the program name); returns the exit code.
pub fn run(args: &[String]) -> i32 {
    let argv = std::iter::once("graphnotice".to_string()).chain(args.iter().cloned());
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn build_config(cli: &Cli, shortcuts: &[(&str, Option<String>)]) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        cfg.apply_file(path)?;
    }
    for kv in &cli.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        cfg.set(k, v)?;
    }
    for (k, v) in shortcuts {
        if let Some(v) = v {
            cfg.set(k, v)?;
        }
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    Ok(cfg)
}

fn load_graph(input: &Input) -> Result<Graph> {
    let mut bundle = if input.graph.is_dir() {
        io::DatasetBundle::from_dir(&input.graph)
    } else {
        io::DatasetBundle {
            name: input.graph.display().to_string(),
            graph: input.graph.clone(),
            features: None,
            labels: None,
        }
    };
    if input.features.is_some() {
        bundle.features = input.features.clone();
    }
    if input.labels.is_some() {
        bundle.labels = input.labels.clone();
    }
    bundle.load()
}

fn load_attacked(g: &Graph, a: &Attacked) -> Result<Graph> {
    match (&a.attacked, &a.trace) {
        (Some(path), _) => {
            let el = io::parse_edge_list(path)?;
            if el.n > g.n() {
                return Err(Error::Shape(format!("attacked graph has {} nodes, clean graph {}", el.n, g.n())));
            }
            g.with_edge_list(&el.edges)
        }
        (None, Some(path)) => {
            let t = io::parse_trace(path)?;
            apply_trace(g, &t, t.len())
        }
        (None, None) => Err(Error::Usage("pass --attacked or --trace".into())),
    }
}

fn labels_of(g: &Graph) -> Result<Vec<usize>> {
    g.labels()
        .map(<[usize]>::to_vec)
        .ok_or_else(|| Error::Usage("this command needs node labels".into()))
}

fn benchmark(g: &Graph, cfg: &RunConfig) -> Result<Benchmark> {
    Benchmark::with_split(g.clone(), &cfg.train, cfg.train_frac, cfg.val_frac, cfg.seed)
}

fn emit(cfg: &RunConfig, name: &Option<String>, default: &str, contents: &str) -> Result<PathBuf> {
    let path = cfg.out.join(name.as_deref().unwrap_or(default));
    io::write_file(&path, contents)?;
    Ok(path)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphSummary {
    pub name: String,
    pub nodes: usize,
    pub edges: usize,
    pub attributes: usize,
    pub classes: usize,
    pub mean_degree: f64,
    pub mean_clustering: f64,
    pub mean_homophily: Option<f64>,
}

pub fn graph_summary(name: &str, g: &Graph) -> GraphSummary {
    let mean = |v: &[f64]| if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
    GraphSummary {
        name: name.to_string(),
        nodes: g.n(),
        edges: g.num_edges(),
        attributes: if g.has_features() { g.feature_dim() } else { 0 },
        classes: if g.labels().is_some() { g.num_classes() } else { 0 },
        mean_degree: if g.n() == 0 { 0.0 } else { 2.0 * g.num_edges() as f64 / g.n() as f64 },
        mean_clustering: mean(&stats::clustering_coefficients(g)),
        mean_homophily: g.has_features().then(|| mean(&stats::node_homophily(g))),
    }
}

fn generate_attack(g: &Graph, cfg: &RunConfig, budget: &AttackBudget) -> Result<AttackTrace> {
    let rng = DeterministicRng::new(cfg.seed);
    let mut attack_rng = rng.substream(5);
    match cfg.attack_method {
        AttackMethod::Random => random_attack(g, budget, &mut attack_rng),
        AttackMethod::CrossClass => cross_class_attack(g, &labels_of(g)?, budget, &mut attack_rng),
        AttackMethod::Dice => dice_attack(g, &labels_of(g)?, budget, &mut attack_rng),
        AttackMethod::Structack => structack(g, budget),
        AttackMethod::Pgd => {
            let b = benchmark(g, cfg)?;
            pgd_attack(g, &b.labels, budget, &b.model, &cfg.pgd, &attack_rng)
        }
        m @ (AttackMethod::Adaptive | AttackMethod::Shuffled) => Err(Error::Usage(format!(
            "`{}` traces come from the adaptive and curve commands",
            m.name()
        ))),
    }
}

fn execute(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Stats { input, name } => {
            let cfg = build_config(&cli, &[])?;
            let g = load_graph(input)?;
            let label = if input.graph.is_dir() {
                io::DatasetBundle::from_dir(&input.graph).name
            } else {
                input.graph.display().to_string()
            };
            let json = io::to_json(&graph_summary(&label, &g))?;
            print!("{json}");
            if cli.out.is_some() {
                emit(&cfg, name, "stats.json", &json)?;
            }
        }
        Command::Attack {
            input,
            method,
            gamma,
            pool,
            name,
        } => {
            let cfg = build_config(
                &cli,
                &[
                    ("attack.method", method.clone()),
                    ("attack.gamma", gamma.map(|x| x.to_string())),
                ],
            )?;
            let g = load_graph(input)?;
            let budget = AttackBudget::from_gamma(cfg.gamma, g.num_edges(), cfg.candidate_multiplier)?;
            let budget = if *pool { budget.candidates() } else { budget };
            let trace = generate_attack(&g, &cfg, &budget)?;
            emit(&cfg, name, "trace.txt", &io::format_trace(&trace))?;
        }
        Command::Adaptive {
            input,
            candidates,
            measure,
            gamma,
            name,
        } => {
            let cfg = build_config(
                &cli,
                &[
                    ("measure.name", measure.clone()),
                    ("attack.gamma", gamma.map(|x| x.to_string())),
                ],
            )?;
            let g = load_graph(input)?;
            let pool = io::parse_trace(candidates)?;
            let delta = AttackBudget::from_gamma(cfg.gamma, g.num_edges(), 1)?.delta;
            let rng = DeterministicRng::new(cfg.seed).substream(8);
            let mut objective = measure_for_adaptive(&cfg.measure_handle()?, &g, &pool, &rng)?;
            let mut trace = adaptive_greedy(&g, &pool, delta, objective.as_mut())?;
            trace.budget.gamma = cfg.gamma;
            trace.seed = cfg.seed;
            emit(&cfg, name, "adaptive.txt", &io::format_trace(&trace))?;
        }
        Command::Measure {
            input,
            attacked,
            measure,
            name,
        } => {
            let cfg = build_config(&cli, &[("measure.name", measure.clone())])?;
            let g = load_graph(input)?;
            let h = load_attacked(&g, attacked)?;
            let report = cfg
                .measure_handle()?
                .evaluate(&g, &h, &DeterministicRng::new(cfg.seed).substream(9))?;
            let json = io::to_json(&ReportRecord {
                report,
                seed: cfg.seed,
                config_digest: cfg.digest(),
            })?;
            print!("{json}");
            if cli.out.is_some() {
                emit(&cfg, name, "report.json", &json)?;
            }
        }
        Command::Score {
            input,
            attacked,
            scorer,
            name,
        } => {
            let cfg = build_config(&cli, &[("scorer.name", scorer.clone())])?;
            let g = load_graph(input)?;
            let h = load_attacked(&g, attacked)?;
            let sets = AttackPair::new(g, h.clone())?.edge_sets();
            let mut spec = cfg.scorer_spec()?;
            let scores = spec.score(&h, &sets.union, &DeterministicRng::new(cfg.seed).substream(9))?;
            emit(&cfg, name, "scores.txt", &io::format_scores(&sets.union, &scores))?;
        }
        Command::Curve {
            input,
            trace,
            measure,
            gamma,
            shuffle,
            name,
        } => {
            let cfg = build_config(
                &cli,
                &[
                    ("measure.name", measure.clone()),
                    ("attack.gamma", gamma.map(|x| x.to_string())),
                ],
            )?;
            let g = load_graph(input)?;
            let t = io::parse_trace(trace)?;
            let delta = AttackBudget::from_gamma(cfg.gamma, g.num_edges(), 1)?.delta.min(t.len());
            let rng = DeterministicRng::new(cfg.seed);
            let t = if *shuffle {
                original_order(&t, delta, &mut rng.substream(6))
            } else {
                let mut t = t;
                t.ops.truncate(delta);
                t
            };
            let b = benchmark(&g, &cfg)?;
            let curve = tradeoff_curve(&g, &t, &cfg.measure_handle()?, &b.model, &b.labels, &rng.substream(9))?;
            emit(&cfg, name, "curve.csv", &io::format_curve(&curve))?;
        }
        Command::Bypass { original, adaptive, name } => {
            let cfg = build_config(&cli, &[])?;
            let report = bypassable_rate(&io::parse_curve(original)?, &io::parse_curve(adaptive)?)?;
            let json = io::to_json(&report)?;
            print!("{json}");
            emit(&cfg, name, "bypass.json", &json)?;
        }
        Command::Filter {
            input,
            attacked,
            scorer,
            count,
            name,
        } => {
            let cfg = build_config(
                &cli,
                &[
                    ("scorer.name", scorer.clone()),
                    ("filter.count", count.map(|c| c.to_string())),
                ],
            )?;
            let g = load_graph(input)?;
            let h = load_attacked(&g, attacked)?;
            let count = match cfg.filter_count {
                Some(c) => c,
                None => AttackBudget::from_gamma(cfg.gamma, g.num_edges(), 1)?.delta,
            };
            let b = benchmark(&g, &cfg)?;
            let mut spec = cfg.scorer_spec()?;
            let (outcome, filtered) = filtered_classification(
                &h,
                &mut spec,
                count,
                &b.labels,
                &b.split,
                &cfg.train,
                &DeterministicRng::new(cfg.seed),
            )?;
            let outcome = FilterReport {
                // same training stream as the attacked and filtered models
                acc_clean: train_clean_gcn(&g, &b.labels, &b.split, &cfg.train, &mut DeterministicRng::new(cfg.seed).substream(31))?
                    .test_accuracy,
                outcome,
                seed: cfg.seed,
                config_digest: cfg.digest(),
            };
            emit(&cfg, &None, "filtered.txt", &io::format_edge_list(&filtered))?;
            let json = io::to_json(&outcome)?;
            print!("{json}");
            emit(&cfg, name, "filter.json", &json)?;
        }
        Command::Featmeasure {
            features,
            attacked_features,
            scorer,
            name,
        } => {
            let cfg = build_config(&cli, &[])?;
            let x = io::parse_features_csv(features)?;
            let xh = io::parse_features_csv(attacked_features)?;
            let scorer: FeatureScorer = scorer.parse()?;
            let mut report = feature_hidenseek(&x, &xh, scorer, &cfg.lfo, &DeterministicRng::new(cfg.seed).substream(9))?;
            report.threshold = cfg.threshold;
            report.noticeable = report.statistic.map(|a| a >= cfg.threshold);
            let json = io::to_json(&ReportRecord {
                report,
                seed: cfg.seed,
                config_digest: cfg.digest(),
            })?;
            print!("{json}");
            if cli.out.is_some() {
                emit(&cfg, name, "feature_report.json", &json)?;
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
struct FilterReport {
    acc_clean: f64,
    #[serde(flatten)]
    outcome: FilterOutcome,
    seed: u64,
    config_digest: String,
}

/// Writes `g` as a dataset directory; convenience for fixtures.
pub fn write_dataset(dir: &Path, g: &Graph) -> Result<()> {
    io::write_bundle(dir, g)
}
