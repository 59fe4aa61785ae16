//! `kpath`: find and evaluate commonsense knowledge paths between the concepts
//! of sentence pairs.

mod commands;
mod config;
mod pipeline;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use connect_core::backends::RemoteConfig;
use connect_core::baseline::PathScoring;
use connect_core::eval::Setting;
use connect_core::pathfind::{ChainParams, DEFAULT_THRESHOLD};

use config::{BackendKind, ConfigFile, RunConfig, UsageError};

#[derive(Parser, Debug)]
#[command(name = "kpath", version, about = "Commonsense knowledge paths between sentence pairs")]
struct Cli {
    /// Key-value configuration file (`key = value` per line); flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// More log output (-v info, -vv debug). RUST_LOG also works.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Direct links and multihop paths for every concept pair of a corpus.
    Connect {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        backend: BackendArgs,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        chain: ChainArgs,
    },
    /// Shortest-path baseline over the static graph.
    Baseline {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        backend: BackendArgs,
        #[command(flatten)]
        run: RunArgs,
        /// Longest path considered.
        #[arg(long)]
        max_hops: Option<usize>,
        /// Node score behind the path ranking: product, pagerank or closeness.
        #[arg(long)]
        scoring: Option<PathScoring>,
        /// Relabel RelatedTo/HasContext hops with the classifier's best relation.
        #[arg(long)]
        replace_vague: bool,
    },
    /// Score connect or baseline output against implicit-knowledge references.
    Evaluate {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        backend: BackendArgs,
        /// a: silver paths, b: gold sentences via templates, c: gold paths.
        #[arg(long)]
        setting: Setting,
        /// Result JSONL written by `connect` or `baseline`.
        #[arg(long)]
        results: Option<PathBuf>,
        /// Relation templates TSV (`relation<TAB>template` with {0} and {1}).
        #[arg(long)]
        templates: Option<PathBuf>,
    },
    /// Linked pairs, average hops and relation shares per method.
    Stats {
        /// `method=path` of a result JSONL; repeat for each method.
        #[arg(long = "input", required = true)]
        inputs: Vec<String>,
        /// Also write the statistics as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample unrelated concept pairs (half swapped, half corrupted triples).
    RandomClass {
        #[command(flatten)]
        input: InputArgs,
        /// Number of pairs; must be even.
        #[arg(long)]
        n: Option<usize>,
        /// RNG seed; the same seed gives the same sample.
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Args, Debug)]
struct InputArgs {
    /// Graph TSV: `relation<TAB>head<TAB>tail[<TAB>weight]`.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Relation inventory: `cn13`, `baseline`, or a file with one relation per line.
    #[arg(long)]
    inventory: Option<String>,
    /// Word vectors in word2vec text format.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Stopword list, one word per line (defaults to the bundled English list).
    #[arg(long)]
    stopwords: Option<PathBuf>,
    /// Sentence-pair corpus JSONL.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Concepts from an external extractor, JSONL `{id, s1_concepts, s2_concepts}`.
    #[arg(long)]
    pre_extracted: Option<PathBuf>,
    /// Output path; `<out>.stats.json` and `<out>.failures.jsonl` are written beside it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BackendArgs {
    /// Relation model: the graph itself (oracle) or the model service (remote).
    #[arg(long, value_enum)]
    backend: Option<BackendKind>,
    /// Base URL of the model service.
    #[arg(long)]
    remote_url: Option<String>,
    /// Per-request timeout.
    #[arg(long)]
    remote_timeout_ms: Option<u64>,
    /// Retries after a transport failure or a 5xx answer.
    #[arg(long)]
    remote_retries: Option<u32>,
    /// Requests in flight at once across all workers.
    #[arg(long)]
    remote_max_concurrent: Option<usize>,
    /// Classifier probability needed for a relation to count.
    #[arg(long)]
    threshold: Option<f64>,
    /// Drop direct links whose argument PoS patterns do not fit the relation.
    #[arg(long)]
    pos_filter: bool,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Worker threads; output does not depend on it.
    #[arg(long)]
    workers: Option<usize>,
    /// RNG seed. Only `random-class` draws random numbers.
    #[arg(long)]
    seed: Option<u64>,
    /// Paths kept per concept pair.
    #[arg(long)]
    top_k: Option<usize>,
}

#[derive(Args, Debug)]
struct ChainArgs {
    /// Targets generated per (concept, relation) query.
    #[arg(long)]
    beam: Option<usize>,
    /// Minimum similarity to the goal for a target to be expanded.
    #[arg(long)]
    sim_gate: Option<f64>,
    /// Similarity to the goal above which a target completes a path.
    #[arg(long)]
    terminate: Option<f64>,
    /// Longest path considered.
    #[arg(long)]
    max_hops: Option<usize>,
    /// Distinct end concepts kept per hop level.
    #[arg(long)]
    frontier_cap: Option<usize>,
    /// Do not follow inverted relations.
    #[arg(long)]
    no_inverse: bool,
    /// Only search from the first sentence's concept.
    #[arg(long)]
    one_way: bool,
}

fn base_config(file: &ConfigFile, input: &InputArgs) -> anyhow::Result<RunConfig> {
    let defaults = RemoteConfig::default();
    Ok(RunConfig {
        graph: file.pick(input.graph.clone(), "graph")?,
        inventory: file.pick(input.inventory.clone(), "inventory")?,
        embeddings: file.pick(input.embeddings.clone(), "embeddings")?,
        stopwords: file.pick(input.stopwords.clone(), "stopwords")?,
        corpus: file.pick(input.corpus.clone(), "corpus")?,
        pre_extracted: file.pick(input.pre_extracted.clone(), "pre_extracted")?,
        backend: file.get("backend")?.unwrap_or(BackendKind::Oracle),
        remote: RemoteConfig {
            base_url: file.get("remote_url")?.unwrap_or(defaults.base_url),
            timeout_ms: file.get("remote_timeout_ms")?.unwrap_or(defaults.timeout_ms),
            max_retries: file.get("remote_retries")?.unwrap_or(defaults.max_retries),
            max_concurrent: file.get("remote_max_concurrent")?.unwrap_or(defaults.max_concurrent),
        },
        threshold: file.get("threshold")?.unwrap_or(DEFAULT_THRESHOLD),
        pos_filter: file.switch(false, "pos_filter")?,
        chain: ChainParams {
            beam: file.get("beam")?.unwrap_or(10),
            sim_gate: file.get("sim_gate")?.unwrap_or(0.7),
            terminate: file.get("terminate")?.unwrap_or(0.95),
            max_hops: file.get("max_hops")?.unwrap_or(3),
            frontier_cap: file.get("frontier_cap")?.unwrap_or(50),
            use_inverse: !file.switch(false, "no_inverse")?,
            bidirectional: !file.switch(false, "one_way")?,
        },
        top_k: file.get("top_k")?.unwrap_or(1),
        workers: file.get("workers")?.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())),
        seed: file.get("seed")?.unwrap_or(0),
        out: file.pick(input.out.clone(), "out")?,
    })
}

fn apply_backend(cfg: &mut RunConfig, b: &BackendArgs) {
    if let Some(kind) = b.backend {
        cfg.backend = kind;
    }
    if let Some(url) = &b.remote_url {
        cfg.remote.base_url = url.clone();
    }
    if let Some(v) = b.remote_timeout_ms {
        cfg.remote.timeout_ms = v;
    }
    if let Some(v) = b.remote_retries {
        cfg.remote.max_retries = v;
    }
    if let Some(v) = b.remote_max_concurrent {
        cfg.remote.max_concurrent = v;
    }
    if let Some(v) = b.threshold {
        cfg.threshold = v;
    }
    cfg.pos_filter |= b.pos_filter;
}

fn apply_run(cfg: &mut RunConfig, r: &RunArgs) {
    if let Some(v) = r.workers {
        cfg.workers = v;
    }
    if let Some(v) = r.seed {
        cfg.seed = v;
    }
    if let Some(v) = r.top_k {
        cfg.top_k = v;
    }
}

fn apply_chain(cfg: &mut RunConfig, c: &ChainArgs) {
    let p = &mut cfg.chain;
    p.beam = c.beam.unwrap_or(p.beam);
    p.sim_gate = c.sim_gate.unwrap_or(p.sim_gate);
    p.terminate = c.terminate.unwrap_or(p.terminate);
    p.max_hops = c.max_hops.unwrap_or(p.max_hops);
    p.frontier_cap = c.frontier_cap.unwrap_or(p.frontier_cap);
    p.use_inverse &= !c.no_inverse;
    p.bidirectional &= !c.one_way;
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let file = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    match cli.command {
        Command::Connect { input, backend, run, chain } => {
            let mut cfg = base_config(&file, &input)?;
            apply_backend(&mut cfg, &backend);
            apply_run(&mut cfg, &run);
            apply_chain(&mut cfg, &chain);
            cfg.validate()?;
            commands::connect(&cfg)
        }
        Command::Baseline { input, backend, run, max_hops, scoring, replace_vague } => {
            let mut cfg = base_config(&file, &input)?;
            apply_backend(&mut cfg, &backend);
            apply_run(&mut cfg, &run);
            cfg.chain.max_hops = max_hops.unwrap_or(cfg.chain.max_hops);
            cfg.validate()?;
            let opts = commands::BaselineOptions {
                scoring: file.pick(scoring, "scoring")?.unwrap_or_default(),
                replace_vague: file.switch(replace_vague, "replace_vague")?,
            };
            commands::baseline(&cfg, &opts)
        }
        Command::Evaluate { input, backend, setting, results, templates } => {
            let mut cfg = base_config(&file, &input)?;
            apply_backend(&mut cfg, &backend);
            let results = file.pick(results, "results")?;
            let templates = file.pick(templates, "templates")?;
            cfg.validate()?;
            for p in [&results, &templates].into_iter().flatten() {
                if !p.is_file() {
                    return config::usage(format!("file not found: {}", p.display()));
                }
            }
            let results = RunConfig::require(&results, "results")?;
            commands::evaluate_cmd(&cfg, setting, results, templates.as_deref())
        }
        Command::Stats { inputs, out } => commands::stats(&inputs, out.as_deref()),
        Command::RandomClass { input, n, seed } => {
            let mut cfg = base_config(&file, &input)?;
            cfg.seed = seed.unwrap_or(cfg.seed);
            cfg.validate()?;
            let Some(n) = file.pick(n, "n")? else {
                return config::usage("--n is required");
            };
            commands::random_class(&cfg, n)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
