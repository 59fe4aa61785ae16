//! Subcommand bodies. Each returns the process exit code.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::Context;
use connect_core::backends::PosFilter;
use connect_core::baseline::{
    build_subgraph, node_scores, rank_paths, replace_vague, PageRankParams, PathScoring, ReplaceStats,
};
use connect_core::embed::EmbeddingStore;
use connect_core::eval::{
    build_random_class, corpus_stats, evaluate, render_table, EvalError, EvalItem, MethodStats, Setting, SilverSource,
    TemplateTable,
};
use connect_core::extract::{pair_concepts, ConceptExtractor, ConceptPair, SentencePair};
use connect_core::kg::{InventoryKind, KnowledgeGraph};
use connect_core::pathfind::{chain, combine, link_pair, ConnectRecord, ConnectResult, PathfindError, Verdict};
use serde::Serialize;

use crate::config::{usage, RunConfig};
use crate::pipeline::{self, Backend, Failure, Mentions};

/// Records, failures and diagnostics for one sentence pair.
#[derive(Default)]
struct SentenceOutcome {
    records: Vec<ConnectRecord>,
    results: Vec<ConnectResult>,
    failures: Vec<Failure>,
    uncovered: BTreeSet<String>,
    missing_seeds: usize,
    replace: ReplaceStats,
}

impl SentenceOutcome {
    fn push(&mut self, sentence_id: &str, index: usize, result: ConnectResult) {
        self.records.push(ConnectRecord::from_result(sentence_id, index, &result));
        self.results.push(result);
    }

    fn fail(&mut self, sentence_id: &str, index: usize, pair: &ConceptPair, error: String) {
        log::error!("pair {sentence_id}#{index} {pair}: {error}");
        self.failures.push(Failure {
            pair_id: format!("{sentence_id}#{index}"),
            sentence_id: sentence_id.to_string(),
            c_s: pair.c_s.as_str().to_string(),
            c_t: pair.c_t.as_str().to_string(),
            error,
        });
    }
}

#[derive(Debug, Serialize)]
struct RunReport {
    method: &'static str,
    sentence_pairs: usize,
    concept_pairs: usize,
    failed_pairs: usize,
    /// Concepts without embedding coverage, which chaining could not aim at.
    #[serde(skip_serializing_if = "Option::is_none")]
    uncovered_concepts: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    missing_seeds: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    replace_vague: Option<ReplaceStats>,
    stats: MethodStats,
}

/// Writes records, the failure sidecar and the run report; exit 1 if any pair failed.
fn finish(
    out: &Path,
    method: &'static str,
    sentence_pairs: usize,
    outcomes: Vec<SentenceOutcome>,
    customize: impl FnOnce(&mut RunReport, &[SentenceOutcome]),
) -> anyhow::Result<ExitCode> {
    pipeline::write_jsonl(out, outcomes.iter().flat_map(|o| &o.records))?;
    let failures: Vec<&Failure> = outcomes.iter().flat_map(|o| &o.failures).collect();
    let failures_path = pipeline::sidecar(out, ".failures.jsonl");
    if failures.is_empty() {
        if failures_path.exists() {
            std::fs::remove_file(&failures_path)?;
        }
    } else {
        pipeline::write_jsonl(&failures_path, &failures)?;
    }
    let results: Vec<ConnectResult> = outcomes.iter().flat_map(|o| o.results.iter().cloned()).collect();
    let stats = corpus_stats(&[(method.to_string(), results)]).methods.remove(0);
    let mut report = RunReport {
        method,
        sentence_pairs,
        concept_pairs: stats.pairs + failures.len(),
        failed_pairs: failures.len(),
        uncovered_concepts: None,
        missing_seeds: None,
        replace_vague: None,
        stats,
    };
    customize(&mut report, &outcomes);
    pipeline::write_json(&pipeline::sidecar(out, ".stats.json"), &report)?;
    log::info!(
        "{method}: {} concept pairs, {} linked, {} failed",
        report.concept_pairs,
        report.stats.linked_pairs,
        report.failed_pairs
    );
    if failures.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("{} concept pairs failed; see {}", failures.len(), failures_path.display());
        Ok(ExitCode::from(1))
    }
}

struct Inputs {
    graph: Arc<KnowledgeGraph>,
    corpus: Vec<SentencePair>,
    mentions: Vec<Mentions>,
    stopwords: connect_core::text::Stopwords,
}

fn load_inputs(cfg: &RunConfig, kind: InventoryKind, default_inventory: &str) -> anyhow::Result<Inputs> {
    let graph_path = RunConfig::require(&cfg.graph, "graph")?;
    let corpus_path = RunConfig::require(&cfg.corpus, "corpus")?;
    let inventory = cfg.inventory.as_deref().unwrap_or(default_inventory);
    let graph = Arc::new(pipeline::load_graph(graph_path, inventory, kind)?);
    let stopwords = pipeline::load_stopwords(cfg.stopwords.as_deref())?;
    let corpus = pipeline::load_corpus(corpus_path)?;
    let mentions = if corpus.is_empty() {
        Vec::new()
    } else {
        pipeline::mentions(&corpus, &graph, &stopwords, cfg.pre_extracted.as_deref())?
    };
    Ok(Inputs { graph, corpus, mentions, stopwords })
}

fn connect_sentence(
    pair: &SentencePair,
    mentions: &Mentions,
    backend: &dyn Backend,
    emb: &EmbeddingStore,
    cfg: &RunConfig,
    filter: Option<&PosFilter>,
) -> SentenceOutcome {
    let mut out = SentenceOutcome::default();
    for (idx, cp) in pair_concepts(&mentions.0, &mentions.1).iter().enumerate() {
        let attempt = (|| -> Result<_, PathfindError> {
            let links = link_pair(cp, backend, cfg.threshold, filter)?;
            let found = chain(cp, backend, emb, &cfg.chain)?;
            Ok((combine(cp, links, found.paths, cfg.top_k)?, found.uncovered))
        })();
        match attempt {
            Ok((result, uncovered)) => {
                out.uncovered.extend(uncovered.into_iter().map(|c| c.as_str().to_string()));
                out.push(&pair.id, idx, result);
            }
            Err(e) => out.fail(&pair.id, idx, cp, e.to_string()),
        }
    }
    out
}

pub fn connect(cfg: &RunConfig) -> anyhow::Result<ExitCode> {
    let out = RunConfig::require(&cfg.out, "out")?.to_path_buf();
    let inputs = load_inputs(cfg, InventoryKind::Model, "cn13")?;
    let emb = pipeline::load_embeddings(RunConfig::require(&cfg.embeddings, "embeddings")?, inputs.stopwords.clone())?;
    let backend = pipeline::backend(cfg, inputs.graph.clone());
    let filter = cfg.pos_filter.then(PosFilter::default);

    let work: Vec<(&SentencePair, &Mentions)> = inputs.corpus.iter().zip(&inputs.mentions).collect();
    let outcomes = pipeline::run_ordered(&work, cfg.workers, |(pair, m)| {
        connect_sentence(pair, m, backend.as_ref(), &emb, cfg, filter.as_ref())
    })?;
    finish(&out, "connect", inputs.corpus.len(), outcomes, |report, outcomes| {
        let uncovered: BTreeSet<String> = outcomes.iter().flat_map(|o| o.uncovered.iter().cloned()).collect();
        report.uncovered_concepts = Some(uncovered.into_iter().collect());
    })
}

pub struct BaselineOptions {
    pub scoring: PathScoring,
    pub replace_vague: bool,
}

fn baseline_sentence(
    pair: &SentencePair,
    mentions: &Mentions,
    graph: &KnowledgeGraph,
    backend: &dyn Backend,
    cfg: &RunConfig,
    opts: &BaselineOptions,
) -> SentenceOutcome {
    let mut out = SentenceOutcome::default();
    for (idx, cp) in pair_concepts(&mentions.0, &mentions.1).iter().enumerate() {
        let unconnected = ConnectResult { pair: cp.clone(), verdict: Verdict::Unconnected, discarded_multihop: 0 };
        let missing: Vec<&str> = [&cp.c_s, &cp.c_t]
            .into_iter()
            .filter(|c| !graph.contains_concept(c.as_str()))
            .map(|c| c.as_str())
            .collect();
        if !missing.is_empty() {
            log::warn!("pair {}#{idx}: {} not in the graph", pair.id, missing.join(", "));
            out.missing_seeds += 1;
            out.push(&pair.id, idx, unconnected);
            continue;
        }
        let attempt = (|| -> anyhow::Result<_> {
            let sub = build_subgraph(graph, &[cp.c_s.clone(), cp.c_t.clone()])?;
            let scores = node_scores(&sub, PageRankParams::default());
            let paths = rank_paths(&sub, cp, &scores, opts.scoring, cfg.chain.max_hops, cfg.top_k)?;
            if opts.replace_vague {
                Ok(replace_vague(&paths, backend, cfg.threshold)?)
            } else {
                Ok((paths, ReplaceStats::default()))
            }
        })();
        match attempt {
            Ok((paths, stats)) => {
                out.replace.vague_hops += stats.vague_hops;
                out.replace.replaced += stats.replaced;
                let verdict = if paths.is_empty() { Verdict::Unconnected } else { Verdict::Multihop(paths) };
                out.push(&pair.id, idx, ConnectResult { verdict, ..unconnected });
            }
            Err(e) => out.fail(&pair.id, idx, cp, format!("{e:#}")),
        }
    }
    out
}

pub fn baseline(cfg: &RunConfig, opts: &BaselineOptions) -> anyhow::Result<ExitCode> {
    let out = RunConfig::require(&cfg.out, "out")?.to_path_buf();
    let inputs = load_inputs(cfg, InventoryKind::Baseline, "baseline")?;
    let backend = pipeline::backend(cfg, inputs.graph.clone());

    let work: Vec<(&SentencePair, &Mentions)> = inputs.corpus.iter().zip(&inputs.mentions).collect();
    let outcomes = pipeline::run_ordered(&work, cfg.workers, |(pair, m)| {
        baseline_sentence(pair, m, &inputs.graph, backend.as_ref(), cfg, opts)
    })?;
    finish(&out, "baseline", inputs.corpus.len(), outcomes, |report, outcomes| {
        report.missing_seeds = Some(outcomes.iter().map(|o| o.missing_seeds).sum());
        if opts.replace_vague {
            let mut total = ReplaceStats::default();
            for o in outcomes {
                total.vague_hops += o.replace.vague_hops;
                total.replaced += o.replace.replaced;
            }
            report.replace_vague = Some(total);
        }
    })
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

pub fn evaluate_cmd(
    cfg: &RunConfig,
    setting: Setting,
    results: &Path,
    templates: Option<&Path>,
) -> anyhow::Result<ExitCode> {
    let corpus = pipeline::load_corpus(RunConfig::require(&cfg.corpus, "corpus")?)?;
    let stopwords = pipeline::load_stopwords(cfg.stopwords.as_deref())?;
    let emb = pipeline::load_embeddings(RunConfig::require(&cfg.embeddings, "embeddings")?, stopwords.clone())?;
    let templates = match templates {
        Some(p) => {
            TemplateTable::from_reader(pipeline::open(p)?).with_context(|| format!("templates {}", p.display()))?
        }
        None => TemplateTable::default(),
    };
    let records: Vec<ConnectRecord> = pipeline::read_jsonl(results)?;
    let items = records
        .iter()
        .map(|r| Ok(EvalItem { sentence_id: r.sentence_id.clone(), result: r.to_result()? }))
        .collect::<Result<Vec<_>, PathfindError>>()
        .with_context(|| format!("results {}", results.display()))?;

    let graph;
    let backend;
    let extractor;
    let silver = if setting == Setting::A {
        let inventory = cfg.inventory.as_deref().unwrap_or("cn13");
        graph =
            Arc::new(pipeline::load_graph(RunConfig::require(&cfg.graph, "graph")?, inventory, InventoryKind::Model)?);
        backend = pipeline::backend(cfg, graph.clone());
        extractor = ConceptExtractor::new(graph.vocab())?.with_stopwords(stopwords);
        Some(SilverSource { extractor: &extractor, classifier: backend.as_ref(), threshold: cfg.threshold })
    } else {
        None
    };
    let report = match evaluate(setting, &corpus, &items, &emb, &templates, silver) {
        Err(e @ EvalError::MissingReference { .. }) => return usage(e.to_string()),
        other => other?,
    };
    emit(cfg.out.as_deref(), &(serde_json::to_string_pretty(&report)? + "\n"))?;
    Ok(ExitCode::SUCCESS)
}

/// `method=path` pairs of result files.
pub fn stats(inputs: &[String], out: Option<&Path>) -> anyhow::Result<ExitCode> {
    if inputs.is_empty() {
        return usage("stats needs at least one --input method=path");
    }
    let mut methods = Vec::new();
    for spec in inputs {
        let (method, path) = match spec.split_once('=') {
            Some((m, p)) => (m.to_string(), PathBuf::from(p)),
            None => {
                let p = PathBuf::from(spec);
                let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| spec.clone());
                (stem, p)
            }
        };
        let records: Vec<ConnectRecord> = pipeline::read_jsonl(&path)?;
        let results = records
            .iter()
            .map(ConnectRecord::to_result)
            .collect::<Result<Vec<_>, _>>()
            .with_context(|| format!("results {}", path.display()))?;
        methods.push((method, results));
    }
    let stats = corpus_stats(&methods);
    print!("{}", render_table(&stats));
    if let Some(path) = out {
        pipeline::write_json(path, &stats)?;
    }
    Ok(ExitCode::SUCCESS)
}

pub fn random_class(cfg: &RunConfig, n: usize) -> anyhow::Result<ExitCode> {
    let inventory = cfg.inventory.as_deref().unwrap_or("cn13");
    let graph = pipeline::load_graph(RunConfig::require(&cfg.graph, "graph")?, inventory, InventoryKind::Model)?;
    let pairs = match build_random_class(&graph, n, cfg.seed) {
        Err(e @ EvalError::InvalidParams(_)) => return usage(e.to_string()),
        other => other?,
    };
    let mut text = String::new();
    for p in &pairs {
        text.push_str(&serde_json::to_string(p)?);
        text.push('\n');
    }
    emit(cfg.out.as_deref(), &text)?;
    Ok(ExitCode::SUCCESS)
}
