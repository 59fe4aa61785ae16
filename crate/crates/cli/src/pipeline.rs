//! Loading inputs, building backends and running the per-sentence-pair work.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use anyhow::Context;
use connect_core::backends::{KgOracle, Memoized, RelationClassifier, RemoteBackend, TargetGenerator};
use connect_core::embed::EmbeddingStore;
use connect_core::extract::{load_pre_extracted, read_corpus, ConceptExtractor, ConceptMention, SentencePair};
use connect_core::kg::{InventoryKind, KnowledgeGraph, RelationInventory};
use connect_core::text::Stopwords;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{BackendKind, RunConfig};

/// A backend that both classifies and generates.
pub trait Backend: RelationClassifier + TargetGenerator {}

impl<T: RelationClassifier + TargetGenerator> Backend for T {}

pub fn open(path: &Path) -> anyhow::Result<BufReader<File>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(BufReader::new(file))
}

pub fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

pub fn load_graph(path: &Path, inventory: &str, kind: InventoryKind) -> anyhow::Result<KnowledgeGraph> {
    let inventory =
        RelationInventory::resolve(inventory, kind).with_context(|| format!("relation inventory {inventory}"))?;
    let graph =
        KnowledgeGraph::load(open(path)?, inventory).with_context(|| format!("loading graph {}", path.display()))?;
    if graph.skipped_self_loops() > 0 {
        log::warn!("skipped {} self-loop triples", graph.skipped_self_loops());
    }
    log::info!("graph: {} triples, {} concepts", graph.len(), graph.vocab().len());
    Ok(graph)
}

pub fn load_stopwords(path: Option<&Path>) -> anyhow::Result<Stopwords> {
    match path {
        Some(p) => Stopwords::from_reader(open(p)?).with_context(|| format!("reading stopwords {}", p.display())),
        None => Ok(Stopwords::default()),
    }
}

pub fn load_embeddings(path: &Path, stopwords: Stopwords) -> anyhow::Result<EmbeddingStore> {
    let store = EmbeddingStore::load(open(path)?).with_context(|| format!("loading embeddings {}", path.display()))?;
    Ok(store.with_stopwords(stopwords))
}

pub fn load_corpus(path: &Path) -> anyhow::Result<Vec<SentencePair>> {
    read_corpus(open(path)?).with_context(|| format!("reading corpus {}", path.display()))
}

/// Backend over `graph` (oracle) or the configured model service (remote).
pub fn backend(cfg: &RunConfig, graph: Arc<KnowledgeGraph>) -> Box<dyn Backend> {
    match cfg.backend {
        BackendKind::Oracle => Box::new(KgOracle::new(graph)),
        BackendKind::Remote => Box::new(Memoized::new(RemoteBackend::new(cfg.remote.clone()))),
    }
}

pub type Mentions = (Vec<ConceptMention>, Vec<ConceptMention>);

/// Concept mentions for every sentence pair, from the gazetteer or from a
/// pre-extracted file. Pairs missing from the file get no mentions.
pub fn mentions(
    corpus: &[SentencePair],
    graph: &KnowledgeGraph,
    stopwords: &Stopwords,
    pre_extracted: Option<&Path>,
) -> anyhow::Result<Vec<Mentions>> {
    if let Some(path) = pre_extracted {
        let mut pre = load_pre_extracted(open(path)?, corpus, graph.vocab())
            .with_context(|| format!("reading pre-extracted concepts {}", path.display()))?;
        if pre.dropped > 0 {
            log::warn!("{} pre-extracted concepts are not in the graph and were dropped", pre.dropped);
        }
        return Ok(corpus.iter().map(|p| pre.mentions.remove(&p.id).unwrap_or_default()).collect());
    }
    let extractor = ConceptExtractor::new(graph.vocab())?.with_stopwords(stopwords.clone());
    Ok(corpus.iter().map(|p| (extractor.extract(&p.s1), extractor.extract(&p.s2))).collect())
}

/// A concept pair that could not be processed.
#[derive(Debug, Clone, Serialize)]
pub struct Failure {
    pub pair_id: String,
    pub sentence_id: String,
    pub c_s: String,
    pub c_t: String,
    pub error: String,
}

/// Runs `work` over the items on `workers` threads, returning results in input order.
pub fn run_ordered<T, R, F>(items: &[T], workers: usize, work: F) -> anyhow::Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;
    Ok(pool.install(|| items.par_iter().map(&work).collect()))
}

pub fn write_jsonl<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> anyhow::Result<()> {
    let mut w = create(path)?;
    for row in rows {
        serde_json::to_writer(&mut w, &row)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<Vec<T>> {
    let mut out = Vec::new();
    for (idx, line) in open(path)?.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).with_context(|| format!("{} line {}", path.display(), idx + 1))?);
    }
    Ok(out)
}

/// `<path><suffix>`, e.g. `out.jsonl.failures.jsonl`.
pub fn sidecar(path: &Path, suffix: &str) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    s.into()
}
