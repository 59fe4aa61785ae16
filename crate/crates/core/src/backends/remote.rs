use std::collections::{BTreeMap, HashSet};
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{check_targets, BackendError, GeneratedTarget, RelationClassifier, RelationDistribution, TargetGenerator};
use crate::extract::ConceptPair;
use crate::kg::{Concept, Relation, RelationType, CN13};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteConfig {
    pub base_url: String,
    pub timeout_ms: u64,
    pub max_retries: u32,
    pub max_concurrent: usize,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        RemoteConfig { base_url: "http://127.0.0.1:8000".into(), timeout_ms: 10_000, max_retries: 2, max_concurrent: 8 }
    }
}

#[derive(Debug)]
struct Semaphore {
    available: Mutex<usize>,
    freed: Condvar,
}

struct Permit<'a>(&'a Semaphore);

impl Semaphore {
    fn new(n: usize) -> Self {
        Semaphore { available: Mutex::new(n.max(1)), freed: Condvar::new() }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut n = self.available.lock().expect("semaphore poisoned");
        while *n == 0 {
            n = self.freed.wait(n).expect("semaphore poisoned");
        }
        *n -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.available.lock().expect("semaphore poisoned") += 1;
        self.0.freed.notify_one();
    }
}

#[derive(Serialize)]
struct ClassifyRequest<'a> {
    head: &'a str,
    tail: &'a str,
}

#[derive(Deserialize)]
struct ClassifyResponse {
    scores: BTreeMap<String, f64>,
}

#[derive(Serialize)]
struct GenerateRequest<'a> {
    source: &'a str,
    relation: &'a str,
    inverted: bool,
    beam: usize,
}

#[derive(Deserialize)]
struct GenerateResponse {
    targets: Vec<WireTarget>,
}

#[derive(Deserialize)]
struct WireTarget {
    concept: String,
    confidence: f64,
}

/// JSON-over-HTTP client for a model service exposing `/classify` and `/generate`.
///
/// At most `max_concurrent` requests are in flight across all threads sharing
/// the client. Transport failures and 5xx answers are retried up to
/// `max_retries` times; 4xx answers and malformed bodies are protocol errors.
#[derive(Debug)]
pub struct RemoteBackend {
    agent: ureq::Agent,
    config: RemoteConfig,
    permits: Semaphore,
    relations: Vec<Relation>,
}

impl RemoteBackend {
    pub fn new(config: RemoteConfig) -> Self {
        let agent: ureq::Agent =
            ureq::Agent::config_builder().timeout_global(Some(Duration::from_millis(config.timeout_ms))).build().into();
        RemoteBackend { agent, permits: Semaphore::new(config.max_concurrent), config, relations: CN13.to_vec() }
    }

    /// Overrides the relation set the generator is assumed to know (CN-13 by default).
    pub fn with_relations(mut self, relations: Vec<Relation>) -> Self {
        self.relations = relations;
        self
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }

    fn post<Req: Serialize, Resp: DeserializeOwned>(&self, path: &str, body: &Req) -> Result<Resp, BackendError> {
        let url = format!("{}/{}", self.config.base_url.trim_end_matches('/'), path);
        let _permit = self.permits.acquire();
        let mut last = BackendError::Transport(format!("no attempt made for {url}"));
        for attempt in 0..=self.config.max_retries {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(25 * u64::from(attempt)));
            }
            match self.agent.post(&url).send_json(body) {
                Ok(mut resp) => {
                    return resp
                        .body_mut()
                        .read_json::<Resp>()
                        .map_err(|e| BackendError::Protocol(format!("{url}: {e}")));
                }
                Err(ureq::Error::StatusCode(code)) if code >= 500 => {
                    last = BackendError::Transport(format!("{url}: HTTP {code}"));
                }
                Err(ureq::Error::StatusCode(code)) => {
                    return Err(BackendError::Protocol(format!("{url}: HTTP {code}")));
                }
                Err(e) => last = BackendError::Transport(format!("{url}: {e}")),
            }
            log::debug!("attempt {} for {url} failed: {last}", attempt + 1);
        }
        Err(last)
    }
}

impl RelationClassifier for RemoteBackend {
    fn classify(&self, pair: &ConceptPair) -> Result<RelationDistribution, BackendError> {
        let resp: ClassifyResponse =
            self.post("classify", &ClassifyRequest { head: pair.c_s.as_str(), tail: pair.c_t.as_str() })?;
        let mut scores = BTreeMap::new();
        for (label, score) in resp.scores {
            let rel: Relation =
                label.parse().map_err(|_| BackendError::Protocol(format!("unknown label {label:?}")))?;
            if scores.insert(rel, score).is_some() {
                return Err(BackendError::Protocol(format!("label {label:?} repeated")));
            }
        }
        RelationDistribution::new(scores)
    }
}

impl TargetGenerator for RemoteBackend {
    fn relations(&self) -> Vec<Relation> {
        self.relations.clone()
    }

    fn generate(
        &self,
        source: &Concept,
        relation: RelationType,
        beam: usize,
    ) -> Result<Vec<GeneratedTarget>, BackendError> {
        if beam == 0 {
            return Err(BackendError::InvalidRequest("beam must be at least 1".into()));
        }
        let resp: GenerateResponse = self.post(
            "generate",
            &GenerateRequest {
                source: source.as_str(),
                relation: relation.relation.name(),
                inverted: relation.inverted,
                beam,
            },
        )?;
        if resp.targets.len() > beam {
            return Err(BackendError::Protocol(format!("{} targets for beam {beam}", resp.targets.len())));
        }
        // Models may echo the source or repeat a surface form after normalization;
        // both are dropped and the remaining targets re-ranked.
        let mut seen = HashSet::new();
        let mut targets = Vec::new();
        for t in resp.targets {
            let concept =
                Concept::new(&t.concept).map_err(|e| BackendError::Protocol(format!("bad target concept: {e}")))?;
            if concept == *source || !seen.insert(concept.clone()) {
                continue;
            }
            targets.push(GeneratedTarget { concept, confidence: t.confidence, rank: targets.len() + 1 });
        }
        check_targets(source, &targets, beam)?;
        Ok(targets)
    }
}
