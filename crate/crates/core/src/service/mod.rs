//! HTTP annotation service.
//!
//! | method | path          | purpose                                      |
//! |--------|---------------|----------------------------------------------|
//! | GET    | `/batch/next` | unlabeled members of the current batch       |
//! | POST   | `/labels`     | append annotation records                    |
//! | POST   | `/resample`   | new round seeded by consensus positives      |
//! | GET    | `/stats`      | round, stage counts, yield so far, kappa     |
//!
//! Labels go to an append-only JSONL log. Served batches go to a companion
//! log next to it (`<labels>.rounds`), so a restarted service resumes with
//! the same rounds, exclusions and consensus.

mod store;

use std::collections::HashSet;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use parking_lot::RwLock;
use serde::{Deserialize, Serialize};
use serde_json::json;

pub use store::{majority, AnnotationRecord, Consensus, Judgement, LabelStore};

use crate::bridge::{build_seeds, SeedVariant, StageReport};
use crate::corpus::Corpus;
use crate::embedding::EmbeddingTable;
use crate::error::{Error, Result};
use crate::eval::fleiss_kappa;
use crate::langid::{ClusterModel, LanguageLabel};
use crate::sampler::{build_index, nn_sample, NNIndex, SampleBatch};

pub const DEFAULT_PORT: u16 = 8080;
pub const PORT_ENV: &str = "CODEBRIDGE_PORT";

pub fn port_from_env() -> Result<u16> {
    match std::env::var(PORT_ENV) {
        Ok(v) => v
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("{PORT_ENV}={v:?} is not a port"))),
        Err(_) => Ok(DEFAULT_PORT),
    }
}

/// Read-only data the service samples from.
pub struct AnnotationContext {
    pub pool: Corpus,
    pub index: NNIndex,
    pub model: ClusterModel,
    pub table: EmbeddingTable,
    pub target: LanguageLabel,
    pub stages: Vec<StageReport>,
}

impl AnnotationContext {
    pub fn new(
        pool: Corpus,
        model: ClusterModel,
        table: EmbeddingTable,
        target: LanguageLabel,
        stages: Vec<StageReport>,
    ) -> Result<Self> {
        let index = build_index(&pool, &table)?;
        Ok(AnnotationContext {
            pool,
            index,
            model,
            table,
            target,
            stages,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RoundEntry {
    round: usize,
    batch: SampleBatch,
}

/// Mutable session: served rounds and the label store.
pub struct SessionState {
    rounds: Vec<SampleBatch>,
    served: HashSet<String>,
    store: LabelStore,
    rounds_file: Option<(PathBuf, File)>,
}

impl SessionState {
    /// The current round; 0 until the first resample.
    pub fn round(&self) -> usize {
        self.rounds.len().saturating_sub(1)
    }

    pub fn current_batch(&self) -> Option<&SampleBatch> {
        self.rounds.last()
    }

    pub fn rounds(&self) -> &[SampleBatch] {
        &self.rounds
    }

    pub fn served(&self) -> &HashSet<String> {
        &self.served
    }

    pub fn store(&self) -> &LabelStore {
        &self.store
    }

    fn push_round(&mut self, batch: SampleBatch) -> Result<()> {
        if let Some((path, file)) = self.rounds_file.as_mut() {
            let entry = RoundEntry {
                round: self.rounds.len(),
                batch,
            };
            let mut line = serde_json::to_vec(&entry)?;
            line.push(b'\n');
            file.write_all(&line).map_err(|e| Error::io(path.as_path(), e))?;
            file.sync_data().map_err(|e| Error::io(path.as_path(), e))?;
            self.served.extend(entry.batch.pool_ids().map(str::to_string));
            self.rounds.push(entry.batch);
        } else {
            self.served.extend(batch.pool_ids().map(str::to_string));
            self.rounds.push(batch);
        }
        Ok(())
    }

    /// Consensus-positive pool ids in the order they were first served.
    pub fn confirmed_positives(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        self.rounds
            .iter()
            .flat_map(|b| b.pool_ids())
            .filter(|id| seen.insert(*id))
            .filter(|id| self.store.consensus(id) == Consensus::Hope)
            .map(str::to_string)
            .collect()
    }
}

pub fn rounds_path(labels: &Path) -> PathBuf {
    let mut s = labels.as_os_str().to_owned();
    s.push(".rounds");
    PathBuf::from(s)
}

fn read_rounds(path: &Path) -> Result<Vec<SampleBatch>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let lines: Vec<String> = BufReader::new(file)
        .lines()
        .collect::<std::io::Result<_>>()
        .map_err(|e| Error::io(path, e))?;
    let last = lines.len();
    let mut rounds = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<RoundEntry>(line) {
            Ok(entry) if entry.round == rounds.len() => rounds.push(entry.batch),
            Ok(entry) => {
                return Err(Error::parse(
                    i + 1,
                    format!("expected round {}, found {}", rounds.len(), entry.round),
                ))
            }
            Err(e) if i + 1 == last => log::warn!("ignoring torn final round in {}: {e}", path.display()),
            Err(e) => return Err(Error::parse(i + 1, e.to_string())),
        }
    }
    Ok(rounds)
}

pub struct Service {
    context: AnnotationContext,
    state: RwLock<SessionState>,
}

impl Service {
    /// A service without persistence.
    pub fn in_memory(context: AnnotationContext, initial: Option<SampleBatch>) -> Result<Self> {
        let mut state = SessionState {
            rounds: Vec::new(),
            served: HashSet::new(),
            store: LabelStore::in_memory(),
            rounds_file: None,
        };
        if let Some(batch) = initial {
            state.push_round(batch)?;
        }
        Ok(Service {
            context,
            state: RwLock::new(state),
        })
    }

    /// Opens the label log at `labels` and its rounds log, replaying both.
    ///
    /// `initial` becomes round 0 only when no round has been recorded yet.
    pub fn open(context: AnnotationContext, labels: impl AsRef<Path>, initial: Option<SampleBatch>) -> Result<Self> {
        let labels = labels.as_ref();
        let store = LabelStore::open(labels)?;
        let rpath = rounds_path(labels);
        let rounds = if rpath.exists() { read_rounds(&rpath)? } else { Vec::new() };
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&rpath)
            .map_err(|e| Error::io(&rpath, e))?;
        let served = rounds
            .iter()
            .flat_map(|b| b.pool_ids().map(str::to_string))
            .collect();
        let mut state = SessionState {
            rounds,
            served,
            store,
            rounds_file: Some((rpath, file)),
        };
        if state.rounds.is_empty() {
            if let Some(batch) = initial {
                state.push_round(batch)?;
            }
        }
        Ok(Service {
            context,
            state: RwLock::new(state),
        })
    }

    pub fn context(&self) -> &AnnotationContext {
        &self.context
    }

    pub fn state(&self) -> parking_lot::RwLockReadGuard<'_, SessionState> {
        self.state.read()
    }

    /// Up to `n` current-batch members not yet labeled by `annotator`.
    pub fn next_items(&self, annotator: &str, n: usize) -> Option<Vec<BatchItem>> {
        let state = self.state.read();
        let batch = state.current_batch()?;
        Some(
            batch
                .members
                .iter()
                .filter(|m| !state.store.is_labeled_by(&m.pool_id, annotator))
                .take(n)
                .map(|m| BatchItem {
                    pool_id: m.pool_id.clone(),
                    text: self
                        .context
                        .pool
                        .get(&m.pool_id)
                        .map(|c| c.text.clone())
                        .unwrap_or_default(),
                    distance: m.distance,
                    seed_id: m.seed_id.clone(),
                })
                .collect(),
        )
    }

    /// Validates and appends records. Unknown pool ids reject the whole request.
    pub fn submit(&self, records: Vec<LabelSubmission>) -> std::result::Result<usize, SubmitError> {
        let mut state = self.state.write();
        let unknown: Vec<String> = records
            .iter()
            .filter(|r| !state.served.contains(&r.pool_id))
            .map(|r| r.pool_id.clone())
            .collect();
        if !unknown.is_empty() {
            return Err(SubmitError::UnknownIds(unknown));
        }
        if records.iter().any(|r| r.annotator.trim().is_empty()) {
            return Err(SubmitError::Invalid("annotator must not be empty".into()));
        }
        let now = Utc::now();
        let records = records
            .into_iter()
            .map(|r| AnnotationRecord {
                pool_id: r.pool_id,
                label: r.label,
                annotator: r.annotator,
                timestamp: r.timestamp.unwrap_or(now),
            })
            .collect();
        state.store.append(records).map_err(SubmitError::Store)
    }

    /// Runs a new sampling round seeded by consensus positives.
    pub fn resample(&self, variant: SeedVariant, size: usize) -> std::result::Result<ResampleResponse, ResampleError> {
        let mut state = self.state.write();
        let positives = state.confirmed_positives();
        if positives.is_empty() {
            return Err(ResampleError::NoPositives);
        }
        let ctx = &self.context;
        let comments = positives.iter().filter_map(|id| ctx.pool.get(id));
        let seeds = build_seeds(comments, variant, &ctx.model, &ctx.table, ctx.target)
            .map_err(ResampleError::Failed)?;
        if seeds.seeds.is_empty() {
            return Err(ResampleError::NoUsableSeeds);
        }
        let name = match variant {
            SeedVariant::Raw => "D_hope_+".to_string(),
            SeedVariant::Extracted => format!("D_hope^{{{},+}}", ctx.target),
        };
        let outcome = nn_sample(&name, &seeds.seeds, &ctx.index, size, &state.served)
            .map_err(ResampleError::Failed)?;
        let batch_size = outcome.batch.len();
        state.push_round(outcome.batch).map_err(ResampleError::Failed)?;
        Ok(ResampleResponse {
            round: state.round(),
            batch_size,
        })
    }

    pub fn stats(&self) -> Stats {
        let state = self.state.read();
        let consensus = state.store.consensus_map();
        let positives = consensus.values().filter(|c| **c == Consensus::Hope).count();
        let labeled = consensus
            .values()
            .filter(|c| **c != Consensus::Unresolved)
            .count();
        let table = state.store.rating_table();
        let kappa = if table.is_empty() {
            None
        } else {
            fleiss_kappa(&table).ok()
        };
        Stats {
            round: state.round(),
            stage_counts: self.context.stages.clone(),
            yield_so_far: (labeled > 0).then(|| positives as f64 / labeled as f64),
            kappa,
            labeled,
            positives,
            batch_size: state.current_batch().map_or(0, SampleBatch::len),
            records: state.store.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchItem {
    #[serde(rename = "poolId")]
    pub pool_id: String,
    pub text: String,
    pub distance: f64,
    #[serde(rename = "seedId")]
    pub seed_id: String,
}

/// A record as posted; the server stamps records that carry no timestamp.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelSubmission {
    #[serde(rename = "poolId")]
    pub pool_id: String,
    pub label: Judgement,
    pub annotator: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<DateTime<Utc>>,
}

#[derive(Debug)]
pub enum SubmitError {
    UnknownIds(Vec<String>),
    Invalid(String),
    Store(Error),
}

#[derive(Debug)]
pub enum ResampleError {
    NoPositives,
    NoUsableSeeds,
    Failed(Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResampleRequest {
    pub variant: SeedVariant,
    pub size: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResampleResponse {
    pub round: usize,
    #[serde(rename = "batchSize")]
    pub batch_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub round: usize,
    #[serde(rename = "stageCounts")]
    pub stage_counts: Vec<StageReport>,
    #[serde(rename = "yieldSoFar")]
    pub yield_so_far: Option<f64>,
    pub kappa: Option<f64>,
    pub labeled: usize,
    pub positives: usize,
    #[serde(rename = "batchSize")]
    pub batch_size: usize,
    pub records: usize,
}

fn error_body(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(json!({ "error": message.into() }))).into_response()
}

#[derive(Debug, Deserialize)]
struct NextQuery {
    annotator: Option<String>,
    n: Option<String>,
}

async fn batch_next(State(service): State<Arc<Service>>, Query(q): Query<NextQuery>) -> Response {
    let annotator = match q.annotator.as_deref().map(str::trim) {
        Some(a) if !a.is_empty() => a.to_string(),
        _ => return error_body(StatusCode::BAD_REQUEST, "annotator is required"),
    };
    let n = match q.n.as_deref().map(str::parse::<usize>) {
        None => 10,
        Some(Ok(n)) if n > 0 => n,
        _ => return error_body(StatusCode::BAD_REQUEST, "n must be a positive integer"),
    };
    match service.next_items(&annotator, n) {
        Some(items) => Json(items).into_response(),
        None => error_body(StatusCode::NOT_FOUND, "no batch has been sampled yet"),
    }
}

async fn post_labels(State(service): State<Arc<Service>>, Json(records): Json<Vec<LabelSubmission>>) -> Response {
    match service.submit(records) {
        Ok(accepted) => Json(json!({ "accepted": accepted })).into_response(),
        Err(SubmitError::UnknownIds(ids)) => (
            StatusCode::UNPROCESSABLE_ENTITY,
            Json(json!({ "error": "unknown poolId", "unknownIds": ids })),
        )
            .into_response(),
        Err(SubmitError::Invalid(msg)) => error_body(StatusCode::BAD_REQUEST, msg),
        Err(SubmitError::Store(e)) => error_body(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

async fn post_resample(State(service): State<Arc<Service>>, Json(req): Json<ResampleRequest>) -> Response {
    let result = tokio::task::spawn_blocking(move || service.resample(req.variant, req.size)).await;
    match result {
        Ok(Ok(r)) => Json(r).into_response(),
        Ok(Err(ResampleError::NoPositives)) => {
            error_body(StatusCode::CONFLICT, "no consensus-positive labels yet")
        }
        Ok(Err(ResampleError::NoUsableSeeds)) => error_body(
            StatusCode::CONFLICT,
            "no confirmed positive has a usable embedding for this variant",
        ),
        Ok(Err(ResampleError::Failed(e))) => error_body(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
        Err(e) => error_body(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

async fn get_stats(State(service): State<Arc<Service>>) -> Json<Stats> {
    Json(service.stats())
}

pub fn router(service: Arc<Service>) -> Router {
    Router::new()
        .route("/batch/next", get(batch_next))
        .route("/labels", post(post_labels))
        .route("/resample", post(post_resample))
        .route("/stats", get(get_stats))
        .with_state(service)
}

/// Serves until ctrl-c.
pub async fn serve(service: Arc<Service>, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(service))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
