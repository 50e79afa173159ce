//! JSON HTTP API over a loaded index.

use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use xtrials_core::engine::SearchOutcome;
use xtrials_core::{
    Dependency, EngineVariant, FeatureId, FeatureKind, Index, ScoredTrial, WeightsDocument, DEFAULT_LIMIT,
};

use crate::manifest::{load_weights, IndexManifest, LoadedWeights};

/// Rounds a score for display. Ranking always uses the unrounded value.
pub fn round3(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

pub struct AppState {
    index: Arc<Index>,
    manifest: Option<IndexManifest>,
    weights: RwLock<Arc<LoadedWeights>>,
    weights_path: Option<PathBuf>,
}

impl AppState {
    pub fn new(
        index: Index,
        manifest: Option<IndexManifest>,
        weights: LoadedWeights,
        weights_path: Option<PathBuf>,
    ) -> Self {
        Self {
            index: Arc::new(index),
            manifest,
            weights: RwLock::new(Arc::new(weights)),
            weights_path,
        }
    }

    /// The table a request uses from start to finish.
    pub fn weights(&self) -> Arc<LoadedWeights> {
        self.weights.read().unwrap_or_else(|e| e.into_inner()).clone()
    }

    /// Re-reads the weights file and swaps it in. On failure the current
    /// table stays in place.
    pub fn reload_weights(&self) -> Result<Arc<LoadedWeights>, ApiError> {
        let path = self.weights_path.as_ref().ok_or_else(|| {
            ApiError::new(
                StatusCode::CONFLICT,
                "no_weights_source",
                "service was started without a weights file",
            )
        })?;
        let fresh = Arc::new(
            load_weights(path)
                .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "reload_failed", e.to_string()))?,
        );
        *self.weights.write().unwrap_or_else(|e| e.into_inner()) = fresh.clone();
        Ok(fresh)
    }

    pub fn index(&self) -> &Index {
        &self.index
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub suggestions: Vec<String>,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            body: ErrorBody {
                code: code.to_string(),
                message: message.into(),
                suggestions: Vec::new(),
            },
        }
    }
}

impl From<xtrials_core::Error> for ApiError {
    fn from(err: xtrials_core::Error) -> Self {
        use xtrials_core::Error as E;
        let message = err.to_string();
        match err {
            E::InvalidQuery(_) => ApiError::new(StatusCode::BAD_REQUEST, "empty_query", message),
            E::UnknownCondition { suggestions, .. } => {
                let mut e = ApiError::new(StatusCode::NOT_FOUND, "unknown_condition", message);
                e.body.suggestions = suggestions;
                e
            }
            E::UnknownTrial(_) => ApiError::new(StatusCode::NOT_FOUND, "unknown_trial", message),
            E::TrialNotLinked { .. } => ApiError::new(StatusCode::NOT_FOUND, "trial_not_linked", message),
            _ => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal_error", message),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchHit {
    pub nct_id: String,
    pub title: String,
    pub score: f64,
    pub explanations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResponse {
    pub query: String,
    pub cui: String,
    pub variant: EngineVariant,
    pub results: Vec<SearchHit>,
    pub total: usize,
}

impl From<SearchOutcome<f64>> for SearchResponse {
    fn from(out: SearchOutcome<f64>) -> Self {
        Self {
            query: out.query,
            cui: out.cui,
            variant: out.variant,
            total: out.total,
            results: out
                .results
                .into_iter()
                .map(|t| SearchHit {
                    nct_id: t.nct_id,
                    title: t.title,
                    score: round3(t.e_ct),
                    explanations: t.explanations.into_iter().map(|s| s.text).collect(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub feature: FeatureId,
    pub kind: FeatureKind,
    pub dependency: Dependency,
    pub raw: u64,
    pub score: f64,
    pub weight: f64,
    pub contribution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub e_it: f64,
    pub e_dtc: f64,
    pub e_ct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResponse {
    pub nct_id: String,
    pub title: String,
    pub brief_summary: String,
    pub stage: Option<String>,
    pub overall_status: Option<String>,
    pub primary_purpose: Option<String>,
    pub publication_count: u64,
    pub query: String,
    pub cui: String,
    pub scores: Scores,
    pub features: Vec<FeatureRow>,
    pub explanations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HealthResponse {
    pub status: String,
    pub trials: usize,
    pub concepts: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub built_at: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
pub struct SearchParams {
    pub q: Option<String>,
    pub variant: Option<String>,
    pub limit: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
pub struct TrialParams {
    pub q: Option<String>,
}

fn require_query(q: Option<String>) -> Result<String, ApiError> {
    match q {
        Some(q) if !q.trim().is_empty() => Ok(q),
        _ => Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "empty_query",
            "query parameter q is required",
        )),
    }
}

fn parse_variant(v: Option<&str>) -> Result<EngineVariant, ApiError> {
    match v {
        None => Ok(EngineVariant::default()),
        Some(s) => s.parse().map_err(|_| {
            let names: Vec<&str> = EngineVariant::ALL.iter().map(|v| v.as_str()).collect();
            ApiError::new(
                StatusCode::BAD_REQUEST,
                "unknown_variant",
                format!("unknown variant {s:?}; expected one of {}", names.join(", ")),
            )
        }),
    }
}

fn parse_limit(v: Option<&str>) -> Result<usize, ApiError> {
    match v {
        None => Ok(DEFAULT_LIMIT),
        Some(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(ApiError::new(
                StatusCode::BAD_REQUEST,
                "invalid_limit",
                format!("limit must be a positive integer, got {s:?}"),
            )),
        },
    }
}

/// Search with the same semantics as `GET /api/search`, usable in-process.
pub fn search(state: &AppState, params: SearchParams) -> Result<SearchResponse, ApiError> {
    let q = require_query(params.q)?;
    let variant = parse_variant(params.variant.as_deref())?;
    let limit = parse_limit(params.limit.as_deref())?;
    let w = state.weights();
    Ok(state.index.search(&w.table, &w.prefs, &q, variant, limit)?.into())
}

pub fn trial_detail(state: &AppState, nct_id: &str, params: TrialParams) -> Result<TrialResponse, ApiError> {
    let q = require_query(params.q)?;
    let w = state.weights();
    let scored: ScoredTrial = state.index.trial(&w.table, &w.prefs, nct_id, &q)?;
    let record = state
        .index
        .corpus()
        .get(nct_id)
        .ok_or_else(|| ApiError::from(xtrials_core::Error::UnknownTrial(nct_id.to_string())))?;
    let features = scored
        .features
        .iter()
        .map(|(feature, raw, score)| {
            let weight = w.table.weight(feature);
            FeatureRow {
                feature,
                kind: feature.kind(),
                dependency: feature.dependency(),
                raw,
                score,
                weight,
                contribution: weight * score,
            }
        })
        .collect();
    Ok(TrialResponse {
        nct_id: record.nct_id.clone(),
        title: record.title.clone(),
        brief_summary: record.brief_summary.clone(),
        stage: record.stage.clone(),
        overall_status: record.overall_status.clone(),
        primary_purpose: record.primary_purpose.clone(),
        publication_count: record.publication_count,
        query: q.trim().to_string(),
        cui: scored.cui,
        scores: Scores {
            e_it: round3(scored.e_it),
            e_dtc: round3(scored.e_dtc),
            e_ct: round3(scored.e_ct),
        },
        features,
        explanations: scored.explanations.into_iter().map(|s| s.text).collect(),
    })
}

type Shared = Arc<AppState>;

async fn search_handler(
    State(state): State<Shared>,
    Query(params): Query<SearchParams>,
) -> Result<Json<SearchResponse>, ApiError> {
    search(&state, params).map(Json)
}

async fn trial_handler(
    State(state): State<Shared>,
    Path(nct_id): Path<String>,
    Query(params): Query<TrialParams>,
) -> Result<Json<TrialResponse>, ApiError> {
    trial_detail(&state, &nct_id, params).map(Json)
}

async fn weights_handler(State(state): State<Shared>) -> Json<WeightsDocument> {
    Json(state.weights().document.clone())
}

async fn health_handler(State(state): State<Shared>) -> Json<HealthResponse> {
    Json(HealthResponse {
        status: "ok".into(),
        trials: state.index.corpus().len(),
        concepts: state.index.graph().len(),
        built_at: state.manifest.as_ref().map(|m| m.built_at.to_rfc3339()),
    })
}

async fn reload_handler(State(state): State<Shared>) -> Result<Json<WeightsDocument>, ApiError> {
    state.reload_weights().map(|w| Json(w.document.clone()))
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint")
}

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/api/search", get(search_handler))
        .route("/api/trials/{nct_id}", get(trial_handler))
        .route("/api/weights", get(weights_handler))
        .route("/api/health", get(health_handler))
        .route("/api/admin/reload-weights", post(reload_handler))
        .fallback(not_found)
        .with_state(state)
}
