//! HTTP facade: every module operation under `/v1`, backed by the
//! content-addressed model store and an optional annotation database.
//!
//! Responses default to JSON; tabular operations honor
//! `Accept: text/tab-separated-values`.  `POST /v1/shorthand` returns
//! canonical SBML, or shorthand when `Accept: text/x-shorthand` is sent.
//! Error statuses: 400 precondition failures, 404 unknown handles or
//! routes, 409 merge conflicts (body is the conflict report itself),
//! 422 validation errors, 500 numerical failures.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Body;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::{Deserialize, Serialize};

use sbmlkit::annodb::AnnotationStore;
use sbmlkit::annotation::UriEquivalence;
use sbmlkit::balance::{BalanceError, BalancingConfig};
use sbmlkit::diffmerge::{
    diff_models, merge_models, split_model, ConflictReport, DefaultPolicy, MergeError,
    MergePolicy, SplitError,
};
use sbmlkit::dot::{model_to_dot, DotOptions};
use sbmlkit::model::InvalidModel;
use sbmlkit::sbo::{SboError, SboRuleTable};
use sbmlkit::shorthand::print_shorthand;
use sbmlkit::ModelDocument;

use crate::formats::{
    cluster_payload, conflict_payload, diff_payload, json_bytes, merge_body, merge_payload,
    balance_payload, sbo_payload, records_payload, Format, StoredBody,
};
use crate::ops::{run_balance, run_cluster, run_sbo};
use crate::store::{is_handle, parse_model_bytes, ModelInputError, ModelStore};

const CONTENT_JSON: &str = "application/json";
const CONTENT_XML: &str = "application/xml";
const CONTENT_TSV: &str = "text/tab-separated-values";
const CONTENT_SHORTHAND: &str = "text/x-shorthand";
const CONTENT_DOT: &str = "text/vnd.graphviz";

/// Machine-readable error envelope for every non-2xx response except 409,
/// whose body is the conflict report itself.
#[derive(Debug, Clone, Serialize)]
pub struct ApiError {
    pub status: u16,
    pub code: String,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl ToString) -> ApiError {
        ApiError {
            status: status.as_u16(),
            code: code.to_string(),
            message: message.to_string(),
        }
    }

    fn bad_request(code: &str, message: impl ToString) -> ApiError {
        ApiError::new(StatusCode::BAD_REQUEST, code, message)
    }

    fn not_found(code: &str, message: impl ToString) -> ApiError {
        ApiError::new(StatusCode::NOT_FOUND, code, message)
    }

    fn invalid(e: InvalidModel) -> ApiError {
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid-model", e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        respond(status, CONTENT_JSON, json_bytes(&self))
    }
}

fn respond(status: StatusCode, content_type: &str, body: Vec<u8>) -> Response {
    Response::builder()
        .status(status)
        .header(header::CONTENT_TYPE, content_type)
        .body(Body::from(body))
        .expect("static response parts")
}

fn ok(content_type: &str, body: Vec<u8>) -> Response {
    respond(StatusCode::OK, content_type, body)
}

fn ok_formatted(format: Format, body: Vec<u8>) -> Response {
    let content_type = match format {
        Format::Json => CONTENT_JSON,
        Format::Tsv => CONTENT_TSV,
    };
    ok(content_type, body)
}

/// Shared service state: the store, and an optional annotation database
/// opened read-only (searches and the matching equivalence oracle).
#[derive(Clone)]
pub struct AppState {
    pub store: Arc<ModelStore>,
    pub db: Option<Arc<AnnotationStore>>,
}

impl AppState {
    fn equiv(&self) -> Option<&dyn UriEquivalence> {
        self.db.as_deref().map(|db| db as &dyn UriEquivalence)
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/v1/models", post(post_model))
        .route("/v1/models/{hash}", get(get_model))
        .route("/v1/shorthand", post(post_shorthand))
        .route("/v1/diff", post(post_diff))
        .route("/v1/merge", post(post_merge))
        .route("/v1/split", post(post_split))
        .route("/v1/balance", post(post_balance))
        .route("/v1/sbo", post(post_sbo))
        .route("/v1/cluster", post(post_cluster))
        .route("/v1/visualize", post(post_visualize))
        .route("/v1/annotations/search", get(get_search))
        .fallback(not_found)
        .with_state(state)
}

/// Run the service; prints the bound address on stdout once listening.
pub fn serve(port: u16, store_dir: PathBuf, db_dir: Option<PathBuf>) -> anyhow::Result<()> {
    let store = Arc::new(ModelStore::open(&store_dir)?);
    let db = match db_dir {
        Some(dir) => Some(Arc::new(AnnotationStore::open(dir)?)),
        None => None,
    };
    let state = AppState { store, db };
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(("127.0.0.1", port)).await?;
        let addr = listener.local_addr()?;
        println!("listening on http://{addr}");
        std::io::stdout().flush().ok();
        axum::serve(listener, router(state))
            .with_graceful_shutdown(async {
                tokio::signal::ctrl_c().await.ok();
            })
            .await?;
        Ok(())
    })
}

// ----- request plumbing ----------------------------------------------------

fn accept_format(headers: &HeaderMap) -> Format {
    let accept = headers
        .get(header::ACCEPT)
        .and_then(|v| v.to_str().ok())
        .unwrap_or("");
    if accept.contains(CONTENT_TSV) {
        Format::Tsv
    } else {
        Format::Json
    }
}

fn wants_shorthand(headers: &HeaderMap) -> bool {
    headers
        .get(header::ACCEPT)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.contains(CONTENT_SHORTHAND))
}

fn parse_body<T: for<'de> Deserialize<'de>>(body: &str) -> Result<T, ApiError> {
    serde_json::from_str(body).map_err(|e| ApiError::bad_request("bad-request", e))
}

fn input_error(e: ModelInputError) -> ApiError {
    match e {
        ModelInputError::Invalid(inner) => ApiError::invalid(inner),
        other => ApiError::bad_request("parse-failure", other),
    }
}

/// A model reference: a 64-hex handle of a stored model, or inline model
/// text (shorthand or SBML).
fn resolve_model(state: &AppState, reference: &str) -> Result<ModelDocument, ApiError> {
    if is_handle(reference) {
        return state
            .store
            .get(reference)
            .ok_or_else(|| ApiError::not_found("unknown-model", format!("no model {reference}")));
    }
    parse_model_bytes(reference.as_bytes()).map_err(input_error)
}

fn store_result(state: &AppState, doc: &ModelDocument) -> Result<(), ApiError> {
    state
        .store
        .put(doc)
        .map(|_| ())
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "io-error", e))
}

fn balance_error(e: BalanceError) -> ApiError {
    match e {
        BalanceError::SingularSystem(_) | BalanceError::NumericalFailure(_) => {
            ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "numerical-failure", e)
        }
        BalanceError::Invalid(inner) => ApiError::invalid(inner),
        BalanceError::IncompleteBalance(_) => ApiError::bad_request("incomplete-balance", e),
        other => ApiError::bad_request("bad-data", other),
    }
}

fn sbo_error(e: SboError) -> ApiError {
    match e {
        SboError::MalformedRuleTable(_) => ApiError::bad_request("bad-rules", e),
        SboError::NoKineticLaw(_) => ApiError::bad_request("no-kinetic-law", e),
        SboError::Invalid(inner) => ApiError::invalid(inner),
    }
}

// ----- handlers -------------------------------------------------------------

async fn not_found() -> ApiError {
    ApiError::not_found("not-found", "no such route")
}

async fn post_model(State(state): State<AppState>, body: String) -> Result<Response, ApiError> {
    let doc = parse_model_bytes(body.as_bytes()).map_err(input_error)?;
    let hash = state
        .store
        .put(&doc)
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "io-error", e))?;
    Ok(respond(
        StatusCode::CREATED,
        CONTENT_JSON,
        json_bytes(&StoredBody { hash }),
    ))
}

async fn get_model(
    State(state): State<AppState>,
    Path(hash): Path<String>,
) -> Result<Response, ApiError> {
    match state.store.get_bytes(&hash) {
        Some(bytes) => Ok(ok(CONTENT_XML, bytes)),
        None => Err(ApiError::not_found(
            "unknown-model",
            format!("no model {hash}"),
        )),
    }
}

async fn post_shorthand(
    State(state): State<AppState>,
    headers: HeaderMap,
    body: String,
) -> Result<Response, ApiError> {
    let doc = resolve_model(&state, &body)?;
    if wants_shorthand(&headers) {
        let text = print_shorthand(&doc).map_err(ApiError::invalid)?;
        Ok(ok(CONTENT_SHORTHAND, text.into_bytes()))
    } else {
        let (bytes, _) = crate::store::canonical_bytes_and_hash(&doc).map_err(ApiError::invalid)?;
        Ok(ok(CONTENT_XML, bytes))
    }
}

#[derive(Debug, Deserialize)]
struct DiffRequest {
    left: String,
    right: String,
}

async fn post_diff(
    State(state): State<AppState>,
    headers: HeaderMap,
    body: String,
) -> Result<Response, ApiError> {
    let req: DiffRequest = parse_body(&body)?;
    let left = resolve_model(&state, &req.left)?;
    let right = resolve_model(&state, &req.right)?;
    let report = diff_models(&left, &right, state.equiv()).map_err(ApiError::invalid)?;
    let format = accept_format(&headers);
    Ok(ok_formatted(format, diff_payload(&report, format)))
}

/// Policy in a merge request: the bare string `"fail" | "left" | "right"`,
/// or the full object `{"default": …, "overrides": […]}`.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum PolicySpec {
    Simple(DefaultPolicy),
    Full(MergePolicy),
}

impl From<PolicySpec> for MergePolicy {
    fn from(spec: PolicySpec) -> MergePolicy {
        match spec {
            PolicySpec::Simple(DefaultPolicy::Fail) => MergePolicy::fail(),
            PolicySpec::Simple(DefaultPolicy::Left) => MergePolicy::left(),
            PolicySpec::Simple(DefaultPolicy::Right) => MergePolicy::right(),
            PolicySpec::Full(policy) => policy,
        }
    }
}

#[derive(Debug, Deserialize)]
struct MergeRequest {
    models: Vec<String>,
    policy: PolicySpec,
}

async fn post_merge(
    State(state): State<AppState>,
    headers: HeaderMap,
    body: String,
) -> Result<Response, ApiError> {
    let req: MergeRequest = parse_body(&body)?;
    let mut models = Vec::with_capacity(req.models.len());
    for reference in &req.models {
        models.push(resolve_model(&state, reference)?);
    }
    let policy: MergePolicy = req.policy.into();
    let format = accept_format(&headers);
    match merge_models(&models, &policy, state.equiv()) {
        Ok(outcome) => {
            store_result(&state, &outcome.document)?;
            let body = merge_body(&outcome).map_err(ApiError::invalid)?;
            Ok(ok_formatted(format, merge_payload(&body, format)))
        }
        Err(MergeError::Conflict(report)) => Ok(conflict_response(&report, format)),
        Err(MergeError::NoModels) => Err(ApiError::bad_request(
            "bad-request",
            "merge requires at least one model",
        )),
        Err(MergeError::Invalid(e)) => Err(ApiError::invalid(e)),
    }
}

/// 409 with the conflict report itself as the body.
fn conflict_response(report: &ConflictReport, format: Format) -> Response {
    let body = conflict_payload(report, format);
    let content_type = match format {
        Format::Json => CONTENT_JSON,
        Format::Tsv => CONTENT_TSV,
    };
    respond(StatusCode::CONFLICT, content_type, body)
}

#[derive(Debug, Deserialize)]
struct SplitRequest {
    model: String,
    seeds: Vec<String>,
    #[serde(default)]
    expand: bool,
}

async fn post_split(State(state): State<AppState>, body: String) -> Result<Response, ApiError> {
    let req: SplitRequest = parse_body(&body)?;
    let doc = resolve_model(&state, &req.model)?;
    let seeds: Vec<&str> = req.seeds.iter().map(|s| s.as_str()).collect();
    let sub = split_model(&doc, &seeds, req.expand).map_err(|e| match e {
        SplitError::NoSuchElement(_) => ApiError::bad_request("unknown-seed", e),
        SplitError::Invalid(inner) => ApiError::invalid(inner),
    })?;
    store_result(&state, &sub)?;
    let body = crate::formats::model_body(&sub).map_err(ApiError::invalid)?;
    Ok(ok(CONTENT_JSON, json_bytes(&body)))
}

#[derive(Debug, Deserialize)]
struct BalanceRequest {
    model: String,
    #[serde(default)]
    data: String,
    config: Option<BalancingConfig>,
}

async fn post_balance(
    State(state): State<AppState>,
    headers: HeaderMap,
    body: String,
) -> Result<Response, ApiError> {
    let req: BalanceRequest = parse_body(&body)?;
    let doc = resolve_model(&state, &req.model)?;
    let config = req.config.unwrap_or_default();
    let result = run_balance(&doc, &req.data, &config).map_err(balance_error)?;
    let applied = parse_model_bytes(result.model.as_bytes())
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "io-error", e))?;
    store_result(&state, &applied)?;
    let format = accept_format(&headers);
    Ok(ok_formatted(format, balance_payload(&result, format)))
}

#[derive(Debug, Deserialize)]
struct SboRequest {
    model: String,
    rules: Option<String>,
}

async fn post_sbo(
    State(state): State<AppState>,
    headers: HeaderMap,
    body: String,
) -> Result<Response, ApiError> {
    let req: SboRequest = parse_body(&body)?;
    let doc = resolve_model(&state, &req.model)?;
    let rules = match &req.rules {
        Some(text) => SboRuleTable::parse_tsv(text).map_err(sbo_error)?,
        None => SboRuleTable::default(),
    };
    let result = run_sbo(&doc, &rules).map_err(sbo_error)?;
    let annotated = parse_model_bytes(result.model.as_bytes())
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "io-error", e))?;
    store_result(&state, &annotated)?;
    let format = accept_format(&headers);
    Ok(ok_formatted(format, sbo_payload(&result, format)))
}

#[derive(Debug, Deserialize)]
struct ClusterRequest {
    models: Vec<String>,
    threshold: Option<f64>,
}

async fn post_cluster(
    State(state): State<AppState>,
    headers: HeaderMap,
    body: String,
) -> Result<Response, ApiError> {
    let req: ClusterRequest = parse_body(&body)?;
    let threshold = req
        .threshold
        .unwrap_or(sbmlkit::cluster::DEFAULT_CLUSTER_THRESHOLD);
    if !threshold.is_finite() {
        return Err(ApiError::bad_request("bad-threshold", "threshold must be finite"));
    }
    let mut docs = Vec::with_capacity(req.models.len());
    for reference in &req.models {
        docs.push(resolve_model(&state, reference)?);
    }
    let (fingerprints, graph) =
        run_cluster(&docs, threshold, state.equiv()).map_err(ApiError::invalid)?;
    let format = accept_format(&headers);
    Ok(ok_formatted(
        format,
        cluster_payload(&fingerprints, &graph, format),
    ))
}

#[derive(Debug, Deserialize)]
struct VisualizeRequest {
    model: String,
    modifiers: Option<bool>,
    compartments: Option<bool>,
}

async fn post_visualize(
    State(state): State<AppState>,
    body: String,
) -> Result<Response, ApiError> {
    let req: VisualizeRequest = parse_body(&body)?;
    let doc = resolve_model(&state, &req.model)?;
    let opts = DotOptions {
        show_modifiers: req.modifiers.unwrap_or(true),
        compartment_clusters: req.compartments.unwrap_or(false),
    };
    let dot = model_to_dot(&doc, opts).map_err(ApiError::invalid)?;
    Ok(ok(CONTENT_DOT, dot.as_str().as_bytes().to_vec()))
}

/// `?name=…&exact=…` searches names (substring unless `exact`);
/// `?db=…&id=…` looks up one record by cross-reference namespace and id.
async fn get_search(
    State(state): State<AppState>,
    headers: HeaderMap,
    Query(params): Query<BTreeMap<String, String>>,
) -> Result<Response, ApiError> {
    let Some(db) = state.db.as_deref() else {
        return Err(ApiError::bad_request(
            "no-database",
            "the service was started without an annotation database",
        ));
    };
    let records = if let Some(name) = params.get("name") {
        let exact = match params.get("exact").map(|s| s.as_str()) {
            None | Some("false") | Some("0") => false,
            Some("true") | Some("1") => true,
            Some(other) => {
                return Err(ApiError::bad_request(
                    "bad-query",
                    format!("exact must be true or false, got `{other}`"),
                ))
            }
        };
        db.search_by_name(name, exact)
    } else if let (Some(ns), Some(id)) = (params.get("db"), params.get("id")) {
        db.search_by_id(ns, id).into_iter().collect()
    } else {
        return Err(ApiError::bad_request(
            "bad-query",
            "expected ?name=…[&exact=…] or ?db=…&id=…",
        ));
    };
    let format = accept_format(&headers);
    Ok(ok_formatted(format, records_payload(&records, format)))
}
