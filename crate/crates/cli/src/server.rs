//! The HTTP gateway: registration and query endpoints over a shared
//! registry. Mutations persist the registry document atomically and
//! invalidate affected query-cache entries; every response carries the
//! registry version it was computed from.

use std::path::PathBuf;
use std::sync::Arc;

use anyhow::Context;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};

use piqos_core::{
    Credential, CredentialStore, DomainId, OfferingId, ParamValue, ProcessorError, QosProcessor,
    QosQuery, RegisterOutcome, Registry, RegistryError, SlaOffering,
};

use crate::config::ServiceConfig;
use crate::ops::default_offering_id;
use crate::store;

/// Header carrying the caller's domain secret on credentialed requests.
pub const SECRET_HEADER: &str = "x-domain-secret";

pub struct AppState {
    pub processor: QosProcessor,
    pub registry_path: PathBuf,
    pub default_max_hops: usize,
    pub obfuscate_default: bool,
    /// Serializes mutate-then-persist sequences so the document on disk
    /// never skips a version.
    persist: tokio::sync::Mutex<()>,
}

impl AppState {
    pub fn new(
        registry: Arc<Registry>,
        registry_path: PathBuf,
        default_max_hops: usize,
        obfuscate_default: bool,
    ) -> Self {
        AppState {
            processor: QosProcessor::new(registry),
            registry_path,
            default_max_hops,
            obfuscate_default,
            persist: tokio::sync::Mutex::new(()),
        }
    }

    fn version(&self) -> u64 {
        self.processor.registry().snapshot().version()
    }
}

pub fn build_router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(get_health))
        .route("/graph", get(get_graph))
        .route("/query", post(post_query))
        .route("/offerings", post(post_offering).get(get_offerings))
        .route("/offerings/{id}", delete(delete_offering))
        .with_state(state)
}

/// Loads the registry and serves it until interrupted.
pub async fn serve(config: ServiceConfig) -> anyhow::Result<()> {
    config.validate()?;
    let snapshot = store::load_snapshot(&config.registry_path)?;
    let credentials: CredentialStore = config
        .domain_credentials
        .iter()
        .map(|(domain, secret)| (DomainId::new(domain.clone()), secret.clone()))
        .collect();
    let registry = Arc::new(Registry::new(snapshot, credentials));
    let state = Arc::new(AppState::new(
        registry,
        config.registry_path.clone(),
        config.default_max_hops,
        config.obfuscate_default,
    ));
    let listener = tokio::net::TcpListener::bind(&config.listen_address)
        .await
        .with_context(|| format!("cannot bind {}", config.listen_address))?;
    eprintln!("listening on {}", listener.local_addr()?);
    axum::serve(listener, build_router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

fn secret_from(headers: &HeaderMap) -> Option<String> {
    headers.get(SECRET_HEADER).and_then(|v| v.to_str().ok()).map(str::to_string)
}

fn error_body(status: StatusCode, message: String, version: u64) -> Response {
    (status, Json(json!({ "error": message, "registry_version": version }))).into_response()
}

fn missing_secret(state: &AppState) -> Response {
    error_body(
        StatusCode::UNAUTHORIZED,
        format!("missing {SECRET_HEADER} header"),
        state.version(),
    )
}

fn registry_error_status(err: &RegistryError) -> StatusCode {
    match err {
        RegistryError::Unauthorized(_) => StatusCode::UNAUTHORIZED,
        RegistryError::NotFound(_) | RegistryError::UnknownSegment(_) => StatusCode::NOT_FOUND,
        RegistryError::DuplicateId(_) | RegistryError::Dominated { .. } => StatusCode::CONFLICT,
        RegistryError::Invalid(_) => StatusCode::BAD_REQUEST,
    }
}

fn processor_error_status(err: &ProcessorError) -> StatusCode {
    match err {
        ProcessorError::Registry(inner) => registry_error_status(inner),
        _ => StatusCode::BAD_REQUEST,
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OfferingBody {
    #[serde(default)]
    id: Option<String>,
    from: String,
    to: String,
    #[serde(default)]
    label: String,
    values: Vec<ParamValue>,
}

async fn post_offering(
    State(state): State<Arc<AppState>>,
    headers: HeaderMap,
    Json(body): Json<OfferingBody>,
) -> Response {
    let Some(secret) = secret_from(&headers) else {
        return missing_secret(&state);
    };
    let id = body
        .id
        .unwrap_or_else(|| default_offering_id(&body.from, &body.to, &body.label));
    let credential = Credential::new(body.from.as_str(), secret);
    let offering = SlaOffering::new(id, body.from, body.to, body.label, body.values);
    let segment = offering.segment();

    let _guard = state.persist.lock().await;
    match state.processor.registry().register_offering(offering, &credential) {
        Ok(outcome) => {
            if outcome.mutated() {
                let snapshot = state.processor.registry().snapshot();
                if let Err(err) = store::save_snapshot(&state.registry_path, &snapshot) {
                    return error_body(
                        StatusCode::INTERNAL_SERVER_ERROR,
                        format!("registry mutated but not persisted: {err}"),
                        snapshot.version(),
                    );
                }
                state.processor.invalidate_segment(&segment);
            }
            let status = match &outcome {
                RegisterOutcome::PrunedDominated { .. } => StatusCode::CONFLICT,
                _ => StatusCode::OK,
            };
            let mut payload = serde_json::to_value(&outcome).expect("outcome serializes");
            payload["registry_version"] = json!(state.version());
            (status, Json(payload)).into_response()
        }
        Err(err) => error_body(registry_error_status(&err), err.to_string(), state.version()),
    }
}

async fn delete_offering(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    headers: HeaderMap,
) -> Response {
    let Some(secret) = secret_from(&headers) else {
        return missing_secret(&state);
    };
    let id = OfferingId::new(id);

    let _guard = state.persist.lock().await;
    let registry = state.processor.registry();
    // The credential must name the offering's owner; an unknown id keeps a
    // placeholder domain so not-found takes precedence over unauthorized.
    let owner = registry
        .snapshot()
        .offering(&id)
        .map(|o| o.from.clone())
        .unwrap_or_else(|| DomainId::new(""));
    let credential = Credential::new(owner, secret);
    match registry.remove_offering(&id, &credential) {
        Ok(removed) => {
            let snapshot = registry.snapshot();
            if let Err(err) = store::save_snapshot(&state.registry_path, &snapshot) {
                return error_body(
                    StatusCode::INTERNAL_SERVER_ERROR,
                    format!("registry mutated but not persisted: {err}"),
                    snapshot.version(),
                );
            }
            state.processor.invalidate_segment(&removed.segment());
            (
                StatusCode::OK,
                Json(json!({ "removed": removed.id, "registry_version": snapshot.version() })),
            )
                .into_response()
        }
        Err(err) => error_body(registry_error_status(&err), err.to_string(), state.version()),
    }
}

#[derive(Deserialize)]
struct DomainParam {
    domain: String,
}

async fn get_offerings(
    State(state): State<Arc<AppState>>,
    Query(param): Query<DomainParam>,
    headers: HeaderMap,
) -> Response {
    let Some(secret) = secret_from(&headers) else {
        return missing_secret(&state);
    };
    let domain = DomainId::new(param.domain);
    let credential = Credential::new(domain.clone(), secret);
    match state.processor.registry().offerings_for_domain(&domain, &credential) {
        Ok(rows) => (
            StatusCode::OK,
            Json(json!({
                "domain": domain,
                "offerings": rows,
                "registry_version": state.version(),
            })),
        )
            .into_response(),
        Err(err) => error_body(registry_error_status(&err), err.to_string(), state.version()),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct QueryBody {
    origin: String,
    destination: String,
    command: String,
    #[serde(default)]
    deadline: Option<f64>,
    #[serde(default)]
    max_hops: Option<usize>,
    #[serde(default)]
    include_disallowed: Option<bool>,
    #[serde(default)]
    obfuscate: Option<bool>,
}

async fn post_query(State(state): State<Arc<AppState>>, Json(body): Json<QueryBody>) -> Response {
    let mut query = QosQuery::new(body.origin, body.destination, body.command);
    query.deadline_hours = body.deadline;
    query.max_hops = body.max_hops.unwrap_or(state.default_max_hops);
    query.include_disallowed = body.include_disallowed.unwrap_or(true);
    query.obfuscate = body.obfuscate.unwrap_or(state.obfuscate_default);
    match state.processor.cached_rank(&query) {
        Ok(result) => {
            let payload = serde_json::to_value(&*result).expect("result serializes");
            (StatusCode::OK, Json(payload)).into_response()
        }
        Err(err) => error_body(processor_error_status(&err), err.to_string(), state.version()),
    }
}

async fn get_graph(State(state): State<Arc<AppState>>) -> Response {
    let snapshot = state.processor.registry().snapshot();
    let graph = snapshot.graph();
    let domains: Vec<&str> = graph.domains().map(|d| d.as_str()).collect();
    let edges: Vec<Value> = graph.edges().map(|s| json!([s.from, s.to])).collect();
    (
        StatusCode::OK,
        Json(json!({
            "domains": domains,
            "edges": edges,
            "registry_version": snapshot.version(),
        })),
    )
        .into_response()
}

async fn get_health(State(state): State<Arc<AppState>>) -> Response {
    (
        StatusCode::OK,
        Json(json!({
            "version": env!("CARGO_PKG_VERSION"),
            "registry_version": state.version(),
        })),
    )
        .into_response()
}
