//! HTTP endpoints.
//!
//! | path | effect |
//! |------|--------|
//! | `/sparql`, `/sparql/<branch or commit>` | query (GET/POST), update (POST, branches only) |
//! | `/provenance` | query over the provenance graph |
//! | `/branch/<old>:<new>` | create a branch |
//! | `/merge/<branch>:<target>?method=<strategy>` | merge `branch` into `target` |
//! | `/revert/<target>?commit=<id>` | revert a commit on branch `target` |
//! | `/push/<remote>/<local>:<remote branch>` | fast-forward a remote branch |
//! | `/fetch/<remote>/<remote branch>` | copy a remote branch |
//! | `/pull/<remote>/<remote branch>:<local>` | fetch, then fast-forward or merge |

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{any, post};
use axum::Router;
use quadgit_core::merge::Resolution;
use quadgit_core::provenance::build_provenance;
use quadgit_core::query::{self, eval_construct, eval_select, solutions_to_json, QueryError};
use quadgit_core::rdf::Dataset;
use quadgit_core::store::{ObjectId, StoreError};
use quadgit_core::sync::{self, PullOutcome};
use quadgit_core::{CommitOutcome, Error, MergeOutcome, MergeStrategy};
use serde_json::{json, Value};

use crate::Store;

pub const SPARQL_RESULTS_JSON: &str = "application/sparql-results+json";
pub const N_QUADS: &str = "application/n-quads";
pub const CONFLICT_DOCUMENT: &str = "text/plain; charset=utf-8";

type Shared = Arc<Store>;

/// An error response.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut res = (self.status, format!("{}\n", self.message)).into_response();
        if self.status == StatusCode::SERVICE_UNAVAILABLE {
            res.headers_mut()
                .insert(header::RETRY_AFTER, HeaderValue::from_static("1"));
        }
        res
    }
}

/// HTTP status for a repository error.
pub fn status_of(e: &Error) -> StatusCode {
    match e {
        Error::UnknownRevision(_)
        | Error::EmptyBranch(_)
        | Error::UnknownRemote(_)
        | Error::UnknownRemoteBranch { .. } => StatusCode::NOT_FOUND,
        Error::NameExists(_) | Error::NonFastForward { .. } => StatusCode::CONFLICT,
        Error::UnreachableRemote(_) => StatusCode::BAD_GATEWAY,
        Error::Store(StoreError::StaleRef { .. }) => StatusCode::SERVICE_UNAVAILABLE,
        Error::Store(StoreError::InvalidRefName(_)) => StatusCode::BAD_REQUEST,
        Error::Store(_) => StatusCode::INTERNAL_SERVER_ERROR,
        _ => StatusCode::BAD_REQUEST,
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError::new(status_of(&e), e.to_string())
    }
}

impl From<QueryError> for ApiError {
    fn from(e: QueryError) -> Self {
        ApiError::bad_request(e.to_string())
    }
}

type ApiResult<T> = Result<T, ApiError>;

async fn blocking<T, F>(f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce() -> ApiResult<T> + Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
}

pub fn router(store: Arc<Store>) -> Router {
    Router::new()
        .route("/sparql", any(sparql_default))
        .route("/sparql/{*rev}", any(sparql_rev))
        .route("/provenance", any(provenance))
        .route("/branch/{*spec}", post(branch))
        .route("/merge/{*spec}", post(merge))
        .route("/revert/{*target}", post(revert))
        .route("/push/{remote}/{*spec}", post(push))
        .route("/fetch/{remote}/{*branch}", post(fetch))
        .route("/pull/{remote}/{*spec}", post(pull))
        .with_state(store)
}

/// Serves until ctrl-c.
pub async fn serve(store: Arc<Store>, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(store))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

enum Operation {
    Query(String),
    Update(String),
}

fn form(bytes: &[u8]) -> HashMap<String, String> {
    url::form_urlencoded::parse(bytes).into_owned().collect()
}

fn media_type(headers: &HeaderMap) -> String {
    headers
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.split(';').next())
        .map(|v| v.trim().to_ascii_lowercase())
        .unwrap_or_default()
}

fn utf8(body: &Bytes) -> ApiResult<String> {
    String::from_utf8(body.to_vec()).map_err(|_| ApiError::bad_request("request body is not UTF-8"))
}

/// Query via GET `query` or POST form/body; update via POST only.
fn operation(
    method: &Method,
    params: &HashMap<String, String>,
    headers: &HeaderMap,
    body: &Bytes,
) -> ApiResult<Operation> {
    if *method == Method::GET {
        if params.contains_key("update") {
            return Err(ApiError::new(
                StatusCode::METHOD_NOT_ALLOWED,
                "updates must be sent with POST",
            ));
        }
        return params
            .get("query")
            .map(|q| Operation::Query(q.clone()))
            .ok_or_else(|| ApiError::bad_request("missing query parameter"));
    }
    if *method != Method::POST {
        return Err(ApiError::new(
            StatusCode::METHOD_NOT_ALLOWED,
            "use GET or POST",
        ));
    }
    match media_type(headers).as_str() {
        "application/sparql-query" => Ok(Operation::Query(utf8(body)?)),
        "application/sparql-update" => Ok(Operation::Update(utf8(body)?)),
        "application/x-www-form-urlencoded" => {
            let fields = form(body);
            if let Some(u) = fields.get("update") {
                Ok(Operation::Update(u.clone()))
            } else if let Some(q) = fields.get("query") {
                Ok(Operation::Query(q.clone()))
            } else {
                Err(ApiError::bad_request("form needs a query or update field"))
            }
        }
        _ => match params.get("query") {
            Some(q) => Ok(Operation::Query(q.clone())),
            None => Err(ApiError::new(
                StatusCode::UNSUPPORTED_MEDIA_TYPE,
                "expected a SPARQL query or update body",
            )),
        },
    }
}

fn answer(dataset: &Dataset, text: &str) -> ApiResult<Response> {
    Ok(match query::parse_query(text)? {
        query::Query::Select(q) => {
            let body = solutions_to_json(&eval_select(dataset, &q)).to_string();
            ([(header::CONTENT_TYPE, SPARQL_RESULTS_JSON)], body).into_response()
        }
        query::Query::Construct(q) => {
            let body = eval_construct(dataset, &q).to_ntriples();
            ([(header::CONTENT_TYPE, N_QUADS)], body).into_response()
        }
    })
}

fn json_response(status: StatusCode, value: Value) -> Response {
    (status, axum::Json(value)).into_response()
}

enum Target {
    Branch(String),
    Commit(ObjectId),
}

fn target_of(store: &Store, rev: &str) -> ApiResult<Target> {
    if store.is_branch(rev) {
        return Ok(Target::Branch(rev.to_owned()));
    }
    Ok(Target::Commit(store.repo.resolve(rev)?))
}

fn run_operation(store: &Store, target: Target, op: Operation) -> ApiResult<Response> {
    match (op, target) {
        (Operation::Query(text), target) => {
            let head = match target {
                Target::Branch(b) => store.repo.branch_head(&b)?,
                Target::Commit(id) => Some(id),
            };
            let dataset = match head {
                Some(id) => store.repo.dataset_at(&id)?,
                None => Dataset::new(),
            };
            answer(&dataset.with_union_default(), &text)
        }
        (Operation::Update(_), Target::Commit(id)) => Err(ApiError::new(
            StatusCode::METHOD_NOT_ALLOWED,
            format!("commit {id} is read-only; update a branch instead"),
        )),
        (Operation::Update(text), Target::Branch(branch)) => {
            let update = query::parse_update(&text)?;
            let outcome = store
                .repo
                .update(&branch, &update, &store.update_meta(&text))?;
            let body = match outcome {
                CommitOutcome::Committed(id) => {
                    json!({"status": "committed", "branch": branch, "commit": id.to_hex()})
                }
                CommitOutcome::NoEffect(head) => json!({
                    "status": "no-effect",
                    "branch": branch,
                    "commit": head.map(|h| h.to_hex()),
                }),
            };
            Ok(json_response(StatusCode::OK, body))
        }
    }
}

async fn sparql_default(
    State(store): State<Shared>,
    method: Method,
    Query(params): Query<HashMap<String, String>>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult<Response> {
    let op = operation(&method, &params, &headers, &body)?;
    blocking(move || {
        let branch = store.config.default_branch.clone();
        run_operation(&store, Target::Branch(branch), op)
    })
    .await
}

async fn sparql_rev(
    State(store): State<Shared>,
    Path(rev): Path<String>,
    method: Method,
    Query(params): Query<HashMap<String, String>>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult<Response> {
    let op = operation(&method, &params, &headers, &body)?;
    blocking(move || {
        let target = target_of(&store, &rev)?;
        run_operation(&store, target, op)
    })
    .await
}

async fn provenance(
    State(store): State<Shared>,
    method: Method,
    Query(params): Query<HashMap<String, String>>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult<Response> {
    let Operation::Query(text) = operation(&method, &params, &headers, &body)? else {
        return Err(ApiError::new(
            StatusCode::METHOD_NOT_ALLOWED,
            "the provenance graph is read-only",
        ));
    };
    blocking(move || {
        let dataset = build_provenance(&store.repo, &store.config.provenance_options())?;
        answer(&dataset, &text)
    })
    .await
}

fn split_pair<'a>(spec: &'a str, what: &str) -> ApiResult<(&'a str, &'a str)> {
    match spec.split_once(':') {
        Some((a, b)) if !a.is_empty() && !b.is_empty() => Ok((a, b)),
        _ => Err(ApiError::bad_request(format!("expected {what}"))),
    }
}

fn strategy(params: &HashMap<String, String>) -> ApiResult<MergeStrategy> {
    match params.get("method") {
        Some(m) => m
            .parse()
            .map_err(|e: quadgit_core::merge::UnknownStrategy| ApiError::bad_request(e.to_string())),
        None => Ok(MergeStrategy::ThreeWay),
    }
}

/// An optional resolution document in the request body.
fn resolution(body: &Bytes) -> ApiResult<Option<Resolution>> {
    let text = utf8(body)?;
    if text.trim().is_empty() {
        return Ok(None);
    }
    Ok(Some(Resolution::from_text(&text)?))
}

fn merge_response(outcome: MergeOutcome) -> Response {
    match outcome {
        MergeOutcome::Committed(id) => {
            json_response(StatusCode::OK, json!({"status": "merged", "commit": id.to_hex()}))
        }
        MergeOutcome::UpToDate(id) => json_response(
            StatusCode::OK,
            json!({"status": "up-to-date", "commit": id.to_hex()}),
        ),
        MergeOutcome::Conflict(c) => (
            StatusCode::CONFLICT,
            [(header::CONTENT_TYPE, CONFLICT_DOCUMENT)],
            c.to_text(),
        )
            .into_response(),
    }
}

async fn branch(State(store): State<Shared>, Path(spec): Path<String>) -> ApiResult<Response> {
    blocking(move || {
        let (old, new) = split_pair(&spec, "/branch/<oldbranch>:<newbranch>")?;
        let id = store.repo.create_branch(old, new)?;
        Ok(json_response(
            StatusCode::OK,
            json!({"branch": new, "commit": id.to_hex()}),
        ))
    })
    .await
}

async fn merge(
    State(store): State<Shared>,
    Path(spec): Path<String>,
    Query(params): Query<HashMap<String, String>>,
    body: Bytes,
) -> ApiResult<Response> {
    let strategy = strategy(&params)?;
    let resolution = resolution(&body)?;
    blocking(move || {
        let (source, into) = split_pair(&spec, "/merge/<branch>:<target>")?;
        let meta = store.meta(format!("Merge {source} into {into}"));
        let outcome = store.repo.merge(
            into,
            source,
            strategy,
            &meta,
            resolution.as_ref(),
            store.config.context_options(),
        )?;
        Ok(merge_response(outcome))
    })
    .await
}

async fn revert(
    State(store): State<Shared>,
    Path(target): Path<String>,
    Query(params): Query<HashMap<String, String>>,
    body: Bytes,
) -> ApiResult<Response> {
    let strategy = strategy(&params)?;
    let resolution = resolution(&body)?;
    let commit = params
        .get("commit")
        .cloned()
        .ok_or_else(|| ApiError::bad_request("missing commit parameter"))?;
    blocking(move || {
        let id = store.repo.resolve(&commit)?;
        let meta = store.meta(format!("Revert {id}"));
        let outcome = store.repo.revert(
            &target,
            &id,
            strategy,
            &meta,
            resolution.as_ref(),
            store.config.context_options(),
        )?;
        Ok(merge_response(outcome))
    })
    .await
}

async fn push(
    State(store): State<Shared>,
    Path((remote, spec)): Path<(String, String)>,
) -> ApiResult<Response> {
    blocking(move || {
        let (local, remote_branch) = split_pair(&spec, "/push/<remote>/<local>:<remote branch>")?;
        let target = store.remote(&remote)?;
        let id = sync::push(&store.repo, &remote, &target, local, remote_branch)?;
        Ok(json_response(
            StatusCode::OK,
            json!({"remote": remote, "branch": remote_branch, "commit": id.to_hex()}),
        ))
    })
    .await
}

async fn fetch(
    State(store): State<Shared>,
    Path((remote, branch)): Path<(String, String)>,
) -> ApiResult<Response> {
    blocking(move || {
        let source = store.remote(&remote)?;
        let fetched = sync::fetch(&store.repo, &remote, &source, &branch)?;
        Ok(json_response(
            StatusCode::OK,
            json!({
                "remote": remote,
                "branch": branch,
                "commit": fetched.head.to_hex(),
                "copied": fetched.copied,
            }),
        ))
    })
    .await
}

async fn pull(
    State(store): State<Shared>,
    Path((remote, spec)): Path<(String, String)>,
    Query(params): Query<HashMap<String, String>>,
    body: Bytes,
) -> ApiResult<Response> {
    let strategy = strategy(&params)?;
    let resolution = resolution(&body)?;
    blocking(move || {
        let (remote_branch, local) = split_pair(&spec, "/pull/<remote>/<remote branch>:<local>")?;
        let source = store.remote(&remote)?;
        let meta = store.meta(format!("Merge {remote}/{remote_branch} into {local}"));
        let outcome = sync::pull(
            &store.repo,
            &remote,
            &source,
            remote_branch,
            local,
            strategy,
            &meta,
            resolution.as_ref(),
            store.config.context_options(),
        )?;
        Ok(match outcome {
            PullOutcome::FastForward(id) => json_response(
                StatusCode::OK,
                json!({"status": "fast-forward", "commit": id.to_hex()}),
            ),
            PullOutcome::Merged(m) => merge_response(m),
        })
    })
    .await
}
