//! HTTP API for interactive play sessions. Every accepted move relearns the
//! model from the session's full trajectory.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use anyhow::{Context, Result};
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use blackout_core::evaluation::{self, ProficiencyReport};
use blackout_core::learner;
use blackout_core::pddl::{self, Domain, Problem};
use blackout_core::simulator::{self, Direction};
use blackout_core::trace::{self, Trajectory};
use parking_lot::RwLock;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use uuid::Uuid;

pub struct Level {
    pub id: String,
    pub name: String,
    pub problem: Problem,
    pub rows: Vec<String>,
}

struct Session {
    level: usize,
    trajectory: Trajectory,
    model_pddl: String,
    report: ProficiencyReport,
}

#[derive(Clone)]
pub struct AppState {
    domain: Arc<Domain>,
    levels: Arc<Vec<Level>>,
    sessions: Arc<RwLock<HashMap<Uuid, Arc<RwLock<Session>>>>>,
}

impl AppState {
    pub fn new(domain: Domain, levels: Vec<Level>) -> Self {
        AppState {
            domain: Arc::new(domain),
            levels: Arc::new(levels),
            sessions: Arc::default(),
        }
    }

    /// Compiles every `*.sok` file in `dir`, ordered by file name; the file
    /// stem is the level id.
    pub fn from_dir(domain: Domain, dir: &Path) -> Result<Self> {
        let mut paths: Vec<_> = std::fs::read_dir(dir)
            .with_context(|| format!("cannot list {}", dir.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "sok"))
            .collect();
        paths.sort();
        let mut levels = Vec::new();
        for path in paths {
            let level = crate::commands::load_level(&path)?;
            let problem = simulator::compile_level(&level);
            for atom in &problem.init {
                domain
                    .check_atom(atom, &problem.objects)
                    .with_context(|| format!("level {} does not fit the domain", path.display()))?;
            }
            let rows = simulator::render(&problem, &problem.init)?;
            levels.push(Level {
                id: path
                    .file_stem()
                    .unwrap_or_default()
                    .to_string_lossy()
                    .into_owned(),
                name: level.name,
                problem,
                rows,
            });
        }
        Ok(AppState::new(domain, levels))
    }
}

struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

fn internal(e: impl std::fmt::Display) -> ApiError {
    ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
}

type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/levels", get(levels))
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}/moves", post(make_move))
        .route("/api/sessions/{id}/model", get(model))
        .route("/api/sessions/{id}/trace", get(trace_file))
        .with_state(state)
}

async fn levels(State(app): State<AppState>) -> Json<Value> {
    let list: Vec<Value> = app
        .levels
        .iter()
        .map(|l| json!({ "id": l.id, "name": l.name, "rows": l.rows }))
        .collect();
    Json(Value::Array(list))
}

#[derive(Deserialize)]
struct NewSession {
    level_id: String,
}

fn atoms(t: &Trajectory) -> Vec<String> {
    t.current().iter().map(ToString::to_string).collect()
}

/// `[{action, f1}]` with `f1` either a number or `"unobserved"`.
fn proficiency(r: &ProficiencyReport) -> Vec<Value> {
    r.actions
        .iter()
        .map(|a| match a.f1 {
            Some(f1) if !a.unobserved => json!({ "action": a.action, "f1": f1 }),
            _ => json!({ "action": a.action, "f1": "unobserved" }),
        })
        .collect()
}

fn relearn(domain: &Domain, t: &Trajectory) -> ApiResult<(String, ProficiencyReport)> {
    let model = learner::learn(std::slice::from_ref(t), domain).map_err(internal)?;
    let learned = model.to_domain(domain);
    let report = evaluation::report(&learned, domain).map_err(internal)?;
    Ok((pddl::print_domain(&learned), report))
}

async fn create_session(
    State(app): State<AppState>,
    Json(req): Json<NewSession>,
) -> ApiResult<Json<Value>> {
    let Some(index) = app.levels.iter().position(|l| l.id == req.level_id) else {
        return Err(ApiError(
            StatusCode::NOT_FOUND,
            format!("unknown level `{}`", req.level_id),
        ));
    };
    let level = &app.levels[index];
    let trajectory = Trajectory::new(level.problem.objects.clone(), level.problem.init.clone());
    let (model_pddl, report) = relearn(&app.domain, &trajectory)?;
    let id = Uuid::new_v4();
    let body = json!({
        "session_id": id.to_string(),
        "grid": level.rows,
        "state": atoms(&trajectory),
        "proficiency": proficiency(&report),
    });
    let session = Session {
        level: index,
        trajectory,
        model_pddl,
        report,
    };
    app.sessions
        .write()
        .insert(id, Arc::new(RwLock::new(session)));
    Ok(Json(body))
}

fn session(app: &AppState, id: &str) -> ApiResult<Arc<RwLock<Session>>> {
    Uuid::parse_str(id)
        .ok()
        .and_then(|id| app.sessions.read().get(&id).cloned())
        .ok_or_else(|| ApiError(StatusCode::NOT_FOUND, format!("unknown session `{id}`")))
}

#[derive(Deserialize, Serialize)]
struct Move {
    direction: String,
}

async fn make_move(
    State(app): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Json(req): Json<Move>,
) -> ApiResult<Json<Value>> {
    let direction: Direction = req
        .direction
        .parse()
        .map_err(|e: simulator::SimError| ApiError(StatusCode::BAD_REQUEST, e.to_string()))?;
    let handle = session(&app, &id)?;
    let mut s = handle.write();
    let level = &app.levels[s.level];
    let (action, ok) =
        simulator::apply_intent(&mut s.trajectory, direction, &app.domain, &level.problem)
            .map_err(internal)?;
    let (model_pddl, report) = relearn(&app.domain, &s.trajectory)?;
    s.model_pddl = model_pddl;
    s.report = report;
    let grid = simulator::render(&level.problem, s.trajectory.current()).map_err(internal)?;
    Ok(Json(json!({
        "outcome": if ok { "ok" } else { "failed" },
        "action": action.to_string(),
        "state": atoms(&s.trajectory),
        "grid": grid,
        "solved": level.problem.goal_satisfied(s.trajectory.current()),
        "trace_length": s.trajectory.len(),
        "proficiency": proficiency(&s.report),
        "model_pddl": s.model_pddl,
    })))
}

async fn model(
    State(app): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<Json<Value>> {
    let handle = session(&app, &id)?;
    let s = handle.read();
    Ok(Json(json!({
        "model_pddl": s.model_pddl,
        "proficiency": proficiency(&s.report),
        "report": s.report,
    })))
}

async fn trace_file(
    State(app): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<Response> {
    let handle = session(&app, &id)?;
    let body = trace::write_trace(&handle.read().trajectory);
    Ok((
        [
            (
                header::CONTENT_TYPE,
                "text/plain; charset=utf-8".to_string(),
            ),
            (
                header::CONTENT_DISPOSITION,
                format!("attachment; filename=\"{id}.trace\""),
            ),
        ],
        body,
    )
        .into_response())
}

/// Serves the API until Ctrl-C.
pub async fn serve(state: AppState, bind: &str) -> Result<()> {
    let listener = tokio::net::TcpListener::bind(bind)
        .await
        .with_context(|| format!("cannot bind {bind}"))?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
