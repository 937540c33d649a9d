//! HTTP API over the assessment store, with sessions and the three-role
//! access model.

mod admin;
mod api;
pub mod auth;
pub mod error;
pub mod sessions;
pub mod users;

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use axum::routing::{get, patch, post};
use axum::Router;
use distaf_core::store::{AssessmentStore, StoreError};
use distaf_core::template::TemplateError;
use distaf_core::TemplateRegistry;
use thiserror::Error;

use crate::sessions::Sessions;
use crate::users::{UserError, UserStore};

pub const DEFAULT_BIND: &str = "127.0.0.1:8080";
pub const DEFAULT_SESSION_TTL: Duration = Duration::from_secs(8 * 60 * 60);

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub bind: SocketAddr,
    pub data_dir: PathBuf,
    /// Directory of template files; the bundled sample when absent.
    pub template_dir: Option<PathBuf>,
    pub session_ttl: Duration,
}

impl ServerConfig {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        Self {
            bind: DEFAULT_BIND.parse().unwrap(),
            data_dir: data_dir.into(),
            template_dir: None,
            session_ttl: DEFAULT_SESSION_TTL,
        }
    }
}

#[derive(Debug, Error)]
pub enum StartupError {
    #[error(transparent)]
    Templates(#[from] TemplateError),
    #[error("no templates found in {0}")]
    NoTemplates(PathBuf),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Users(#[from] UserError),
    #[error("cannot listen on {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        source: std::io::Error,
    },
    #[error("server error: {0}")]
    Serve(std::io::Error),
}

pub fn users_path(data_dir: &Path) -> PathBuf {
    data_dir.join("users.json")
}

pub fn assessments_dir(data_dir: &Path) -> PathBuf {
    data_dir.join("assessments")
}

pub fn load_templates(dir: Option<&Path>) -> Result<TemplateRegistry, StartupError> {
    match dir {
        None => Ok(TemplateRegistry::with_sample()),
        Some(dir) => {
            let registry = TemplateRegistry::load_dir(dir)?;
            if registry.is_empty() {
                return Err(StartupError::NoTemplates(dir.to_path_buf()));
            }
            Ok(registry)
        }
    }
}

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<AssessmentStore>,
    pub users: Arc<UserStore>,
    pub sessions: Arc<Sessions>,
}

impl AppState {
    pub fn new(store: AssessmentStore, users: UserStore, session_ttl: Duration) -> Self {
        Self {
            store: Arc::new(store),
            users: Arc::new(users),
            sessions: Arc::new(Sessions::new(session_ttl)),
        }
    }

    /// Opens the on-disk state described by `config`.
    pub fn open(config: &ServerConfig) -> Result<Self, StartupError> {
        let templates = Arc::new(load_templates(config.template_dir.as_deref())?);
        let store = AssessmentStore::open(templates, &assessments_dir(&config.data_dir))?;
        let users = UserStore::open(&users_path(&config.data_dir))?;
        Ok(Self::new(store, users, config.session_ttl))
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/login", post(admin::login))
        .route("/logout", post(admin::logout))
        .route("/password", post(admin::change_password))
        .route("/me", get(admin::me))
        .route("/users", get(admin::list_users).post(admin::create_user))
        .route("/users/{name}/disable", post(admin::disable_user))
        .route("/users/{name}/password", post(admin::regenerate_password))
        .route("/users/{name}/role", post(admin::set_role))
        .route("/templates", get(api::list_templates))
        .route("/templates/{id}", get(api::get_template))
        .route(
            "/assessments",
            get(api::list_assessments).post(api::create_assessment),
        )
        .route("/assessments/import", post(api::import_assessment))
        .route("/assessments/{id}", get(api::get_assessment))
        .route("/assessments/{id}/metrics", patch(api::set_metrics))
        .route("/assessments/{id}/answers", post(api::choose_answer))
        .route("/assessments/{id}/standards", post(api::declare_standard))
        .route("/assessments/{id}/exclusions", post(api::set_exclusion))
        .route("/assessments/{id}/status", post(api::transition_status))
        .route("/assessments/{id}/scorecard", get(api::scorecard))
        .route("/assessments/{id}/fingerprint", get(api::fingerprint))
        .route("/assessments/{id}/export", get(api::export))
        .route("/assessments/{id}/preview", post(api::preview))
        .route("/compare", get(api::compare))
        .with_state(state)
}

/// Serves the API until interrupted.
pub async fn serve(config: ServerConfig) -> Result<(), StartupError> {
    let state = AppState::open(&config)?;
    if state.users.is_empty() {
        tracing::warn!("no users yet; run `distaf init-admin` to create the first admin");
    }
    let listener = tokio::net::TcpListener::bind(config.bind)
        .await
        .map_err(|source| StartupError::Bind {
            addr: config.bind,
            source,
        })?;
    tracing::info!("listening on {}", config.bind);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(StartupError::Serve)
}
