#![allow(dead_code)]

pub mod matrix;

use std::collections::BTreeMap;
use std::time::Duration;

use axum::body::Body;
use axum::http::{HeaderMap, Method, Request, StatusCode};
use axum::Router;
use distaf_core::access::Role;
use distaf_core::store::AssessmentStore;
use distaf_core::{AssessmentDocument, AssessmentStatus, TemplateRegistry};
use distaf_server::users::UserStore;
use distaf_server::{router, AppState};
use distaf_testkit::fixture_path;
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

pub const PASSWORD: &str = "correct horse battery";

/// One seeded assessment per status, plus their secret descriptions.
pub const DRAFT: &str = "draft-1";
pub const PRIVATE: &str = "private-1";
pub const PUBLIC: &str = "public-1";

pub fn id_for(status: AssessmentStatus) -> &'static str {
    match status {
        AssessmentStatus::Draft => DRAFT,
        AssessmentStatus::Private => PRIVATE,
        AssessmentStatus::Public => PUBLIC,
    }
}

#[derive(Debug)]
pub struct Reply {
    pub status: StatusCode,
    pub headers: HeaderMap,
    pub body: Vec<u8>,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_slice(&self.body)
            .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&self.body)))
    }

    pub fn text(&self) -> String {
        String::from_utf8_lossy(&self.body).into_owned()
    }
}

pub fn demo_document(id: &str, status: AssessmentStatus) -> AssessmentDocument {
    let text = std::fs::read_to_string(fixture_path("turing-demo.json")).unwrap();
    let mut doc: AssessmentDocument = serde_json::from_str(&text).unwrap();
    doc.assessment.id = id.to_string();
    doc.assessment.status = status;
    doc.assessment.description = format!("secret {id}");
    doc.assessment.revision = 1;
    doc
}

pub struct Harness {
    pub state: AppState,
    pub app: Router,
    pub tokens: BTreeMap<Role, String>,
}

impl Harness {
    pub async fn new() -> Self {
        Self::with_ttl(Duration::from_secs(600)).await
    }

    pub async fn with_ttl(ttl: Duration) -> Self {
        let store =
            AssessmentStore::in_memory(std::sync::Arc::new(TemplateRegistry::with_sample()));
        for status in AssessmentStatus::ALL {
            store
                .import_document(&demo_document(id_for(status), status))
                .unwrap();
        }
        let users = UserStore::in_memory();
        for role in Role::ALL {
            let issued = users.create(role.as_str(), role).unwrap();
            users
                .change_password(role.as_str(), &issued.temporary_password, PASSWORD)
                .unwrap();
        }
        let state = AppState::new(store, users, ttl);
        let app = router(state.clone());
        let mut h = Self {
            state,
            app,
            tokens: BTreeMap::new(),
        };
        for role in Role::ALL {
            let token = h
                .login(role.as_str(), PASSWORD)
                .await
                .expect("seeded login");
            h.tokens.insert(role, token);
        }
        h
    }

    pub fn token(&self, role: Role) -> &str {
        &self.tokens[&role]
    }

    pub async fn login(&self, username: &str, password: &str) -> Option<String> {
        let r = self
            .call(
                Method::POST,
                "/login",
                None,
                Some(serde_json::json!({"username": username, "password": password})),
            )
            .await;
        (r.status == StatusCode::OK).then(|| r.json()["token"].as_str().unwrap().to_string())
    }

    pub async fn call(
        &self,
        method: Method,
        uri: &str,
        token: Option<&str>,
        body: Option<Value>,
    ) -> Reply {
        let mut req = Request::builder().method(method).uri(uri);
        if let Some(t) = token {
            req = req.header("authorization", format!("Bearer {t}"));
        }
        let req = match body {
            Some(b) => req
                .header("content-type", "application/json")
                .body(Body::from(b.to_string())),
            None => req.body(Body::empty()),
        }
        .unwrap();
        let res = self.app.clone().oneshot(req).await.unwrap();
        let status = res.status();
        let headers = res.headers().clone();
        let body = res.into_body().collect().await.unwrap().to_bytes().to_vec();
        Reply {
            status,
            headers,
            body,
        }
    }

    pub async fn get(&self, role: Role, uri: &str) -> Reply {
        self.call(Method::GET, uri, Some(self.token(role)), None)
            .await
    }

    pub async fn post(&self, role: Role, uri: &str, body: Value) -> Reply {
        self.call(Method::POST, uri, Some(self.token(role)), Some(body))
            .await
    }

    pub fn revision(&self, id: &str) -> u64 {
        self.state.store.get(id).unwrap().revision
    }
}
