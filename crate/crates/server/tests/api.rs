mod common;

use std::time::Duration;

use axum::http::{Method, StatusCode};
use common::{Harness, DRAFT, PASSWORD, PRIVATE, PUBLIC};
use distaf_core::access::Role;
use distaf_core::report::TABULAR_HEADER;
use distaf_core::{MechanismId, Scorecard};
use distaf_server::users::UserStore;
use distaf_server::{AppState, ServerConfig};
use serde_json::{json, Value};

async fn new_draft(h: &Harness, id: &str) -> Value {
    let r = h
        .post(
            Role::Assessor,
            "/assessments",
            json!({"id": id, "template_id": "distaf-sample"}),
        )
        .await;
    assert_eq!(r.status, StatusCode::CREATED, "{}", r.text());
    r.json()["assessment"].clone()
}

#[tokio::test]
async fn temporary_passwords_gate_everything_but_the_password_change() {
    let h = Harness::new().await;
    let r = h
        .post(
            Role::Admin,
            "/users",
            json!({"username": "alice", "role": "assessor"}),
        )
        .await;
    assert_eq!(r.status, StatusCode::CREATED, "{}", r.text());
    let issued = r.json();
    assert_eq!(issued["user"]["must_change_password"], true);
    let temp = issued["temporary_password"].as_str().unwrap().to_string();

    let token = h.login("alice", &temp).await.unwrap();
    let r = h
        .call(Method::GET, "/assessments", Some(&token), None)
        .await;
    assert_eq!(r.status, StatusCode::FORBIDDEN);
    assert!(r.text().contains("password change required"));
    let r = h.call(Method::GET, "/me", Some(&token), None).await;
    assert_eq!(r.json()["must_change_password"], true);

    let change = json!({"current_password": temp, "new_password": "short"});
    let r = h
        .call(Method::POST, "/password", Some(&token), Some(change))
        .await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    let change = json!({"current_password": temp, "new_password": "alice's own password"});
    let r = h
        .call(Method::POST, "/password", Some(&token), Some(change))
        .await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.text());
    assert_eq!(r.json()["must_change_password"], false);

    let r = h
        .call(Method::GET, "/assessments", Some(&token), None)
        .await;
    assert_eq!(r.status, StatusCode::OK);
    assert!(h.login("alice", &temp).await.is_none());
    assert!(h.login("alice", "alice's own password").await.is_some());
}

async fn activated(h: &Harness, name: &str, role: &str) -> String {
    let issued = h
        .post(
            Role::Admin,
            "/users",
            json!({"username": name, "role": role}),
        )
        .await
        .json();
    let temp = issued["temporary_password"].as_str().unwrap();
    let token = h.login(name, temp).await.unwrap();
    let change = json!({"current_password": temp, "new_password": PASSWORD});
    let r = h
        .call(Method::POST, "/password", Some(&token), Some(change))
        .await;
    assert_eq!(r.status, StatusCode::OK);
    token
}

#[tokio::test]
async fn disabling_a_user_ends_their_sessions() {
    let h = Harness::new().await;
    let token = activated(&h, "alice", "assessor").await;
    assert_eq!(
        h.call(Method::GET, "/assessments", Some(&token), None)
            .await
            .status,
        StatusCode::OK
    );

    let r = h
        .call(
            Method::POST,
            "/users/alice/disable",
            Some(h.token(Role::Admin)),
            None,
        )
        .await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.json()["enabled"], false);
    for uri in ["/assessments", "/templates", "/me"] {
        assert_eq!(
            h.call(Method::GET, uri, Some(&token), None).await.status,
            StatusCode::UNAUTHORIZED,
            "{uri}"
        );
    }
    assert!(h.login("alice", PASSWORD).await.is_none());
}

#[tokio::test]
async fn user_administration() {
    let h = Harness::new().await;
    let r = h
        .post(
            Role::Assessor,
            "/users",
            json!({"username": "mallory", "role": "admin"}),
        )
        .await;
    assert_eq!(r.status, StatusCode::FORBIDDEN);
    let r = h
        .post(
            Role::External,
            "/users",
            json!({"username": "mallory", "role": "admin"}),
        )
        .await;
    assert_eq!(r.status, StatusCode::FORBIDDEN);
    assert!(h.state.users.get("mallory").is_none());

    let r = h
        .post(
            Role::Admin,
            "/users",
            json!({"username": "assessor", "role": "external"}),
        )
        .await;
    assert_eq!(r.status, StatusCode::CONFLICT);
    let r = h
        .call(
            Method::POST,
            "/users/nobody/disable",
            Some(h.token(Role::Admin)),
            None,
        )
        .await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);

    let list = h.get(Role::Admin, "/users").await.json();
    let names: Vec<&str> = list
        .as_array()
        .unwrap()
        .iter()
        .map(|u| u["username"].as_str().unwrap())
        .collect();
    assert_eq!(names, ["admin", "assessor", "external"]);
    assert!(
        !h.get(Role::Admin, "/users").await.text().contains("argon2"),
        "credentials exposed"
    );

    // role changes apply to live sessions
    let token = activated(&h, "bob", "external").await;
    assert_eq!(
        h.call(
            Method::GET,
            &format!("/assessments/{DRAFT}"),
            Some(&token),
            None
        )
        .await
        .status,
        StatusCode::NOT_FOUND
    );
    let r = h
        .post(Role::Admin, "/users/bob/role", json!({"role": "assessor"}))
        .await;
    assert_eq!(r.json()["role"], "assessor");
    assert_eq!(
        h.call(
            Method::GET,
            &format!("/assessments/{DRAFT}"),
            Some(&token),
            None
        )
        .await
        .status,
        StatusCode::OK
    );

    // regenerating a password revokes sessions and forces a change
    let r = h
        .call(
            Method::POST,
            "/users/bob/password",
            Some(h.token(Role::Admin)),
            None,
        )
        .await;
    let temp = r.json()["temporary_password"].as_str().unwrap().to_string();
    assert_eq!(
        h.call(Method::GET, "/me", Some(&token), None).await.status,
        StatusCode::UNAUTHORIZED
    );
    let token = h.login("bob", &temp).await.unwrap();
    assert_eq!(
        h.call(Method::GET, "/assessments", Some(&token), None)
            .await
            .status,
        StatusCode::FORBIDDEN
    );
}

#[tokio::test]
async fn sessions_expire() {
    let h = Harness::with_ttl(Duration::ZERO).await;
    let r = h.get(Role::Assessor, "/assessments").await;
    assert_eq!(r.status, StatusCode::UNAUTHORIZED);
}

#[tokio::test]
async fn logout_revokes_the_token() {
    let h = Harness::new().await;
    let token = h.login("assessor", PASSWORD).await.unwrap();
    assert_eq!(
        h.call(Method::POST, "/logout", Some(&token), None)
            .await
            .status,
        StatusCode::NO_CONTENT
    );
    assert_eq!(
        h.call(Method::GET, "/me", Some(&token), None).await.status,
        StatusCode::UNAUTHORIZED
    );
    assert_eq!(h.get(Role::Assessor, "/me").await.status, StatusCode::OK);
}

#[tokio::test]
async fn templates_are_listed_and_served() {
    let h = Harness::new().await;
    let list = h.get(Role::External, "/templates").await.json();
    assert_eq!(list[0]["id"], "distaf-sample");
    assert_eq!(
        list[0]["pillars"],
        json!(["S", "P", "E", "RES", "ROB", "REL"])
    );
    let t = h
        .get(Role::External, "/templates/distaf-sample")
        .await
        .json();
    assert_eq!(t["pillars"].as_array().unwrap().len(), 6);
    assert_eq!(
        h.get(Role::External, "/templates/nope").await.status,
        StatusCode::NOT_FOUND
    );
    let version = list[0]["version"].as_str().unwrap();
    let r = h
        .get(
            Role::External,
            &format!("/templates/distaf-sample?version={version}"),
        )
        .await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(
        h.get(
            Role::External,
            "/templates/distaf-sample?version=0.0.0-nope"
        )
        .await
        .status,
        StatusCode::NOT_FOUND
    );
}

#[tokio::test]
async fn writes_require_and_echo_the_revision() {
    let h = Harness::new().await;
    let a = new_draft(&h, "v1").await;
    assert_eq!(a["status"], "draft");
    assert_eq!(a["revision"], 1);

    let body = json!({"revision": 1, "edits": [{"code": "S.AC.D8", "value": true}]});
    let r = h
        .call(
            Method::PATCH,
            "/assessments/v1/metrics",
            Some(h.token(Role::Assessor)),
            Some(body.clone()),
        )
        .await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.text());
    assert_eq!(r.headers["etag"], "\"2\"");
    let a = r.json();
    assert_eq!(a["revision"], 2);
    assert_eq!(a["metric_values"]["S.AC.D8"]["normalized"], 100.0);

    // the same base revision again: conflict, nothing written
    let r = h
        .call(
            Method::PATCH,
            "/assessments/v1/metrics",
            Some(h.token(Role::Assessor)),
            Some(body),
        )
        .await;
    assert_eq!(r.status, StatusCode::CONFLICT);
    assert_eq!(r.json()["current_revision"], 2);
    assert_eq!(h.revision("v1"), 2);

    let missing = json!({"edits": []});
    let r = h
        .call(
            Method::PATCH,
            "/assessments/v1/metrics",
            Some(h.token(Role::Assessor)),
            Some(missing),
        )
        .await;
    assert!(r.status.is_client_error());
    assert_eq!(h.revision("v1"), 2);

    let bad = json!({"revision": 2, "edits": [{"code": "S.SAA.O10", "value": 137}]});
    let r = h
        .call(
            Method::PATCH,
            "/assessments/v1/metrics",
            Some(h.token(Role::Assessor)),
            Some(bad),
        )
        .await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    let bad = json!({"revision": 2, "edits": [{"code": "S.AC.D99", "value": true}]});
    let r = h
        .call(
            Method::PATCH,
            "/assessments/v1/metrics",
            Some(h.token(Role::Assessor)),
            Some(bad),
        )
        .await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);

    let r = h.get(Role::Assessor, "/assessments/v1").await;
    assert_eq!(r.headers["etag"], "\"2\"");
}

#[tokio::test]
async fn answers_then_override() {
    let h = Harness::new().await;
    new_draft(&h, "v1").await;
    let r = h
        .post(
            Role::Assessor,
            "/assessments/v1/answers",
            json!({"revision": 1, "mechanism": "S.AC", "phase": "design", "answer": 3}),
        )
        .await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.text());
    let a = r.json();
    for code in ["S.AC.D8", "S.AC.D9"] {
        assert_eq!(a["metric_values"][code]["normalized"], 100.0);
        assert_eq!(a["metric_values"][code]["origin"], "cluster_answer");
    }
    let body = json!({"revision": 2, "edits": [{"code": "S.AC.D9", "value": 75}]});
    let a = h
        .call(
            Method::PATCH,
            "/assessments/v1/metrics",
            Some(h.token(Role::Assessor)),
            Some(body),
        )
        .await
        .json();
    assert_eq!(a["metric_values"]["S.AC.D9"]["origin"], "direct");
    assert_eq!(a["metric_values"]["S.AC.D8"]["origin"], "cluster_answer");

    let card: Scorecard = serde_json::from_value(
        h.get(Role::Assessor, "/assessments/v1/scorecard")
            .await
            .json(),
    )
    .unwrap();
    let id = MechanismId::new("S", "AC").unwrap();
    let ac = &card.design.mechanisms[&id];
    assert_eq!((ac.completeness, ac.capped_score), (1.0, Some(87.5)));
    assert_eq!(card.operational.mechanisms[&id].completeness, 0.0);

    let r = h
        .post(
            Role::Assessor,
            "/assessments/v1/answers",
            json!({"revision": 3, "mechanism": "S.AC", "phase": "design", "answer": 9}),
        )
        .await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn standards_and_exclusions() {
    let h = Harness::new().await;
    new_draft(&h, "v1").await;
    let r = h
        .post(
            Role::Assessor,
            "/assessments/v1/standards",
            json!({"revision": 1, "standard": "CIS-Controls"}),
        )
        .await;
    let a = r.json();
    let scored: Vec<&String> = a["metric_values"].as_object().unwrap().keys().collect();
    assert_eq!(scored.len(), 7);
    assert_eq!(a["declared_standards"], json!(["CIS-Controls"]));
    let r = h
        .post(
            Role::Assessor,
            "/assessments/v1/standards",
            json!({"revision": 2, "standard": "NoSuchStd"}),
        )
        .await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);

    let r = h
        .post(
            Role::Assessor,
            "/assessments/v1/exclusions",
            json!({"revision": 2, "mechanism": "ROB.FT"}),
        )
        .await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.text());
    assert_eq!(r.json()["excluded_mechanisms"], json!(["ROB.FT"]));
    let r = h
        .post(
            Role::Assessor,
            "/assessments/v1/exclusions",
            json!({"revision": 3, "mechanism": "ROB.NOPE"}),
        )
        .await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn publishing_requires_a_complete_assessment() {
    let h = Harness::new().await;
    new_draft(&h, "v1").await;
    let r = h
        .post(
            Role::Assessor,
            "/assessments/v1/status",
            json!({"revision": 1, "status": "public"}),
        )
        .await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(r.json()["unscored"].as_array().unwrap().len() > 50);

    // the demo is complete: reopen, edit, republish
    let rev = h.revision(PUBLIC);
    let r = h
        .post(
            Role::Assessor,
            &format!("/assessments/{PUBLIC}/status"),
            json!({"revision": rev, "status": "draft"}),
        )
        .await;
    assert_eq!(r.json()["status"], "draft");
    let body = json!({"revision": rev + 1, "edits": [{"code": "RES.IDR.O6", "value": true}]});
    let r = h
        .call(
            Method::PATCH,
            &format!("/assessments/{PUBLIC}/metrics"),
            Some(h.token(Role::Assessor)),
            Some(body),
        )
        .await;
    assert_eq!(r.status, StatusCode::OK);
    let r = h
        .post(
            Role::Assessor,
            &format!("/assessments/{PUBLIC}/status"),
            json!({"revision": rev + 2, "status": "public"}),
        )
        .await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.json()["revision"], rev + 3);

    // public entries are read-only
    let body = json!({"revision": rev + 3, "edits": [{"code": "RES.IDR.O6", "value": false}]});
    let r = h
        .call(
            Method::PATCH,
            &format!("/assessments/{PUBLIC}/metrics"),
            Some(h.token(Role::Assessor)),
            Some(body),
        )
        .await;
    assert_eq!(r.status, StatusCode::CONFLICT);
}

#[tokio::test]
async fn derivation_copies_scores() {
    let h = Harness::new().await;
    let r = h
        .post(
            Role::Assessor,
            "/assessments",
            json!({"id": "next", "from": PRIVATE, "description": "second round"}),
        )
        .await;
    assert_eq!(r.status, StatusCode::CREATED, "{}", r.text());
    let a = r.json()["assessment"].clone();
    assert_eq!(a["status"], "draft");
    assert_eq!(a["predecessor"], PRIVATE);
    let original = h
        .get(Role::Assessor, &format!("/assessments/{PRIVATE}"))
        .await
        .json();
    let scores = |v: &Value| -> Vec<(String, Value)> {
        v["metric_values"]
            .as_object()
            .unwrap()
            .iter()
            .map(|(k, m)| (k.clone(), m["normalized"].clone()))
            .collect()
    };
    assert_eq!(scores(&a), scores(&original));

    let cmp = h
        .get(Role::Assessor, &format!("/compare?a={PRIVATE}&b=next"))
        .await
        .json();
    let nodes = cmp["nodes"].as_array().unwrap();
    assert!(!nodes.is_empty());
    assert!(nodes
        .iter()
        .all(|n| n["delta"] == json!(0.0) || n["delta"].is_null()));

    let r = h
        .post(Role::Assessor, "/assessments", json!({"from": "ghost"}))
        .await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn preview_scores_an_overlay_without_saving() {
    let h = Harness::new().await;
    let rev = h.revision(DRAFT);
    let before = h
        .get(Role::Assessor, &format!("/assessments/{DRAFT}/scorecard"))
        .await
        .json();
    assert_eq!(
        before["operational"]["pillars"]["RES"]["capped_score"],
        70.0
    );

    // excluding the capped mechanism lifts the pillar cap in the preview only
    let overlay = json!({"exclusions": {"RES.IDR": true}});
    let r = h
        .post(
            Role::Assessor,
            &format!("/assessments/{DRAFT}/preview"),
            overlay,
        )
        .await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.text());
    let preview = r.json();
    assert_eq!(
        preview["operational"]["pillars"]["RES"]["capped_score"],
        100.0
    );
    assert_eq!(
        preview["operational"]["pillars"]["RES"]["mandatory_violations"],
        json!([])
    );

    let overlay = json!({"metrics": [{"code": "RES.IDR.O6", "value": true}]});
    let preview = h
        .post(
            Role::Assessor,
            &format!("/assessments/{DRAFT}/preview"),
            overlay,
        )
        .await
        .json();
    assert_eq!(
        preview["operational"]["mechanisms"]["RES.IDR"]["capped_score"],
        100.0
    );

    assert_eq!(h.revision(DRAFT), rev);
    assert_eq!(
        h.get(Role::Assessor, &format!("/assessments/{DRAFT}/scorecard"))
            .await
            .json(),
        before
    );

    let r = h
        .post(
            Role::Assessor,
            &format!("/assessments/{PUBLIC}/preview"),
            json!({}),
        )
        .await;
    assert_eq!(r.status, StatusCode::CONFLICT);
    assert!(r.text().contains("only drafts"));
}

#[tokio::test]
async fn fingerprints() {
    let h = Harness::new().await;
    for phase in ["design", "operational"] {
        let f = h
            .get(
                Role::External,
                &format!("/assessments/{PUBLIC}/fingerprint?phase={phase}"),
            )
            .await
            .json();
        let axes = f["axes"].as_array().unwrap();
        assert_eq!(axes.len(), 6);
        assert_eq!(axes[0]["subject"], "S");
    }
    let f = h
        .get(
            Role::External,
            &format!(
                "/assessments/{PUBLIC}/fingerprint?level=mechanisms&pillar=RES&phase=operational"
            ),
        )
        .await
        .json();
    let labels: Vec<&str> = f["axes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| a["subject"].as_str().unwrap())
        .collect();
    assert_eq!(labels, ["RES.RS", "RES.IDR"]);
    assert_eq!(f["axes"][1]["value"], 40.0);

    for bad in [
        "level=mechanisms",
        "level=mechanisms&pillar=NOPE",
        "phase=later",
        "level=metrics",
    ] {
        let r = h
            .get(
                Role::External,
                &format!("/assessments/{PUBLIC}/fingerprint?{bad}"),
            )
            .await;
        assert_eq!(r.status, StatusCode::BAD_REQUEST, "{bad}");
    }
}

#[tokio::test]
async fn exports() {
    let h = Harness::new().await;
    let r = h
        .get(
            Role::External,
            &format!("/assessments/{PUBLIC}/export?format=tabular"),
        )
        .await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.headers["content-type"], "text/csv; charset=utf-8");
    let text = r.text();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(TABULAR_HEADER));
    let template = h.state.store.template_of(PUBLIC).unwrap();
    assert_eq!(lines.count(), template.metrics().count());

    let r = h
        .get(
            Role::External,
            &format!("/assessments/{PUBLIC}/export?format=summary"),
        )
        .await;
    assert!(r.text().contains("RES"));
    let r = h
        .get(
            Role::External,
            &format!("/assessments/{PUBLIC}/export?format=xlsx"),
        )
        .await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);

    // a full dump re-imports to the same scorecard
    let mut dump = h
        .get(
            Role::External,
            &format!("/assessments/{PUBLIC}/export?format=dump"),
        )
        .await
        .json();
    dump["assessment"]["id"] = json!("reimported");
    let r = h.post(Role::Assessor, "/assessments/import", dump).await;
    assert_eq!(r.status, StatusCode::CREATED, "{}", r.text());
    let a = h
        .get(Role::Assessor, &format!("/assessments/{PUBLIC}/scorecard"))
        .await
        .json();
    let mut b = h
        .get(Role::Assessor, "/assessments/reimported/scorecard")
        .await
        .json();
    b["assessment_id"] = json!(PUBLIC);
    assert_eq!(a, b);

    let r = h
        .post(
            Role::Assessor,
            "/assessments/import",
            json!({"format": "other"}),
        )
        .await;
    assert!(r.status.is_client_error());
}

#[tokio::test]
async fn state_survives_a_restart() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = ServerConfig::new(dir.path());
    config.template_dir = Some(distaf_testkit::templates_dir());
    {
        let users = UserStore::open(&distaf_server::users_path(dir.path())).unwrap();
        let issued = users.init_admin("root").unwrap();
        users
            .change_password("root", &issued.temporary_password, PASSWORD)
            .unwrap();
        users.create("assessor", Role::Assessor).unwrap();
    }
    let state = AppState::open(&config).unwrap();
    state
        .store
        .import_document(&common::demo_document(
            "kept",
            distaf_core::AssessmentStatus::Draft,
        ))
        .unwrap();
    let card = state.store.scorecard("kept").unwrap();
    drop(state);

    let state = AppState::open(&config).unwrap();
    assert_eq!(state.store.scorecard("kept").unwrap(), card);
    assert!(state.users.authenticate("root", PASSWORD).is_some());
    assert!(state.users.get("assessor").unwrap().must_change_password);
    assert!(dir.path().join("assessments/kept.json").exists());
}
