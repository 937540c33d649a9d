//! The access matrix and the leakage fuzzer, shared by the authz and
//! acceptance tests.

use axum::http::{Method, StatusCode};
use distaf_core::access::{authz_check, Action, Role};
use distaf_core::AssessmentStatus;
use rand::{Rng, SeedableRng};
use serde_json::json;

use super::{id_for, Harness, Reply, DRAFT, PRIVATE, PUBLIC};

/// The role matrix written out cell by cell, independent of the implementation.
pub fn expected(role: Role, action: Action, status: AssessmentStatus) -> bool {
    use Action::*;
    let public = status == AssessmentStatus::Public;
    match role {
        Role::Admin => match action {
            ManageUsers => true,
            ReadAssessment => public,
            CreateAssessment | EditAssessment | Compare | Export => false,
        },
        Role::Assessor => action != ManageUsers,
        Role::External => match action {
            ReadAssessment | Export => public,
            ManageUsers | CreateAssessment | EditAssessment | Compare => false,
        },
    }
}

/// Issues the request that exercises `action` on the assessment in `status`.
pub async fn probe(
    h: &Harness,
    role: Role,
    action: Action,
    status: AssessmentStatus,
    n: usize,
) -> Reply {
    let id = id_for(status);
    match action {
        Action::ManageUsers => h.get(role, "/users").await,
        Action::CreateAssessment => {
            h.post(
                role,
                "/assessments",
                json!({"id": format!("derived-{n}"), "from": id}),
            )
            .await
        }
        Action::EditAssessment => {
            let body = json!({"revision": h.revision(id), "standard": "GDPR", "declared": true});
            h.post(role, &format!("/assessments/{id}/standards"), body)
                .await
        }
        Action::ReadAssessment => h.get(role, &format!("/assessments/{id}")).await,
        Action::Compare => h.get(role, &format!("/compare?a={id}&b={id}")).await,
        Action::Export => {
            h.get(role, &format!("/assessments/{id}/export?format=tabular"))
                .await
        }
    }
}

/// Checks every role × action × status cell, both the pure decision and over HTTP.
pub async fn check_matrix(h: &Harness) -> usize {
    let mut n = 0;
    for role in Role::ALL {
        for action in Action::ALL {
            for status in AssessmentStatus::ALL {
                n += 1;
                let want = expected(role, action, status);
                let decision = authz_check(role, action, status);
                assert_eq!(
                    decision.allowed, want,
                    "{role} {action} {status}: {}",
                    decision.reason
                );
                assert!(!decision.reason.is_empty());

                let r = probe(h, role, action, status, n).await;
                let denied = matches!(r.status, StatusCode::FORBIDDEN | StatusCode::NOT_FOUND);
                assert_eq!(
                    !denied,
                    want,
                    "{role} {action} {status}: HTTP {} {}",
                    r.status,
                    r.text()
                );
                if want {
                    // allowed edits of non-drafts are refused by the lifecycle, not by authz
                    let ok = r.status.is_success()
                        || (action == Action::EditAssessment
                            && status != AssessmentStatus::Draft
                            && r.status == StatusCode::CONFLICT);
                    assert!(
                        ok,
                        "{role} {action} {status}: HTTP {} {}",
                        r.status,
                        r.text()
                    );
                }
                let targets_one = matches!(
                    action,
                    Action::ReadAssessment | Action::EditAssessment | Action::Export
                );
                if targets_one && !expected(role, Action::ReadAssessment, status) {
                    // unreadable assessments look missing
                    assert_eq!(r.status, StatusCode::NOT_FOUND, "{role} {action} {status}");
                }
            }
        }
    }
    n
}

fn random_id(rng: &mut impl Rng) -> String {
    const KNOWN: [&str; 3] = [DRAFT, PRIVATE, PUBLIC];
    match rng.random_range(0..6) {
        0 | 1 => KNOWN[rng.random_range(0..2)].to_string(),
        2 => KNOWN[rng.random_range(0..3)].to_uppercase(),
        3 => format!(
            "{}{}",
            KNOWN[rng.random_range(0..2)],
            ["%20", ".", "%2e", "-x", "/", "%2F"][rng.random_range(0..6)]
        ),
        4 => format!("%2E%2E%2F{}", KNOWN[rng.random_range(0..2)]),
        _ => (0..rng.random_range(1..12))
            .map(|_| rng.sample(rand::distr::Alphanumeric) as char)
            .collect(),
    }
}

fn random_request(rng: &mut impl Rng, id: &str) -> (Method, String, Option<serde_json::Value>) {
    let phase = ["design", "operational", "x"][rng.random_range(0..3)];
    match rng.random_range(0..12) {
        0 => (Method::GET, format!("/assessments/{id}"), None),
        1 => (Method::GET, format!("/assessments/{id}/scorecard"), None),
        2 => (
            Method::GET,
            format!("/assessments/{id}/fingerprint?phase={phase}"),
            None,
        ),
        3 => (
            Method::GET,
            format!("/assessments/{id}/fingerprint?level=mechanisms&pillar=S&phase={phase}"),
            None,
        ),
        4 => {
            let format = ["dump", "tabular", "summary", "xlsx"][rng.random_range(0..4)];
            (
                Method::GET,
                format!("/assessments/{id}/export?format={format}"),
                None,
            )
        }
        5 => (Method::GET, format!("/compare?a={PUBLIC}&b={id}"), None),
        6 => (
            Method::POST,
            format!("/assessments/{id}/preview"),
            Some(json!({})),
        ),
        7 => (
            Method::POST,
            "/assessments".into(),
            Some(json!({"from": id})),
        ),
        8 => (
            Method::PATCH,
            format!("/assessments/{id}/metrics"),
            Some(json!({"revision": 1, "edits": []})),
        ),
        9 => (
            Method::POST,
            format!("/assessments/{id}/status"),
            Some(json!({"revision": 1, "status": "public"})),
        ),
        10 => (Method::GET, "/assessments".into(), None),
        _ => (
            Method::POST,
            format!("/assessments/{id}/exclusions"),
            Some(json!({"revision": 1, "mechanism": "S.AC"})),
        ),
    }
}

/// Nothing about drafts or private assessments reaches a caller who may not
/// read them: no content, and no difference from a missing id.
pub async fn check_leakage(h: &Harness, requests: usize, seed: u64) -> usize {
    let before: Vec<_> = [DRAFT, PRIVATE]
        .iter()
        .map(|id| h.state.store.get(id).unwrap())
        .collect();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut hidden_probes = 0;
    for i in 0..requests {
        let role = if i % 3 == 0 {
            Role::Admin
        } else {
            Role::External
        };
        let id = random_id(&mut rng);
        let (method, uri, body) = random_request(&mut rng, &id);
        let r = h
            .call(method.clone(), &uri, Some(h.token(role)), body.clone())
            .await;
        let text = r.text();
        for secret in ["secret draft-1", "secret private-1"] {
            assert!(!text.contains(secret), "{role} {method} {uri}: {text}");
        }
        if uri == "/assessments" && method == Method::GET {
            let ids: Vec<String> = r
                .json()
                .as_array()
                .unwrap()
                .iter()
                .map(|a| a["id"].as_str().unwrap().into())
                .collect();
            assert_eq!(ids, [PUBLIC], "{role} list");
            continue;
        }
        if id == DRAFT || id == PRIVATE {
            hidden_probes += 1;
            assert!(
                !r.status.is_success(),
                "{role} {method} {uri}: HTTP {}",
                r.status
            );
            // a hidden id is indistinguishable from a missing one
            let ghost = "no-such-id";
            let r2 = h
                .call(
                    method.clone(),
                    &uri.replace(&id, ghost),
                    Some(h.token(role)),
                    body,
                )
                .await;
            assert_eq!(r.status, r2.status, "{role} {method} {uri}");
            assert_eq!(
                text.replace(&id, "ID"),
                r2.text().replace(ghost, "ID"),
                "{role} {method} {uri}"
            );
        }
    }
    let after: Vec<_> = [DRAFT, PRIVATE]
        .iter()
        .map(|id| h.state.store.get(id).unwrap())
        .collect();
    assert_eq!(before, after, "hidden assessments were modified");
    hidden_probes
}
