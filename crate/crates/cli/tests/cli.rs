use std::path::Path;
use std::process::{Command, Output};
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use distaf_core::access::Role;
use distaf_core::store::AssessmentStore;
use distaf_core::TemplateRegistry;
use distaf_server::users::UserStore;
use distaf_server::{router, AppState};
use distaf_testkit::{fixture_path, sample_template_path, templates_dir};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

fn distaf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_distaf"))
        .args(args)
        .env_remove("DISTAF_TEMPLATE_DIR")
        .env_remove("DISTAF_DATA_DIR")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn sample_json() -> Value {
    serde_json::from_str(&std::fs::read_to_string(sample_template_path()).unwrap()).unwrap()
}

fn write_mutant(dir: &Path, name: &str, mutate: impl FnOnce(&mut Value)) -> std::path::PathBuf {
    let mut t = sample_json();
    mutate(&mut t);
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(&t).unwrap()).unwrap();
    path
}

/// The S.AC mechanism of the sample.
fn ac(t: &mut Value) -> &mut Value {
    &mut t["pillars"][0]["mechanisms"][0]
}

#[test]
fn sample_template_validates() {
    let o = distaf(&["validate", p(&sample_template_path())]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("ok: distaf-sample"));
}

#[test]
fn coverage_gap_names_the_answer() {
    let dir = tempfile::tempdir().unwrap();
    let broken = write_mutant(dir.path(), "broken.json", |t| {
        ac(t)["cluster_questions"][0]["answers"][1]["configuration"]
            .as_object_mut()
            .unwrap()
            .remove("S.AC.D9");
    });
    let o = distaf(&["validate", p(&broken)]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(
        out.contains("answers[1] \"b) simple level of configurability\""),
        "{out}"
    );
    assert!(
        out.contains("answer configuration incomplete: missing S.AC.D9"),
        "{out}"
    );
}

#[test]
fn each_single_fault_mutant_fails() {
    let dir = tempfile::tempdir().unwrap();
    type Mutant = (&'static str, Box<dyn FnOnce(&mut Value)>, &'static str);
    let mutants: Vec<Mutant> = vec![
        (
            "duplicate.json",
            Box::new(|t| {
                let copy = ac(t)["metrics"][0].clone();
                ac(t)["metrics"].as_array_mut().unwrap().push(copy);
            }),
            "duplicate metric code",
        ),
        (
            "weight.json",
            Box::new(|t| ac(t)["metric_weights"] = json!({"S.AC.D8": -1.0, "S.AC.D9": 1.0})),
            "negative or non-finite weight",
        ),
        (
            "cap.json",
            Box::new(|t| {
                let idr = &mut t["pillars"][3]["mechanisms"][1];
                idr["metrics"][3]["mandatory"]["pillar_cap"] = json!(120.0);
            }),
            "pillar_cap 120 outside [0, 100]",
        ),
        (
            "standard.json",
            Box::new(|t| {
                t["standards"][0]["satisfied_metrics"]
                    .as_array_mut()
                    .unwrap()
                    .push(json!("S.AC.D99"))
            }),
            "unknown metric S.AC.D99",
        ),
    ];
    for (name, mutate, message) in mutants {
        let path = write_mutant(dir.path(), name, mutate);
        let o = distaf(&["validate", p(&path)]);
        assert_eq!(o.status.code(), Some(1), "{name}: {}", stdout(&o));
        assert!(stdout(&o).contains(message), "{name}: {}", stdout(&o));
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let garbage = dir.path().join("garbage.json");
    std::fs::write(&garbage, "{ not json").unwrap();
    assert_eq!(distaf(&["validate", p(&garbage)]).status.code(), Some(1));
    assert_eq!(
        distaf(&["validate", "/no/such/template.json"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        distaf(&["score", "/no/such/assessment.json"]).status.code(),
        Some(2)
    );
    assert_eq!(distaf(&["frobnicate"]).status.code(), Some(3));
    assert_eq!(distaf(&["validate"]).status.code(), Some(3));
    assert_eq!(
        distaf(&[
            "score",
            p(&fixture_path("turing-demo.json")),
            "--phase",
            "later"
        ])
        .status
        .code(),
        Some(3)
    );
    assert_eq!(
        distaf(&[
            "export",
            p(&fixture_path("turing-demo.json")),
            "--format",
            "xlsx"
        ])
        .status
        .code(),
        Some(3)
    );
    assert_eq!(distaf(&["--help"]).status.code(), Some(0));
    // an assessment scored against the wrong template
    assert_eq!(
        distaf(&[
            "score",
            p(&fixture_path("turing-demo.json")),
            p(&sample_template_path())
        ])
        .status
        .code(),
        Some(1)
    );
}

#[test]
fn score_prints_six_pillars_per_phase() {
    let demo = fixture_path("turing-demo.json");
    let o = distaf(&["score", p(&sample_template_path()), p(&demo)]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(
        out.matches(" phase (completeness 100.0%)").count(),
        2,
        "{out}"
    );
    for pillar in ["S ", "P ", "E ", "RES", "ROB", "REL"] {
        assert_eq!(
            out.lines()
                .filter(|l| l.trim_start().starts_with(pillar))
                .count(),
            2,
            "{pillar}: {out}"
        );
    }
    assert!(
        out.lines()
            .any(|l| l.contains("RES") && l.contains("70.0") && l.ends_with("DeepPink")),
        "{out}"
    );
    // deterministic, and the template may come from --template-dir
    let again = distaf(&["--template-dir", p(&templates_dir()), "score", p(&demo)]);
    assert_eq!(stdout(&again), out);

    let design = stdout(&distaf(&["score", p(&demo), "--phase", "design"]));
    assert!(design.contains("Design phase") && !design.contains("Operational phase"));
}

async fn api_scorecard(doc: Value) -> Value {
    let store = AssessmentStore::in_memory(Arc::new(TemplateRegistry::with_sample()));
    let users = UserStore::in_memory();
    let issued = users.create("assessor", Role::Assessor).unwrap();
    users
        .change_password("assessor", &issued.temporary_password, "a long password")
        .unwrap();
    let app = router(AppState::new(
        store,
        users,
        std::time::Duration::from_secs(60),
    ));

    let call = |method: &str, uri: &str, token: Option<String>, body: Value| {
        let mut req = Request::builder()
            .method(method)
            .uri(uri)
            .header("content-type", "application/json");
        if let Some(t) = token {
            req = req.header("authorization", format!("Bearer {t}"));
        }
        let req = req.body(Body::from(body.to_string())).unwrap();
        let app = app.clone();
        async move {
            let res = app.oneshot(req).await.unwrap();
            let status = res.status();
            let bytes = res.into_body().collect().await.unwrap().to_bytes();
            (status, serde_json::from_slice::<Value>(&bytes).unwrap())
        }
    };
    let (_, login) = call(
        "POST",
        "/login",
        None,
        json!({"username": "assessor", "password": "a long password"}),
    )
    .await;
    let token = login["token"].as_str().unwrap().to_string();
    let (status, _) = call("POST", "/assessments/import", Some(token.clone()), doc).await;
    assert_eq!(status, StatusCode::CREATED);
    let (status, card) = call(
        "GET",
        "/assessments/turing-demo/scorecard",
        Some(token),
        Value::Null,
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    card
}

#[tokio::test]
async fn score_matches_the_api() {
    let demo = fixture_path("turing-demo.json");
    let o = distaf(&["score", p(&sample_template_path()), p(&demo), "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let cli: Value = serde_json::from_slice(&o.stdout).unwrap();
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&demo).unwrap()).unwrap();
    let api = api_scorecard(doc).await;
    assert_eq!(cli, api);
    assert_eq!(cli["operational"]["pillars"].as_object().unwrap().len(), 6);
}

#[test]
fn exports() {
    let dir = tempfile::tempdir().unwrap();
    let demo = fixture_path("turing-demo.json");
    let o = distaf(&["export", p(&demo), "--format", "tabular"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = stdout(&o);
    assert_eq!(
        csv.lines().next(),
        Some(distaf_core::report::TABULAR_HEADER)
    );
    assert_eq!(csv.lines().count(), 1 + 101);

    // a dump scores exactly like its source
    let dump = dir.path().join("dump.json");
    assert_eq!(
        distaf(&["export", p(&demo), "--format", "dump", "-o", p(&dump)])
            .status
            .code(),
        Some(0)
    );
    let a = stdout(&distaf(&["score", p(&demo), "--json"]));
    let b = stdout(&distaf(&["score", p(&dump), "--json"]));
    assert_eq!(a, b);

    let summary = stdout(&distaf(&["export", p(&demo)]));
    assert!(summary.contains("Resiliency"), "{summary}");
}

#[test]
fn init_admin_seeds_once() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let o = distaf(&["--data-dir", p(&data), "init-admin", "--username", "root"]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let out = stdout(&o);
    let password = out
        .lines()
        .find_map(|l| l.strip_prefix("temporary password: "))
        .unwrap();
    let users = UserStore::open(&distaf_server::users_path(&data)).unwrap();
    let root = users.authenticate("root", password).unwrap();
    assert_eq!(root.role, Role::Admin);
    assert!(root.must_change_password);

    let o = distaf(&["--data-dir", p(&data), "init-admin", "--username", "other"]);
    assert_eq!(o.status.code(), Some(1));
}
