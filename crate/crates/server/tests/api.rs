use axum::body::{to_bytes, Body};
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use serde_json::{json, Value};
use tower::ServiceExt;

use senseloom::annotate::Workspace;
use senseloom::embedstore::{write_embeddings, EmbeddingMatrix};
use senseloom_server::{router, AppState};

struct Api {
    app: Router,
    _dir: tempfile::TempDir,
    root: std::path::PathBuf,
}

impl Api {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        Api {
            app: router(AppState::new(Workspace::new(&root))),
            _dir: dir,
            root,
        }
    }

    async fn call(
        &self,
        method: Method,
        uri: &str,
        body: Option<Value>,
    ) -> (StatusCode, Value, String) {
        let mut req = Request::builder().method(method).uri(uri);
        let body = match body {
            Some(v) => {
                req = req.header("content-type", "application/json");
                Body::from(v.to_string())
            }
            None => Body::empty(),
        };
        let resp = self
            .app
            .clone()
            .oneshot(req.body(body).unwrap())
            .await
            .unwrap();
        let status = resp.status();
        let bytes = to_bytes(resp.into_body(), usize::MAX).await.unwrap();
        let text = String::from_utf8(bytes.to_vec()).unwrap();
        let json = serde_json::from_str(&text).unwrap_or(Value::Null);
        (status, json, text)
    }
}

const TEXTS: [&str; 4] = [
    "A bat flew out of the cave as the sun set.",
    "He swung the bat with all his strength.",
    "The bat hung upside down in the dark.",
    "She bought a new bat for the cricket match.",
];

fn sentence(i: usize) -> Value {
    let text = TEXTS[i];
    let start = text.find("bat").unwrap();
    json!({
        "id": format!("src:{}", i + 1),
        "lang": "en",
        "lemma": "bat",
        "surface_form": "bat",
        "text": text,
        "target_span": [start, start + 3],
        "source": "src",
    })
}

fn project_body() -> Value {
    json!({
        "id": "demo",
        "lang": "en",
        "lemmas": [{ "lemma": "bat", "forms": ["bat", "bats"], "lang": "en" }],
        "sense_inventory": { "bat": [
            { "sense_id": "animal", "gloss": "flying mammal" },
            { "sense_id": "club", "gloss": "sports implement" }
        ]},
        "sentences": (0..4).map(sentence).collect::<Vec<_>>(),
    })
}

async fn with_project() -> Api {
    let api = Api::new();
    let (status, body, _) = api
        .call(Method::POST, "/api/projects", Some(project_body()))
        .await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    api
}

fn assign_body(sentence: &str, sense: &str) -> Value {
    json!({ "sentence_id": sentence, "lemma": "bat", "sense_id": sense, "annotator": "ann1", "provenance": "manual" })
}

fn install_embeddings(api: &Api) {
    let rows = [
        vec![1.0f32, 0.1, 0.0],
        vec![0.0, 1.0, 0.2],
        vec![0.9, 0.2, 0.1],
        vec![0.1, 0.9, 0.3],
    ];
    let ids = (1..=4).map(|i| format!("src:{i}")).collect();
    let m = EmbeddingMatrix::from_rows("bat", "test-model", ids, &rows).unwrap();
    let path = api.root.join("demo/embeddings/bat.semb");
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    write_embeddings(&m, &path).unwrap();
}

#[tokio::test]
async fn create_and_list() {
    let api = with_project().await;
    let (status, body, _) = api.call(Method::GET, "/api/projects", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["projects"][0]["id"], "demo");

    let (status, body, _) = api
        .call(Method::POST, "/api/projects", Some(project_body()))
        .await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["code"], "already_exists");

    let (_, body, _) = api
        .call(Method::GET, "/api/projects/demo/lemmas", None)
        .await;
    let lemma = &body["lemmas"][0];
    assert_eq!(lemma["lemma"], "bat");
    assert_eq!(lemma["sentences"], 4);
    assert_eq!(lemma["senses"].as_array().unwrap().len(), 2);
}

#[tokio::test]
async fn errors_are_json_with_classes() {
    let api = with_project().await;
    let (status, body, _) = api
        .call(Method::GET, "/api/projects/nope/lemmas", None)
        .await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["code"], "unknown_project");
    assert!(body.get("message").is_some() && body.get("detail").is_some());

    let (status, body, _) = api
        .call(
            Method::POST,
            "/api/projects/demo/annotations",
            Some(assign_body("src:1", "nope")),
        )
        .await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["code"], "unknown_sense");

    let (status, body, _) = api
        .call(
            Method::POST,
            "/api/projects/demo/annotations",
            Some(json!({ "lemma": "bat" })),
        )
        .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["code"], "validation");

    let (status, _, _) = api
        .call(
            Method::POST,
            "/api/projects/demo/annotations",
            Some(assign_body("src:99", "animal")),
        )
        .await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let log = std::fs::read_to_string(api.root.join("demo/log.jsonl")).unwrap_or_default();
    assert!(log.is_empty(), "failed requests must not touch the log");
}

#[tokio::test]
async fn assign_is_idempotent_and_undoable() {
    let api = with_project().await;
    let url = "/api/projects/demo/annotations";
    let (status, first, _) = api
        .call(Method::POST, url, Some(assign_body("src:1", "animal")))
        .await;
    assert_eq!(status, StatusCode::CREATED);
    let (status, again, _) = api
        .call(Method::POST, url, Some(assign_body("src:1", "animal")))
        .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(first["revision"], again["revision"]);

    let del = "/api/projects/demo/annotations/src:1/bat/ann1";
    let (status, body, _) = api.call(Method::DELETE, del, None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["status"], "removed");
    let (_, body, _) = api.call(Method::DELETE, del, None).await;
    assert_eq!(body["status"], "nothing_to_undo");

    let (_, body, _) = api
        .call(Method::POST, url, Some(assign_body("src:1", "animal")))
        .await;
    assert_eq!(body["revision"], 3);
    let log = std::fs::read_to_string(api.root.join("demo/log.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 3);
}

#[tokio::test]
async fn view_requires_projection_then_aligns() {
    let api = with_project().await;
    let (status, body, _) = api
        .call(Method::GET, "/api/projects/demo/lemmas/bat/view", None)
        .await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["code"], "recompute_required");

    install_embeddings(&api);
    let (status, body, _) = api
        .call(
            Method::POST,
            "/api/projects/demo/lemmas/bat/recompute",
            Some(json!({ "k": 2, "method": "mds", "seed": 7 })),
        )
        .await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["points"].as_array().unwrap().len(), 4);

    for (id, sense) in [("src:1", "animal"), ("src:2", "club")] {
        api.call(
            Method::POST,
            "/api/projects/demo/annotations",
            Some(assign_body(id, sense)),
        )
        .await;
    }
    let (status, v, _) = api
        .call(Method::GET, "/api/projects/demo/lemmas/bat/view", None)
        .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["ids"].as_array().unwrap().len(), 4);
    assert_eq!(v["points"].as_array().unwrap().len(), 4);
    assert_eq!(v["clusters"].as_array().unwrap().len(), 4);
    let senses = v["senses"].as_array().unwrap();
    assert_eq!(senses.iter().filter(|s| !s.is_null()).count(), 2);
    assert_eq!(v["counts"]["animal"], 1);
    assert_eq!(v["counts"]["club"], 1);
    assert_eq!(v["revision"], 2);
}

#[tokio::test]
async fn recompute_without_embeddings_is_rejected() {
    let api = with_project().await;
    let (status, body, _) = api
        .call(
            Method::POST,
            "/api/projects/demo/lemmas/bat/recompute",
            Some(json!({})),
        )
        .await;
    assert_eq!(status, StatusCode::BAD_REQUEST, "{body}");
}

#[tokio::test]
async fn add_sense_and_conflict() {
    let api = with_project().await;
    let url = "/api/projects/demo/lemmas/bat/senses";
    let sense = json!({ "sense_id": "brick", "gloss": "broken piece of brick" });
    let (status, _, _) = api.call(Method::POST, url, Some(sense.clone())).await;
    assert_eq!(status, StatusCode::CREATED);
    let (status, body, _) = api.call(Method::POST, url, Some(sense)).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["code"], "already_exists");
    let (status, _, _) = api
        .call(
            Method::POST,
            "/api/projects/demo/lemmas/nope/senses",
            Some(json!({ "sense_id": "x", "gloss": "y" })),
        )
        .await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn export_filters_by_min_per_sense() {
    let api = with_project().await;
    let url = "/api/projects/demo/annotations";
    for (id, sense) in [
        ("src:1", "animal"),
        ("src:3", "animal"),
        ("src:2", "club"),
        ("src:4", "club"),
    ] {
        api.call(Method::POST, url, Some(assign_body(id, sense)))
            .await;
    }
    let (status, _, text) = api
        .call(
            Method::GET,
            "/api/projects/demo/export?min_per_sense=2",
            None,
        )
        .await;
    assert_eq!(status, StatusCode::OK);
    let ids: Vec<String> = text
        .lines()
        .map(|l| {
            serde_json::from_str::<Value>(l).unwrap()["id"]
                .as_str()
                .unwrap()
                .to_string()
        })
        .collect();
    assert_eq!(ids, ["src:1", "src:2", "src:3", "src:4"]);

    let (_, _, text) = api
        .call(
            Method::GET,
            "/api/projects/demo/export?min_per_sense=3",
            None,
        )
        .await;
    assert!(text.is_empty());
    let (_, _, text) = api
        .call(Method::GET, "/api/projects/demo/export", None)
        .await;
    assert!(
        text.is_empty(),
        "default threshold of 30 excludes the lemma"
    );
    let (status, body, _) = api
        .call(
            Method::GET,
            "/api/projects/demo/export?min_per_sense=x",
            None,
        )
        .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["code"], "validation");
}

#[tokio::test]
async fn state_survives_reopen() {
    let api = with_project().await;
    api.call(
        Method::POST,
        "/api/projects/demo/annotations",
        Some(assign_body("src:1", "club")),
    )
    .await;
    let fresh = Api {
        app: router(AppState::new(Workspace::new(&api.root))),
        _dir: tempfile::tempdir().unwrap(),
        root: api.root.clone(),
    };
    let (_, _, text) = fresh
        .call(
            Method::GET,
            "/api/projects/demo/export?min_per_sense=0",
            None,
        )
        .await;
    assert!(
        text.is_empty(),
        "one sense only, so the lemma is not exportable"
    );
    let (_, body, _) = fresh.call(Method::GET, "/api/projects", None).await;
    assert_eq!(body["projects"][0]["revision"], 1);
}

#[tokio::test]
async fn path_traversal_ids_are_unknown() {
    let api = with_project().await;
    let (status, _, _) = api.call(Method::GET, "/api/projects/../lemmas", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, body, _) = api
        .call(Method::GET, "/api/projects/%2E%2E/lemmas", None)
        .await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["code"], "unknown_project");
}
