use std::fs;

use axum::body::Body;
use axum::http::{header, Request, Response, StatusCode};
use axum::Router;
use essencery_core::{load_standard_kernel, parse, GraphDocument};
use essencery_server::{router, AppState, ServeConfig, ServeError, Server, Store};
use essencery_testkit::one_week_fixture;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

struct Harness {
    dir: tempfile::TempDir,
    app: Router,
}

fn harness() -> Harness {
    let dir = tempfile::tempdir().unwrap();
    let store = Store::open(dir.path()).unwrap();
    let app = router(AppState::new(store, load_standard_kernel().unwrap()), None);
    Harness { dir, app }
}

async fn send(app: &Router, req: Request<Body>) -> (StatusCode, Response<Body>) {
    let resp = app.clone().oneshot(req).await.unwrap();
    (resp.status(), resp)
}

async fn body_bytes(resp: Response<Body>) -> Vec<u8> {
    resp.into_body()
        .collect()
        .await
        .unwrap()
        .to_bytes()
        .to_vec()
}

async fn body_json(resp: Response<Body>) -> Value {
    serde_json::from_slice(&body_bytes(resp).await).unwrap()
}

fn get(uri: &str) -> Request<Body> {
    Request::get(uri).body(Body::empty()).unwrap()
}

fn post_json(uri: &str, body: Value) -> Request<Body> {
    Request::post(uri)
        .header(header::CONTENT_TYPE, "application/json")
        .body(Body::from(body.to_string()))
        .unwrap()
}

fn put_doc(id: &str, if_match: Option<&str>, doc: &GraphDocument) -> Request<Body> {
    let mut req =
        Request::put(format!("/api/graphs/{id}")).header(header::CONTENT_TYPE, "application/json");
    if let Some(m) = if_match {
        req = req.header(header::IF_MATCH, m);
    }
    req.body(Body::from(serde_json::to_vec(doc).unwrap()))
        .unwrap()
}

async fn create(app: &Router, title: &str) -> String {
    let (status, resp) = send(app, post_json("/api/graphs", json!({ "title": title }))).await;
    assert_eq!(status, StatusCode::CREATED);
    let body = body_json(resp).await;
    assert_eq!(body["revision"], 0);
    assert_eq!(body["title"], title);
    body["id"].as_str().unwrap().to_owned()
}

fn week_doc(id: &str) -> GraphDocument {
    let mut doc = one_week_fixture().to_document();
    doc.id = id.to_owned();
    doc
}

#[tokio::test]
async fn create_returns_fresh_hex_id() {
    let h = harness();
    let a = create(&h.app, "W1").await;
    let b = create(&h.app, "W1").await;
    assert_ne!(a, b);
    for id in [&a, &b] {
        assert_eq!(id.len(), 8);
        assert!(id
            .bytes()
            .all(|c| c.is_ascii_digit() || (b'a'..=b'f').contains(&c)));
        assert!(h.dir.path().join(format!("{id}.ess")).exists());
    }
}

#[tokio::test]
async fn lifecycle() {
    let h = harness();
    let id = create(&h.app, "W1").await;

    let (status, resp) = send(&h.app, put_doc(&id, Some("\"0\""), &week_doc(&id))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(resp.headers()[header::ETAG], "\"1\"");
    assert_eq!(body_json(resp).await, json!({ "revision": 1 }));

    let before = fs::read(h.dir.path().join(format!("{id}.ess"))).unwrap();
    let (status, resp) = send(&h.app, put_doc(&id, Some("\"0\""), &week_doc(&id))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body_json(resp).await["revision"], 1);
    assert_eq!(
        fs::read(h.dir.path().join(format!("{id}.ess"))).unwrap(),
        before
    );

    let (status, resp) = send(&h.app, get(&format!("/api/graphs/{id}.ess"))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(
        resp.headers()[header::CONTENT_TYPE],
        "text/plain; charset=utf-8"
    );
    let text = String::from_utf8(body_bytes(resp).await).unwrap();
    let parsed = parse(&text).unwrap();
    assert_eq!(parsed.revision, 1);
    assert!(essencery_core::structural_equal(
        &parsed,
        &one_week_fixture()
    ));

    let (status, resp) = send(&h.app, get("/api/graphs")).await;
    assert_eq!(status, StatusCode::OK);
    let index = body_json(resp).await;
    let list = index.as_array().unwrap();
    assert_eq!(list.len(), 1);
    assert_eq!(list[0]["title"], "One week of project work");
    assert_eq!(list[0]["revision"], 1);
    let modified = list[0]["modified"].as_str().unwrap();
    assert!(
        modified.ends_with('Z') && modified.len() == 20,
        "{modified}"
    );

    let del = Request::delete(format!("/api/graphs/{id}"))
        .body(Body::empty())
        .unwrap();
    assert_eq!(send(&h.app, del).await.0, StatusCode::NO_CONTENT);
    assert_eq!(
        send(&h.app, get(&format!("/api/graphs/{id}"))).await.0,
        StatusCode::NOT_FOUND
    );
    let del = Request::delete(format!("/api/graphs/{id}"))
        .body(Body::empty())
        .unwrap();
    assert_eq!(send(&h.app, del).await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn structured_get_round_trips() {
    let h = harness();
    let id = create(&h.app, "x").await;
    send(&h.app, put_doc(&id, Some("0"), &week_doc(&id))).await;
    let (status, resp) = send(&h.app, get(&format!("/api/graphs/{id}"))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(resp.headers()[header::ETAG], "\"1\"");
    let doc: GraphDocument = serde_json::from_slice(&body_bytes(resp).await).unwrap();
    assert_eq!(doc.revision, 1);
    assert_eq!(doc.nodes.len(), 12);
    assert_eq!(doc.relations.len(), 14);
}

#[tokio::test]
async fn put_requires_if_match() {
    let h = harness();
    let id = create(&h.app, "x").await;
    assert_eq!(
        send(&h.app, put_doc(&id, None, &week_doc(&id))).await.0,
        StatusCode::PRECONDITION_REQUIRED
    );
    assert_eq!(
        send(&h.app, put_doc(&id, Some("banana"), &week_doc(&id)))
            .await
            .0,
        StatusCode::BAD_REQUEST
    );
    assert_eq!(
        send(&h.app, put_doc(&id, Some("W/\"0\""), &week_doc(&id)))
            .await
            .0,
        StatusCode::OK
    );
}

#[tokio::test]
async fn put_to_unknown_graph_is_404() {
    let h = harness();
    let (status, _) = send(
        &h.app,
        put_doc("0badc0de", Some("0"), &week_doc("0badc0de")),
    )
    .await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert!(!h.dir.path().join("0badc0de.ess").exists());
}

#[tokio::test]
async fn invalid_graph_is_422_with_details() {
    let h = harness();
    let id = create(&h.app, "x").await;
    let mut doc = week_doc(&id);
    let mut dup = doc.nodes[0].clone();
    dup.name = "Another".into();
    doc.nodes.push(dup);
    doc.relations[0].target = "n99".into();
    let (status, resp) = send(&h.app, put_doc(&id, Some("0"), &doc)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let body = body_json(resp).await;
    let codes: Vec<&str> = body["diagnostics"]
        .as_array()
        .unwrap()
        .iter()
        .map(|d| d["code"].as_str().unwrap())
        .collect();
    assert!(codes.contains(&"E001") && codes.contains(&"E002"), "{body}");
    assert!(!body["violations"].as_array().unwrap().is_empty());
    // Nothing was written.
    let stored =
        parse(&fs::read_to_string(h.dir.path().join(format!("{id}.ess"))).unwrap()).unwrap();
    assert_eq!(stored.revision, 0);
}

#[tokio::test]
async fn mismatched_document_id_is_rejected() {
    let h = harness();
    let id = create(&h.app, "x").await;
    let (status, _) = send(&h.app, put_doc(&id, Some("0"), &week_doc("someone"))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn malformed_json_is_400() {
    let h = harness();
    let id = create(&h.app, "x").await;
    let req = Request::put(format!("/api/graphs/{id}"))
        .header(header::IF_MATCH, "0")
        .body(Body::from("{ not json"))
        .unwrap();
    assert_eq!(send(&h.app, req).await.0, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn svg_and_kernel_endpoints() {
    let h = harness();
    let id = create(&h.app, "x").await;
    send(&h.app, put_doc(&id, Some("0"), &week_doc(&id))).await;
    let (status, resp) = send(&h.app, get(&format!("/api/graphs/{id}/svg"))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(resp.headers()[header::CONTENT_TYPE], "image/svg+xml");
    let svg = String::from_utf8(body_bytes(resp).await).unwrap();
    assert_eq!(svg.matches("<g class=\"node ").count(), 12);

    let (status, resp) = send(&h.app, get("/api/kernel")).await;
    assert_eq!(status, StatusCode::OK);
    let kernel = body_json(resp).await;
    assert_eq!(kernel["alphas"].as_array().unwrap().len(), 7);
    assert_eq!(kernel["areas"].as_array().unwrap().len(), 3);
}

#[tokio::test]
async fn unparseable_files_are_not_listed() {
    let h = harness();
    create(&h.app, "good").await;
    fs::write(h.dir.path().join("deadbeef.ess"), "graph \"half").unwrap();
    let (_, resp) = send(&h.app, get("/api/graphs")).await;
    let list = body_json(resp).await;
    assert_eq!(list.as_array().unwrap().len(), 1);
    assert_eq!(
        send(&h.app, get("/api/graphs/deadbeef")).await.0,
        StatusCode::INTERNAL_SERVER_ERROR
    );
}

#[tokio::test]
async fn path_ids_cannot_escape_the_data_dir() {
    let h = harness();
    assert_eq!(
        send(&h.app, get("/api/graphs/..%2Fsecret")).await.0,
        StatusCode::NOT_FOUND
    );
}

#[tokio::test]
async fn racing_saves_on_one_revision_admit_exactly_one() {
    let h = harness();
    let id = create(&h.app, "race").await;
    let mut tasks = Vec::new();
    for _ in 0..8 {
        let app = h.app.clone();
        let req = put_doc(&id, Some("0"), &week_doc(&id));
        tasks.push(tokio::spawn(async move {
            app.oneshot(req).await.unwrap().status()
        }));
    }
    let mut ok = 0;
    for t in tasks {
        match t.await.unwrap() {
            StatusCode::OK => ok += 1,
            StatusCode::CONFLICT => {}
            other => panic!("unexpected {other}"),
        }
    }
    assert_eq!(ok, 1);
}

#[tokio::test]
async fn revisions_increase_by_one() {
    let h = harness();
    let id = create(&h.app, "x").await;
    for rev in 0..5u64 {
        let (status, resp) =
            send(&h.app, put_doc(&id, Some(&rev.to_string()), &week_doc(&id))).await;
        assert_eq!(status, StatusCode::OK);
        assert_eq!(body_json(resp).await["revision"], rev + 1);
    }
}

#[tokio::test]
async fn placeholder_and_static_ui() {
    let h = harness();
    let (status, resp) = send(&h.app, get("/")).await;
    assert_eq!(status, StatusCode::OK);
    assert!(String::from_utf8(body_bytes(resp).await)
        .unwrap()
        .contains("essencery"));

    let ui = tempfile::tempdir().unwrap();
    fs::create_dir(ui.path().join("assets")).unwrap();
    fs::write(ui.path().join("index.html"), "<html>editor</html>").unwrap();
    fs::write(ui.path().join("assets/app.js"), "console.log(1)").unwrap();
    let store = Store::open(h.dir.path()).unwrap();
    let app = router(
        AppState::new(store, load_standard_kernel().unwrap()),
        Some(ui.path().to_owned()),
    );
    let (_, resp) = send(&app, get("/")).await;
    assert_eq!(body_bytes(resp).await, b"<html>editor</html>");
    let (status, resp) = send(&app, get("/assets/app.js")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body_bytes(resp).await, b"console.log(1)");
    assert_eq!(
        send(&app, get("/assets/missing.js")).await.0,
        StatusCode::NOT_FOUND
    );
}

#[tokio::test]
async fn startup_fails_on_busy_port() {
    let dir = tempfile::tempdir().unwrap();
    let first = Server::bind(&ServeConfig::new(dir.path(), 0))
        .await
        .unwrap();
    let port = first.local_addr().unwrap().port();
    let err = Server::bind(&ServeConfig::new(dir.path(), port))
        .await
        .err()
        .unwrap();
    assert!(matches!(err, ServeError::Bind { .. }), "{err}");
}

#[tokio::test]
async fn startup_fails_on_missing_data_dir() {
    let err = Server::bind(&ServeConfig::new("/nonexistent/essencery", 0))
        .await
        .err()
        .unwrap();
    assert!(err.to_string().contains("/nonexistent/essencery"), "{err}");
}
