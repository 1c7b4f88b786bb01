use std::fs;
use std::path::Path;
use std::sync::Arc;

use axum::body::{to_bytes, Body};
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use serde_json::{json, Value};
use tower::ServiceExt;

use pupilbench::eval::DatasetManifest;
use pupilbench::GrayImage;
use pupilbench_cli::server::{router, AppState};

fn image_dir(n: usize) -> tempfile::TempDir {
    let tmp = tempfile::tempdir().unwrap();
    for i in 0..n {
        let img = GrayImage::filled(64, 48, (i * 10) as u8);
        fs::write(tmp.path().join(format!("img_{i}.png")), img.to_png()).unwrap();
    }
    fs::write(tmp.path().join("notes.txt"), b"not an image").unwrap();
    tmp
}

fn app(dir: &Path) -> Router {
    router(Arc::new(AppState::open(dir, None, None).unwrap()))
}

async fn call(
    app: &Router,
    method: Method,
    uri: &str,
    body: Option<Value>,
) -> (StatusCode, Vec<u8>) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(v) => req
            .header("content-type", "application/json")
            .body(Body::from(v.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    (
        status,
        to_bytes(resp.into_body(), usize::MAX)
            .await
            .unwrap()
            .to_vec(),
    )
}

fn parse(bytes: &[u8]) -> Value {
    serde_json::from_slice(bytes).unwrap()
}

#[tokio::test]
async fn lists_images_and_serves_bytes() {
    let dir = image_dir(3);
    let app = app(dir.path());
    let (status, body) = call(&app, Method::GET, "/api/images", None).await;
    assert_eq!(status, StatusCode::OK);
    let list = parse(&body);
    assert_eq!(list.as_array().unwrap().len(), 3);
    assert_eq!(
        list[1],
        json!({"id": 1, "path": "img_1.png", "category": "clear", "annotated": false})
    );

    let (status, bytes) = call(&app, Method::GET, "/api/image/2", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(bytes, fs::read(dir.path().join("img_2.png")).unwrap());
    assert_eq!(
        call(&app, Method::GET, "/api/image/9", None).await.0,
        StatusCode::NOT_FOUND
    );
}

#[tokio::test]
async fn put_then_get_round_trips() {
    let dir = image_dir(2);
    let app = app(dir.path());
    assert_eq!(
        call(&app, Method::GET, "/api/annotation/0", None).await.0,
        StatusCode::NOT_FOUND
    );
    let ann = json!({"cx": 31.5, "cy": 20.25, "r": 9.0, "annotator": "specialist", "timestamp": 1700000000});
    let (status, body) = call(&app, Method::PUT, "/api/annotation/0", Some(ann.clone())).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(parse(&body), ann);
    let (status, body) = call(&app, Method::GET, "/api/annotation/0", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(parse(&body), ann);
    let (_, list) = call(&app, Method::GET, "/api/images", None).await;
    assert_eq!(parse(&list)[0]["annotated"], true);
    assert_eq!(parse(&list)[1]["annotated"], false);
}

#[tokio::test]
async fn invalid_annotations_are_rejected() {
    let dir = image_dir(1);
    let app = app(dir.path());
    for bad in [
        json!({"cx": 10.0, "cy": 10.0, "r": -3.0}),
        json!({"cx": 10.0, "cy": 10.0, "r": 0.0}),
        json!({"cx": 64.0, "cy": 10.0, "r": 5.0}),
        json!({"cx": 10.0, "cy": -0.5, "r": 5.0}),
        json!({"cx": 10.0, "r": 5.0}),
    ] {
        let (status, _) = call(&app, Method::PUT, "/api/annotation/0", Some(bad.clone())).await;
        assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{bad}");
    }
    assert!(!dir.path().join("manifest.json").exists());
    let missing = call(
        &app,
        Method::PUT,
        "/api/annotation/5",
        Some(json!({"cx": 1.0, "cy": 1.0, "r": 1.0})),
    )
    .await;
    assert_eq!(missing.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn annotations_survive_a_restart() {
    let dir = image_dir(3);
    let ann = json!({"cx": 12.0, "cy": 13.0, "r": 4.5, "annotator": "a", "timestamp": 5});
    {
        let app = app(dir.path());
        let (status, _) = call(&app, Method::PUT, "/api/annotation/2", Some(ann.clone())).await;
        assert_eq!(status, StatusCode::OK);
    }
    // the persisted file is a valid manifest on its own
    let manifest = DatasetManifest::load(&dir.path().join("manifest.json")).unwrap();
    assert_eq!(manifest.images.len(), 3);
    assert!(manifest.images[2].annotation.is_some());
    assert!(fs::read_dir(dir.path()).unwrap().all(|e| !e
        .unwrap()
        .file_name()
        .to_string_lossy()
        .ends_with(".tmp")));

    let restarted = app(dir.path());
    let (status, body) = call(&restarted, Method::GET, "/api/annotation/2", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(parse(&body), ann);
}

#[tokio::test]
async fn concurrent_puts_all_persist() {
    let dir = image_dir(12);
    let app = app(dir.path());
    let tasks: Vec<_> = (0..12)
        .map(|i| {
            let app = app.clone();
            tokio::spawn(async move {
                let ann = json!({"cx": 5.0 + i as f64, "cy": 6.0, "r": 2.0, "annotator": "t", "timestamp": i});
                call(&app, Method::PUT, &format!("/api/annotation/{i}"), Some(ann)).await.0
            })
        })
        .collect();
    for t in tasks {
        assert_eq!(t.await.unwrap(), StatusCode::OK);
    }
    let manifest = DatasetManifest::load(&dir.path().join("manifest.json")).unwrap();
    for (i, e) in manifest.images.iter().enumerate() {
        assert_eq!(e.annotation.as_ref().unwrap().cx, 5.0 + i as f64);
    }
}

#[tokio::test]
async fn serves_static_bundle_without_escaping_it() {
    let dir = image_dir(1);
    let bundle = tempfile::tempdir().unwrap();
    fs::write(bundle.path().join("index.html"), "<p>ui</p>").unwrap();
    fs::write(bundle.path().join("app.js"), "let x = 1;").unwrap();
    let app = router(Arc::new(
        AppState::open(dir.path(), None, Some(bundle.path().to_path_buf())).unwrap(),
    ));
    let (status, body) = call(&app, Method::GET, "/", None).await;
    assert_eq!(
        (status, body.as_slice()),
        (StatusCode::OK, b"<p>ui</p>".as_slice())
    );
    assert_eq!(
        call(&app, Method::GET, "/app.js", None).await.0,
        StatusCode::OK
    );
    assert_eq!(
        call(&app, Method::GET, "/../img_0.png", None).await.0,
        StatusCode::NOT_FOUND
    );
    assert_eq!(
        call(&app, Method::GET, "/%2e%2e/img_0.png", None).await.0,
        StatusCode::NOT_FOUND
    );

    let plain = crate::app(dir.path());
    let (status, body) = call(&plain, Method::GET, "/", None).await;
    assert_eq!(status, StatusCode::OK);
    assert!(String::from_utf8(body).unwrap().contains("/api/images"));
}

#[tokio::test]
async fn existing_manifest_is_used() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("c");
    pupilbench::eval::write_corpus(&corpus, 3, 2, &[1, 1, 0, 0]).unwrap();
    let app = app(&corpus);
    let (_, list) = call(&app, Method::GET, "/api/images", None).await;
    let list = parse(&list);
    assert_eq!(list.as_array().unwrap().len(), 3);
    assert!(list
        .as_array()
        .unwrap()
        .iter()
        .all(|e| e["annotated"] == true));
}

#[test]
fn binary_reports_startup_failures() {
    let bin = env!("CARGO_BIN_EXE_pupilbench");
    let missing = std::process::Command::new(bin)
        .args(["annotate-serve", "/nonexistent/dir"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(1));

    let taken = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let port = taken.local_addr().unwrap().port().to_string();
    let dir = image_dir(1);
    let busy = std::process::Command::new(bin)
        .args([
            "annotate-serve",
            dir.path().to_str().unwrap(),
            "--port",
            &port,
        ])
        .output()
        .unwrap();
    assert_eq!(busy.status.code(), Some(1));
}
