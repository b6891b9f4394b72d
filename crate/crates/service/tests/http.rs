use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use gradecast::cart::{self, to_dot};
use gradecast::eval::{evaluate, train_test_split};
use gradecast::ingest::{load_csv, CleanOptions, Schema};
use gradecast::synth::BUNDLED_CSV;
use gradecast::whatif::report;
use gradecast::{HyperParams, SplitConfig, Tree, WhatIfConfig};
use gradecast_service::{router, AppState, Store};

const HEADER: &str = "student_id,class_record_id,att_prelim,cp_prelim,exam_prelim,att_midterm,cp_midterm,exam_midterm,remark";

struct Fixture {
    _dir: tempfile::TempDir,
    app: Router,
    state: AppState,
}

fn fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let state = AppState::new(Store::open(dir.path()).unwrap());
    Fixture {
        app: router(state.clone()),
        state,
        _dir: dir,
    }
}

async fn send(
    app: &Router,
    method: &str,
    uri: &str,
    body: impl Into<Body>,
) -> (StatusCode, Vec<u8>) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .body(body.into())
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    (
        status,
        resp.into_body()
            .collect()
            .await
            .unwrap()
            .to_bytes()
            .to_vec(),
    )
}

async fn send_json(app: &Router, method: &str, uri: &str, body: Value) -> (StatusCode, Value) {
    let (status, bytes) = send(app, method, uri, body.to_string()).await;
    (status, serde_json::from_slice(&bytes).unwrap())
}

async fn upload(app: &Router, csv: &str) -> String {
    let (status, bytes) = send(app, "POST", "/datasets", csv.to_string()).await;
    assert_eq!(
        status,
        StatusCode::CREATED,
        "{}",
        String::from_utf8_lossy(&bytes)
    );
    let v: Value = serde_json::from_slice(&bytes).unwrap();
    v["id"].as_str().unwrap().to_string()
}

async fn train(app: &Router, body: Value) -> String {
    let (status, v) = send_json(app, "POST", "/models", body).await;
    assert_eq!(status, StatusCode::CREATED, "{v}");
    v["id"].as_str().unwrap().to_string()
}

fn local_tree(params: HyperParams) -> (Tree, gradecast::Dataset) {
    let (data, _) = load_csv::<f64>(
        BUNDLED_CSV,
        &Schema::standard(),
        "bundled",
        CleanOptions {
            range_validation: true,
        },
    )
    .unwrap();
    let (train, test) = train_test_split(&data, &SplitConfig::default()).unwrap();
    (Tree::fit_dataset(&train, params).unwrap(), test)
}

#[tokio::test]
async fn upload_reports_cleaning() {
    let f = fixture();
    let (status, v) = {
        let (s, b) = send(&f.app, "POST", "/datasets?source=bundled", BUNDLED_CSV).await;
        (s, serde_json::from_slice::<Value>(&b).unwrap())
    };
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(v["report"]["output_rows"], 82);
    assert_eq!(v["report"]["source"], "bundled");
    assert_eq!(
        v["report"]["dropped_columns"],
        json!(["student_id", "class_record_id"])
    );
    let again = upload(&f.app, BUNDLED_CSV).await;
    assert_ne!(again, v["id"].as_str().unwrap());
    assert_eq!(f.state.store().dataset_ids().len(), 2);
}

#[tokio::test]
async fn upload_errors_carry_row_numbers() {
    let f = fixture();
    let csv = format!("{HEADER}\na,b,1,2,3,4,5,6,PASSED\nc,d,1,2,3,4,5,6,INC\n");
    let (status, b) = send(&f.app, "POST", "/datasets", csv).await;
    let v: Value = serde_json::from_slice(&b).unwrap();
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["code"], "label_mapping");
    assert_eq!(v["detail"]["row"], 2);
    assert!(v["message"].as_str().unwrap().contains("INC"));

    let (status, b) = send(&f.app, "POST", "/datasets", "student_id,remark\n1,PASSED\n").await;
    let v: Value = serde_json::from_slice(&b).unwrap();
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["code"], "schema_error");

    let csv = format!("{HEADER}\na,b,1,2,3,4,5,160,PASSED\n");
    let (status, _) = send(&f.app, "POST", "/datasets", csv.clone()).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let (status, _) = send(&f.app, "POST", "/datasets?range_check=false", csv).await;
    assert_eq!(status, StatusCode::CREATED);
    let (status, b) = send(&f.app, "POST", "/datasets?range_check=maybe", BUNDLED_CSV).await;
    assert_eq!(
        status,
        StatusCode::BAD_REQUEST,
        "{}",
        String::from_utf8_lossy(&b)
    );
    assert!(f.state.store().dataset_ids().len() == 1);
}

#[tokio::test]
async fn training_validates_and_is_deterministic() {
    let f = fixture();
    let ds = upload(&f.app, BUNDLED_CSV).await;

    let (status, v) = send_json(&f.app, "POST", "/models", json!({ "dataset_id": ds })).await;
    assert_eq!(status, StatusCode::CREATED);
    let cm = &v["evaluation"]["matrix"];
    let total: u64 = ["tn", "fp", "fn", "tp"]
        .iter()
        .map(|k| cm[k].as_u64().unwrap())
        .sum();
    assert_eq!(total, 21);
    assert_eq!(v["evaluation"]["train_size"], 61);

    let (status, v) = send_json(
        &f.app,
        "POST",
        "/models",
        json!({ "dataset_id": ds, "split": { "test_fraction": 1.5 } }),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(v["code"], "validation");
    let (status, v) = send_json(
        &f.app,
        "POST",
        "/models",
        json!({ "dataset_id": ds, "params": { "min_samples_split": 1 } }),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST, "{v}");
    let (status, v) = send_json(&f.app, "POST", "/models", json!({ "dataset_id": "nope" })).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(v["code"], "not_found");
    let (status, b) = send(&f.app, "POST", "/models", "{not json").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(
        serde_json::from_slice::<Value>(&b).unwrap()["code"],
        "invalid_json"
    );

    let body = json!({ "dataset_id": ds, "params": { "criterion": "entropy", "max_depth": 3 }, "split": { "seed": 7 } });
    let a = train(&f.app, body.clone()).await;
    let b = train(&f.app, body).await;
    assert_ne!(a, b);
    let (_, ta) = send(
        &f.app,
        "GET",
        &format!("/models/{a}/export?format=model"),
        Body::empty(),
    )
    .await;
    let (_, tb) = send(
        &f.app,
        "GET",
        &format!("/models/{b}/export?format=model"),
        Body::empty(),
    )
    .await;
    assert_eq!(ta, tb);
}

#[tokio::test]
async fn endpoints_match_library_calls() {
    let f = fixture();
    let ds = upload(&f.app, BUNDLED_CSV).await;
    let id = train(&f.app, json!({ "dataset_id": ds })).await;
    let (tree, test) = local_tree(HyperParams::default());

    let (status, text) = send(
        &f.app,
        "GET",
        &format!("/models/{id}/export?format=model"),
        Body::empty(),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    let text = String::from_utf8(text).unwrap();
    assert_eq!(text, cart::serialize(&tree));
    let stored: Tree = cart::deserialize(&text).unwrap();
    assert_eq!(stored, tree);

    let (status, dot) = send(
        &f.app,
        "GET",
        &format!("/models/{id}/export?format=dot"),
        Body::empty(),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(String::from_utf8(dot).unwrap(), to_dot(&tree));

    let (_, view) = send_json(&f.app, "GET", &format!("/models/{id}"), Value::Null).await;
    let expected_eval = evaluate(&tree, 61, &test).unwrap();
    assert_eq!(
        view["evaluation"],
        serde_json::to_value(&expected_eval).unwrap()
    );
    assert_eq!(view["tree"], serde_json::from_str::<Value>(&text).unwrap());

    for r in &test.records {
        let x = r.features.as_slice().to_vec();
        let (status, got) = send_json(
            &f.app,
            "POST",
            &format!("/models/{id}/predict"),
            json!({ "features": x }),
        )
        .await;
        assert_eq!(status, StatusCode::OK);
        assert_eq!(
            got,
            serde_json::to_value(tree.predict(&x).unwrap()).unwrap()
        );

        let cfg = WhatIfConfig {
            depth: 2,
            step: 2.0,
            ..Default::default()
        };
        let (status, got) = send_json(
            &f.app,
            "POST",
            &format!("/models/{id}/whatif"),
            json!({ "features": x, "config": cfg }),
        )
        .await;
        assert_eq!(status, StatusCode::OK, "{got}");
        let local = report(&tree, tree.feature_names(), &x, &cfg).unwrap();
        assert_eq!(got, serde_json::to_value(&local).unwrap());
    }

    let (_, list) = send_json(&f.app, "GET", "/models", Value::Null).await;
    assert_eq!(list.as_array().unwrap().len(), 1);
    assert_eq!(list[0]["id"], id.as_str());
    assert_eq!(list[0]["accuracy"], expected_eval.accuracy);
}

#[tokio::test]
async fn request_errors() {
    let f = fixture();
    let ds = upload(&f.app, BUNDLED_CSV).await;
    let id = train(&f.app, json!({ "dataset_id": ds })).await;

    let (status, v) = send_json(
        &f.app,
        "POST",
        &format!("/models/{id}/predict"),
        json!({ "features": [1, 2, 3, 4, 5] }),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(v["code"], "validation");
    assert_eq!(v["detail"]["found"], 5);

    let (status, _) = send_json(
        &f.app,
        "POST",
        "/models/missing/predict",
        json!({ "features": [1, 2, 3, 4, 5, 6] }),
    )
    .await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let (status, v) = send_json(
        &f.app,
        "POST",
        &format!("/models/{id}/whatif"),
        json!({ "features": [90, 90, 90, 90, 90, 90], "config": { "caps": [50, 50, 50, 50, 50, 50] } }),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(v["message"]
        .as_str()
        .unwrap()
        .contains("below its current value"));

    let (status, b) = send(
        &f.app,
        "GET",
        &format!("/models/{id}/export?format=png"),
        Body::empty(),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(
        serde_json::from_slice::<Value>(&b).unwrap()["code"],
        "unsupported_format"
    );
    let (status, _) = send(
        &f.app,
        "GET",
        &format!("/models/{id}/export"),
        Body::empty(),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = send(&f.app, "GET", "/nowhere", Body::empty()).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn degenerate_and_depth_one_models() {
    let f = fixture();
    let mut all_pass = HEADER.to_string();
    for i in 0..8 {
        all_pass.push_str(&format!("\ns{i},c,{i},50,50,50,50,50,PASSED"));
    }
    let ds = upload(&f.app, &all_pass).await;
    let id = train(&f.app, json!({ "dataset_id": ds })).await;
    let (_, p) = send_json(
        &f.app,
        "POST",
        &format!("/models/{id}/predict"),
        json!({ "features": [0, 0, 0, 0, 0, 0] }),
    )
    .await;
    assert_eq!(p["pass_probability"], 1.0);
    assert_eq!(p["label"], 1);
    let (_, w) = send_json(
        &f.app,
        "POST",
        &format!("/models/{id}/whatif"),
        json!({ "features": [0, 0, 0, 0, 0, 0] }),
    )
    .await;
    assert_eq!(w["already_pass"], true);
    assert_eq!(w["suggestions"][0]["total"], 0.0);

    // Pass iff exam_midterm > 60.
    let mut exam = HEADER.to_string();
    for i in 0..12 {
        let score = 40 + i * 5;
        let remark = if score > 60 { "PASSED" } else { "FAILED" };
        exam.push_str(&format!("\ns{i},c,80,80,80,80,80,{score},{remark}"));
    }
    let ds = upload(&f.app, &exam).await;
    let id = train(&f.app, json!({ "dataset_id": ds, "params": { "max_depth": 1 }, "split": { "test_fraction": 0.2 } })).await;
    let (_, dot) = send(
        &f.app,
        "GET",
        &format!("/models/{id}/export?format=dot"),
        Body::empty(),
    )
    .await;
    let dot = String::from_utf8(dot).unwrap();
    assert_eq!(dot.matches("[label=").count(), 3);
    assert_eq!(dot.matches("->").count(), 2);
    let (_, w) = send_json(
        &f.app,
        "POST",
        &format!("/models/{id}/whatif"),
        json!({ "features": [80, 80, 80, 80, 80, 45] }),
    )
    .await;
    let suggestions = w["suggestions"].as_array().unwrap();
    assert_eq!(suggestions.len(), 1);
    assert_eq!(suggestions[0]["changes"][0]["name"], "exam_midterm");
}

#[tokio::test]
async fn store_reopens_and_skips_damage() {
    let dir = tempfile::tempdir().unwrap();
    let (ds, model) = {
        let state = AppState::new(Store::open(dir.path()).unwrap());
        let app = router(state);
        let ds = upload(&app, BUNDLED_CSV).await;
        let model = train(&app, json!({ "dataset_id": ds })).await;
        (ds, model)
    };
    std::fs::write(dir.path().join("models/half.json.tmp"), "{").unwrap();
    std::fs::write(
        dir.path().join("models/broken.json"),
        "{\"id\": \"broken\"}",
    )
    .unwrap();
    std::fs::write(dir.path().join("datasets/bad.csv"), "nothing here").unwrap();

    let store = Store::open(dir.path()).unwrap();
    assert_eq!(store.dataset_ids(), vec![ds.clone()]);
    assert_eq!(store.model_ids(), vec![model.clone()]);
    assert!(!dir.path().join("models/half.json.tmp").exists());

    let app = router(AppState::new(store));
    let uri = format!("/models/{model}/predict");
    let body = json!({ "features": [90, 85, 80, 90, 85, 80] });
    let first = send_json(&app, "POST", &uri, body.clone()).await;
    let second = send_json(&app, "POST", &uri, body).await;
    assert_eq!(first.0, StatusCode::OK);
    assert_eq!(first, second);
    let id = train(&app, json!({ "dataset_id": ds })).await;
    assert_ne!(id, model);
}
