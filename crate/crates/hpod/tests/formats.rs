mod common;

use std::fs;
use std::path::Path;

use hpod::error::{CliError, ExitCode};
use hpod::io::{load_corpus, load_dataset, load_space};
use hpod::model;
use hpod_core::{DetectorSpec, HpSpace};

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn missing_cells_drop_rows() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "d.csv", "a,b,outlier\n1,2,0\n,3,0\n4,?,1\n5,NaN,0\n6,7,1\n8,9,\n");
    let l = load_dataset(&p, "outlier", true).unwrap();
    assert_eq!(l.dropped_rows, 4);
    assert_eq!((l.dataset.n(), l.dataset.d()), (2, 2));
    assert_eq!(l.dataset.y.as_deref(), Some(&[0u8, 1][..]));
    assert_eq!(l.dataset.name, "d");
}

#[test]
fn label_column_is_optional_unless_required() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "u.csv", "a,b\n1,2\n3,4\n5,6\n");
    let l = load_dataset(&p, "outlier", false).unwrap();
    assert!(l.dataset.y.is_none());
    assert_eq!(load_dataset(&p, "outlier", true).unwrap_err().exit_code(), ExitCode::Data);
    let q = write(dir.path(), "v.csv", "a,outlier\n1,0\n2,2\n");
    assert!(matches!(load_dataset(&q, "outlier", true), Err(CliError::Data { .. })));
    let r = write(dir.path(), "w.csv", "a,b\n1,2\n3\n");
    assert!(matches!(load_dataset(&r, "outlier", false), Err(CliError::Data { .. })));
}

#[test]
fn corpus_files_load_in_name_order() {
    let c = load_corpus(&common::minicorpus(), "outlier").unwrap();
    let names: Vec<&str> = c.datasets().iter().map(|d| d.name.as_str()).collect();
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(names, sorted);
    assert_eq!(c.len(), 10);
    assert!(c.datasets().iter().all(|d| d.n() <= 2000 && d.has_both_classes()));
}

#[test]
fn shipped_spaces_match_the_built_in_ones() {
    let dir = common::repo_root().join("crates/hpod/spaces");
    assert_eq!(load_space(&dir.join("lof.json")).unwrap(), HpSpace::lof());
    assert_eq!(load_space(&dir.join("iforest.json")).unwrap(), HpSpace::iforest());
    assert_eq!(HpSpace::lof().grid().unwrap().len(), 200);
    assert_eq!(HpSpace::iforest().grid().unwrap().len(), 288);
}

#[test]
fn invalid_space_manifest_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        dir.path(),
        "s.json",
        r#"{"algorithm":"lof","domains":[{"name":"n_neighbors","kind":"integer","lo":5,"hi":1,"grid":[3]}]}"#,
    );
    assert!(load_space(&p).is_err());
}

fn small_model() -> hpod_core::MetaModel {
    let dir = common::minicorpus();
    let mut ds = Vec::new();
    for n in ["iris", "wine", "glass"] {
        ds.push(load_dataset(&dir.join(format!("{n}.csv")), "outlier", true).unwrap().dataset);
    }
    let corpus = hpod_core::Corpus::new(ds).unwrap();
    let spec = DetectorSpec::for_algorithm(hpod_core::Algorithm::Lof);
    let grid = spec.space.grid().unwrap();
    hpod::bench::meta_train(&corpus, &spec, &grid, 4).unwrap()
}

#[test]
fn model_document_round_trips() {
    let meta = small_model();
    let text = model::to_json(&meta);
    let back = model::from_json(&text, Path::new("m.json")).unwrap();
    assert_eq!(back, meta);
    assert_eq!(model::to_json(&back), text);
}

#[test]
fn parallel_training_matches_the_sequential_path() {
    let dir = common::minicorpus();
    let ds: Vec<_> = ["iris", "wine", "glass"]
        .iter()
        .map(|n| load_dataset(&dir.join(format!("{n}.csv")), "outlier", true).unwrap().dataset)
        .collect();
    let corpus = hpod_core::Corpus::new(ds).unwrap();
    let spec = DetectorSpec::for_algorithm(hpod_core::Algorithm::Lof);
    let grid = spec.space.grid().unwrap();
    let seq = hpod_core::pipeline::offline_meta_train(&corpus, &spec, &grid, 4).unwrap();
    assert_eq!(seq, small_model());
}

#[test]
fn tampered_documents_are_refused() {
    let meta = small_model();
    let doc: serde_json::Value = serde_json::from_str(&model::to_json(&meta)).unwrap();

    let mut v = doc.clone();
    v["manifest"]["grid_size"] = 7.into();
    let err = model::from_json(&v.to_string(), Path::new("m.json")).unwrap_err();
    assert_eq!(err.exit_code(), ExitCode::Data);

    let mut v = doc.clone();
    v["manifest"]["format_version"] = 2.into();
    let err = model::from_json(&v.to_string(), Path::new("m.json")).unwrap_err();
    assert_eq!(err.exit_code(), ExitCode::Version);

    let mut v = doc.clone();
    v["model"]["meta_features"][0]["schema"] = "mf-v0".into();
    let err = model::from_json(&v.to_string(), Path::new("m.json")).unwrap_err();
    assert_eq!(err.exit_code(), ExitCode::Version);

    // a newer tool version with the same format still loads
    let mut v = doc;
    v["manifest"]["tool_version"] = "9.9.9".into();
    assert_eq!(model::from_json(&v.to_string(), Path::new("m.json")).unwrap(), meta);
}
