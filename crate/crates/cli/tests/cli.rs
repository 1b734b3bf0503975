use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use gmdl_core::query::{lineage, Direction};
use gmdl_core::store::Store;
use gmdl_core::EntityId;
use serde_json::Value;
use tempfile::TempDir;

fn gmdl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gmdl"))
        .args(args)
        .env_remove("GMDL_STORE")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = gmdl(args);
    assert_eq!(out.status.code(), Some(0), "{args:?}: {}", stderr(&out));
    stdout(&out).trim_end().to_string()
}

fn json(args: &[&str]) -> Value {
    let mut full = args.to_vec();
    full.push("--json");
    let out = gmdl(&full);
    serde_json::from_str(&stdout(&out)).unwrap_or_else(|e| panic!("{args:?}: {e}: {}", stdout(&out)))
}

fn store() -> (TempDir, String) {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("lake").to_str().unwrap().to_string();
    ok(&["init", &dir]);
    (tmp, dir)
}

#[test]
fn init_then_validate() {
    let (_tmp, dir) = store();
    assert_eq!(ok(&["validate", &dir]), "ok");
    let report = json(&["validate", &dir]);
    assert_eq!(report["ok"], true);
    assert_eq!(report["violations"], Value::Array(vec![]));
}

#[test]
fn init_refuses_non_empty_directory() {
    let (_tmp, dir) = store();
    let out = gmdl(&["init", &dir]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("error[STORE_NOT_EMPTY]"));
}

fn write(path: &Path, text: &str) {
    fs::create_dir_all(path.parent().unwrap()).unwrap();
    fs::write(path, text).unwrap();
}

#[test]
fn zone_ingest_then_members_query() {
    let (tmp, dir) = store();
    let lake = tmp.path().join("files");
    write(&lake.join("raw/a.csv"), "x,y\n1,2\n");
    write(&lake.join("raw/b.csv"), "x,y\n3,4\n");
    write(&lake.join("clean/c.txt"), "hello\n");
    let rules = tmp.path().join("rules.json");
    fs::write(&rules, r#"{"zones": {"raw": "raw", "clean": "processed"}, "types": true}"#).unwrap();

    let summary = json(&["ingest", &dir, lake.to_str().unwrap(), "--rules", rules.to_str().unwrap()]);
    assert_eq!(summary["files"], 3);

    let listed = ok(&["query", &dir, r#"members of "zone"/"raw""#]);
    let ids: Vec<&str> = listed.lines().collect();
    assert_eq!(ids.len(), 2);
    let mut sorted = ids.clone();
    sorted.sort();
    assert_eq!(ids, sorted);

    let s = Store::open(&dir).unwrap();
    let cat = s.view();
    let mut raw_paths: Vec<String> = ids
        .iter()
        .map(|id| {
            let e = cat.entity(id.parse().unwrap()).unwrap();
            format!("{:?}", e.properties["path"])
        })
        .collect();
    raw_paths.sort();
    assert!(raw_paths[0].contains("raw/a.csv") && raw_paths[1].contains("raw/b.csv"));
}

#[test]
fn lineage_json_on_three_chain() {
    let (_tmp, dir) = store();
    let e: Vec<String> = (0..3).map(|i| ok(&["add-entity", &dir, "--name", &format!("e{i}")])).collect();
    ok(&["add-process", &dir, "--name", "p1", "--input", &e[0], "--output", &e[1]]);
    ok(&["add-process", &dir, "--name", "p2", "--input", &e[1], "--output", &e[2]]);

    let graph = json(&["lineage", &dir, &e[0], "--downstream"]);
    assert_eq!(graph["nodes"].as_array().unwrap().len(), 3);
    assert_eq!(graph["hyperedges"].as_array().unwrap().len(), 2);

    let cat = Store::open(&dir).unwrap().view();
    let root: EntityId = e[0].parse().unwrap();
    let engine = lineage(&cat, root, Direction::Downstream, None).unwrap();
    assert_eq!(graph, serde_json::to_value(&engine).unwrap());

    let shallow = json(&["lineage", &dir, &e[2], "--upstream", "--depth", "1"]);
    assert_eq!(shallow["nodes"].as_array().unwrap().len(), 2);
}

#[test]
fn exit_codes_by_error_class() {
    let (tmp, dir) = store();
    let missing = tmp.path().join("nope");

    let usage = gmdl(&["frobnicate"]);
    assert_eq!(usage.status.code(), Some(2));
    let no_store = gmdl(&["validate"]);
    assert_eq!(no_store.status.code(), Some(2));
    assert!(stderr(&no_store).starts_with("error[USAGE]"));
    let bad_id = gmdl(&["delete", &dir, "xyz"]);
    assert_eq!(bad_id.status.code(), Some(2));

    let cases: [(&[&str], &str); 4] = [
        (&["validate", missing.to_str().unwrap()], "STORE_MISSING"),
        (&["query", &dir, "entities where"], "SYNTAX"),
        (&["delete", &dir, "0123456789abcdef0123456789abcdef"], "NOT_FOUND"),
        (&["query", &dir, r#"members of "zone"/"raw""#], "UNKNOWN_GROUPING"),
    ];
    for (args, code) in cases {
        let out = gmdl(args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(stderr(&out).starts_with(&format!("error[{code}]")), "{args:?}: {}", stderr(&out));
        let mut with_json = args.to_vec();
        with_json.push("--json");
        let doc: Value = serde_json::from_str(&stdout(&gmdl(&with_json))).unwrap();
        assert_eq!(doc["error"]["code"], code);
    }
}

#[test]
fn integrity_rejection_reports_violations() {
    let (tmp, dir) = store();
    let a = ok(&["add-entity", &dir, "--name", "a"]);
    let b = ok(&["add-entity", &dir, "--name", "b"]);
    ok(&["add-process", &dir, "--name", "f", "--input", &a, "--output", &b]);
    let out = gmdl(&["add-process", &dir, "--name", "g", "--input", &b, "--output", &a, "--json"]);
    assert_eq!(out.status.code(), Some(1));
    let doc: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["error"]["code"], "INTEGRITY");
    assert_eq!(doc["error"]["details"]["violations"][0]["rule"], "LINEAGE_CYCLE");

    let doc_path = tmp.path().join("bad.json");
    fs::write(&doc_path, "{not json").unwrap();
    let out = gmdl(&["import", &dir, doc_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("error[PARSE]"));
}

#[test]
fn restrict_and_cascade_delete() {
    let (_tmp, dir) = store();
    let a = ok(&["add-entity", &dir, "--name", "a"]);
    let b = ok(&["add-entity", &dir, "--name", "b"]);
    let link = ok(&["add-link", &dir, &a, &b, "--label", "similar"]);
    let out = gmdl(&["delete", &dir, &a, "--restrict"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("error[REFERENCED]"));
    let res = json(&["delete", &dir, &a, "--cascade"]);
    let mut deleted: Vec<String> = serde_json::from_value(res["deleted"].clone()).unwrap();
    deleted.sort();
    let mut expected = vec![a, link];
    expected.sort();
    assert_eq!(deleted, expected);
    assert_eq!(ok(&["validate", &dir]), "ok");
}

#[test]
fn groups_links_and_queries() {
    let (_tmp, dir) = store();
    let jan = ok(&["add-entity", &dir, "--name", "jan", "--prop", "rows:int=10"]);
    let feb = ok(&["add-entity", &dir, "--name", "feb", "--prop", "rows:int=3"]);
    let g_jan = ok(&["add-group", &dir, "--grouping", "month", "--label", "janvier", "--member", &jan]);
    let g_q1 = ok(&["add-group", &dir, "--grouping", "quarter", "--label", "T1", "--member", &jan, "--member", &feb]);
    ok(&["add-link", &dir, &g_jan, &g_q1, "--label", "part_of", "--directed"]);

    assert_eq!(ok(&["query", &dir, &format!(r#"rollup {g_jan} via "part_of""#)]), g_q1);
    assert_eq!(ok(&["query", &dir, "entities where prop(\"rows\") > 5"]), jan);
    let result = json(&["query", &dir, &format!("groups of {jan}")]);
    assert_eq!(result["kind"], "groups");
    assert_eq!(result["ids"].as_array().unwrap().len(), 2);

    // adding to an existing group keeps its id
    let again = ok(&["add-group", &dir, "--grouping", "month", "--label", "janvier", "--member", &feb]);
    assert_eq!(again, g_jan);
}

#[test]
fn export_import_round_trip_and_env_store() {
    let (tmp, dir) = store();
    let a = ok(&["add-entity", &dir, "--name", "a", "--prop", "score:real=0.5"]);
    let exported = tmp.path().join("cat.json");
    ok(&["export", &dir, "-o", exported.to_str().unwrap()]);
    let graphml = json(&["export", &dir, "--format", "graphml"]);
    assert!(graphml["document"].as_str().unwrap().contains(&format!("e{a}")));

    let other = tmp.path().join("copy");
    let out = Command::new(env!("CARGO_BIN_EXE_gmdl"))
        .args(["init"])
        .env("GMDL_STORE", &other)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let out = Command::new(env!("CARGO_BIN_EXE_gmdl"))
        .args(["import", exported.to_str().unwrap()])
        .env("GMDL_STORE", &other)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(
        ok(&["export", other.to_str().unwrap()]),
        fs::read_to_string(&exported).unwrap().trim_end()
    );
}

#[test]
fn conformance_and_snapshot() {
    let (_tmp, dir) = store();
    let a = ok(&["add-entity", &dir, "--name", "a"]);
    ok(&["add-group", &dir, "--grouping", "zone", "--label", "raw", "--member", &a, "--partition"]);
    assert_eq!(ok(&["conformance", &dir, "zones"]), "ok");
    let report = gmdl(&["conformance", &dir, "handle", "--json"]);
    assert_eq!(report.status.code(), Some(1));
    let doc: Value = serde_json::from_str(&stdout(&report)).unwrap();
    assert_eq!(doc["violations"][0]["rule"], "GRANULARITY_GROUPING_MISSING");
    assert_eq!(gmdl(&["conformance", &dir, "dublin"]).status.code(), Some(2));
    assert_eq!(gmdl(&["lineage", &dir, &a, "--depth", "0"]).status.code(), Some(2));

    let snap = json(&["snapshot", &dir]);
    assert_eq!(snap["revision"], 2);
    assert_eq!(ok(&["validate", &dir]), "ok");
    assert_eq!(Store::open(&dir).unwrap().open_report().replayed_batches, 0);
}

#[test]
fn manifest_ingest() {
    let (tmp, dir) = store();
    let manifest = tmp.path().join("m.csv");
    fs::write(&manifest, "name,group:zone,prop:owner\nsales,raw,ana\nhr,curated,\n").unwrap();
    let res = json(&["ingest", &dir, "--manifest", manifest.to_str().unwrap()]);
    assert_eq!(res["entities"], 2);
    assert_eq!(ok(&["query", &dir, r#"members of "zone"/"curated""#]).lines().count(), 1);
}
