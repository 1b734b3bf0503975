mod common;

use gmdl_core::interchange::{catalog_to_batch, export_graphml, export_json, import_json, InterchangeError};
use gmdl_core::Catalog;

fn counts(xml: &str) -> (usize, usize) {
    let doc = roxmltree::Document::parse(xml).expect("GraphML is well-formed XML");
    let nodes = doc.descendants().filter(|n| n.has_tag_name("node")).count();
    let edges = doc.descendants().filter(|n| n.has_tag_name("edge")).count();
    (nodes, edges)
}

#[test]
fn json_round_trip_is_byte_identical() {
    for seed in 0..60 {
        let cat = common::catalog(&mut common::rng(seed), common::Shape::small());
        let text = export_json(&cat);
        let back = import_json(&text).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
        assert!(back.same_content(&cat));
        assert_eq!(export_json(&back), text, "seed {seed}");
    }
}

#[test]
fn batch_replay_reproduces_catalog() {
    for seed in 0..20 {
        let cat = common::catalog(&mut common::rng(seed), common::Shape::small());
        let mut copy = Catalog::new();
        copy.commit(&catalog_to_batch(&cat)).unwrap();
        let strip = |t: String| t.lines().filter(|l| !l.contains("created_rev")).collect::<Vec<_>>().join("\n");
        assert_eq!(strip(export_json(&copy)), strip(export_json(&cat)));
    }
}

#[test]
fn graphml_counts_follow_reification() {
    for seed in 100..130 {
        let cat = common::catalog(&mut common::rng(seed), common::Shape::small());
        let (nodes, edges) = counts(&export_graphml(&cat));
        let members: usize = cat.groups().map(|g| g.members.len()).sum();
        let incidences: usize = cat.processes().map(|p| p.inputs.len() + p.outputs.len()).sum();
        assert_eq!(nodes, cat.entities().count() + cat.groups().count() + cat.processes().count());
        assert_eq!(edges, cat.links().count() + members + incidences);
    }
}

#[test]
fn import_rejects_malformed_documents() {
    assert!(matches!(import_json("{"), Err(InterchangeError::Parse { .. })));
    assert!(matches!(import_json("{}"), Err(InterchangeError::Schema { .. })));
    let wrong_version = r#"{"format_version":"9","entities":[],"groupings":[],"groups":[],"links":[],"processes":[]}"#;
    assert!(matches!(import_json(wrong_version), Err(InterchangeError::Schema { .. })));

    let cat = common::catalog(&mut common::rng(5), common::Shape::small());
    let text = export_json(&cat);
    let extra = text.replacen("\"format_version\": \"1\",", "\"format_version\": \"1\", \"bogus\": 1,", 1);
    match import_json(&extra) {
        Err(InterchangeError::Schema { .. }) => {}
        other => panic!("{other:?}"),
    }

    // dropping every entity must leave something dangling
    let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    doc["entities"].as_array_mut().unwrap().clear();
    let result = import_json(&doc.to_string());
    let references_entities = cat.groups().any(|g| !g.members.is_empty())
        || cat.links().any(|l| l.entity_ends().is_some())
        || cat.processes().next().is_some();
    assert_eq!(
        matches!(result, Err(InterchangeError::Integrity(_))),
        references_entities
    );
}

#[test]
fn duplicate_ids_are_schema_errors() {
    let cat = common::catalog(&mut common::rng(9), common::Shape::small());
    let mut doc: serde_json::Value = serde_json::from_str(&export_json(&cat)).unwrap();
    let first = doc["entities"][0].clone();
    doc["entities"].as_array_mut().unwrap().push(first);
    match import_json(&doc.to_string()) {
        Err(InterchangeError::Schema { path, .. }) => assert!(path.starts_with("entities")),
        other => panic!("{other:?}"),
    }
}
