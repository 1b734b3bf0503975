//! GraphML export.
//!
//! GraphML edges are binary, so groups and processes are reified as nodes:
//! a group node has a `member` edge to each member entity, a process node
//! has an `input` edge from each input and an `output` edge to each output.
//! Links are exported as ordinary edges carrying GraphML's own `directed`
//! attribute.

use std::fmt::Write;

use crate::catalog::Catalog;
use crate::model::NodeRef;
use crate::value::Properties;

const HEADER: &str = r#"<?xml version="1.0" encoding="UTF-8"?>
<graphml xmlns="http://graphml.graphdrawing.org/xmlns" xmlns:xsi="http://www.w3.org/2001/XMLSchema-instance" xsi:schemaLocation="http://graphml.graphdrawing.org/xmlns http://graphml.graphdrawing.org/xmlns/1.0/graphml.xsd">
  <key id="kind" for="node" attr.name="kind" attr.type="string"/>
  <key id="name" for="node" attr.name="name" attr.type="string"/>
  <key id="grouping" for="node" attr.name="grouping" attr.type="string"/>
  <key id="nprops" for="node" attr.name="properties" attr.type="string"/>
  <key id="label" for="edge" attr.name="label" attr.type="string"/>
  <key id="eprops" for="edge" attr.name="properties" attr.type="string"/>
  <graph id="catalog" edgedefault="directed">
"#;

/// Escapes text for attribute or element content. Characters XML 1.0
/// cannot carry at all are replaced by U+FFFD.
fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            '\t' => out.push_str("&#9;"),
            '\n' => out.push_str("&#10;"),
            '\r' => out.push_str("&#13;"),
            c if (c as u32) < 0x20 || c == '\u{FFFE}' || c == '\u{FFFF}' => out.push('\u{FFFD}'),
            c => out.push(c),
        }
    }
    out
}

fn node_key(n: NodeRef) -> String {
    match n {
        NodeRef::Entity(e) => format!("e{e}"),
        NodeRef::Group(g) => format!("g{g}"),
    }
}

fn props_json(p: &Properties) -> String {
    serde_json::to_string(p).expect("properties always serialize")
}

fn data(out: &mut String, key: &str, value: &str) {
    let _ = write!(out, "<data key=\"{key}\">{}</data>", escape(value));
}

pub fn export_graphml(cat: &Catalog) -> String {
    let mut out = String::from(HEADER);
    for e in cat.entities() {
        let _ = write!(out, "    <node id=\"e{}\">", e.id);
        data(&mut out, "kind", "entity");
        data(&mut out, "name", &e.name);
        data(&mut out, "nprops", &props_json(&e.properties));
        out.push_str("</node>\n");
    }
    for g in cat.groups() {
        let _ = write!(out, "    <node id=\"g{}\">", g.id);
        data(&mut out, "kind", "group");
        data(&mut out, "name", &g.label);
        if let Some(grouping) = cat.grouping(g.grouping) {
            data(&mut out, "grouping", &grouping.name);
        }
        out.push_str("</node>\n");
    }
    for p in cat.processes() {
        let _ = write!(out, "    <node id=\"p{}\">", p.id);
        data(&mut out, "kind", "process");
        data(&mut out, "name", &p.name);
        data(&mut out, "nprops", &props_json(&p.properties));
        out.push_str("</node>\n");
    }
    for l in cat.links() {
        let (s, t) = (node_key(l.ends.source()), node_key(l.ends.target()));
        let _ = write!(
            out,
            "    <edge id=\"l{}\" source=\"{s}\" target=\"{t}\" directed=\"{}\">",
            l.id, l.directed
        );
        data(&mut out, "label", &l.label);
        data(&mut out, "eprops", &props_json(&l.properties));
        out.push_str("</edge>\n");
    }
    for g in cat.groups() {
        for m in &g.members {
            let _ = writeln!(
                out,
                "    <edge id=\"m{}-{m}\" source=\"g{}\" target=\"e{m}\" directed=\"true\"><data key=\"label\">member</data></edge>",
                g.id, g.id
            );
        }
    }
    for p in cat.processes() {
        for i in &p.inputs {
            let _ = writeln!(
                out,
                "    <edge id=\"i{}-{i}\" source=\"e{i}\" target=\"p{}\" directed=\"true\"><data key=\"label\">input</data></edge>",
                p.id, p.id
            );
        }
        for o in &p.outputs {
            let _ = writeln!(
                out,
                "    <edge id=\"o{}-{o}\" source=\"p{}\" target=\"e{o}\" directed=\"true\"><data key=\"label\">output</data></edge>",
                p.id, p.id
            );
        }
    }
    out.push_str("  </graph>\n</graphml>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::Batch;
    use crate::model::{DataEntity, EndpointKind, Group, Grouping, Link, Process};

    fn parse_counts(xml: &str) -> (usize, Vec<(String, Option<String>)>) {
        let doc = roxmltree::Document::parse(xml).expect("well-formed");
        let nodes = doc.descendants().filter(|n| n.has_tag_name("node")).count();
        let edges = doc
            .descendants()
            .filter(|n| n.has_tag_name("edge"))
            .map(|e| {
                let label = e
                    .children()
                    .find(|c| c.attribute("key") == Some("label"))
                    .and_then(|c| c.text())
                    .unwrap_or_default()
                    .to_string();
                (label, e.attribute("directed").map(str::to_string))
            })
            .collect();
        (nodes, edges)
    }

    fn entity(name: &str) -> DataEntity {
        DataEntity::new(name, Properties::new()).unwrap()
    }

    #[test]
    fn undirected_link_edge() {
        let (a, b) = (entity("a"), entity("b"));
        let l = Link::new(EndpointKind::Entity, NodeRef::Entity(a.id), NodeRef::Entity(b.id), false, "similar").unwrap();
        let mut cat = Catalog::new();
        let mut batch = Batch::new();
        batch.put_entity(a).put_entity(b).put_link(l);
        cat.commit(&batch).unwrap();
        let (nodes, edges) = parse_counts(&export_graphml(&cat));
        assert_eq!(nodes, 2);
        assert_eq!(edges, vec![("similar".to_string(), Some("false".to_string()))]);
    }

    #[test]
    fn group_reified_with_member_edges() {
        let es: Vec<_> = (0..3).map(|i| entity(&format!("e{i}"))).collect();
        let tags = Grouping::new("tags", false).unwrap();
        let g = Group::new(tags.id, "all", es.iter().map(|e| e.id)).unwrap();
        let mut batch = Batch::new();
        es.iter().for_each(|e| {
            batch.put_entity(e.clone());
        });
        batch.put_grouping(tags).put_group(g);
        let mut cat = Catalog::new();
        cat.commit(&batch).unwrap();
        let (nodes, edges) = parse_counts(&export_graphml(&cat));
        assert_eq!(nodes, 4);
        assert_eq!(edges.iter().filter(|(l, _)| l == "member").count(), 3);
        assert_eq!(edges.len(), 3);
    }

    #[test]
    fn process_reified_with_io_edges() {
        let (a, b) = (entity("A"), entity("B"));
        let p = Process::new("P", [a.id], [b.id], "").unwrap();
        let mut batch = Batch::new();
        batch.put_entity(a).put_entity(b).put_process(p);
        let mut cat = Catalog::new();
        cat.commit(&batch).unwrap();
        let (nodes, edges) = parse_counts(&export_graphml(&cat));
        assert_eq!(nodes, 3);
        assert_eq!(edges.iter().filter(|(l, _)| l == "input").count(), 1);
        assert_eq!(edges.iter().filter(|(l, _)| l == "output").count(), 1);
    }

    #[test]
    fn hostile_names_stay_well_formed() {
        let mut batch = Batch::new();
        batch.put_entity(entity("<a & \"b\"> 'c'\u{1}\u{0}"));
        let mut cat = Catalog::new();
        cat.commit(&batch).unwrap();
        let xml = export_graphml(&cat);
        let doc = roxmltree::Document::parse(&xml).unwrap();
        let name = doc
            .descendants()
            .find(|n| n.attribute("key") == Some("name"))
            .and_then(|n| n.text())
            .unwrap();
        assert_eq!(name, "<a & \"b\"> 'c'\u{FFFD}\u{FFFD}");
    }
}
