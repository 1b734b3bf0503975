//! Canonical JSON catalog document.
//!
//! Layout rules, fixed so that equal catalogs serialize to identical bytes:
//!
//! - top-level fields in the order `format_version`, `entities`,
//!   `groupings`, `groups`, `links`, `processes`;
//! - each array sorted by ascending id; id sets (`members`, `inputs`,
//!   `outputs`) sorted ascending; property maps sorted by key;
//! - object fields in declaration order of the model types;
//! - two-space indentation, `": "` separators, LF newlines, a single
//!   trailing newline, no trailing whitespace, UTF-8 without escaping of
//!   non-ASCII characters;
//! - reals in shortest round-trip form, timestamps as RFC 3339 UTC with
//!   exactly three fractional digits.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::catalog::{Batch, Catalog};
use crate::model::{DataEntity, Group, Grouping, Link, Process};
use crate::validate::ValidationReport;

pub const FORMAT_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InterchangeError {
    #[error("malformed JSON at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("integrity violation: {0}")]
    Integrity(ValidationReport),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogDocument {
    pub format_version: String,
    pub entities: Vec<DataEntity>,
    pub groupings: Vec<Grouping>,
    pub groups: Vec<Group>,
    pub links: Vec<Link>,
    pub processes: Vec<Process>,
}

#[derive(Serialize)]
struct DocumentRef<'a> {
    format_version: &'static str,
    entities: Vec<&'a DataEntity>,
    groupings: Vec<&'a Grouping>,
    groups: Vec<&'a Group>,
    links: Vec<&'a Link>,
    processes: Vec<&'a Process>,
}

/// Serializes the catalog in canonical form.
pub fn export_json(cat: &Catalog) -> String {
    let doc = DocumentRef {
        format_version: FORMAT_VERSION,
        entities: cat.entities().collect(),
        groupings: cat.groupings().collect(),
        groups: cat.groups().collect(),
        links: cat.links().collect(),
        processes: cat.processes().collect(),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("catalog values always serialize");
    text.push('\n');
    text
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> InterchangeError {
    InterchangeError::Schema {
        path: path.into(),
        message: message.into(),
    }
}

/// Parses a document into a fresh catalog at revision 0, preserving ids.
pub fn import_json(text: &str) -> Result<Catalog, InterchangeError> {
    let value: Value = serde_json::from_str(text).map_err(|e| InterchangeError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    match value.get("format_version") {
        None => return Err(schema("format_version", "missing field")),
        Some(Value::String(v)) if v == FORMAT_VERSION => {}
        Some(other) => return Err(schema("format_version", format!("unsupported format version {other}"))),
    }
    let doc: CatalogDocument = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        schema(path, e.into_inner().to_string())
    })?;
    check_unique(doc.entities.iter().map(|e| e.id.as_u128()), "entities")?;
    check_unique(doc.groupings.iter().map(|g| g.id.as_u128()), "groupings")?;
    check_unique(doc.groups.iter().map(|g| g.id.as_u128()), "groups")?;
    check_unique(doc.links.iter().map(|l| l.id.as_u128()), "links")?;
    check_unique(doc.processes.iter().map(|p| p.id.as_u128()), "processes")?;

    let cat = Catalog::from_parts(doc.entities, doc.groupings, doc.groups, doc.links, doc.processes, 0);
    let report = cat.validate();
    if report.ok {
        Ok(cat)
    } else {
        Err(InterchangeError::Integrity(report))
    }
}

fn check_unique(ids: impl Iterator<Item = u128>, array: &str) -> Result<(), InterchangeError> {
    let mut seen = BTreeSet::new();
    for (i, id) in ids.enumerate() {
        if !seen.insert(id) {
            return Err(schema(format!("{array}[{i}].id"), format!("duplicate id {id:032x}")));
        }
    }
    Ok(())
}

/// Every object of `cat` as puts, ordered so references resolve in sequence.
pub fn catalog_to_batch(cat: &Catalog) -> Batch {
    let mut batch = Batch::new();
    cat.entities().for_each(|e| {
        batch.put_entity(e.clone());
    });
    cat.groupings().for_each(|g| {
        batch.put_grouping(g.clone());
    });
    cat.groups().for_each(|g| {
        batch.put_group(g.clone());
    });
    cat.links().for_each(|l| {
        batch.put_link(l.clone());
    });
    cat.processes().for_each(|p| {
        batch.put_process(p.clone());
    });
    batch
}
