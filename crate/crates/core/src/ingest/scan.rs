use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use super::{GroupingBuilder, IngestError};
use crate::catalog::{Batch, Catalog};
use crate::ids::EntityId;
use crate::model::{DataEntity, EndpointKind, Link, NodeRef, Process, CONTAINS};
use crate::value::{Properties, PropertyValue, Timestamp};

pub const ZONE_GROUPING: &str = "zone";
pub const TYPE_GROUPING: &str = "type";
pub const DEFAULT_ROW_CAP: usize = 1000;

fn default_row_cap() -> usize {
    DEFAULT_ROW_CAP
}

/// Scanner configuration, read from a JSON rules file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanRules {
    /// Top-level directory name → zone label.
    #[serde(default)]
    pub zones: BTreeMap<String, String>,
    /// Group files by lowercase extension.
    #[serde(default)]
    pub types: bool,
    /// One entity per data row of each `.csv` file.
    #[serde(default)]
    pub records: bool,
    #[serde(default = "default_row_cap")]
    pub row_cap: usize,
    #[serde(default)]
    pub include_hidden: bool,
}

impl Default for ScanRules {
    fn default() -> Self {
        Self {
            zones: BTreeMap::new(),
            types: false,
            records: false,
            row_cap: DEFAULT_ROW_CAP,
            include_hidden: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "warning", rename_all = "snake_case")]
pub enum ScanWarning {
    /// Rows beyond the cap were skipped; the file entity carries
    /// `rows_truncated = true`.
    RowCapExceeded { path: String, cap: usize },
    /// Row splitting stopped at a malformed record.
    MalformedCsv { path: String, message: String },
}

#[derive(Debug, Clone)]
pub struct ScanOutput {
    pub batch: Batch,
    pub warnings: Vec<ScanWarning>,
    pub files: usize,
    pub directories: usize,
    pub rows: usize,
}

fn rel_string(rel: &Path) -> String {
    if rel.as_os_str().is_empty() {
        return ".".into();
    }
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

fn unreadable(path: &Path, err: impl ToString) -> IngestError {
    IngestError::Unreadable {
        path: path.display().to_string(),
        message: err.to_string(),
    }
}

fn entity(name: String, props: Vec<(&str, PropertyValue)>) -> Result<DataEntity, IngestError> {
    let props: Properties = props.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
    Ok(DataEntity::new(name, props)?)
}

fn contains_link(parent: EntityId, child: EntityId) -> Link {
    Link::new(EndpointKind::Entity, NodeRef::Entity(parent), NodeRef::Entity(child), true, CONTAINS)
        .expect("distinct fresh entities")
}

/// Builds a batch describing the tree under `root`: one entity per file, one
/// per directory that directly holds files, optionally one per CSV data row,
/// `contains` links from directory to file and file to row, zone and type
/// groupings, and a single zero-input ingest process.
///
/// Existing groupings and groups in `catalog` are reused by name and label.
/// An empty tree yields an empty batch.
pub fn scan_filesystem(root: &Path, rules: &ScanRules, catalog: &Catalog) -> Result<ScanOutput, IngestError> {
    let meta = fs::metadata(root).map_err(|e| unreadable(root, e))?;
    if !meta.is_dir() {
        return Err(unreadable(root, "not a directory"));
    }
    let include_hidden = rules.include_hidden;
    let walker = WalkDir::new(root)
        .min_depth(1)
        .sort_by_file_name()
        .into_iter()
        .filter_entry(move |e| include_hidden || !e.file_name().to_string_lossy().starts_with('.'));

    let mut files: Vec<(PathBuf, fs::Metadata)> = Vec::new();
    for entry in walker {
        let entry = entry.map_err(|e| {
            let path = e.path().map(Path::to_path_buf).unwrap_or_else(|| root.to_path_buf());
            unreadable(&path, e)
        })?;
        if entry.file_type().is_file() {
            let md = entry.metadata().map_err(|e| unreadable(entry.path(), e))?;
            let rel = entry.path().strip_prefix(root).expect("walk stays under root").to_path_buf();
            files.push((rel, md));
        }
    }

    let mut out = ScanOutput {
        batch: Batch::new(),
        warnings: Vec::new(),
        files: 0,
        directories: 0,
        rows: 0,
    };
    if files.is_empty() {
        return Ok(out);
    }

    let mut new_entities: Vec<DataEntity> = Vec::new();
    let mut links: Vec<Link> = Vec::new();
    let mut groupings = GroupingBuilder::new(catalog);

    let dirs: BTreeSet<PathBuf> = files
        .iter()
        .map(|(rel, _)| rel.parent().map(Path::to_path_buf).unwrap_or_default())
        .collect();
    let mut dir_ids: BTreeMap<PathBuf, EntityId> = BTreeMap::new();
    for dir in dirs {
        let name = match dir.file_name() {
            Some(n) => n.to_string_lossy().into_owned(),
            None => root
                .canonicalize()
                .ok()
                .and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
                .unwrap_or_else(|| ".".into()),
        };
        let e = entity(
            name,
            vec![("path", rel_string(&dir).into()), ("granularity", "directory".into())],
        )?;
        dir_ids.insert(dir, e.id);
        new_entities.push(e);
        out.directories += 1;
    }

    for (rel, md) in &files {
        let path_str = rel_string(rel);
        let file_name = rel.file_name().expect("files have names").to_string_lossy().into_owned();
        let ext = rel.extension().map(|x| x.to_string_lossy().to_lowercase());
        let mut props = vec![
            ("path", PropertyValue::from(path_str.clone())),
            ("size", PropertyValue::Int(i64::try_from(md.len()).unwrap_or(i64::MAX))),
            ("granularity", "file".into()),
        ];
        if let Ok(mtime) = md.modified() {
            props.push(("mtime", Timestamp::from(mtime).into()));
        }
        let mut file_entity = entity(file_name, props)?;
        let file_id = file_entity.id;
        let parent = rel.parent().map(Path::to_path_buf).unwrap_or_default();
        links.push(contains_link(dir_ids[&parent], file_id));

        let mut components = rel.components();
        if let (Some(top), Some(_)) = (components.next(), components.next()) {
            if let Some(zone) = rules.zones.get(top.as_os_str().to_string_lossy().as_ref()) {
                groupings.add(ZONE_GROUPING, true, zone, file_id)?;
            }
        }
        if rules.types {
            if let Some(ext) = ext.as_deref().filter(|x| !x.is_empty()) {
                groupings.add(TYPE_GROUPING, true, ext, file_id)?;
            }
        }

        if rules.records && ext.as_deref() == Some("csv") {
            let abs = root.join(rel);
            let mut reader = csv::ReaderBuilder::new()
                .has_headers(true)
                .flexible(true)
                .from_path(&abs)
                .map_err(|e| unreadable(&abs, e))?;
            let mut record = csv::ByteRecord::new();
            let mut n = 0usize;
            loop {
                match reader.read_byte_record(&mut record) {
                    Ok(false) => break,
                    Ok(true) => {}
                    Err(e) => {
                        out.warnings.push(ScanWarning::MalformedCsv {
                            path: path_str.clone(),
                            message: e.to_string(),
                        });
                        break;
                    }
                }
                if n == rules.row_cap {
                    file_entity.properties.insert("rows_truncated".into(), true.into());
                    out.warnings.push(ScanWarning::RowCapExceeded {
                        path: path_str.clone(),
                        cap: rules.row_cap,
                    });
                    break;
                }
                n += 1;
                let row = entity(
                    format!("{}#{n}", file_entity.name),
                    vec![
                        ("path", path_str.clone().into()),
                        ("row", PropertyValue::Int(n as i64)),
                        ("granularity", "row".into()),
                    ],
                )?;
                links.push(contains_link(file_id, row.id));
                new_entities.push(row);
                out.rows += 1;
            }
        }
        new_entities.push(file_entity);
        out.files += 1;
    }

    let now = Timestamp::now();
    let mut process = Process::new(
        format!("ingest:{now}"),
        [],
        new_entities.iter().map(|e| e.id),
        format!("filesystem scan of {}", root.display()),
    )?;
    process.executed_at = now;

    let batch = &mut out.batch;
    for e in new_entities {
        batch.put_entity(e);
    }
    groupings.finish(batch);
    for l in links {
        batch.put_link(l);
    }
    batch.put_process(process);
    Ok(out)
}
