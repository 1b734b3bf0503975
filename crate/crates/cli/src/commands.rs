use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use gmdl_core::conformance::{check_conformance, Profile};
use gmdl_core::ingest::{ingest_manifest, scan_filesystem, ScanRules};
use gmdl_core::interchange::{catalog_to_batch, export_graphml, export_json, import_json};
use gmdl_core::query::{lineage, Direction, LineageGraph, ResultSet};
use gmdl_core::store::{DeleteMode, Store, StoreLock, SNAPSHOT_FILE};
use gmdl_core::{
    Batch, Catalog, DataEntity, EndpointKind, EntityId, Group, Grouping, Link, Mutation, NodeRef, ObjectId, ObjectKind, Process,
    Properties, PropertyValue, ValidationReport,
};
use serde_json::{json, Value};

use crate::args::*;
use crate::error::{CliError, EXIT_DOMAIN};

/// What a successful command prints, in both modes.
pub struct Outcome {
    pub text: String,
    pub json: Value,
    pub exit: u8,
}

impl Outcome {
    fn new(text: impl Into<String>, json: Value) -> Self {
        Self {
            text: text.into(),
            json,
            exit: 0,
        }
    }

    fn report(report: &ValidationReport) -> Self {
        let text = if report.ok {
            "ok".to_string()
        } else {
            report
                .violations
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join("\n")
        };
        Self {
            text,
            json: serde_json::to_value(report).expect("reports serialize"),
            exit: if report.ok { 0 } else { EXIT_DOMAIN },
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

/// Splits `[STORE] ARGS...`: the store is positional when one more argument
/// than `expected` is present, otherwise it comes from `--store`/`GMDL_STORE`.
fn split_store(global: Option<&PathBuf>, args: &[String], expected: usize, shape: &str) -> Result<(PathBuf, Vec<String>)> {
    if args.len() == expected + 1 {
        Ok((PathBuf::from(&args[0]), args[1..].to_vec()))
    } else if args.len() == expected {
        match global {
            Some(store) => Ok((store.clone(), args.to_vec())),
            None => Err(CliError::usage(format!(
                "no store given (expected {shape}, --store, or GMDL_STORE)"
            ))),
        }
    } else {
        Err(CliError::usage(format!("expected arguments {shape}, got {}", args.len())))
    }
}

enum Access {
    Read,
    Write,
}

/// Opens the store under the appropriate lock. The lock is only taken when
/// the directory already looks like a store, so a missing store is reported
/// as such rather than as a lock failure.
fn open(dir: &Path, access: Access) -> Result<(Store, Option<StoreLock>)> {
    let lock = if dir.join(SNAPSHOT_FILE).is_file() {
        Some(match access {
            Access::Read => StoreLock::shared(dir)?,
            Access::Write => StoreLock::exclusive(dir)?,
        })
    } else {
        None
    };
    Ok((Store::open(dir)?, lock))
}

fn parse_id(raw: &str) -> Result<u128> {
    EntityId::from_str(raw)
        .map(|id| id.as_u128())
        .map_err(|e| CliError::usage(format!("malformed id {raw:?}: {e}")))
}

fn resolve(cat: &Catalog, raw: &str) -> Result<ObjectId> {
    let found = cat.resolve(parse_id(raw)?);
    found
        .first()
        .copied()
        .ok_or_else(|| CliError::domain("NOT_FOUND", format!("no object with id {raw}")))
}

fn resolve_entity(cat: &Catalog, raw: &str) -> Result<EntityId> {
    let id = EntityId::from_u128(parse_id(raw)?);
    if cat.entity(id).is_some() {
        Ok(id)
    } else {
        Err(CliError::domain("NOT_FOUND", format!("no entity with id {raw}")))
    }
}

fn parse_prop(raw: &str) -> Result<(String, PropertyValue)> {
    let bad = |m: String| CliError::usage(format!("bad property {raw:?}: {m}"));
    let (key, value) = raw.split_once('=').ok_or_else(|| bad("expected label=value".into()))?;
    let (label, ty) = match key.rsplit_once(':') {
        Some((label, ty @ ("text" | "int" | "real" | "bool" | "timestamp"))) => (label, ty),
        _ => (key, "text"),
    };
    if label.is_empty() {
        return Err(bad("empty label".into()));
    }
    let value = match ty {
        "int" => PropertyValue::Int(value.parse().map_err(|e| bad(format!("{e}")))?),
        "real" => PropertyValue::Real(value.parse().map_err(|e| bad(format!("{e}")))?),
        "bool" => PropertyValue::Bool(value.parse().map_err(|e| bad(format!("{e}")))?),
        "timestamp" => PropertyValue::Timestamp(value.parse().map_err(|e| bad(format!("{e}")))?),
        _ => PropertyValue::Text(value.to_string()),
    };
    Ok((label.to_string(), value))
}

fn parse_props(raw: &[String]) -> Result<Properties> {
    raw.iter().map(|p| parse_prop(p)).collect()
}

fn created(rev: u64, id: impl ToString) -> Outcome {
    let id = id.to_string();
    Outcome::new(id.clone(), json!({ "ok": true, "revision": rev, "id": id }))
}

pub fn run(cli: Cli) -> Result<Outcome> {
    let store = cli.store.as_ref();
    match cli.command {
        Command::Init(a) => {
            let (dir, _) = split_store(store, &a.args, 0, "STORE")?;
            let s = Store::init(&dir)?;
            Ok(Outcome::new(
                format!("initialized {}", dir.display()),
                json!({ "ok": true, "store": dir, "revision": s.revision() }),
            ))
        }
        Command::Ingest(a) => ingest(store, a),
        Command::AddEntity(a) => {
            let (dir, _) = split_store(store, &a.args, 0, "[STORE]")?;
            let (s, _lock) = open(&dir, Access::Write)?;
            let entity = DataEntity::new(a.name, parse_props(&a.props)?)?;
            let id = entity.id;
            let mut b = Batch::new();
            b.put_entity(entity);
            Ok(created(s.commit(&b)?, id))
        }
        Command::AddLink(a) => {
            let (dir, rest) = split_store(store, &a.args, 2, "[STORE] SOURCE TARGET")?;
            let (s, _lock) = open(&dir, Access::Write)?;
            let view = s.view();
            let node = |raw: &str| -> Result<NodeRef> {
                match resolve(&view, raw)? {
                    ObjectId::Entity(e) => Ok(NodeRef::Entity(e)),
                    ObjectId::Group(g) => Ok(NodeRef::Group(g)),
                    other => Err(CliError::domain(
                        "MODEL",
                        format!("{} {raw} cannot be a link endpoint", other.kind()),
                    )),
                }
            };
            let (source, target) = (node(&rest[0])?, node(&rest[1])?);
            let kind = match source {
                NodeRef::Entity(_) => EndpointKind::Entity,
                NodeRef::Group(_) => EndpointKind::Group,
            };
            let link = Link::new(kind, source, target, a.directed, a.label)?.with_properties(parse_props(&a.props)?)?;
            let id = link.id;
            let mut b = Batch::new();
            b.put_link(link);
            Ok(created(s.commit(&b)?, id))
        }
        Command::AddGroup(a) => {
            let (dir, _) = split_store(store, &a.args, 0, "[STORE]")?;
            let (s, _lock) = open(&dir, Access::Write)?;
            let view = s.view();
            let mut b = Batch::new();
            let grouping = match view.grouping_by_name(&a.grouping) {
                Some(g) => g.clone(),
                None => {
                    let g = Grouping::new(a.grouping, a.partition)?;
                    b.put_grouping(g.clone());
                    g
                }
            };
            let mut group = match view.group_by_label(grouping.id, &a.label) {
                Some(g) => g.clone(),
                None => Group::new(grouping.id, a.label, [])?,
            };
            for m in &a.members {
                group.members.insert(resolve_entity(&view, m)?);
            }
            let id = group.id;
            b.put_group(group);
            Ok(created(s.commit(&b)?, id))
        }
        Command::AddProcess(a) => {
            let (dir, _) = split_store(store, &a.args, 0, "[STORE]")?;
            let (s, _lock) = open(&dir, Access::Write)?;
            let view = s.view();
            let ids = |raw: &[String]| raw.iter().map(|r| resolve_entity(&view, r)).collect::<Result<Vec<_>>>();
            let process = Process::new(a.name, ids(&a.inputs)?, ids(&a.outputs)?, a.definition)?
                .with_properties(parse_props(&a.props)?)?;
            let id = process.id;
            let mut b = Batch::new();
            b.put_process(process);
            Ok(created(s.commit(&b)?, id))
        }
        Command::Delete(a) => {
            let (dir, rest) = split_store(store, &a.args, 1, "[STORE] ID")?;
            let (s, _lock) = open(&dir, Access::Write)?;
            let view = s.view();
            let target = resolve(&view, &rest[0])?;
            let mode = if a.cascade { DeleteMode::Cascade } else { DeleteMode::Restrict };
            let rev = s.delete(target, mode)?;
            let after = s.view();
            let kinds = [
                ObjectKind::Entity,
                ObjectKind::Grouping,
                ObjectKind::Group,
                ObjectKind::Link,
                ObjectKind::Process,
            ];
            let deleted: Vec<String> = kinds
                .into_iter()
                .flat_map(|k| view.ids(k))
                .filter(|id| !after.contains(*id))
                .map(|id| id.to_string())
                .collect();
            Ok(Outcome::new(
                deleted.join("\n"),
                json!({ "ok": true, "revision": rev, "deleted": deleted }),
            ))
        }
        Command::Query(a) => {
            let (dir, rest) = split_store(store, &a.args, 1, "[STORE] QUERY")?;
            let (s, _lock) = open(&dir, Access::Read)?;
            let result = s.view().query(&rest[0])?;
            let text = match &result {
                ResultSet::Lineage { graph } => lineage_text(graph),
                other => other.id_strings().join("\n"),
            };
            Ok(Outcome::new(text, serde_json::to_value(&result).expect("results serialize")))
        }
        Command::Lineage(a) => {
            let (dir, rest) = split_store(store, &a.args, 1, "[STORE] ID")?;
            let (s, _lock) = open(&dir, Access::Read)?;
            let view = s.view();
            let root = EntityId::from_u128(parse_id(&rest[0])?);
            let direction = if a.downstream { Direction::Downstream } else { Direction::Upstream };
            let graph = lineage(&view, root, direction, a.depth)?;
            Ok(Outcome::new(
                lineage_text(&graph),
                serde_json::to_value(&graph).expect("lineage serializes"),
            ))
        }
        Command::Export(a) => {
            let (dir, _) = split_store(store, &a.args, 0, "[STORE]")?;
            let (s, _lock) = open(&dir, Access::Read)?;
            let view = s.view();
            let (doc, format) = match a.format {
                Format::Json => (export_json(&view), "json"),
                Format::Graphml => (export_graphml(&view), "graphml"),
            };
            match a.output {
                Some(path) => {
                    fs::write(&path, doc)?;
                    Ok(Outcome::new(
                        format!("wrote {}", path.display()),
                        json!({ "ok": true, "format": format, "path": path }),
                    ))
                }
                None => {
                    let json = match a.format {
                        Format::Json => serde_json::from_str(&doc).expect("export is valid JSON"),
                        Format::Graphml => json!({ "ok": true, "format": format, "document": doc }),
                    };
                    Ok(Outcome::new(doc.trim_end(), json))
                }
            }
        }
        Command::Import(a) => {
            let (dir, rest) = split_store(store, &a.args, 1, "[STORE] FILE")?;
            let text = fs::read_to_string(&rest[0])
                .map_err(|e| CliError::domain("UNREADABLE", format!("{}: {e}", rest[0])))?;
            let imported = import_json(&text)?;
            let batch = catalog_to_batch(&imported);
            let (s, _lock) = open(&dir, Access::Write)?;
            let rev = s.commit(&batch)?;
            Ok(Outcome::new(
                format!("imported {} objects at revision {rev}", batch.len()),
                json!({ "ok": true, "revision": rev, "objects": batch.len() }),
            ))
        }
        Command::Validate(a) => {
            let (dir, _) = split_store(store, &a.args, 0, "[STORE]")?;
            let (s, _lock) = open(&dir, Access::Read)?;
            Ok(Outcome::report(&s.view().validate()))
        }
        Command::Conformance(a) => {
            let (dir, rest) = split_store(store, &a.args, 1, "[STORE] PROFILE")?;
            let profile: Profile = rest[0].parse().map_err(CliError::usage)?;
            let (s, _lock) = open(&dir, Access::Read)?;
            Ok(Outcome::report(&check_conformance(&s.view(), profile)))
        }
        Command::Snapshot(a) => {
            let (dir, _) = split_store(store, &a.args, 0, "[STORE]")?;
            let (s, _lock) = open(&dir, Access::Write)?;
            let path = s.snapshot()?;
            Ok(Outcome::new(
                format!("snapshot at revision {}", s.revision()),
                json!({ "ok": true, "revision": s.revision(), "path": path }),
            ))
        }
    }
}

fn ingest(store: Option<&PathBuf>, a: IngestArgs) -> Result<Outcome> {
    if let Some(manifest) = &a.manifest {
        let (dir, _) = split_store(store, &a.args, 0, "[STORE] --manifest FILE")?;
        let text = fs::read_to_string(manifest)
            .map_err(|e| CliError::domain("UNREADABLE", format!("{}: {e}", manifest.display())))?;
        let (s, _lock) = open(&dir, Access::Write)?;
        let batch = ingest_manifest(&text, &s.view())?;
        let entities = batch.ops.iter().filter(|m| matches!(m, Mutation::PutEntity { .. })).count();
        let rev = s.commit(&batch)?;
        return Ok(Outcome::new(
            format!("ingested {entities} entities at revision {rev}"),
            json!({ "ok": true, "revision": rev, "entities": entities }),
        ));
    }
    let (dir, rest) = split_store(store, &a.args, 1, "[STORE] ROOT")?;
    let rules: ScanRules = match &a.rules {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::domain("UNREADABLE", format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::domain("RULES", format!("{}: {e}", path.display())))?
        }
        None => ScanRules::default(),
    };
    let (s, _lock) = open(&dir, Access::Write)?;
    let out = scan_filesystem(Path::new(&rest[0]), &rules, &s.view())?;
    let rev = s.commit(&out.batch)?;
    let mut text = format!(
        "ingested {} directories, {} files, {} rows at revision {rev}",
        out.directories, out.files, out.rows
    );
    for w in &out.warnings {
        text.push_str(&format!("\nwarning: {}", serde_json::to_string(w).expect("warnings serialize")));
    }
    Ok(Outcome::new(
        text,
        json!({
            "ok": true,
            "revision": rev,
            "directories": out.directories,
            "files": out.files,
            "rows": out.rows,
            "warnings": out.warnings,
        }),
    ))
}

fn lineage_text(graph: &LineageGraph) -> String {
    let join = |ids: &[EntityId]| ids.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",");
    let mut lines: Vec<String> = graph.nodes.iter().map(|n| format!("entity {n}")).collect();
    for h in &graph.hyperedges {
        lines.push(format!("process {} {} -> {}", h.process, join(&h.inputs), join(&h.outputs)));
    }
    lines.join("\n")
}
