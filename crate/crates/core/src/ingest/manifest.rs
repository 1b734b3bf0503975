use std::collections::BTreeSet;

use super::{GroupingBuilder, IngestError};
use crate::catalog::{Batch, Catalog};
use crate::model::{DataEntity, Process};
use crate::value::{Properties, PropertyValue, Timestamp};

enum Column {
    Name,
    Group(String),
    Prop(String),
}

fn parse_header(fields: &csv::StringRecord) -> Result<Vec<Column>, IngestError> {
    let mut seen = BTreeSet::new();
    let mut cols = Vec::with_capacity(fields.len());
    for (i, raw) in fields.iter().enumerate() {
        let col = if raw == "name" {
            if i != 0 {
                return Err(IngestError::Header("\"name\" must be the first column".into()));
            }
            Column::Name
        } else if let Some(g) = raw.strip_prefix("group:").filter(|g| !g.is_empty()) {
            Column::Group(g.to_string())
        } else if let Some(p) = raw.strip_prefix("prop:").filter(|p| !p.is_empty()) {
            Column::Prop(p.to_string())
        } else {
            return Err(IngestError::Header(format!("unrecognized column {raw:?}")));
        };
        if !seen.insert(raw.to_string()) {
            return Err(IngestError::Header(format!("duplicate column {raw:?}")));
        }
        cols.push(col);
    }
    if !matches!(cols.first(), Some(Column::Name)) {
        return Err(IngestError::Header("first column must be \"name\"".into()));
    }
    Ok(cols)
}

/// Reads a CSV manifest with header `name,group:<grouping>…,prop:<label>…`
/// into a batch: one entity per row, memberships from non-empty group cells,
/// text properties from non-empty prop cells, and one ingest process.
///
/// New groupings are created non-partitioned; existing ones are reused.
pub fn ingest_manifest(csv_text: &str, catalog: &Catalog) -> Result<Batch, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(csv_text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| IngestError::Header(e.to_string()))?
        .clone();
    let columns = parse_header(&header)?;

    let mut entities = Vec::new();
    let mut groupings = GroupingBuilder::new(catalog);
    for result in reader.records() {
        let record = result.map_err(|e| IngestError::Row {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let mut name = "";
        let mut props = Properties::new();
        let mut memberships = Vec::new();
        for (col, value) in columns.iter().zip(record.iter()) {
            match col {
                Column::Name => name = value,
                Column::Group(g) if !value.is_empty() => memberships.push((g, value)),
                Column::Prop(p) if !value.is_empty() => {
                    props.insert(p.clone(), PropertyValue::Text(value.to_string()));
                }
                _ => {}
            }
        }
        let entity = DataEntity::new(name, props).map_err(|e| IngestError::Row {
            line,
            message: e.to_string(),
        })?;
        for (grouping, label) in memberships {
            groupings.add(grouping, false, label, entity.id)?;
        }
        entities.push(entity);
    }

    let mut batch = Batch::new();
    if entities.is_empty() {
        return Ok(batch);
    }
    let now = Timestamp::now();
    let mut process = Process::new(format!("ingest:{now}"), [], entities.iter().map(|e| e.id), "manifest import")?;
    process.executed_at = now;
    for e in entities {
        batch.put_entity(e);
    }
    groupings.finish(&mut batch);
    batch.put_process(process);
    Ok(batch)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shared_group_value_makes_one_group() {
        let batch = ingest_manifest("name,group:zone,prop:owner\na,raw,ann\nb,raw,\n", &Catalog::new()).unwrap();
        let mut cat = Catalog::new();
        cat.commit(&batch).unwrap();
        let zone = cat.grouping_by_name("zone").unwrap();
        let raw = cat.group_by_label(zone.id, "raw").unwrap();
        assert_eq!(raw.members.len(), 2);
        assert_eq!(cat.groups().count(), 1);
        let owners: Vec<_> = cat.entities().filter_map(|e| e.properties.get("owner")).collect();
        assert_eq!(owners, vec![&PropertyValue::Text("ann".into())]);
        assert_eq!(cat.processes().count(), 1);
    }

    #[test]
    fn header_errors() {
        let cat = Catalog::new();
        for bad in [
            "name,group:zone,group:zone\n",
            "group:zone,name\n",
            "name,zone\n",
            "name,prop:\n",
            "name,name\n",
        ] {
            assert!(matches!(ingest_manifest(bad, &cat), Err(IngestError::Header(_))), "{bad}");
        }
    }

    #[test]
    fn row_errors_carry_line() {
        let cat = Catalog::new();
        match ingest_manifest("name,group:zone\na,raw\nb\n", &cat) {
            Err(IngestError::Row { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        match ingest_manifest("name,group:zone\n,raw\n", &cat) {
            Err(IngestError::Row { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_manifest_is_empty_batch() {
        assert!(ingest_manifest("name,prop:x\n", &Catalog::new()).unwrap().is_empty());
    }
}
