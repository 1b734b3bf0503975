//! Connectors that turn external sources into batches ready to commit.
//!
//! Every connector models the arrival of new data as a process with no
//! inputs whose outputs are all the entities it creates, so each entity has
//! a producing event. Re-ingesting the same source creates new entities;
//! existing ones are never rebound.

mod manifest;
mod scan;

use std::collections::BTreeMap;

pub use manifest::ingest_manifest;
pub use scan::{scan_filesystem, ScanOutput, ScanRules, ScanWarning};

use crate::catalog::{Batch, Catalog};
use crate::ids::{EntityId, GroupingId};
use crate::model::{Group, Grouping, ModelError};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("cannot read {path}: {message}")]
    Unreadable { path: String, message: String },
    #[error("bad manifest header: {0}")]
    Header(String),
    #[error("bad manifest row at line {line}: {message}")]
    Row { line: u64, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Accumulates group memberships against the groupings and groups already
/// in a catalog, reusing them by name and label.
pub(crate) struct GroupingBuilder<'a> {
    catalog: &'a Catalog,
    groupings: BTreeMap<String, (Grouping, bool)>,
    groups: BTreeMap<(GroupingId, String), Group>,
}

impl<'a> GroupingBuilder<'a> {
    pub(crate) fn new(catalog: &'a Catalog) -> Self {
        Self {
            catalog,
            groupings: BTreeMap::new(),
            groups: BTreeMap::new(),
        }
    }

    /// Adds `entity` to group `label` of grouping `name`, creating either
    /// when absent. `partition` applies only to newly created groupings.
    pub(crate) fn add(&mut self, name: &str, partition: bool, label: &str, entity: EntityId) -> Result<(), ModelError> {
        let grouping_id = match self.groupings.get(name) {
            Some((g, _)) => g.id,
            None => {
                let (g, fresh) = match self.catalog.grouping_by_name(name) {
                    Some(existing) => (existing.clone(), false),
                    None => (Grouping::new(name, partition)?, true),
                };
                let id = g.id;
                self.groupings.insert(name.to_string(), (g, fresh));
                id
            }
        };
        let key = (grouping_id, label.to_string());
        if !self.groups.contains_key(&key) {
            let group = match self.catalog.group_by_label(grouping_id, label) {
                Some(existing) => existing.clone(),
                None => Group::new(grouping_id, label, [])?,
            };
            self.groups.insert(key.clone(), group);
        }
        self.groups.get_mut(&key).expect("inserted above").members.insert(entity);
        Ok(())
    }

    pub(crate) fn finish(self, batch: &mut Batch) {
        for (g, fresh) in self.groupings.into_values() {
            if fresh {
                batch.put_grouping(g);
            }
        }
        for g in self.groups.into_values() {
            batch.put_group(g);
        }
    }
}
