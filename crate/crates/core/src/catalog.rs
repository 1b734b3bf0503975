//! The in-memory hypergraph: primary object maps, secondary indexes and the
//! revision counter.
//!
//! Entities are nodes, links are binary edges, and groups and processes are
//! hyperedges over entities. Every index is derived data and can be rebuilt
//! from the primary maps; [`Catalog::indexes_coherent`] checks exactly that.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::ids::{EntityId, GroupId, GroupingId, LinkId, ObjectId, ObjectKind, ProcessId};
use crate::model::{DataEntity, Endpoints, Group, Grouping, Link, Process};
use crate::validate::{self, ValidationReport};

/// One write in a [`Batch`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum Mutation {
    PutEntity { entity: DataEntity },
    PutGrouping { grouping: Grouping },
    PutGroup { group: Group },
    PutLink { link: Link },
    PutProcess { process: Process },
    Delete { target: ObjectId },
}

impl Mutation {
    pub fn target(&self) -> ObjectId {
        match self {
            Mutation::PutEntity { entity } => entity.id.into(),
            Mutation::PutGrouping { grouping } => grouping.id.into(),
            Mutation::PutGroup { group } => group.id.into(),
            Mutation::PutLink { link } => link.id.into(),
            Mutation::PutProcess { process } => process.id.into(),
            Mutation::Delete { target } => *target,
        }
    }
}

/// Ordered list of mutations applied all-or-nothing.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Batch {
    pub ops: Vec<Mutation>,
}

impl Batch {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn push(&mut self, op: Mutation) -> &mut Self {
        self.ops.push(op);
        self
    }

    pub fn put_entity(&mut self, entity: DataEntity) -> &mut Self {
        self.push(Mutation::PutEntity { entity })
    }

    pub fn put_grouping(&mut self, grouping: Grouping) -> &mut Self {
        self.push(Mutation::PutGrouping { grouping })
    }

    pub fn put_group(&mut self, group: Group) -> &mut Self {
        self.push(Mutation::PutGroup { group })
    }

    pub fn put_link(&mut self, link: Link) -> &mut Self {
        self.push(Mutation::PutLink { link })
    }

    pub fn put_process(&mut self, process: Process) -> &mut Self {
        self.push(Mutation::PutProcess { process })
    }

    pub fn delete(&mut self, target: impl Into<ObjectId>) -> &mut Self {
        self.push(Mutation::Delete { target: target.into() })
    }

    pub fn extend(&mut self, other: Batch) -> &mut Self {
        self.ops.extend(other.ops);
        self
    }
}

/// A batch was rejected; the catalog is unchanged.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("integrity violation: {report}")]
pub struct IntegrityError {
    pub report: ValidationReport,
}

fn index_add<K: Ord, V: Ord>(map: &mut BTreeMap<K, BTreeSet<V>>, key: K, value: V) {
    map.entry(key).or_default().insert(value);
}

fn index_remove<K: Ord, V: Ord>(map: &mut BTreeMap<K, BTreeSet<V>>, key: &K, value: &V) {
    if let Some(set) = map.get_mut(key) {
        set.remove(value);
        if set.is_empty() {
            map.remove(key);
        }
    }
}

/// Derived lookup structures. Empty sets are never stored, so two index
/// states compare equal iff they describe the same relations.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub(crate) struct Indexes {
    pub entity_links: BTreeMap<EntityId, BTreeSet<LinkId>>,
    pub group_links: BTreeMap<GroupId, BTreeSet<LinkId>>,
    pub memberships: BTreeMap<EntityId, BTreeSet<GroupId>>,
    pub producers: BTreeMap<EntityId, BTreeSet<ProcessId>>,
    pub consumers: BTreeMap<EntityId, BTreeSet<ProcessId>>,
    pub grouping_groups: BTreeMap<GroupingId, BTreeSet<GroupId>>,
    pub grouping_names: BTreeMap<String, BTreeSet<GroupingId>>,
    pub group_labels: BTreeMap<(GroupingId, String), BTreeSet<GroupId>>,
}

#[derive(Debug, Clone, Default)]
pub struct Catalog {
    pub(crate) entities: BTreeMap<EntityId, DataEntity>,
    pub(crate) groupings: BTreeMap<GroupingId, Grouping>,
    pub(crate) groups: BTreeMap<GroupId, Group>,
    pub(crate) links: BTreeMap<LinkId, Link>,
    pub(crate) processes: BTreeMap<ProcessId, Process>,
    pub(crate) idx: Indexes,
    pub(crate) revision: u64,
}

/// Equality over content and revision; indexes are derived and ignored.
impl PartialEq for Catalog {
    fn eq(&self, other: &Self) -> bool {
        self.revision == other.revision && self.same_content(other)
    }
}

/// Object reference returned by [`Catalog::get`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Object<'a> {
    Entity(&'a DataEntity),
    Grouping(&'a Grouping),
    Group(&'a Group),
    Link(&'a Link),
    Process(&'a Process),
}

/// Which ids were written or deleted by a batch, for the incremental check.
#[derive(Debug, Default)]
pub(crate) struct Touched {
    pub put: BTreeSet<ObjectId>,
    pub deleted: BTreeSet<ObjectId>,
}

impl Catalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn same_content(&self, other: &Self) -> bool {
        self.entities == other.entities
            && self.groupings == other.groupings
            && self.groups == other.groups
            && self.links == other.links
            && self.processes == other.processes
    }

    pub fn entity(&self, id: EntityId) -> Option<&DataEntity> {
        self.entities.get(&id)
    }
    pub fn grouping(&self, id: GroupingId) -> Option<&Grouping> {
        self.groupings.get(&id)
    }
    pub fn group(&self, id: GroupId) -> Option<&Group> {
        self.groups.get(&id)
    }
    pub fn link(&self, id: LinkId) -> Option<&Link> {
        self.links.get(&id)
    }
    pub fn process(&self, id: ProcessId) -> Option<&Process> {
        self.processes.get(&id)
    }

    pub fn entities(&self) -> impl Iterator<Item = &DataEntity> {
        self.entities.values()
    }
    pub fn groupings(&self) -> impl Iterator<Item = &Grouping> {
        self.groupings.values()
    }
    pub fn groups(&self) -> impl Iterator<Item = &Group> {
        self.groups.values()
    }
    pub fn links(&self) -> impl Iterator<Item = &Link> {
        self.links.values()
    }
    pub fn processes(&self) -> impl Iterator<Item = &Process> {
        self.processes.values()
    }

    pub fn len(&self) -> usize {
        self.entities.len() + self.groupings.len() + self.groups.len() + self.links.len() + self.processes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, id: ObjectId) -> bool {
        self.get(id).is_some()
    }

    pub fn get(&self, id: ObjectId) -> Option<Object<'_>> {
        match id {
            ObjectId::Entity(id) => self.entities.get(&id).map(Object::Entity),
            ObjectId::Grouping(id) => self.groupings.get(&id).map(Object::Grouping),
            ObjectId::Group(id) => self.groups.get(&id).map(Object::Group),
            ObjectId::Link(id) => self.links.get(&id).map(Object::Link),
            ObjectId::Process(id) => self.processes.get(&id).map(Object::Process),
        }
    }

    /// Finds the object whose id has this raw value, whatever its kind.
    /// Returns every match; more than one only for hand-crafted collisions.
    pub fn resolve(&self, raw: u128) -> Vec<ObjectId> {
        [
            ObjectId::Entity(EntityId::from_u128(raw)),
            ObjectId::Grouping(GroupingId::from_u128(raw)),
            ObjectId::Group(GroupId::from_u128(raw)),
            ObjectId::Link(LinkId::from_u128(raw)),
            ObjectId::Process(ProcessId::from_u128(raw)),
        ]
        .into_iter()
        .filter(|id| self.contains(*id))
        .collect()
    }

    pub fn ids(&self, kind: ObjectKind) -> Vec<ObjectId> {
        match kind {
            ObjectKind::Entity => self.entities.keys().map(|&id| id.into()).collect(),
            ObjectKind::Grouping => self.groupings.keys().map(|&id| id.into()).collect(),
            ObjectKind::Group => self.groups.keys().map(|&id| id.into()).collect(),
            ObjectKind::Link => self.links.keys().map(|&id| id.into()).collect(),
            ObjectKind::Process => self.processes.keys().map(|&id| id.into()).collect(),
        }
    }

    pub fn grouping_by_name(&self, name: &str) -> Option<&Grouping> {
        self.idx
            .grouping_names
            .get(name)
            .and_then(|ids| ids.first())
            .and_then(|id| self.groupings.get(id))
    }

    pub fn group_by_label(&self, grouping: GroupingId, label: &str) -> Option<&Group> {
        self.idx
            .group_labels
            .get(&(grouping, label.to_string()))
            .and_then(|ids| ids.first())
            .and_then(|id| self.groups.get(id))
    }

    pub fn groups_of_grouping(&self, grouping: GroupingId) -> impl Iterator<Item = &Group> {
        self.idx
            .grouping_groups
            .get(&grouping)
            .into_iter()
            .flatten()
            .filter_map(|id| self.groups.get(id))
    }

    /// Groups the entity belongs to, sorted by id.
    pub fn groups_of(&self, entity: EntityId) -> Vec<GroupId> {
        self.idx.memberships.get(&entity).map(|s| s.iter().copied().collect()).unwrap_or_default()
    }

    pub fn links_of_entity(&self, entity: EntityId) -> impl Iterator<Item = &Link> {
        self.idx.entity_links.get(&entity).into_iter().flatten().filter_map(|id| self.links.get(id))
    }

    pub fn links_of_group(&self, group: GroupId) -> impl Iterator<Item = &Link> {
        self.idx.group_links.get(&group).into_iter().flatten().filter_map(|id| self.links.get(id))
    }

    /// Processes that list the entity among their outputs.
    pub fn producers_of(&self, entity: EntityId) -> impl Iterator<Item = &Process> {
        self.idx.producers.get(&entity).into_iter().flatten().filter_map(|id| self.processes.get(id))
    }

    /// Processes that list the entity among their inputs.
    pub fn consumers_of(&self, entity: EntityId) -> impl Iterator<Item = &Process> {
        self.idx.consumers.get(&entity).into_iter().flatten().filter_map(|id| self.processes.get(id))
    }

    /// Objects holding a reference to `id`, sorted.
    pub fn referrers(&self, id: ObjectId) -> Vec<ObjectId> {
        let mut out = BTreeSet::new();
        match id {
            ObjectId::Entity(e) => {
                let links = self.idx.entity_links.get(&e).into_iter().flatten().map(|&l| ObjectId::Link(l));
                let groups = self.idx.memberships.get(&e).into_iter().flatten().map(|&g| ObjectId::Group(g));
                let procs = self
                    .idx
                    .producers
                    .get(&e)
                    .into_iter()
                    .chain(self.idx.consumers.get(&e))
                    .flatten()
                    .map(|&p| ObjectId::Process(p));
                out.extend(links.chain(groups).chain(procs));
            }
            ObjectId::Group(g) => {
                out.extend(self.idx.group_links.get(&g).into_iter().flatten().map(|&l| ObjectId::Link(l)));
            }
            ObjectId::Grouping(g) => {
                out.extend(self.idx.grouping_groups.get(&g).into_iter().flatten().map(|&g| ObjectId::Group(g)));
            }
            ObjectId::Link(_) | ObjectId::Process(_) => {}
        }
        out.into_iter().collect()
    }

    /// Batch that removes `id` together with everything that would dangle:
    /// links and processes touching a removed entity are deleted, groups
    /// containing it lose that member, and removing a group or grouping
    /// takes its links and groups along.
    pub fn cascade_batch(&self, id: ObjectId) -> Batch {
        let mut deleted: BTreeSet<ObjectId> = BTreeSet::new();
        let mut shrunk: BTreeMap<GroupId, Group> = BTreeMap::new();
        let mut stack = vec![id];
        while let Some(next) = stack.pop() {
            if !deleted.insert(next) {
                continue;
            }
            match next {
                ObjectId::Entity(e) => {
                    for referrer in self.referrers(next) {
                        match referrer {
                            ObjectId::Group(g) => {
                                if let Some(group) = self.groups.get(&g) {
                                    shrunk.entry(g).or_insert_with(|| group.clone()).members.remove(&e);
                                }
                            }
                            other => stack.push(other),
                        }
                    }
                }
                ObjectId::Group(_) | ObjectId::Grouping(_) => stack.extend(self.referrers(next)),
                ObjectId::Link(_) | ObjectId::Process(_) => {}
            }
        }
        let mut batch = Batch::new();
        for (gid, group) in shrunk {
            if !deleted.contains(&ObjectId::Group(gid)) {
                batch.put_group(group);
            }
        }
        // Referrers first so every intermediate state stays reference-clean.
        let mut order: Vec<_> = deleted.into_iter().collect();
        order.sort_by_key(|id| match id.kind() {
            ObjectKind::Link | ObjectKind::Process => 0,
            ObjectKind::Group => 1,
            ObjectKind::Grouping | ObjectKind::Entity => 2,
        });
        for id in order {
            batch.delete(id);
        }
        batch
    }

    /// Validates and applies `batch` as the next revision, returning the new
    /// catalog and the batch as it should be logged (with `created_rev`
    /// stamped on new entities). `self` is never modified.
    pub fn try_commit(&self, batch: &Batch) -> Result<(Catalog, Batch), IntegrityError> {
        let mut next = self.clone();
        next.revision += 1;
        let mut logged = batch.clone();
        let mut touched = Touched::default();
        for op in &mut logged.ops {
            if let Mutation::PutEntity { entity } = op {
                entity.created_rev = match next.entities.get(&entity.id) {
                    Some(existing) => existing.created_rev,
                    None => next.revision,
                };
            }
            match &*op {
                Mutation::Delete { target } => {
                    if !next.contains(*target) {
                        return Err(IntegrityError {
                            report: ValidationReport::single(
                                validate::rules::NOT_FOUND,
                                Some(*target),
                                format!("{} {target} does not exist", target.kind()),
                            ),
                        });
                    }
                    touched.put.remove(target);
                    touched.deleted.insert(*target);
                }
                put => {
                    touched.deleted.remove(&put.target());
                    touched.put.insert(put.target());
                }
            }
            next.apply(op.clone());
        }
        let report = validate::check_delta(&next, &touched);
        if report.ok {
            Ok((next, logged))
        } else {
            Err(IntegrityError { report })
        }
    }

    /// Commits in place; on error the catalog is unchanged.
    pub fn commit(&mut self, batch: &Batch) -> Result<u64, IntegrityError> {
        let (next, _) = self.try_commit(batch)?;
        *self = next;
        Ok(self.revision)
    }

    pub fn validate(&self) -> ValidationReport {
        validate::validate(self)
    }

    /// Applies one mutation without any checking, keeping indexes in step.
    pub(crate) fn apply(&mut self, op: Mutation) {
        match op {
            Mutation::PutEntity { entity } => {
                self.entities.insert(entity.id, entity);
            }
            Mutation::PutGrouping { grouping } => {
                if let Some(old) = self.groupings.insert(grouping.id, grouping.clone()) {
                    index_remove(&mut self.idx.grouping_names, &old.name, &old.id);
                }
                index_add(&mut self.idx.grouping_names, grouping.name, grouping.id);
            }
            Mutation::PutGroup { group } => {
                if let Some(old) = self.groups.remove(&group.id) {
                    self.unindex_group(&old);
                }
                self.index_group(&group);
                self.groups.insert(group.id, group);
            }
            Mutation::PutLink { link } => {
                if let Some(old) = self.links.remove(&link.id) {
                    self.unindex_link(&old);
                }
                self.index_link(&link);
                self.links.insert(link.id, link);
            }
            Mutation::PutProcess { process } => {
                if let Some(old) = self.processes.remove(&process.id) {
                    self.unindex_process(&old);
                }
                self.index_process(&process);
                self.processes.insert(process.id, process);
            }
            Mutation::Delete { target } => match target {
                ObjectId::Entity(id) => {
                    self.entities.remove(&id);
                }
                ObjectId::Grouping(id) => {
                    if let Some(old) = self.groupings.remove(&id) {
                        index_remove(&mut self.idx.grouping_names, &old.name, &old.id);
                    }
                }
                ObjectId::Group(id) => {
                    if let Some(old) = self.groups.remove(&id) {
                        self.unindex_group(&old);
                    }
                }
                ObjectId::Link(id) => {
                    if let Some(old) = self.links.remove(&id) {
                        self.unindex_link(&old);
                    }
                }
                ObjectId::Process(id) => {
                    if let Some(old) = self.processes.remove(&id) {
                        self.unindex_process(&old);
                    }
                }
            },
        }
    }

    /// Inserts objects with no checks and rebuilt indexes; used by import,
    /// which validates the whole catalog afterwards.
    pub(crate) fn from_parts(
        entities: Vec<DataEntity>,
        groupings: Vec<Grouping>,
        groups: Vec<Group>,
        links: Vec<Link>,
        processes: Vec<Process>,
        revision: u64,
    ) -> Self {
        let mut c = Catalog {
            entities: entities.into_iter().map(|e| (e.id, e)).collect(),
            groupings: groupings.into_iter().map(|g| (g.id, g)).collect(),
            groups: groups.into_iter().map(|g| (g.id, g)).collect(),
            links: links.into_iter().map(|l| (l.id, l)).collect(),
            processes: processes.into_iter().map(|p| (p.id, p)).collect(),
            idx: Indexes::default(),
            revision,
        };
        c.idx = c.build_indexes();
        c
    }

    fn index_group(&mut self, g: &Group) {
        index_add(&mut self.idx.grouping_groups, g.grouping, g.id);
        index_add(&mut self.idx.group_labels, (g.grouping, g.label.clone()), g.id);
        for &m in &g.members {
            index_add(&mut self.idx.memberships, m, g.id);
        }
    }

    fn unindex_group(&mut self, g: &Group) {
        index_remove(&mut self.idx.grouping_groups, &g.grouping, &g.id);
        index_remove(&mut self.idx.group_labels, &(g.grouping, g.label.clone()), &g.id);
        for m in &g.members {
            index_remove(&mut self.idx.memberships, m, &g.id);
        }
    }

    fn index_link(&mut self, l: &Link) {
        match l.ends {
            Endpoints::Entity { source, target } => {
                index_add(&mut self.idx.entity_links, source, l.id);
                index_add(&mut self.idx.entity_links, target, l.id);
            }
            Endpoints::Group { source, target } => {
                index_add(&mut self.idx.group_links, source, l.id);
                index_add(&mut self.idx.group_links, target, l.id);
            }
        }
    }

    fn unindex_link(&mut self, l: &Link) {
        match l.ends {
            Endpoints::Entity { source, target } => {
                index_remove(&mut self.idx.entity_links, &source, &l.id);
                index_remove(&mut self.idx.entity_links, &target, &l.id);
            }
            Endpoints::Group { source, target } => {
                index_remove(&mut self.idx.group_links, &source, &l.id);
                index_remove(&mut self.idx.group_links, &target, &l.id);
            }
        }
    }

    fn index_process(&mut self, p: &Process) {
        for &i in &p.inputs {
            index_add(&mut self.idx.consumers, i, p.id);
        }
        for &o in &p.outputs {
            index_add(&mut self.idx.producers, o, p.id);
        }
    }

    fn unindex_process(&mut self, p: &Process) {
        for i in &p.inputs {
            index_remove(&mut self.idx.consumers, i, &p.id);
        }
        for o in &p.outputs {
            index_remove(&mut self.idx.producers, o, &p.id);
        }
    }

    pub(crate) fn build_indexes(&self) -> Indexes {
        let mut scratch = Catalog::default();
        for g in self.groupings.values() {
            index_add(&mut scratch.idx.grouping_names, g.name.clone(), g.id);
        }
        for g in self.groups.values() {
            scratch.index_group(g);
        }
        for l in self.links.values() {
            scratch.index_link(l);
        }
        for p in self.processes.values() {
            scratch.index_process(p);
        }
        scratch.idx
    }

    /// Whether the incrementally maintained indexes equal a full rebuild.
    pub fn indexes_coherent(&self) -> bool {
        self.idx == self.build_indexes()
    }
}
