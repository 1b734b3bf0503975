//! Encodings of three other data-lake metadata models in catalog terms,
//! with decoders back to each source description and profile checkers.
//!
//! Reserved vocabulary:
//!
//! | model              | grouping      | groups                               | links         | processes             |
//! |--------------------|---------------|--------------------------------------|---------------|-----------------------|
//! | zones              | `zone`        | one per zone label                   |               |                       |
//! | granularity        | `granularity` | `file-level`, `part-level`           | `contains`    |                       |
//! | objects & versions | `medal_role`  | `object`, `version`, `representation`| `has_version` | `update_<k>`, `represent` |
//!
//! Other mappings are possible; these are the ones the checkers and decoders
//! understand.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::catalog::{Batch, Catalog};
use crate::ids::{EntityId, GroupId, GroupingId, ObjectId};
use crate::model::{EndpointKind, Group, Grouping, Link, ModelError, NodeRef, Process, CONTAINS};
use crate::validate::{ValidationReport, Violation};

pub const ZONE: &str = "zone";
pub const GRANULARITY: &str = "granularity";
pub const FILE_LEVEL: &str = "file-level";
pub const PART_LEVEL: &str = "part-level";
pub const MEDAL_ROLE: &str = "medal_role";
pub const ROLE_OBJECT: &str = "object";
pub const ROLE_VERSION: &str = "version";
pub const ROLE_REPRESENTATION: &str = "representation";
pub const HAS_VERSION: &str = "has_version";
pub const UPDATE_PREFIX: &str = "update_";
pub const REPRESENT: &str = "represent";

pub mod rules {
    pub const ZONE_GROUPING_MISSING: &str = "ZONE_GROUPING_MISSING";
    pub const ZONE_NOT_PARTITION: &str = "ZONE_NOT_PARTITION";
    pub const ZONE_OVERLAP: &str = "ZONE_OVERLAP";
    pub const GRANULARITY_GROUPING_MISSING: &str = "GRANULARITY_GROUPING_MISSING";
    pub const CONTAINMENT_CYCLE: &str = "CONTAINMENT_CYCLE";
    pub const CONTAINMENT_UNDIRECTED: &str = "CONTAINMENT_UNDIRECTED";
    pub const GRANULARITY_MISMATCH: &str = "GRANULARITY_MISMATCH";
    pub const ROLE_GROUPING_MISSING: &str = "ROLE_GROUPING_MISSING";
    pub const MISSING_VERSION_LINK: &str = "MISSING_VERSION_LINK";
    pub const NONLINEAR_VERSIONS: &str = "NONLINEAR_VERSIONS";
    pub const MALFORMED_UPDATE: &str = "MALFORMED_UPDATE";
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConformanceError {
    #[error("entity {0} has no zone assignment")]
    MissingAssignment(EntityId),
    #[error("entity {0} cannot contain itself")]
    SelfContainment(EntityId),
    #[error("version chain is empty")]
    EmptyVersionChain,
    #[error("entity {0} appears in more than one role")]
    RoleConflict(EntityId),
    #[error("representations given for {0}, which is not a version")]
    UnknownVersion(EntityId),
    #[error("catalog does not conform: {0}")]
    NotConforming(ValidationReport),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Medal,
    Zones,
    Handle,
}

impl FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "medal" => Ok(Profile::Medal),
            "zones" => Ok(Profile::Zones),
            "handle" => Ok(Profile::Handle),
            other => Err(format!("unknown profile {other:?} (expected medal, zones or handle)")),
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Profile::Medal => "medal",
            Profile::Zones => "zones",
            Profile::Handle => "handle",
        })
    }
}

/// Zone model source description: each entity's zone label.
pub type ZoneDescription = BTreeMap<EntityId, String>;

/// Granularity source description: parent → contained parts.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HandleDescription {
    pub containment: BTreeMap<EntityId, BTreeSet<EntityId>>,
}

/// Object/version/representation source description for one object.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MedalDescription {
    pub object: EntityId,
    /// Oldest first.
    pub versions: Vec<EntityId>,
    /// Only versions that have representations appear here.
    pub representations: BTreeMap<EntityId, BTreeSet<EntityId>>,
}

/// Clones of a grouping's existing groups (or fresh ones) for editing.
struct GroupSet {
    grouping: Grouping,
    fresh: bool,
    groups: BTreeMap<String, Group>,
}

impl GroupSet {
    fn load(cat: &Catalog, name: &str, partition: bool, labels: &[&str]) -> Result<Self, ModelError> {
        let (grouping, fresh) = match cat.grouping_by_name(name) {
            Some(g) => (g.clone(), false),
            None => (Grouping::new(name, partition)?, true),
        };
        let mut groups = BTreeMap::new();
        for g in cat.groups_of_grouping(grouping.id) {
            groups.insert(g.label.clone(), g.clone());
        }
        for &label in labels {
            if !groups.contains_key(label) {
                groups.insert(label.to_string(), Group::new(grouping.id, label, [])?);
            }
        }
        Ok(Self { grouping, fresh, groups })
    }

    fn group_mut(&mut self, label: &str) -> Result<&mut Group, ModelError> {
        if !self.groups.contains_key(label) {
            self.groups.insert(label.to_string(), Group::new(self.grouping.id, label, [])?);
        }
        Ok(self.groups.get_mut(label).expect("inserted above"))
    }

    fn contains(&self, label: &str, e: EntityId) -> bool {
        self.groups.get(label).is_some_and(|g| g.members.contains(&e))
    }

    fn finish(self, cat: &Catalog, batch: &mut Batch) {
        if self.fresh {
            batch.put_grouping(self.grouping);
        }
        for g in self.groups.into_values() {
            if cat.group(g.id) != Some(&g) {
                batch.put_group(g);
            }
        }
    }
}

/// Places each entity in the group of its zone within the partition
/// grouping `zone`.
pub fn encode_zones(cat: &Catalog, entities: &[EntityId], zone_of: &ZoneDescription) -> Result<Batch, ConformanceError> {
    let mut set = GroupSet::load(cat, ZONE, true, &[])?;
    for &e in entities {
        let zone = zone_of.get(&e).ok_or(ConformanceError::MissingAssignment(e))?;
        set.group_mut(zone)?.members.insert(e);
    }
    let mut batch = Batch::new();
    set.finish(cat, &mut batch);
    Ok(batch)
}

/// Adds `contains` links from `parent` to each child, puts the children in
/// `part-level` and the parent in `file-level` unless it is itself a part.
pub fn encode_granularity(cat: &Catalog, parent: EntityId, children: &[EntityId]) -> Result<Batch, ConformanceError> {
    if children.contains(&parent) {
        return Err(ConformanceError::SelfContainment(parent));
    }
    let mut set = GroupSet::load(cat, GRANULARITY, true, &[FILE_LEVEL, PART_LEVEL])?;
    let existing: BTreeSet<EntityId> = containment_links(cat)
        .filter(|(s, _)| *s == parent)
        .map(|(_, t)| t)
        .collect();
    let mut batch = Batch::new();
    for &child in children.iter().collect::<BTreeSet<_>>() {
        if !existing.contains(&child) {
            batch.put_link(Link::new(
                EndpointKind::Entity,
                NodeRef::Entity(parent),
                NodeRef::Entity(child),
                true,
                CONTAINS,
            )?);
        }
        set.group_mut(FILE_LEVEL)?.members.remove(&child);
        set.group_mut(PART_LEVEL)?.members.insert(child);
    }
    if !set.contains(PART_LEVEL, parent) {
        set.group_mut(FILE_LEVEL)?.members.insert(parent);
    }
    set.finish(cat, &mut batch);
    Ok(batch)
}

/// Encodes an object with its ordered versions and per-version
/// representations: `update_<k>` processes chain consecutive versions,
/// `represent` processes derive representations, a `has_version` link ties
/// the object to its first version, and `medal_role` records each role.
pub fn encode_versions(
    cat: &Catalog,
    object: EntityId,
    versions: &[EntityId],
    representations: &BTreeMap<EntityId, Vec<EntityId>>,
) -> Result<Batch, ConformanceError> {
    let first = *versions.first().ok_or(ConformanceError::EmptyVersionChain)?;
    let mut seen = BTreeSet::from([object]);
    for &v in versions {
        if !seen.insert(v) {
            return Err(ConformanceError::RoleConflict(v));
        }
    }
    for (&v, reps) in representations {
        if !versions.contains(&v) {
            return Err(ConformanceError::UnknownVersion(v));
        }
        for &r in reps {
            if !seen.insert(r) {
                return Err(ConformanceError::RoleConflict(r));
            }
        }
    }

    let mut set = GroupSet::load(cat, MEDAL_ROLE, true, &[ROLE_OBJECT, ROLE_VERSION, ROLE_REPRESENTATION])?;
    set.group_mut(ROLE_OBJECT)?.members.insert(object);
    set.group_mut(ROLE_VERSION)?.members.extend(versions.iter().copied());
    set.group_mut(ROLE_REPRESENTATION)?
        .members
        .extend(representations.values().flatten().copied());

    let mut batch = Batch::new();
    batch.put_link(Link::new(
        EndpointKind::Entity,
        NodeRef::Entity(object),
        NodeRef::Entity(first),
        true,
        HAS_VERSION,
    )?);
    for (k, pair) in versions.windows(2).enumerate() {
        batch.put_process(Process::new(
            format!("{UPDATE_PREFIX}{}", k + 1),
            [pair[0]],
            [pair[1]],
            "version update",
        )?);
    }
    for v in versions {
        if let Some(reps) = representations.get(v).filter(|r| !r.is_empty()) {
            batch.put_process(Process::new(REPRESENT, [*v], reps.iter().copied(), "representation")?);
        }
    }
    set.finish(cat, &mut batch);
    Ok(batch)
}

fn containment_links(cat: &Catalog) -> impl Iterator<Item = (EntityId, EntityId)> + '_ {
    cat.links()
        .filter(|l| l.directed && l.label == CONTAINS)
        .filter_map(|l| l.entity_ends())
}

fn groups_by_label(cat: &Catalog, grouping: GroupingId) -> BTreeMap<&str, &Group> {
    cat.groups_of_grouping(grouping).map(|g| (g.label.as_str(), g)).collect()
}

fn violation(rule: &'static str, object: Option<ObjectId>, message: impl Into<String>) -> Violation {
    Violation {
        rule,
        object,
        message: message.into(),
    }
}

fn check_zones(cat: &Catalog, out: &mut Vec<Violation>) {
    let Some(zone) = cat.grouping_by_name(ZONE) else {
        out.push(violation(rules::ZONE_GROUPING_MISSING, None, "no grouping named \"zone\""));
        return;
    };
    if !zone.is_partition {
        out.push(violation(
            rules::ZONE_NOT_PARTITION,
            Some(zone.id.into()),
            "zone grouping is not declared a partition",
        ));
    }
    let mut zones_of: BTreeMap<EntityId, Vec<&str>> = BTreeMap::new();
    for g in cat.groups_of_grouping(zone.id) {
        for &m in &g.members {
            zones_of.entry(m).or_default().push(&g.label);
        }
    }
    for (e, zones) in zones_of {
        if zones.len() > 1 {
            out.push(violation(
                rules::ZONE_OVERLAP,
                Some(e.into()),
                format!("entity is in zones {}", zones.join(", ")),
            ));
        }
    }
}

/// Entities lying on a directed cycle of `edges`.
fn on_cycle(edges: &[(EntityId, EntityId)]) -> BTreeSet<EntityId> {
    let mut adj: BTreeMap<EntityId, Vec<EntityId>> = BTreeMap::new();
    for &(s, t) in edges {
        adj.entry(s).or_default().push(t);
    }
    let reach = |from: EntityId| -> BTreeSet<EntityId> {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<EntityId> = adj.get(&from).cloned().unwrap_or_default();
        while let Some(n) = stack.pop() {
            if seen.insert(n) {
                stack.extend(adj.get(&n).into_iter().flatten().copied());
            }
        }
        seen
    };
    adj.keys().copied().filter(|&n| reach(n).contains(&n)).collect()
}

fn check_handle(cat: &Catalog, out: &mut Vec<Violation>) {
    for l in cat.links().filter(|l| l.label == CONTAINS && !l.directed) {
        out.push(violation(
            rules::CONTAINMENT_UNDIRECTED,
            Some(l.id.into()),
            "containment links must be directed",
        ));
    }
    let edges: Vec<_> = containment_links(cat).collect();
    for e in on_cycle(&edges) {
        out.push(violation(
            rules::CONTAINMENT_CYCLE,
            Some(e.into()),
            "entity transitively contains itself",
        ));
    }
    let Some(gran) = cat.grouping_by_name(GRANULARITY) else {
        out.push(violation(
            rules::GRANULARITY_GROUPING_MISSING,
            None,
            "no grouping named \"granularity\"",
        ));
        return;
    };
    let groups = groups_by_label(cat, gran.id);
    let members = |label: &str| groups.get(label).map(|g| g.members.clone()).unwrap_or_default();
    let parts: BTreeSet<EntityId> = edges.iter().map(|&(_, t)| t).collect();
    let roots: BTreeSet<EntityId> = edges.iter().map(|&(s, _)| s).filter(|s| !parts.contains(s)).collect();
    let (file_level, part_level) = (members(FILE_LEVEL), members(PART_LEVEL));
    for e in roots.symmetric_difference(&file_level) {
        out.push(violation(
            rules::GRANULARITY_MISMATCH,
            Some((*e).into()),
            "file-level membership disagrees with containment roots",
        ));
    }
    for e in parts.symmetric_difference(&part_level) {
        out.push(violation(
            rules::GRANULARITY_MISMATCH,
            Some((*e).into()),
            "part-level membership disagrees with contained entities",
        ));
    }
}

fn update_processes(cat: &Catalog) -> impl Iterator<Item = &Process> {
    cat.processes().filter(|p| p.name.starts_with(UPDATE_PREFIX))
}

fn role_members(cat: &Catalog) -> Option<BTreeMap<&str, BTreeSet<EntityId>>> {
    let roles = cat.grouping_by_name(MEDAL_ROLE)?;
    Some(
        groups_by_label(cat, roles.id)
            .into_iter()
            .map(|(label, g)| (label, g.members.clone()))
            .collect(),
    )
}

fn check_medal(cat: &Catalog, out: &mut Vec<Violation>) {
    let Some(roles) = role_members(cat) else {
        out.push(violation(rules::ROLE_GROUPING_MISSING, None, "no grouping named \"medal_role\""));
        return;
    };
    let versions = roles.get(ROLE_VERSION).cloned().unwrap_or_default();
    for obj in roles.get(ROLE_OBJECT).into_iter().flatten() {
        let firsts: Vec<_> = cat
            .links_of_entity(*obj)
            .filter(|l| l.directed && l.label == HAS_VERSION)
            .filter_map(|l| l.entity_ends())
            .filter(|(s, t)| s == obj && versions.contains(t))
            .collect();
        if firsts.len() != 1 {
            out.push(violation(
                rules::MISSING_VERSION_LINK,
                Some((*obj).into()),
                format!("object has {} has_version links to versions, expected 1", firsts.len()),
            ));
        }
    }
    let mut succ: BTreeMap<EntityId, Vec<EntityId>> = BTreeMap::new();
    let mut pred: BTreeMap<EntityId, Vec<EntityId>> = BTreeMap::new();
    for p in update_processes(cat) {
        let ok = p.inputs.len() == 1
            && p.outputs.len() == 1
            && p.inputs.iter().chain(&p.outputs).all(|e| versions.contains(e));
        if !ok {
            out.push(violation(
                rules::MALFORMED_UPDATE,
                Some(p.id.into()),
                "update must map exactly one version to one version",
            ));
            continue;
        }
        let (i, o) = (*p.inputs.first().unwrap(), *p.outputs.first().unwrap());
        succ.entry(i).or_default().push(o);
        pred.entry(o).or_default().push(i);
    }
    for (v, next) in &succ {
        if next.len() > 1 {
            out.push(violation(
                rules::NONLINEAR_VERSIONS,
                Some((*v).into()),
                format!("version has {} successors", next.len()),
            ));
        }
    }
    for (v, prev) in &pred {
        if prev.len() > 1 {
            out.push(violation(
                rules::NONLINEAR_VERSIONS,
                Some((*v).into()),
                format!("version has {} predecessors", prev.len()),
            ));
        }
    }
}

/// Profile-specific checks plus full catalog validation.
pub fn check_conformance(cat: &Catalog, profile: Profile) -> ValidationReport {
    let mut out = cat.validate().violations;
    match profile {
        Profile::Zones => check_zones(cat, &mut out),
        Profile::Handle => check_handle(cat, &mut out),
        Profile::Medal => check_medal(cat, &mut out),
    }
    ValidationReport::from_violations(out)
}

fn require(cat: &Catalog, profile: Profile) -> Result<(), ConformanceError> {
    let report = check_conformance(cat, profile);
    if report.ok {
        Ok(())
    } else {
        Err(ConformanceError::NotConforming(report))
    }
}

pub fn decode_zones(cat: &Catalog) -> Result<ZoneDescription, ConformanceError> {
    require(cat, Profile::Zones)?;
    let zone = cat.grouping_by_name(ZONE).expect("checked by profile");
    Ok(cat
        .groups_of_grouping(zone.id)
        .flat_map(|g| g.members.iter().map(move |&m| (m, g.label.clone())))
        .collect())
}

pub fn decode_granularity(cat: &Catalog) -> Result<HandleDescription, ConformanceError> {
    require(cat, Profile::Handle)?;
    let mut containment: BTreeMap<EntityId, BTreeSet<EntityId>> = BTreeMap::new();
    for (s, t) in containment_links(cat) {
        containment.entry(s).or_default().insert(t);
    }
    Ok(HandleDescription { containment })
}

pub fn decode_versions(cat: &Catalog) -> Result<Vec<MedalDescription>, ConformanceError> {
    require(cat, Profile::Medal)?;
    let roles = role_members(cat).expect("checked by profile");
    let versions = roles.get(ROLE_VERSION).cloned().unwrap_or_default();
    let next_version = |v: EntityId| -> Option<EntityId> {
        cat.consumers_of(v)
            .filter(|p| p.name.starts_with(UPDATE_PREFIX))
            .find_map(|p| p.outputs.first().copied())
    };
    let mut out = Vec::new();
    for &object in roles.get(ROLE_OBJECT).into_iter().flatten() {
        let first = cat
            .links_of_entity(object)
            .filter(|l| l.directed && l.label == HAS_VERSION)
            .filter_map(|l| l.entity_ends())
            .find(|(s, t)| *s == object && versions.contains(t))
            .map(|(_, t)| t)
            .expect("checked by profile");
        let mut chain = vec![first];
        while let Some(next) = next_version(*chain.last().unwrap()) {
            if chain.contains(&next) {
                break;
            }
            chain.push(next);
        }
        let mut representations = BTreeMap::new();
        for &v in &chain {
            let reps: BTreeSet<EntityId> = cat
                .consumers_of(v)
                .filter(|p| p.name == REPRESENT)
                .flat_map(|p| p.outputs.iter().copied())
                .collect();
            if !reps.is_empty() {
                representations.insert(v, reps);
            }
        }
        out.push(MedalDescription {
            object,
            versions: chain,
            representations,
        });
    }
    Ok(out)
}

/// Group id of a role, for callers building fixtures.
pub fn role_group(cat: &Catalog, role: &str) -> Option<GroupId> {
    let roles = cat.grouping_by_name(MEDAL_ROLE)?;
    cat.group_by_label(roles.id, role).map(|g| g.id)
}
