//! Whole-catalog validation and the incremental check run on every commit.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;

use crate::catalog::{Catalog, Touched};
use crate::ids::{EntityId, GroupId, GroupingId, ObjectId, ProcessId};
use crate::model::{check_properties, DataEntity, Endpoints, Group, Grouping, Link, Process};

/// Stable violation codes.
pub mod rules {
    pub const EMPTY_NAME: &str = "EMPTY_NAME";
    pub const MALFORMED_PROPERTY: &str = "MALFORMED_PROPERTY";
    pub const DUPLICATE_GROUPING_NAME: &str = "DUPLICATE_GROUPING_NAME";
    pub const DUPLICATE_GROUP_LABEL: &str = "DUPLICATE_GROUP_LABEL";
    pub const DANGLING_GROUPING: &str = "DANGLING_GROUPING";
    pub const DANGLING_MEMBER: &str = "DANGLING_MEMBER";
    pub const PARTITION_OVERLAP: &str = "PARTITION_OVERLAP";
    pub const SELF_LOOP: &str = "SELF_LOOP";
    pub const UNNORMALIZED_LINK: &str = "UNNORMALIZED_LINK";
    pub const DANGLING_ENDPOINT: &str = "DANGLING_ENDPOINT";
    pub const EMPTY_OUTPUTS: &str = "EMPTY_OUTPUTS";
    pub const INPUT_OUTPUT_OVERLAP: &str = "INPUT_OUTPUT_OVERLAP";
    pub const DANGLING_PROCESS_ENTITY: &str = "DANGLING_PROCESS_ENTITY";
    pub const LINEAGE_CYCLE: &str = "LINEAGE_CYCLE";
    pub const INDEX_INCOHERENT: &str = "INDEX_INCOHERENT";
    pub const NOT_FOUND: &str = "NOT_FOUND";
    pub const STILL_REFERENCED: &str = "STILL_REFERENCED";
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub rule: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub object: Option<ObjectId>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.object {
            Some(id) => write!(f, "{} {} {}: {}", self.rule, id.kind(), id, self.message),
            None => write!(f, "{}: {}", self.rule, self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

impl Default for ValidationReport {
    fn default() -> Self {
        Self::from_violations(Vec::new())
    }
}

impl ValidationReport {
    pub fn from_violations(mut violations: Vec<Violation>) -> Self {
        violations.sort_by(|a, b| (a.rule, a.object, &a.message).cmp(&(b.rule, b.object, &b.message)));
        violations.dedup();
        Self {
            ok: violations.is_empty(),
            violations,
        }
    }

    pub fn single(rule: &'static str, object: Option<ObjectId>, message: String) -> Self {
        Self::from_violations(vec![Violation { rule, object, message }])
    }

    pub fn has(&self, rule: &str) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }

    pub fn rules(&self) -> BTreeSet<&'static str> {
        self.violations.iter().map(|v| v.rule).collect()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ok {
            return f.write_str("ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

#[derive(Default)]
struct Sink(Vec<Violation>);

impl Sink {
    fn push(&mut self, rule: &'static str, object: impl Into<ObjectId>, message: impl Into<String>) {
        self.0.push(Violation {
            rule,
            object: Some(object.into()),
            message: message.into(),
        });
    }

    fn finish(self) -> ValidationReport {
        ValidationReport::from_violations(self.0)
    }
}

fn check_entity(e: &DataEntity, out: &mut Sink) {
    if e.name.is_empty() {
        out.push(rules::EMPTY_NAME, e.id, "entity name is empty");
    }
    if let Err(err) = check_properties(&e.properties) {
        out.push(rules::MALFORMED_PROPERTY, e.id, err.to_string());
    }
}

fn check_grouping(cat: &Catalog, g: &Grouping, out: &mut Sink) {
    if g.name.is_empty() {
        out.push(rules::EMPTY_NAME, g.id, "grouping name is empty");
    }
    if cat.idx.grouping_names.get(&g.name).is_some_and(|s| s.len() > 1) {
        out.push(rules::DUPLICATE_GROUPING_NAME, g.id, format!("grouping name {:?} is not unique", g.name));
    }
    if g.is_partition {
        check_partition(cat, g.id, out);
    }
}

fn check_partition(cat: &Catalog, grouping: GroupingId, out: &mut Sink) {
    let mut seen: BTreeMap<EntityId, GroupId> = BTreeMap::new();
    for group in cat.groups_of_grouping(grouping) {
        for &m in &group.members {
            if let Some(first) = seen.insert(m, group.id) {
                out.push(
                    rules::PARTITION_OVERLAP,
                    m,
                    format!("entity is in groups {first} and {} of partition grouping {grouping}", group.id),
                );
            }
        }
    }
}

fn check_group(cat: &Catalog, g: &Group, out: &mut Sink) {
    if g.label.is_empty() {
        out.push(rules::EMPTY_NAME, g.id, "group label is empty");
    }
    match cat.groupings.get(&g.grouping) {
        None => out.push(rules::DANGLING_GROUPING, g.id, format!("grouping {} does not exist", g.grouping)),
        Some(grouping) => {
            if grouping.is_partition {
                for &m in &g.members {
                    let others = cat
                        .groups_of(m)
                        .into_iter()
                        .filter(|other| *other != g.id)
                        .filter(|other| cat.groups.get(other).is_some_and(|o| o.grouping == g.grouping))
                        .count();
                    if others > 0 {
                        out.push(
                            rules::PARTITION_OVERLAP,
                            m,
                            format!("entity is in more than one group of partition grouping {:?}", grouping.name),
                        );
                    }
                }
            }
        }
    }
    for &m in &g.members {
        if !cat.entities.contains_key(&m) {
            out.push(rules::DANGLING_MEMBER, g.id, format!("member {m} does not exist"));
        }
    }
    if cat
        .idx
        .group_labels
        .get(&(g.grouping, g.label.clone()))
        .is_some_and(|s| s.len() > 1)
    {
        out.push(rules::DUPLICATE_GROUP_LABEL, g.id, format!("label {:?} is not unique in its grouping", g.label));
    }
}

fn check_link(cat: &Catalog, l: &Link, out: &mut Sink) {
    if l.label.is_empty() {
        out.push(rules::EMPTY_NAME, l.id, "link label is empty");
    }
    if l.ends.is_self_loop() {
        out.push(rules::SELF_LOOP, l.id, "link source equals target");
    } else if !l.directed && !l.ends.is_ascending() {
        out.push(rules::UNNORMALIZED_LINK, l.id, "undirected link ends are not in ascending id order");
    }
    let missing: Vec<String> = match l.ends {
        Endpoints::Entity { source, target } => [source, target]
            .into_iter()
            .filter(|e| !cat.entities.contains_key(e))
            .map(|e| format!("entity {e}"))
            .collect(),
        Endpoints::Group { source, target } => [source, target]
            .into_iter()
            .filter(|g| !cat.groups.contains_key(g))
            .map(|g| format!("group {g}"))
            .collect(),
    };
    for m in missing {
        out.push(rules::DANGLING_ENDPOINT, l.id, format!("endpoint {m} does not exist"));
    }
    if let Err(err) = check_properties(&l.properties) {
        out.push(rules::MALFORMED_PROPERTY, l.id, err.to_string());
    }
}

fn check_process(cat: &Catalog, p: &Process, out: &mut Sink) {
    if p.name.is_empty() {
        out.push(rules::EMPTY_NAME, p.id, "process name is empty");
    }
    if p.outputs.is_empty() {
        out.push(rules::EMPTY_OUTPUTS, p.id, "process has no outputs");
    }
    for e in p.inputs.intersection(&p.outputs) {
        out.push(rules::INPUT_OUTPUT_OVERLAP, p.id, format!("entity {e} is both input and output"));
    }
    for e in p.inputs.iter().chain(&p.outputs) {
        if !cat.entities.contains_key(e) {
            out.push(rules::DANGLING_PROCESS_ENTITY, p.id, format!("entity {e} does not exist"));
        }
    }
    if let Err(err) = check_properties(&p.properties) {
        out.push(rules::MALFORMED_PROPERTY, p.id, err.to_string());
    }
}

/// Full validation of every invariant, including index coherence.
pub fn validate(cat: &Catalog) -> ValidationReport {
    let mut out = Sink::default();
    for e in cat.entities.values() {
        check_entity(e, &mut out);
    }
    for g in cat.groupings.values() {
        check_grouping(cat, g, &mut out);
    }
    for g in cat.groups.values() {
        check_group(cat, g, &mut out);
    }
    for l in cat.links.values() {
        check_link(cat, l, &mut out);
    }
    for p in cat.processes.values() {
        check_process(cat, p, &mut out);
    }
    for p in cyclic_processes(cat) {
        out.push(rules::LINEAGE_CYCLE, p, "process lies on a lineage cycle");
    }
    if !cat.indexes_coherent() {
        out.0.push(Violation {
            rule: rules::INDEX_INCOHERENT,
            object: None,
            message: "indexes differ from a full rebuild".into(),
        });
    }
    out.finish()
}

/// Checks only what a batch could have broken, assuming the catalog before
/// the batch was valid. Accepts exactly when [`validate`] would.
pub(crate) fn check_delta(cat: &Catalog, touched: &Touched) -> ValidationReport {
    let mut out = Sink::default();
    let mut new_processes = Vec::new();
    for &id in &touched.put {
        match id {
            ObjectId::Entity(e) => check_entity(&cat.entities[&e], &mut out),
            ObjectId::Grouping(g) => check_grouping(cat, &cat.groupings[&g], &mut out),
            ObjectId::Group(g) => check_group(cat, &cat.groups[&g], &mut out),
            ObjectId::Link(l) => check_link(cat, &cat.links[&l], &mut out),
            ObjectId::Process(p) => {
                check_process(cat, &cat.processes[&p], &mut out);
                new_processes.push(p);
            }
        }
    }
    for &id in &touched.deleted {
        // A replaced grouping name or group label frees its slot; nothing
        // else to check for kinds nobody refers to.
        let referrers = cat.referrers(id);
        if !referrers.is_empty() {
            let list: Vec<String> = referrers.iter().map(|r| format!("{} {r}", r.kind())).collect();
            out.push(
                rules::STILL_REFERENCED,
                id,
                format!("deleted {} is still referenced by {}", id.kind(), list.join(", ")),
            );
        }
    }
    for p in new_processes {
        if let Some(proc_) = cat.processes.get(&p) {
            if closes_cycle(cat, proc_) {
                out.push(rules::LINEAGE_CYCLE, p, "process closes a lineage cycle");
            }
        }
    }
    out.finish()
}

/// Whether some input of `p` is reachable downstream from its outputs.
fn closes_cycle(cat: &Catalog, p: &Process) -> bool {
    if p.inputs.is_empty() {
        return false;
    }
    let mut seen: BTreeSet<EntityId> = BTreeSet::new();
    let mut stack: Vec<EntityId> = p.outputs.iter().copied().collect();
    while let Some(e) = stack.pop() {
        if p.inputs.contains(&e) {
            return true;
        }
        if !seen.insert(e) {
            continue;
        }
        for consumer in cat.consumers_of(e) {
            stack.extend(consumer.outputs.iter().copied().filter(|o| !seen.contains(o)));
        }
    }
    false
}

/// Processes inside a non-trivial strongly connected component of the
/// bipartite entity/process lineage graph.
fn cyclic_processes(cat: &Catalog) -> Vec<ProcessId> {
    #[derive(Clone, Copy, PartialEq, Eq, Hash)]
    enum Node {
        E(EntityId),
        P(ProcessId),
    }
    let mut index: HashMap<Node, usize> = HashMap::new();
    let mut nodes: Vec<Node> = Vec::new();
    let mut intern = |n: Node, nodes: &mut Vec<Node>| -> usize {
        *index.entry(n).or_insert_with(|| {
            nodes.push(n);
            nodes.len() - 1
        })
    };
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for p in cat.processes.values() {
        let pi = intern(Node::P(p.id), &mut nodes);
        for &i in &p.inputs {
            let ii = intern(Node::E(i), &mut nodes);
            edges.push((ii, pi));
        }
        for &o in &p.outputs {
            let oi = intern(Node::E(o), &mut nodes);
            edges.push((pi, oi));
        }
    }
    let n = nodes.len();
    let mut fwd = vec![Vec::new(); n];
    let mut rev = vec![Vec::new(); n];
    for &(a, b) in &edges {
        fwd[a].push(b);
        rev[b].push(a);
    }
    // Kosaraju: finishing order on the forward graph, then components on the
    // reverse graph.
    let mut order = Vec::with_capacity(n);
    let mut visited = vec![false; n];
    for start in 0..n {
        if visited[start] {
            continue;
        }
        visited[start] = true;
        let mut stack = vec![(start, 0usize)];
        while let Some((v, i)) = stack.pop() {
            if let Some(&w) = fwd[v].get(i) {
                stack.push((v, i + 1));
                if !visited[w] {
                    visited[w] = true;
                    stack.push((w, 0));
                }
            } else {
                order.push(v);
            }
        }
    }
    let mut comp = vec![usize::MAX; n];
    let mut sizes = Vec::new();
    for &start in order.iter().rev() {
        if comp[start] != usize::MAX {
            continue;
        }
        let c = sizes.len();
        sizes.push(0usize);
        comp[start] = c;
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            sizes[c] += 1;
            for &w in &rev[v] {
                if comp[w] == usize::MAX {
                    comp[w] = c;
                    stack.push(w);
                }
            }
        }
    }
    let mut out: Vec<ProcessId> = nodes
        .iter()
        .enumerate()
        .filter_map(|(i, node)| match node {
            Node::P(p) if sizes[comp[i]] > 1 => Some(*p),
            _ => None,
        })
        .collect();
    out.sort();
    out
}
