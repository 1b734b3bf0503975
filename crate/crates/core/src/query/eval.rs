use std::cmp::Ordering;
use std::collections::{BTreeSet, VecDeque};

use serde::Serialize;

use super::ast::{CmpOp, Direction, Literal, Predicate, Query};
use super::parser::{parse_query, SyntaxError};
use crate::catalog::{Catalog, Object};
use crate::ids::{EntityId, GroupId, ObjectId, ObjectKind, ProcessId};
use crate::value::{Properties, PropertyValue};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QueryError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("unknown {kind} {id}")]
    UnknownId { kind: ObjectKind, id: String },
    #[error("unknown grouping {0:?}")]
    UnknownGrouping(String),
}

fn unknown(kind: ObjectKind, id: impl ToString) -> QueryError {
    QueryError::UnknownId {
        kind,
        id: id.to_string(),
    }
}

/// A process restricted to the entities of a lineage result.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LineageEdge {
    pub process: ProcessId,
    pub inputs: Vec<EntityId>,
    pub outputs: Vec<EntityId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LineageGraph {
    pub root: EntityId,
    pub direction: Direction,
    pub depth: Option<u32>,
    /// Reachable entities including the root, sorted.
    pub nodes: Vec<EntityId>,
    /// Traversed processes, sorted by process id.
    pub hyperedges: Vec<LineageEdge>,
}

impl LineageGraph {
    pub fn node_set(&self) -> BTreeSet<EntityId> {
        self.nodes.iter().copied().collect()
    }

    pub fn process_set(&self) -> BTreeSet<ProcessId> {
        self.hyperedges.iter().map(|h| h.process).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ResultSet {
    Entities { ids: Vec<EntityId> },
    Groups { ids: Vec<GroupId> },
    Lineage { graph: LineageGraph },
}

impl ResultSet {
    /// The ids of the result as strings, in result order.
    pub fn id_strings(&self) -> Vec<String> {
        match self {
            ResultSet::Entities { ids } => ids.iter().map(ToString::to_string).collect(),
            ResultSet::Groups { ids } => ids.iter().map(ToString::to_string).collect(),
            ResultSet::Lineage { graph } => graph.nodes.iter().map(ToString::to_string).collect(),
        }
    }
}

fn literal_value(lit: &Literal) -> PropertyValue {
    match lit {
        Literal::Str(s) => PropertyValue::Text(s.clone()),
        Literal::Int(i) => PropertyValue::Int(*i),
        Literal::Real(x) => PropertyValue::Real(*x),
        Literal::Bool(b) => PropertyValue::Bool(*b),
    }
}

/// Evaluates a predicate over a property map. A comparison against a
/// missing or incomparable property is false.
pub fn matches(pred: &Predicate, props: &Properties) -> bool {
    match pred {
        Predicate::And(a, b) => matches(a, props) && matches(b, props),
        Predicate::Or(a, b) => matches(a, props) || matches(b, props),
        Predicate::Not(a) => !matches(a, props),
        Predicate::Cmp { property, op, value } => {
            let Some(actual) = props.get(property) else {
                return false;
            };
            let expected = literal_value(value);
            if *op == CmpOp::Contains {
                return match (actual, &expected) {
                    (PropertyValue::Text(hay), PropertyValue::Text(needle)) => hay.contains(needle.as_str()),
                    (PropertyValue::List(items), _) => {
                        items.iter().any(|i| i.compare(&expected) == Some(Ordering::Equal))
                    }
                    _ => false,
                };
            }
            let Some(ord) = actual.compare(&expected) else {
                return false;
            };
            match op {
                CmpOp::Eq => ord == Ordering::Equal,
                CmpOp::Ne => ord != Ordering::Equal,
                CmpOp::Lt => ord == Ordering::Less,
                CmpOp::Le => ord != Ordering::Greater,
                CmpOp::Gt => ord == Ordering::Greater,
                CmpOp::Ge => ord != Ordering::Less,
                CmpOp::Contains => unreachable!(),
            }
        }
    }
}

fn object_properties<'a>(obj: &Object<'a>) -> Option<&'a Properties> {
    match obj {
        Object::Entity(e) => Some(&e.properties),
        Object::Link(l) => Some(&l.properties),
        Object::Process(p) => Some(&p.properties),
        Object::Grouping(_) | Object::Group(_) => None,
    }
}

/// Ids of `kind` whose properties satisfy `pred`, sorted. Groupings and
/// groups carry no properties and match only when no predicate is given.
pub fn list(cat: &Catalog, kind: ObjectKind, pred: Option<&Predicate>) -> Vec<ObjectId> {
    let empty = Properties::new();
    cat.ids(kind)
        .into_iter()
        .filter(|id| match pred {
            None => true,
            Some(p) => {
                let obj = cat.get(*id).expect("listed id exists");
                matches(p, object_properties(&obj).unwrap_or(&empty))
            }
        })
        .collect()
}

/// Entities linked to `entity` by entity-level links, sorted and distinct.
/// `Downstream` follows directed links source → target, `Upstream` the
/// reverse, `None` either way; undirected links match any direction.
pub fn neighbors(
    cat: &Catalog,
    entity: EntityId,
    label: Option<&str>,
    direction: Option<Direction>,
) -> Result<Vec<EntityId>, QueryError> {
    if cat.entity(entity).is_none() {
        return Err(unknown(ObjectKind::Entity, entity));
    }
    let mut out = BTreeSet::new();
    for link in cat.links_of_entity(entity) {
        if label.is_some_and(|l| l != link.label) {
            continue;
        }
        let Some((s, t)) = link.entity_ends() else { continue };
        let other = if s == entity { t } else { s };
        let ok = !link.directed
            || match direction {
                None => true,
                Some(Direction::Downstream) => s == entity,
                Some(Direction::Upstream) => t == entity,
            };
        if ok {
            out.insert(other);
        }
    }
    Ok(out.into_iter().collect())
}

/// Groups reachable from `group` over directed group-level links labeled
/// `label`, following each link toward its target. The start group itself
/// is not part of the result. Sorted by id.
pub fn rollup(cat: &Catalog, group: GroupId, label: &str) -> Result<Vec<GroupId>, QueryError> {
    if cat.group(group).is_none() {
        return Err(unknown(ObjectKind::Group, group));
    }
    let mut seen = BTreeSet::from([group]);
    let mut stack = vec![group];
    while let Some(g) = stack.pop() {
        for link in cat.links_of_group(g) {
            if !link.directed || link.label != label {
                continue;
            }
            if let Some((s, t)) = link.group_ends() {
                if s == g && seen.insert(t) {
                    stack.push(t);
                }
            }
        }
    }
    seen.remove(&group);
    Ok(seen.into_iter().collect())
}

/// Breadth-first lineage traversal counting process hops. Downstream
/// follows processes from inputs to outputs, upstream from outputs to
/// inputs. `depth: None` is unbounded.
pub fn lineage(
    cat: &Catalog,
    root: EntityId,
    direction: Direction,
    depth: Option<u32>,
) -> Result<LineageGraph, QueryError> {
    if cat.entity(root).is_none() {
        return Err(unknown(ObjectKind::Entity, root));
    }
    let mut nodes = BTreeSet::from([root]);
    let mut procs: BTreeSet<ProcessId> = BTreeSet::new();
    let mut queue = VecDeque::from([(root, 0u32)]);
    while let Some((e, hops)) = queue.pop_front() {
        if depth.is_some_and(|d| hops >= d) {
            continue;
        }
        let next_procs: Vec<_> = match direction {
            Direction::Downstream => cat.consumers_of(e).collect(),
            Direction::Upstream => cat.producers_of(e).collect(),
        };
        for p in next_procs {
            if !procs.insert(p.id) {
                continue;
            }
            let reached = match direction {
                Direction::Downstream => &p.outputs,
                Direction::Upstream => &p.inputs,
            };
            for &r in reached {
                if nodes.insert(r) {
                    queue.push_back((r, hops + 1));
                }
            }
        }
    }
    let hyperedges = procs
        .into_iter()
        .map(|pid| {
            let p = cat.process(pid).expect("indexed process exists");
            let keep = |set: &BTreeSet<EntityId>| set.iter().copied().filter(|e| nodes.contains(e)).collect();
            LineageEdge {
                process: pid,
                inputs: keep(&p.inputs),
                outputs: keep(&p.outputs),
            }
        })
        .collect();
    Ok(LineageGraph {
        root,
        direction,
        depth,
        nodes: nodes.into_iter().collect(),
        hyperedges,
    })
}

pub fn eval(query: &Query, cat: &Catalog) -> Result<ResultSet, QueryError> {
    Ok(match query {
        Query::Select { predicate } => ResultSet::Entities {
            ids: list(cat, ObjectKind::Entity, predicate.as_ref())
                .into_iter()
                .filter_map(|id| match id {
                    ObjectId::Entity(e) => Some(e),
                    _ => None,
                })
                .collect(),
        },
        Query::MembersOf { grouping, label } => {
            let g = cat
                .grouping_by_name(grouping)
                .ok_or_else(|| QueryError::UnknownGrouping(grouping.clone()))?;
            ResultSet::Entities {
                ids: cat
                    .group_by_label(g.id, label)
                    .map(|grp| grp.members.iter().copied().collect())
                    .unwrap_or_default(),
            }
        }
        Query::GroupsOf { entity } => {
            if cat.entity(*entity).is_none() {
                return Err(unknown(ObjectKind::Entity, entity));
            }
            ResultSet::Groups {
                ids: cat.groups_of(*entity),
            }
        }
        Query::Lineage { entity, direction, depth } => ResultSet::Lineage {
            graph: lineage(cat, *entity, *direction, *depth)?,
        },
        Query::Rollup { group, label } => ResultSet::Groups {
            ids: rollup(cat, *group, label)?,
        },
        Query::Neighbors { entity, label, direction } => ResultSet::Entities {
            ids: neighbors(cat, *entity, label.as_deref(), *direction)?,
        },
    })
}

impl Catalog {
    /// Parses and evaluates a query.
    pub fn query(&self, text: &str) -> Result<ResultSet, QueryError> {
        eval(&parse_query(text)?, self)
    }
}
