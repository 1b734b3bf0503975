//! Seeded generators and brute-force oracles shared by the integration
//! tests and the acceptance suite.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use gmdl_core::query::{CmpOp, Direction, Literal, Predicate, Query};
use gmdl_core::{
    Batch, Catalog, DataEntity, EndpointKind, EntityId, Group, GroupId, Grouping, GroupingId, Link, LinkId,
    NodeRef, ObjectId, Process, ProcessId, Properties, PropertyValue, Timestamp,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const ODD_TEXT: &[&str] = &[
    "",
    "plain",
    "with \"quotes\"",
    "back\\slash",
    "tab\tnew\nline",
    "<xml & 'stuff'>",
    "données brutes",
    "\u{1F4C8} chart",
    "\u{0007}bell",
];

pub fn text(rng: &mut ChaCha8Rng) -> String {
    if rng.gen_bool(0.5) {
        ODD_TEXT.choose(rng).unwrap().to_string()
    } else {
        format!("v{}", rng.gen_range(0..1000))
    }
}

pub fn scalar(rng: &mut ChaCha8Rng) -> PropertyValue {
    match rng.gen_range(0..5) {
        0 => PropertyValue::Text(text(rng)),
        1 => PropertyValue::Int(rng.gen_range(-1_000_000..1_000_000)),
        2 => {
            let r: f64 = match rng.gen_range(0..4) {
                0 => 0.1 + 0.2,
                1 => rng.gen_range(-1e6..1e6),
                2 => 1e-300 * rng.gen_range(1.0..9.0),
                _ => rng.gen_range(-10..10) as f64,
            };
            PropertyValue::Real(r)
        }
        3 => PropertyValue::Bool(rng.gen()),
        _ => PropertyValue::Timestamp(Timestamp::from_millis(rng.gen_range(-10_000_000_000_000..10_000_000_000_000)).unwrap()),
    }
}

pub fn value(rng: &mut ChaCha8Rng) -> PropertyValue {
    if rng.gen_bool(0.15) {
        let n = rng.gen_range(0..4);
        let proto = scalar(rng);
        let items = (0..n)
            .map(|_| loop {
                let v = scalar(rng);
                if v.tag() == proto.tag() {
                    break v;
                }
            })
            .collect();
        PropertyValue::List(items)
    } else {
        scalar(rng)
    }
}

pub fn properties(rng: &mut ChaCha8Rng) -> Properties {
    let n = rng.gen_range(0..4);
    (0..n)
        .map(|_| (["size", "owner", "format", "score", "é"].choose(rng).unwrap().to_string(), value(rng)))
        .collect()
}

pub fn entity(rng: &mut ChaCha8Rng) -> DataEntity {
    let mut name = text(rng);
    if name.is_empty() {
        name.push('x');
    }
    let mut e = DataEntity::new(name, properties(rng)).unwrap();
    e.id = EntityId::from_u128(rng.gen());
    e
}

#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub entities: usize,
    pub groupings: usize,
    pub groups: usize,
    pub links: usize,
    pub processes: usize,
}

impl Shape {
    pub fn small() -> Self {
        Shape {
            entities: 20,
            groupings: 3,
            groups: 8,
            links: 15,
            processes: 10,
        }
    }
}

/// A catalog satisfying every invariant: partition groupings get disjoint
/// groups, and processes only feed entities later in a random topological
/// order, so lineage is acyclic by construction.
pub fn catalog(rng: &mut ChaCha8Rng, shape: Shape) -> Catalog {
    let mut b = Batch::new();
    let entities: Vec<EntityId> = (0..shape.entities)
        .map(|_| {
            let e = entity(rng);
            let id = e.id;
            b.put_entity(e);
            id
        })
        .collect();

    let mut groupings = Vec::new();
    for i in 0..shape.groupings {
        let mut g = Grouping::new(format!("axis{i}"), rng.gen_bool(0.5)).unwrap();
        g.id = GroupingId::from_u128(rng.gen());
        groupings.push(g.clone());
        b.put_grouping(g);
    }
    let mut groups: Vec<GroupId> = Vec::new();
    let mut used_in_partition: BTreeMap<GroupingId, BTreeSet<EntityId>> = BTreeMap::new();
    for i in 0..shape.groups {
        if groupings.is_empty() {
            break;
        }
        let gr = groupings.choose(rng).unwrap().clone();
        let mut members = BTreeSet::new();
        for _ in 0..rng.gen_range(0..=4.min(entities.len())) {
            let e = *entities.choose(rng).unwrap();
            if gr.is_partition && !used_in_partition.entry(gr.id).or_default().insert(e) {
                continue;
            }
            members.insert(e);
        }
        let mut g = Group::new(gr.id, format!("g{i}"), members).unwrap();
        g.id = GroupId::from_u128(rng.gen());
        groups.push(g.id);
        b.put_group(g);
    }

    for _ in 0..shape.links {
        let (kind, s, t) = if groups.len() >= 2 && rng.gen_bool(0.3) {
            let pick: Vec<_> = groups.choose_multiple(rng, 2).copied().collect();
            (EndpointKind::Group, NodeRef::Group(pick[0]), NodeRef::Group(pick[1]))
        } else if entities.len() >= 2 {
            let pick: Vec<_> = entities.choose_multiple(rng, 2).copied().collect();
            (EndpointKind::Entity, NodeRef::Entity(pick[0]), NodeRef::Entity(pick[1]))
        } else {
            break;
        };
        let label = ["similar", "contains", "part_of", "derived"].choose(rng).unwrap();
        let mut l = Link::new(kind, s, t, rng.gen(), *label).unwrap().with_properties(properties(rng)).unwrap();
        l.id = LinkId::from_u128(rng.gen());
        b.put_link(l);
    }

    let mut order = entities.clone();
    order.shuffle(rng);
    if order.len() >= 2 {
        for i in 0..shape.processes {
            let cut = rng.gen_range(1..order.len());
            let n_in = rng.gen_range(0..=3.min(cut));
            let n_out = rng.gen_range(1..=2.min(order.len() - cut));
            let ins: Vec<EntityId> = order[..cut]
                .choose_multiple(rng, n_in)
                .copied()
                .collect();
            let outs: Vec<EntityId> = order[cut..]
                .choose_multiple(rng, n_out)
                .copied()
                .collect();
            let mut p = Process::new(format!("proc{i}"), ins, outs, text(rng))
                .unwrap()
                .with_properties(properties(rng))
                .unwrap();
            p.id = ProcessId::from_u128(rng.gen());
            p.executed_at = Timestamp::from_millis(rng.gen_range(0..2_000_000_000_000)).unwrap();
            b.put_process(p);
        }
    }

    let mut cat = Catalog::new();
    cat.commit(&b).expect("generated catalogs are valid");
    cat
}

/// Fixed-point closure over process hyperedges. Each round fires every
/// process touching the previous round's nodes, so `depth` rounds reach
/// exactly the entities within that many process hops.
pub fn closure(
    cat: &Catalog,
    root: EntityId,
    dir: Direction,
    depth: Option<u32>,
) -> (BTreeSet<EntityId>, BTreeSet<ProcessId>) {
    let mut nodes = BTreeSet::from([root]);
    let mut procs = BTreeSet::new();
    let mut round = 0;
    while depth.is_none_or(|d| round < d) {
        round += 1;
        let mut next_nodes = nodes.clone();
        let mut next_procs = procs.clone();
        for p in cat.processes() {
            let (from, to) = match dir {
                Direction::Downstream => (&p.inputs, &p.outputs),
                Direction::Upstream => (&p.outputs, &p.inputs),
            };
            if from.iter().any(|e| nodes.contains(e)) {
                next_procs.insert(p.id);
                next_nodes.extend(to.iter().copied());
            }
        }
        if (next_nodes.len(), next_procs.len()) == (nodes.len(), procs.len()) {
            break;
        }
        nodes = next_nodes;
        procs = next_procs;
    }
    (nodes, procs)
}

fn literal(rng: &mut ChaCha8Rng) -> Literal {
    match rng.gen_range(0..4) {
        0 => Literal::Str(text(rng)),
        1 => Literal::Int(rng.gen_range(i64::MIN / 2..i64::MAX / 2) >> rng.gen_range(0..60)),
        2 => Literal::Real(match rng.gen_range(0..3) {
            0 => rng.gen_range(-1e3..1e3),
            1 => rng.gen_range(-1e20..1e20),
            _ => rng.gen_range(-5..5) as f64 / 8.0,
        }),
        _ => Literal::Bool(rng.gen()),
    }
}

pub fn predicate(rng: &mut ChaCha8Rng, depth: u32) -> Predicate {
    if depth == 0 || rng.gen_bool(0.35) {
        let property = if rng.gen_bool(0.2) { text(rng) } else { "size".to_string() };
        return Predicate::cmp(property, *CmpOp::ALL.choose(rng).unwrap(), literal(rng));
    }
    match rng.gen_range(0..3) {
        0 => predicate(rng, depth - 1).and(predicate(rng, depth - 1)),
        1 => predicate(rng, depth - 1).or(predicate(rng, depth - 1)),
        _ => predicate(rng, depth - 1).negate(),
    }
}

fn direction(rng: &mut ChaCha8Rng) -> Direction {
    if rng.gen() {
        Direction::Upstream
    } else {
        Direction::Downstream
    }
}

/// A random query tree covering every production of the grammar.
pub fn query(rng: &mut ChaCha8Rng) -> Query {
    match rng.gen_range(0..6) {
        0 => Query::Select {
            predicate: rng.gen_bool(0.8).then(|| predicate(rng, 4)),
        },
        1 => Query::MembersOf {
            grouping: text(rng),
            label: text(rng),
        },
        2 => Query::GroupsOf {
            entity: EntityId::from_u128(rng.gen()),
        },
        3 => Query::Lineage {
            entity: EntityId::from_u128(rng.gen()),
            direction: direction(rng),
            depth: rng.gen_bool(0.5).then(|| rng.gen_range(1..100)),
        },
        4 => Query::Rollup {
            group: GroupId::from_u128(rng.gen()),
            label: text(rng),
        },
        _ => Query::Neighbors {
            entity: EntityId::from_u128(rng.gen()),
            label: rng.gen_bool(0.5).then(|| text(rng)),
            direction: rng.gen_bool(0.5).then(|| direction(rng)),
        },
    }
}

/// Every object id in the catalog.
pub fn all_ids(cat: &Catalog) -> Vec<ObjectId> {
    let mut ids: Vec<ObjectId> = Vec::new();
    ids.extend(cat.entities().map(|e| ObjectId::from(e.id)));
    ids.extend(cat.groupings().map(|g| ObjectId::from(g.id)));
    ids.extend(cat.groups().map(|g| ObjectId::from(g.id)));
    ids.extend(cat.links().map(|l| ObjectId::from(l.id)));
    ids.extend(cat.processes().map(|p| ObjectId::from(p.id)));
    ids
}

/// One random mutation batch, possibly invalid.
pub fn random_batch(rng: &mut ChaCha8Rng, cat: &Catalog) -> Batch {
    let entities: Vec<EntityId> = cat.entities().map(|e| e.id).collect();
    let groups: Vec<GroupId> = cat.groups().map(|g| g.id).collect();
    let groupings: Vec<GroupingId> = cat.groupings().map(|g| g.id).collect();
    let ids = all_ids(cat);
    let pick_entity = |rng: &mut ChaCha8Rng| -> EntityId {
        if entities.is_empty() || rng.gen_bool(0.05) {
            EntityId::from_u128(rng.gen())
        } else {
            *entities.choose(rng).unwrap()
        }
    };
    let mut b = Batch::new();
    for _ in 0..rng.gen_range(1..=3) {
        match rng.gen_range(0..100) {
            0..=29 => {
                b.put_entity(entity(rng));
            }
            30..=44 if !ids.is_empty() => {
                b.delete(*ids.choose(rng).unwrap());
            }
            45..=59 => {
                let (s, t) = if groups.len() >= 2 && rng.gen_bool(0.3) {
                    (NodeRef::Group(*groups.choose(rng).unwrap()), NodeRef::Group(*groups.choose(rng).unwrap()))
                } else {
                    (NodeRef::Entity(pick_entity(rng)), NodeRef::Entity(pick_entity(rng)))
                };
                let kind = match s {
                    NodeRef::Entity(_) => EndpointKind::Entity,
                    NodeRef::Group(_) => EndpointKind::Group,
                };
                if let Ok(l) = Link::new(kind, s, t, rng.gen(), "rel") {
                    b.put_link(l);
                }
            }
            60..=74 => {
                let grouping = if groupings.is_empty() || rng.gen_bool(0.2) {
                    let g = Grouping::new(format!("axis{}", rng.gen_range(0..4)), rng.gen_bool(0.5)).unwrap();
                    let id = g.id;
                    b.put_grouping(g);
                    id
                } else {
                    *groupings.choose(rng).unwrap()
                };
                let members: Vec<EntityId> = (0..rng.gen_range(0..4)).map(|_| pick_entity(rng)).collect();
                b.put_group(Group::new(grouping, format!("g{}", rng.gen_range(0..6)), members).unwrap());
            }
            _ => {
                let ins: Vec<EntityId> = (0..rng.gen_range(0..3)).map(|_| pick_entity(rng)).collect();
                let outs: Vec<EntityId> = (0..rng.gen_range(1..3)).map(|_| pick_entity(rng)).collect();
                if let Ok(p) = Process::new("step", ins, outs, "") {
                    b.put_process(p);
                }
            }
        }
    }
    b
}
