//! The four catalog concepts: data entities, groupings with their groups,
//! links and processes.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::ids::{EntityId, GroupId, GroupingId, LinkId, ParseIdError, ProcessId};
use crate::value::{Properties, Timestamp, ValueError};

/// Reserved link label for granularity containment (parent → part).
pub const CONTAINS: &str = "contains";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("{0} name must not be empty")]
    EmptyName(&'static str),
    #[error("property {label:?} is malformed: {source}")]
    MalformedProperty { label: String, source: ValueError },
    #[error("property label must not be empty")]
    EmptyPropertyLabel,
    #[error("link endpoints mix an entity and a group")]
    MixedEndpoints,
    #[error("link source and target are the same object")]
    SelfLoop,
    #[error("link endpoints are not of the declared {0} kind")]
    KindMismatch(EndpointKind),
    #[error("process must produce at least one entity")]
    EmptyOutputs,
    #[error("entities {0:?} are both input and output of the process")]
    InputOutputOverlap(Vec<EntityId>),
}

pub(crate) fn check_properties(props: &Properties) -> Result<(), ModelError> {
    for (label, value) in props {
        if label.is_empty() {
            return Err(ModelError::EmptyPropertyLabel);
        }
        value.check().map_err(|source| ModelError::MalformedProperty {
            label: label.clone(),
            source,
        })?;
    }
    Ok(())
}

/// Metadata node for one data element at any granularity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataEntity {
    pub id: EntityId,
    pub name: String,
    pub properties: Properties,
    /// Revision of the batch that first committed this entity.
    pub created_rev: u64,
}

impl DataEntity {
    pub fn new(name: impl Into<String>, properties: Properties) -> Result<Self, ModelError> {
        let name = name.into();
        if name.is_empty() {
            return Err(ModelError::EmptyName("entity"));
        }
        check_properties(&properties)?;
        Ok(Self {
            id: EntityId::random(),
            name,
            properties,
            created_rev: 0,
        })
    }
}

/// A named classification axis; its groups are the values along that axis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grouping {
    pub id: GroupingId,
    pub name: String,
    /// When set, no entity may belong to two groups of this grouping.
    pub is_partition: bool,
}

impl Grouping {
    pub fn new(name: impl Into<String>, is_partition: bool) -> Result<Self, ModelError> {
        let name = name.into();
        if name.is_empty() {
            return Err(ModelError::EmptyName("grouping"));
        }
        Ok(Self {
            id: GroupingId::random(),
            name,
            is_partition,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Group {
    pub id: GroupId,
    pub grouping: GroupingId,
    pub label: String,
    pub members: BTreeSet<EntityId>,
}

impl Group {
    pub fn new(
        grouping: GroupingId,
        label: impl Into<String>,
        members: impl IntoIterator<Item = EntityId>,
    ) -> Result<Self, ModelError> {
        let label = label.into();
        if label.is_empty() {
            return Err(ModelError::EmptyName("group"));
        }
        Ok(Self {
            id: GroupId::random(),
            grouping,
            label,
            members: members.into_iter().collect(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EndpointKind {
    Entity,
    Group,
}

impl std::fmt::Display for EndpointKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EndpointKind::Entity => "entity",
            EndpointKind::Group => "group",
        })
    }
}

/// Either endpoint of a link before kind checking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeRef {
    Entity(EntityId),
    Group(GroupId),
}

/// Link endpoints; both sides always have the same kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Endpoints {
    Entity { source: EntityId, target: EntityId },
    Group { source: GroupId, target: GroupId },
}

impl Endpoints {
    pub fn kind(&self) -> EndpointKind {
        match self {
            Endpoints::Entity { .. } => EndpointKind::Entity,
            Endpoints::Group { .. } => EndpointKind::Group,
        }
    }

    pub fn source(&self) -> NodeRef {
        match *self {
            Endpoints::Entity { source, .. } => NodeRef::Entity(source),
            Endpoints::Group { source, .. } => NodeRef::Group(source),
        }
    }

    pub fn target(&self) -> NodeRef {
        match *self {
            Endpoints::Entity { target, .. } => NodeRef::Entity(target),
            Endpoints::Group { target, .. } => NodeRef::Group(target),
        }
    }

    fn raw(&self) -> (u128, u128) {
        match *self {
            Endpoints::Entity { source, target } => (source.as_u128(), target.as_u128()),
            Endpoints::Group { source, target } => (source.as_u128(), target.as_u128()),
        }
    }

    fn swapped(self) -> Self {
        match self {
            Endpoints::Entity { source, target } => Endpoints::Entity { source: target, target: source },
            Endpoints::Group { source, target } => Endpoints::Group { source: target, target: source },
        }
    }

    pub fn is_self_loop(&self) -> bool {
        let (s, t) = self.raw();
        s == t
    }

    /// Whether an undirected link with these ends is in stored (ascending) order.
    pub fn is_ascending(&self) -> bool {
        let (s, t) = self.raw();
        s < t
    }
}

/// Binary labeled relation between two entities or two groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "LinkRepr", try_from = "LinkRepr")]
pub struct Link {
    pub id: LinkId,
    pub ends: Endpoints,
    pub directed: bool,
    pub label: String,
    pub properties: Properties,
}

impl Link {
    pub fn new(
        kind: EndpointKind,
        source: NodeRef,
        target: NodeRef,
        directed: bool,
        label: impl Into<String>,
    ) -> Result<Self, ModelError> {
        let label = label.into();
        let ends = match (source, target) {
            (NodeRef::Entity(source), NodeRef::Entity(target)) => Endpoints::Entity { source, target },
            (NodeRef::Group(source), NodeRef::Group(target)) => Endpoints::Group { source, target },
            _ => return Err(ModelError::MixedEndpoints),
        };
        if ends.kind() != kind {
            return Err(ModelError::KindMismatch(kind));
        }
        if ends.is_self_loop() {
            return Err(ModelError::SelfLoop);
        }
        if label.is_empty() {
            return Err(ModelError::EmptyName("link label"));
        }
        let ends = if !directed && !ends.is_ascending() { ends.swapped() } else { ends };
        Ok(Self {
            id: LinkId::random(),
            ends,
            directed,
            label,
            properties: Properties::new(),
        })
    }

    pub fn with_properties(mut self, properties: Properties) -> Result<Self, ModelError> {
        check_properties(&properties)?;
        self.properties = properties;
        Ok(self)
    }

    pub fn kind(&self) -> EndpointKind {
        self.ends.kind()
    }

    /// Identity of the relation regardless of link id: for undirected links
    /// the stored ends are normalized, so this is order-insensitive.
    pub fn relation(&self) -> (Endpoints, bool, &str) {
        (self.ends, self.directed, &self.label)
    }

    /// Entity endpoints, if this is an entity-level link.
    pub fn entity_ends(&self) -> Option<(EntityId, EntityId)> {
        match self.ends {
            Endpoints::Entity { source, target } => Some((source, target)),
            Endpoints::Group { .. } => None,
        }
    }

    pub fn group_ends(&self) -> Option<(GroupId, GroupId)> {
        match self.ends {
            Endpoints::Group { source, target } => Some((source, target)),
            Endpoints::Entity { .. } => None,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinkRepr {
    id: LinkId,
    endpoint_kind: EndpointKind,
    source: String,
    target: String,
    directed: bool,
    label: String,
    properties: Properties,
}

impl From<Link> for LinkRepr {
    fn from(link: Link) -> Self {
        let (source, target) = match link.ends {
            Endpoints::Entity { source, target } => (source.to_string(), target.to_string()),
            Endpoints::Group { source, target } => (source.to_string(), target.to_string()),
        };
        LinkRepr {
            id: link.id,
            endpoint_kind: link.ends.kind(),
            source,
            target,
            directed: link.directed,
            label: link.label,
            properties: link.properties,
        }
    }
}

impl TryFrom<LinkRepr> for Link {
    type Error = ParseIdError;

    fn try_from(r: LinkRepr) -> Result<Self, Self::Error> {
        let ends = match r.endpoint_kind {
            EndpointKind::Entity => Endpoints::Entity {
                source: r.source.parse()?,
                target: r.target.parse()?,
            },
            EndpointKind::Group => Endpoints::Group {
                source: r.source.parse()?,
                target: r.target.parse()?,
            },
        };
        Ok(Link {
            id: r.id,
            ends,
            directed: r.directed,
            label: r.label,
            properties: r.properties,
        })
    }
}

/// Transformation from a set of input entities to a non-empty set of newly
/// produced entities. Lineage is the relation these hyperedges induce.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Process {
    pub id: ProcessId,
    pub name: String,
    pub inputs: BTreeSet<EntityId>,
    pub outputs: BTreeSet<EntityId>,
    pub definition: String,
    pub properties: Properties,
    pub executed_at: Timestamp,
}

impl Process {
    pub fn new(
        name: impl Into<String>,
        inputs: impl IntoIterator<Item = EntityId>,
        outputs: impl IntoIterator<Item = EntityId>,
        definition: impl Into<String>,
    ) -> Result<Self, ModelError> {
        let name = name.into();
        if name.is_empty() {
            return Err(ModelError::EmptyName("process"));
        }
        let inputs: BTreeSet<_> = inputs.into_iter().collect();
        let outputs: BTreeSet<_> = outputs.into_iter().collect();
        if outputs.is_empty() {
            return Err(ModelError::EmptyOutputs);
        }
        let overlap: Vec<_> = inputs.intersection(&outputs).copied().collect();
        if !overlap.is_empty() {
            return Err(ModelError::InputOutputOverlap(overlap));
        }
        Ok(Self {
            id: ProcessId::random(),
            name,
            inputs,
            outputs,
            definition: definition.into(),
            properties: Properties::new(),
            executed_at: Timestamp::now(),
        })
    }

    pub fn with_properties(mut self, properties: Properties) -> Result<Self, ModelError> {
        check_properties(&properties)?;
        self.properties = properties;
        Ok(self)
    }

    pub fn touches(&self, entity: EntityId) -> bool {
        self.inputs.contains(&entity) || self.outputs.contains(&entity)
    }
}
