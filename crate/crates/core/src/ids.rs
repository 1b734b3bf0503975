//! Opaque 128-bit identifiers, one newtype per object kind.
//!
//! The canonical text form is 32 lowercase hex digits. Ordering on the
//! numeric value coincides with ordering on the canonical string, so every
//! id-sorted collection is also sorted by its rendered form.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Error returned when a string is not a canonical identifier.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid identifier {0:?}: expected 32 lowercase hex digits")]
pub struct ParseIdError(pub String);

pub(crate) fn parse_raw(s: &str) -> Result<u128, ParseIdError> {
    let ok = s.len() == 32 && s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'));
    if !ok {
        return Err(ParseIdError(s.to_string()));
    }
    u128::from_str_radix(s, 16).map_err(|_| ParseIdError(s.to_string()))
}

macro_rules! define_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(u128);

        impl $name {
            /// Fresh random identifier.
            pub fn random() -> Self {
                Self(rand::random())
            }

            pub const fn from_u128(raw: u128) -> Self {
                Self(raw)
            }

            pub const fn as_u128(self) -> u128 {
                self.0
            }
        }

        impl From<u128> for $name {
            fn from(raw: u128) -> Self {
                Self(raw)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{:032x}", self.0)
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}({:032x})", stringify!($name), self.0)
            }
        }

        impl FromStr for $name {
            type Err = ParseIdError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                parse_raw(s).map(Self)
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                serializer.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
                let s = String::deserialize(deserializer)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

define_id!(
    /// Identifier of a [`DataEntity`](crate::model::DataEntity).
    EntityId
);
define_id!(
    /// Identifier of a [`Group`](crate::model::Group).
    GroupId
);
define_id!(
    /// Identifier of a [`Grouping`](crate::model::Grouping).
    GroupingId
);
define_id!(
    /// Identifier of a [`Link`](crate::model::Link).
    LinkId
);
define_id!(
    /// Identifier of a [`Process`](crate::model::Process).
    ProcessId
);

/// Kind-tagged reference to any catalog object.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "id", rename_all = "snake_case")]
pub enum ObjectId {
    Entity(EntityId),
    Grouping(GroupingId),
    Group(GroupId),
    Link(LinkId),
    Process(ProcessId),
}

impl ObjectId {
    pub fn kind(&self) -> ObjectKind {
        match self {
            ObjectId::Entity(_) => ObjectKind::Entity,
            ObjectId::Grouping(_) => ObjectKind::Grouping,
            ObjectId::Group(_) => ObjectKind::Group,
            ObjectId::Link(_) => ObjectKind::Link,
            ObjectId::Process(_) => ObjectKind::Process,
        }
    }

    pub fn as_u128(&self) -> u128 {
        match self {
            ObjectId::Entity(id) => id.as_u128(),
            ObjectId::Grouping(id) => id.as_u128(),
            ObjectId::Group(id) => id.as_u128(),
            ObjectId::Link(id) => id.as_u128(),
            ObjectId::Process(id) => id.as_u128(),
        }
    }
}

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:032x}", self.as_u128())
    }
}

impl From<EntityId> for ObjectId {
    fn from(id: EntityId) -> Self {
        ObjectId::Entity(id)
    }
}
impl From<GroupingId> for ObjectId {
    fn from(id: GroupingId) -> Self {
        ObjectId::Grouping(id)
    }
}
impl From<GroupId> for ObjectId {
    fn from(id: GroupId) -> Self {
        ObjectId::Group(id)
    }
}
impl From<LinkId> for ObjectId {
    fn from(id: LinkId) -> Self {
        ObjectId::Link(id)
    }
}
impl From<ProcessId> for ObjectId {
    fn from(id: ProcessId) -> Self {
        ObjectId::Process(id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectKind {
    Entity,
    Grouping,
    Group,
    Link,
    Process,
}

impl fmt::Display for ObjectKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ObjectKind::Entity => "entity",
            ObjectKind::Grouping => "grouping",
            ObjectKind::Group => "group",
            ObjectKind::Link => "link",
            ObjectKind::Process => "process",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn canonical_form_is_32_lowercase_hex() {
        let id = EntityId::from_u128(0xab);
        assert_eq!(id.to_string(), "000000000000000000000000000000ab");
        assert_eq!(EntityId::random().to_string().len(), 32);
    }

    #[test]
    fn rejects_non_canonical_text() {
        assert!("ABCDEF00000000000000000000000000".parse::<EntityId>().is_err());
        assert!("abc".parse::<GroupId>().is_err());
        assert!("+0000000000000000000000000000001".parse::<GroupId>().is_err());
    }

    #[test]
    fn serde_uses_string_form() {
        let id = ProcessId::from_u128(1);
        let s = serde_json::to_string(&id).unwrap();
        assert_eq!(s, "\"00000000000000000000000000000001\"");
        let back: ProcessId = serde_json::from_str(&s).unwrap();
        assert_eq!(back, id);
    }

    proptest! {
        #[test]
        fn text_round_trip_and_order(a in any::<u128>(), b in any::<u128>()) {
            let (ia, ib) = (LinkId::from_u128(a), LinkId::from_u128(b));
            prop_assert_eq!(ia.to_string().parse::<LinkId>().unwrap(), ia);
            prop_assert_eq!(ia.cmp(&ib), ia.to_string().cmp(&ib.to_string()));
        }
    }
}
