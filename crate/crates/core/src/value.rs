//! Property values attached to entities, links and processes.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Maximum nesting of lists: a list of lists of scalars.
pub const MAX_LIST_DEPTH: usize = 2;

/// Ordered label → value map.
pub type Properties = BTreeMap<String, PropertyValue>;

/// UTC instant with millisecond precision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Timestamp(i64);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TimestampError {
    #[error("timestamp {0:?} is not RFC 3339")]
    Syntax(String),
    #[error("timestamp {0:?} has sub-millisecond precision")]
    Precision(String),
    #[error("timestamp {0} ms is out of range")]
    Range(i64),
}

impl Timestamp {
    pub fn now() -> Self {
        Self(Utc::now().timestamp_millis())
    }

    /// Representable range: years 0000 through 9999.
    pub const MIN_MILLIS: i64 = -62_167_219_200_000;
    pub const MAX_MILLIS: i64 = 253_402_300_799_999;

    pub fn from_millis(ms: i64) -> Result<Self, TimestampError> {
        if (Self::MIN_MILLIS..=Self::MAX_MILLIS).contains(&ms) {
            Ok(Self(ms))
        } else {
            Err(TimestampError::Range(ms))
        }
    }

    pub fn millis(self) -> i64 {
        self.0
    }

    fn datetime(self) -> DateTime<Utc> {
        DateTime::from_timestamp_millis(self.0).expect("range checked at construction")
    }
}

impl From<std::time::SystemTime> for Timestamp {
    fn from(t: std::time::SystemTime) -> Self {
        Self(DateTime::<Utc>::from(t).timestamp_millis())
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.datetime().to_rfc3339_opts(SecondsFormat::Millis, true))
    }
}

impl FromStr for Timestamp {
    type Err = TimestampError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let dt = DateTime::parse_from_rfc3339(s).map_err(|_| TimestampError::Syntax(s.into()))?;
        if dt.timestamp_subsec_nanos() % 1_000_000 != 0 {
            return Err(TimestampError::Precision(s.into()));
        }
        Self::from_millis(dt.timestamp_millis())
    }
}

impl Serialize for Timestamp {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Timestamp {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Tag of a [`PropertyValue`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ValueTag {
    Text,
    Int,
    Real,
    Bool,
    Timestamp,
    List,
}

impl fmt::Display for ValueTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ValueTag::Text => "text",
            ValueTag::Int => "int",
            ValueTag::Real => "real",
            ValueTag::Bool => "bool",
            ValueTag::Timestamp => "timestamp",
            ValueTag::List => "list",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum PropertyValue {
    Text(String),
    Int(i64),
    Real(f64),
    Bool(bool),
    Timestamp(Timestamp),
    List(Vec<PropertyValue>),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ValueError {
    #[error("real value is not finite")]
    NonFinite,
    #[error("list mixes {0} and {1} elements")]
    MixedList(ValueTag, ValueTag),
    #[error("lists nested deeper than {MAX_LIST_DEPTH}")]
    TooDeep,
}

impl PropertyValue {
    pub fn tag(&self) -> ValueTag {
        match self {
            PropertyValue::Text(_) => ValueTag::Text,
            PropertyValue::Int(_) => ValueTag::Int,
            PropertyValue::Real(_) => ValueTag::Real,
            PropertyValue::Bool(_) => ValueTag::Bool,
            PropertyValue::Timestamp(_) => ValueTag::Timestamp,
            PropertyValue::List(_) => ValueTag::List,
        }
    }

    /// Checks finiteness, list homogeneity and nesting depth.
    pub fn check(&self) -> Result<(), ValueError> {
        self.check_at(0)
    }

    fn check_at(&self, depth: usize) -> Result<(), ValueError> {
        match self {
            PropertyValue::Real(x) if !x.is_finite() => Err(ValueError::NonFinite),
            PropertyValue::List(items) => {
                if depth + 1 > MAX_LIST_DEPTH {
                    return Err(ValueError::TooDeep);
                }
                if let Some(first) = items.first() {
                    let tag = first.tag();
                    if let Some(other) = items.iter().map(PropertyValue::tag).find(|t| *t != tag) {
                        return Err(ValueError::MixedList(tag, other));
                    }
                }
                items.iter().try_for_each(|v| v.check_at(depth + 1))
            }
            _ => Ok(()),
        }
    }

    /// Ordering used by query comparisons. Numbers compare across int/real;
    /// values of unrelated tags are incomparable.
    pub fn compare(&self, other: &PropertyValue) -> Option<Ordering> {
        use PropertyValue::*;
        match (self, other) {
            (Text(a), Text(b)) => Some(a.cmp(b)),
            (Int(a), Int(b)) => Some(a.cmp(b)),
            (Int(a), Real(b)) => (*a as f64).partial_cmp(b),
            (Real(a), Int(b)) => a.partial_cmp(&(*b as f64)),
            (Real(a), Real(b)) => a.partial_cmp(b),
            (Bool(a), Bool(b)) => Some(a.cmp(b)),
            (Timestamp(a), Timestamp(b)) => Some(a.cmp(b)),
            (Timestamp(a), Text(b)) => b.parse::<self::Timestamp>().ok().map(|b| a.cmp(&b)),
            (List(a), List(b)) if a == b => Some(Ordering::Equal),
            _ => None,
        }
    }
}

impl From<&str> for PropertyValue {
    fn from(s: &str) -> Self {
        PropertyValue::Text(s.to_string())
    }
}
impl From<String> for PropertyValue {
    fn from(s: String) -> Self {
        PropertyValue::Text(s)
    }
}
impl From<i64> for PropertyValue {
    fn from(v: i64) -> Self {
        PropertyValue::Int(v)
    }
}
impl From<bool> for PropertyValue {
    fn from(v: bool) -> Self {
        PropertyValue::Bool(v)
    }
}
impl From<Timestamp> for PropertyValue {
    fn from(v: Timestamp) -> Self {
        PropertyValue::Timestamp(v)
    }
}
