//! Query syntax tree and its canonical printer.
//!
//! Printing produces text that parses back to an equal tree: binary
//! operators are left-associative with `or` binding loosest, then `and`,
//! then `not`, and parentheses are emitted only where needed.

use std::fmt;

use serde::Serialize;

use crate::ids::{EntityId, GroupId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Upstream,
    Downstream,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Upstream => "upstream",
            Direction::Downstream => "downstream",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Query {
    /// `entities [where pred]`
    Select { predicate: Option<Predicate> },
    /// `members of "grouping"/"label"`
    MembersOf { grouping: String, label: String },
    /// `groups of ID`
    GroupsOf { entity: EntityId },
    /// `lineage of ID dir [depth N]`; depth counts process hops.
    Lineage {
        entity: EntityId,
        direction: Direction,
        depth: Option<u32>,
    },
    /// `rollup ID via "label"`
    Rollup { group: GroupId, label: String },
    /// `neighbors ID [label "x"] [dir]`
    Neighbors {
        entity: EntityId,
        label: Option<String>,
        direction: Option<Direction>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Contains,
}

impl CmpOp {
    pub const ALL: [CmpOp; 7] = [CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge, CmpOp::Contains];

    pub fn as_str(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Contains => "contains",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Str(String),
    Int(i64),
    Real(f64),
    Bool(bool),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Predicate {
    Cmp { property: String, op: CmpOp, value: Literal },
    And(Box<Predicate>, Box<Predicate>),
    Or(Box<Predicate>, Box<Predicate>),
    Not(Box<Predicate>),
}

impl Predicate {
    pub fn cmp(property: impl Into<String>, op: CmpOp, value: Literal) -> Self {
        Predicate::Cmp {
            property: property.into(),
            op,
            value,
        }
    }

    pub fn and(self, other: Predicate) -> Self {
        Predicate::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: Predicate) -> Self {
        Predicate::Or(Box::new(self), Box::new(other))
    }

    pub fn negate(self) -> Self {
        Predicate::Not(Box::new(self))
    }

    fn precedence(&self) -> u8 {
        match self {
            Predicate::Or(..) => 1,
            Predicate::And(..) => 2,
            Predicate::Not(_) => 3,
            Predicate::Cmp { .. } => 4,
        }
    }

    fn write_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let paren = self.precedence() < min;
        if paren {
            f.write_str("(")?;
        }
        match self {
            Predicate::Cmp { property, op, value } => {
                write_prop(f, property)?;
                write!(f, " {} {value}", op.as_str())?;
            }
            Predicate::Or(l, r) => {
                l.write_at(f, 1)?;
                f.write_str(" or ")?;
                r.write_at(f, 2)?;
            }
            Predicate::And(l, r) => {
                l.write_at(f, 2)?;
                f.write_str(" and ")?;
                r.write_at(f, 3)?;
            }
            Predicate::Not(x) => {
                f.write_str("not ")?;
                x.write_at(f, 3)?;
            }
        }
        if paren {
            f.write_str(")")?;
        }
        Ok(())
    }
}

/// Writes `prop("name")`.
fn write_prop(f: &mut fmt::Formatter<'_>, property: &str) -> Result<(), fmt::Error> {
    f.write_str("prop(")?;
    write_quoted(f, property)?;
    f.write_str(")")
}

pub(crate) fn write_quoted(f: &mut impl fmt::Write, s: &str) -> fmt::Result {
    f.write_char('"')?;
    for c in s.chars() {
        match c {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            '\t' => f.write_str("\\t")?,
            '\r' => f.write_str("\\r")?,
            c if c.is_control() => write!(f, "\\u{{{:x}}}", c as u32)?,
            c => f.write_char(c)?,
        }
    }
    f.write_char('"')
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Str(s) => write_quoted(f, s),
            Literal::Int(i) => write!(f, "{i}"),
            Literal::Real(x) => {
                // Display never uses exponents and round-trips exactly.
                let s = x.to_string();
                if s.contains('.') {
                    f.write_str(&s)
                } else {
                    write!(f, "{s}.0")
                }
            }
            Literal::Bool(b) => write!(f, "{b}"),
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_at(f, 0)
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Query::Select { predicate: None } => f.write_str("entities"),
            Query::Select { predicate: Some(p) } => write!(f, "entities where {p}"),
            Query::MembersOf { grouping, label } => {
                f.write_str("members of ")?;
                write_quoted(f, grouping)?;
                f.write_str("/")?;
                write_quoted(f, label)
            }
            Query::GroupsOf { entity } => write!(f, "groups of {entity}"),
            Query::Lineage { entity, direction, depth } => {
                write!(f, "lineage of {entity} {direction}")?;
                if let Some(d) = depth {
                    write!(f, " depth {d}")?;
                }
                Ok(())
            }
            Query::Rollup { group, label } => {
                write!(f, "rollup {group} via ")?;
                write_quoted(f, label)
            }
            Query::Neighbors { entity, label, direction } => {
                write!(f, "neighbors {entity}")?;
                if let Some(l) = label {
                    f.write_str(" label ")?;
                    write_quoted(f, l)?;
                }
                if let Some(d) = direction {
                    write!(f, " {d}")?;
                }
                Ok(())
            }
        }
    }
}
