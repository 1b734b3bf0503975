//! Membership, hierarchy, neighborhood and lineage queries, plus the
//! textual query language.

mod ast;
mod eval;
mod parser;

pub use ast::{CmpOp, Direction, Literal, Predicate, Query};
pub use eval::{eval, lineage, list, matches, neighbors, rollup, LineageEdge, LineageGraph, QueryError, ResultSet};
pub use parser::{parse_query, SyntaxError};
