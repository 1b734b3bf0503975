//! Metadata catalog engine for data lakes.
//!
//! The catalog is a hypergraph over four concepts:
//!
//! - **data entities**: one node per data element, at any granularity
//!   (database, table, file, row, document);
//! - **groupings** and their **groups**: classification axes such as
//!   `zone` (`raw`, `processed`) or `language`, each group a hyperedge over
//!   entities;
//! - **links**: binary labeled relations between two entities or between two
//!   groups, directed or not;
//! - **processes**: hyperedges from input entities to newly produced output
//!   entities, which together form the lineage relation.
//!
//! [`store::Store`] persists a [`Catalog`] as a JSON-lines append log plus
//! checksummed snapshots. [`query`] evaluates membership, hierarchy,
//! neighborhood and lineage queries, including a small textual DSL.
//! [`interchange`] reads and writes the canonical `.gmdl.json` document and
//! exports GraphML. [`ingest`] builds batches from directory trees and CSV
//! manifests, and [`conformance`] encodes other data-lake metadata models
//! (zones, granularity containment, object versions) in these terms.

pub mod catalog;
pub mod conformance;
pub mod ids;
pub mod ingest;
pub mod interchange;
pub mod model;
pub mod query;
pub mod store;
pub mod validate;
pub mod value;

pub use catalog::{Batch, Catalog, IntegrityError, Mutation, Object};
pub use ids::{EntityId, GroupId, GroupingId, LinkId, ObjectId, ObjectKind, ProcessId};
pub use model::{DataEntity, EndpointKind, Endpoints, Group, Grouping, Link, ModelError, NodeRef, Process};
pub use validate::{ValidationReport, Violation};
pub use value::{PropertyValue, Properties, Timestamp};
