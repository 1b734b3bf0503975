//! Interchange formats: the canonical `.gmdl.json` catalog document and a
//! GraphML export with reified hyperedges.

mod graphml;
mod json;

pub use graphml::export_graphml;
pub use json::{catalog_to_batch, export_json, import_json, CatalogDocument, InterchangeError, FORMAT_VERSION};
