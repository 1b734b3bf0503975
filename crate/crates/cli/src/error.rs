use std::fmt;
use std::io;

use gmdl_core::ingest::IngestError;
use gmdl_core::interchange::InterchangeError;
use gmdl_core::model::ModelError;
use gmdl_core::query::QueryError;
use gmdl_core::store::StoreError;
use gmdl_core::ValidationReport;
use serde_json::{json, Value};

pub const EXIT_DOMAIN: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

/// A failure with a stable code, printed as `error[CODE]: message`.
#[derive(Debug)]
pub struct CliError {
    pub code: &'static str,
    pub message: String,
    pub exit: u8,
    pub details: Option<Value>,
}

impl CliError {
    pub fn domain(code: &'static str, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
            exit: EXIT_DOMAIN,
            details: None,
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: "USAGE",
            message: message.into(),
            exit: EXIT_USAGE,
            details: None,
        }
    }

    fn with_report(mut self, report: &ValidationReport) -> Self {
        self.details = Some(json!({ "violations": report.violations }));
        self
    }

    pub fn to_json(&self) -> Value {
        let mut err = json!({ "code": self.code, "message": self.message });
        if let Some(details) = &self.details {
            err["details"] = details.clone();
        }
        json!({ "ok": false, "error": err })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error[{}]: {}", self.code, self.message)?;
        if let Some(violations) = self.details.as_ref().and_then(|d| d["violations"].as_array()) {
            for v in violations {
                write!(
                    f,
                    "\n  {} {}: {}",
                    v["rule"].as_str().unwrap_or_default(),
                    v["object"]["id"].as_str().unwrap_or("-"),
                    v["message"].as_str().unwrap_or_default()
                )?;
            }
        }
        Ok(())
    }
}

impl From<StoreError> for CliError {
    fn from(e: StoreError) -> Self {
        let message = e.to_string();
        match e {
            StoreError::Missing(_) => Self::domain("STORE_MISSING", message),
            StoreError::NotAStore(_) => Self::domain("NOT_A_STORE", message),
            StoreError::NotEmpty(_) => Self::domain("STORE_NOT_EMPTY", message),
            StoreError::CorruptSnapshot(_) => Self::domain("CORRUPT_SNAPSHOT", message),
            StoreError::VersionUnsupported(_) => Self::domain("VERSION_UNSUPPORTED", message),
            StoreError::NotFound(_) => Self::domain("NOT_FOUND", message),
            StoreError::ReferencedByOthers { .. } => Self::domain("REFERENCED", message),
            StoreError::Integrity(i) => Self::domain("INTEGRITY", "batch rejected").with_report(&i.report),
            StoreError::Io(_) => Self::domain("IO", message),
        }
    }
}

impl From<QueryError> for CliError {
    fn from(e: QueryError) -> Self {
        let code = match e {
            QueryError::Syntax(_) => "SYNTAX",
            QueryError::UnknownId { .. } => "UNKNOWN_ID",
            QueryError::UnknownGrouping(_) => "UNKNOWN_GROUPING",
        };
        Self::domain(code, e.to_string())
    }
}

impl From<InterchangeError> for CliError {
    fn from(e: InterchangeError) -> Self {
        match e {
            InterchangeError::Parse { .. } => Self::domain("PARSE", e.to_string()),
            InterchangeError::Schema { .. } => Self::domain("SCHEMA", e.to_string()),
            InterchangeError::Integrity(report) => {
                Self::domain("INTEGRITY", "document violates catalog invariants").with_report(&report)
            }
        }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        let code = match e {
            IngestError::Unreadable { .. } => "UNREADABLE",
            IngestError::Header(_) | IngestError::Row { .. } => "MANIFEST",
            IngestError::Model(_) => "MODEL",
        };
        Self::domain(code, e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        Self::domain("MODEL", e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        Self::domain("IO", e.to_string())
    }
}
