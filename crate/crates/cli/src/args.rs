use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Metadata catalog for data lakes.
///
/// The store directory may be given with `--store`, through `GMDL_STORE`, or
/// as the first positional argument of any subcommand.
#[derive(Debug, Parser)]
#[command(name = "gmdl", version)]
pub struct Cli {
    /// Print one JSON document on stdout instead of text.
    #[arg(long, global = true)]
    pub json: bool,

    /// Store directory.
    #[arg(long, global = true, env = "GMDL_STORE", value_name = "PATH")]
    pub store: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Create an empty store.
    Init(Positional),
    /// Scan a directory tree, or load a CSV manifest, into the catalog.
    Ingest(IngestArgs),
    /// Add a data entity.
    AddEntity(AddEntityArgs),
    /// Add a link between two entities or two groups.
    AddLink(AddLinkArgs),
    /// Add entities to a group, creating the group and grouping as needed.
    AddGroup(AddGroupArgs),
    /// Record a process from input entities to output entities.
    AddProcess(AddProcessArgs),
    /// Delete an object by id.
    Delete(DeleteArgs),
    /// Evaluate a query.
    Query(Positional),
    /// Trace lineage from an entity.
    Lineage(LineageArgs),
    /// Write the catalog as JSON or GraphML.
    Export(ExportArgs),
    /// Merge a JSON catalog document into the store.
    Import(Positional),
    /// Check every catalog invariant.
    Validate(Positional),
    /// Check the catalog against a conformance profile (medal, zones, handle).
    Conformance(Positional),
    /// Write a snapshot and truncate the log.
    Snapshot(Positional),
}

#[derive(Debug, Args)]
pub struct Positional {
    #[arg(value_name = "ARGS")]
    pub args: Vec<String>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// `[STORE] ROOT`, or `[STORE]` with `--manifest`.
    #[arg(value_name = "ARGS")]
    pub args: Vec<String>,
    /// JSON scan rules.
    #[arg(long, value_name = "FILE", conflicts_with = "manifest")]
    pub rules: Option<PathBuf>,
    /// CSV manifest with header `name,group:<grouping>...,prop:<label>...`.
    #[arg(long, value_name = "FILE")]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AddEntityArgs {
    #[arg(value_name = "STORE")]
    pub args: Vec<String>,
    #[arg(long)]
    pub name: String,
    /// `label=text` or `label:TYPE=value` with TYPE one of text, int, real,
    /// bool, timestamp.
    #[arg(long = "prop", value_name = "PROP")]
    pub props: Vec<String>,
}

#[derive(Debug, Args)]
pub struct AddLinkArgs {
    /// `[STORE] SOURCE TARGET`
    #[arg(value_name = "ARGS")]
    pub args: Vec<String>,
    #[arg(long)]
    pub label: String,
    #[arg(long)]
    pub directed: bool,
    #[arg(long = "prop", value_name = "PROP")]
    pub props: Vec<String>,
}

#[derive(Debug, Args)]
pub struct AddGroupArgs {
    #[arg(value_name = "STORE")]
    pub args: Vec<String>,
    /// Grouping name.
    #[arg(long)]
    pub grouping: String,
    /// Group label within the grouping.
    #[arg(long)]
    pub label: String,
    /// Entity id to add as a member; repeatable.
    #[arg(long = "member", value_name = "ID")]
    pub members: Vec<String>,
    /// Declare a newly created grouping as a partition.
    #[arg(long)]
    pub partition: bool,
}

#[derive(Debug, Args)]
pub struct AddProcessArgs {
    #[arg(value_name = "STORE")]
    pub args: Vec<String>,
    #[arg(long)]
    pub name: String,
    #[arg(long = "input", value_name = "ID")]
    pub inputs: Vec<String>,
    #[arg(long = "output", value_name = "ID", required = true)]
    pub outputs: Vec<String>,
    #[arg(long, default_value = "")]
    pub definition: String,
    #[arg(long = "prop", value_name = "PROP")]
    pub props: Vec<String>,
}

#[derive(Debug, Args)]
pub struct DeleteArgs {
    /// `[STORE] ID`
    #[arg(value_name = "ARGS")]
    pub args: Vec<String>,
    /// Also delete every object that references the target.
    #[arg(long, conflicts_with = "restrict")]
    pub cascade: bool,
    /// Refuse if anything references the target (default).
    #[arg(long)]
    pub restrict: bool,
}

#[derive(Debug, Args)]
pub struct LineageArgs {
    /// `[STORE] ID`
    #[arg(value_name = "ARGS")]
    pub args: Vec<String>,
    #[arg(long, conflicts_with = "upstream")]
    pub downstream: bool,
    /// Default direction.
    #[arg(long)]
    pub upstream: bool,
    /// Maximum number of process hops (at least 1).
    #[arg(long, value_name = "N", value_parser = clap::value_parser!(u32).range(1..))]
    pub depth: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Graphml,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(value_name = "STORE")]
    pub args: Vec<String>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Write to a file instead of stdout.
    #[arg(short, long, value_name = "FILE")]
    pub output: Option<PathBuf>,
}
