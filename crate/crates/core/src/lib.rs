//! Natural-language analytics over a single tabular dataset.
//!
//! A request flows through four stages:
//!
//! 1. [`annotate`] turns text into a [`PhraseStructure`]: tokens, data anchors
//!    (columns, cell values, year and number literals) and an optional output
//!    modality hint.
//! 2. [`builder`] compiles the phrase into a typed operation graph over the
//!    functions held by the [`Registry`], recursively filling input slots with
//!    type-compatible producers, and selects the best candidate.
//! 3. [`executor`] runs the graph in dependency order and returns the
//!    machine-readable [`Value`] plus a per-node trace.
//! 4. [`viz`] ranks the nine visualization forms for the result with a kNN
//!    model over historical examples and pins a user-requested form when one
//!    was asked for.
//!
//! [`session`] adds step-back exploration over executed graphs, [`api`] wraps
//! the pipeline in transport-independent request handlers and [`eval`] scores
//! the pipeline against a request corpus.

pub mod annotate;
pub mod api;
pub mod builder;
pub mod config;
pub mod dataset;
pub mod embeddings;
pub mod eval;
pub mod executor;
pub mod fuzz;
pub mod graph;
pub mod registry;
pub mod session;
pub mod value;
pub mod viz;

pub use annotate::{annotate, Annotator, AnnotatorConfig, Binding, PhraseStructure};
pub use api::{Engine, QueryResponse, Service};
pub use builder::{build, select, BuilderConfig};
pub use config::EngineConfig;
pub use dataset::{load_dataset, AliasBinding, ColumnSchema, Dataset, SemanticType};
pub use embeddings::EmbeddingStore;
pub use executor::{execute, ExecutionTrace};
pub use graph::{GraphDocument, OperationGraph, OperationNode};
pub use registry::{builtin_registry, match_function, FunctionSpec, Kind, Registry, ValueKind};
pub use value::Value;
pub use viz::{recommend, VizModel, VizSpec, VizType};

/// Directory holding the bundled data files (honey table, lexicons, models).
pub fn bundled_data_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data")
}
