//! The end-to-end pipeline and transport-independent request handlers.

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotate::{extract_modality, AnnotateError, Annotator, AnnotatorConfig, PhraseStructure};
use crate::builder::{build, select, BuildError, Diagnostics};
use crate::config::EngineConfig;
use crate::dataset::{ColumnSchema, Dataset, DatasetError, SchemaOverrides};
use crate::embeddings::{load_embeddings, EmbeddingError, EmbeddingStore};
use crate::executor::{execute, ExecError, ExecutionTrace};
use crate::graph::{GraphDocument, OperationGraph};
use crate::registry::{builtin_registry, Kind, Registry, RegistryError, Role};
use crate::session::{unix_now, SessionError, SessionStore};
use crate::value::Value;
use crate::viz::{overlay, recommend, recommend_top, CompatMatrix, Overlay, VizError, VizModel, VizSpec, FEATURE_DIM};

const BUNDLED_CSV: &str = include_str!("../data/honey.csv");
const BUNDLED_SCHEMA: &str = include_str!("../data/honey.schema.json");
const BUNDLED_EMBEDDINGS: &str = include_str!("../data/embeddings.txt");
const BUNDLED_VIZ_MODEL: &str = include_str!("../data/viz_model.json");

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Embeddings(#[from] EmbeddingError),
    #[error(transparent)]
    Viz(#[from] VizError),
    #[error(transparent)]
    Annotator(#[from] AnnotateError),
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum QueryError {
    #[error("empty request")]
    Empty,
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Exec(#[from] ExecError),
}

/// Everything produced for one request.
#[derive(Debug, Clone, PartialEq)]
pub struct Answer {
    pub phrase: PhraseStructure,
    pub candidates: usize,
    pub graph: OperationGraph,
    pub value: Value,
    pub trace: ExecutionTrace,
    pub viz: VizSpec,
    pub diagnostics: Vec<String>,
}

/// Loaded data, lexicons and models; immutable and shareable across threads.
#[derive(Debug, Clone)]
pub struct Engine {
    pub dataset: Dataset,
    pub registry: Registry,
    pub embeddings: EmbeddingStore,
    pub viz_model: VizModel,
    pub annotator: Annotator,
    pub config: EngineConfig,
}

/// A model with no history; recommendations then come from the compatibility rules.
pub fn empty_viz_model() -> VizModel {
    VizModel { examples: Vec::new(), min: [0.0; FEATURE_DIM], max: [0.0; FEATURE_DIM] }
}

impl Engine {
    /// The bundled honey table, registry, embeddings and viz model.
    pub fn bundled() -> Self {
        Self::from_config(EngineConfig::bundled()).expect("bundled data is valid")
    }

    /// Loads every configured file, falling back to bundled data for unset paths.
    pub fn from_config(config: EngineConfig) -> Result<Self, EngineError> {
        let dataset = match &config.dataset {
            Some(p) => Dataset::load(p, config.schema.as_deref(), None)?,
            None => {
                let overrides: SchemaOverrides =
                    serde_json::from_str(BUNDLED_SCHEMA).map_err(DatasetError::BadOverride)?;
                Dataset::from_csv_str(BUNDLED_CSV, &overrides, crate::dataset::Gazetteer::bundled())?
            }
        };
        let registry = match &config.registry {
            Some(p) => Registry::load(p)?,
            None => builtin_registry(),
        };
        let embeddings = match &config.embeddings {
            Some(p) => load_embeddings(p)?,
            None => EmbeddingStore::parse(BUNDLED_EMBEDDINGS)?,
        };
        let viz_model = match &config.viz_model {
            Some(p) => VizModel::load(p)?,
            None => VizModel::from_json(BUNDLED_VIZ_MODEL)?,
        };
        let annotator = match (&config.stopwords, &config.triggers) {
            (None, None) => Annotator::bundled(),
            (s, t) => {
                let dir = crate::bundled_data_dir();
                let s = s.clone().unwrap_or_else(|| dir.join("stopwords.txt"));
                let t = t.clone().unwrap_or_else(|| dir.join("triggers.json"));
                Annotator::load(&s, &t)?
            }
        };
        Ok(Self { dataset, registry, embeddings, viz_model, annotator, config })
    }

    pub fn with_viz_model(mut self, model: VizModel) -> Self {
        self.viz_model = model;
        self
    }

    pub fn annotator_config(&self) -> AnnotatorConfig {
        let mut c = AnnotatorConfig { use_embeddings: self.config.builder.use_embeddings, ..Default::default() };
        if let Some(y) = self.config.reference_year {
            c.reference_year = y;
        }
        c
    }

    pub fn phrase(&self, text: &str) -> Result<PhraseStructure, QueryError> {
        self.annotator.annotate(text, &self.dataset, &self.annotator_config()).map_err(|_| QueryError::Empty)
    }

    /// Ranked candidate graphs for `text`.
    pub fn candidates(&self, text: &str) -> Result<(PhraseStructure, Vec<OperationGraph>), QueryError> {
        let phrase = self.phrase(text)?;
        let graphs = build(&phrase, &self.registry, &self.dataset, &self.embeddings, &self.config.builder)?;
        Ok((phrase, graphs))
    }

    /// Annotates, builds, selects, executes and recommends a visualization.
    pub fn answer(&self, text: &str) -> Result<Answer, QueryError> {
        let (phrase, graphs) = self.candidates(text)?;
        let graph = select(&graphs)?;
        let (value, trace) = execute(&graph, &self.dataset)?;
        let mut diagnostics = Vec::new();
        if !graph.complete {
            diagnostics.push("partial interpretation: the request did not resolve to a complete analysis".to_string());
        }
        let viz = recommend_top(
            &value,
            extract_modality(&phrase),
            &self.viz_model,
            CompatMatrix::bundled(),
            self.config.viz_top_n,
        );
        diagnostics.extend(viz.diagnostics.iter().cloned());
        Ok(Answer { phrase, candidates: graphs.len(), graph, value, trace, viz, diagnostics })
    }
}

/// Error body returned by every handler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub status: u16,
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<Box<Diagnostics>>,
}

impl ApiError {
    fn new(status: u16, code: &str, message: impl Into<String>) -> Self {
        Self { status, code: code.into(), message: message.into(), node: None, diagnostics: None }
    }
}

impl From<QueryError> for ApiError {
    fn from(e: QueryError) -> Self {
        match e {
            QueryError::Empty => ApiError::new(400, "empty_request", e.to_string()),
            QueryError::Build(BuildError::Unintelligible(d)) => {
                let mut err = ApiError::new(422, "unintelligible", "the request could not be interpreted");
                err.diagnostics = Some(Box::new(d));
                err
            }
            QueryError::Build(BuildError::NoCandidates) => ApiError::new(422, "no_candidates", e.to_string()),
            QueryError::Exec(ref x @ ExecError::Node { .. }) => {
                let mut err = ApiError::new(422, "execution_failed", x.to_string());
                err.node = x.node().map(str::to_string);
                err
            }
            QueryError::Exec(x) => ApiError::new(500, "invalid_graph", x.to_string()),
        }
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        match e {
            SessionError::UnknownSession(_) => ApiError::new(404, "unknown_session", e.to_string()),
            SessionError::UnknownGraph(_) => ApiError::new(404, "unknown_graph", e.to_string()),
            SessionError::UnknownNode { .. } => ApiError::new(404, "unknown_node", e.to_string()),
            SessionError::OutOfRange { .. } => ApiError::new(416, "step_out_of_range", e.to_string()),
            SessionError::MissingValue(_) => ApiError::new(500, "missing_value", e.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRequest {
    pub text: String,
    #[serde(default)]
    pub session_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResponse {
    pub session_id: String,
    pub graph_id: String,
    pub answer: Value,
    pub viz: VizSpec,
    pub graph: GraphDocument,
    pub diagnostics: Vec<String>,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphResponse {
    pub graph_id: String,
    pub session_id: String,
    pub text: String,
    pub graph: GraphDocument,
    pub values: std::collections::BTreeMap<String, Value>,
}

/// Either `steps` back from the sink along first inputs, or a named node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExploreRequest {
    pub graph_id: String,
    #[serde(default)]
    pub steps: Option<usize>,
    #[serde(default)]
    pub node_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExploreResponse {
    pub graph_id: String,
    pub node_id: String,
    pub value: Value,
    pub overlay: Overlay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionSummary {
    pub id: String,
    pub role: Role,
    pub inputs: Vec<Kind>,
    pub output: Kind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaResponse {
    pub rows: usize,
    pub columns: Vec<ColumnSchema>,
    pub functions: Vec<FunctionSummary>,
}

/// Request handlers over a shared engine and session store.
#[derive(Debug, Clone)]
pub struct Service {
    pub engine: Arc<Engine>,
    pub sessions: Arc<SessionStore>,
}

impl Service {
    pub fn new(engine: Engine) -> Self {
        let ttl = engine.config.session_ttl_secs;
        Self { engine: Arc::new(engine), sessions: Arc::new(SessionStore::new(ttl)) }
    }

    pub fn query(&self, req: &QueryRequest) -> Result<QueryResponse, ApiError> {
        let start = Instant::now();
        let now = unix_now();
        self.sessions.collect_garbage(now);
        let session_id = self.sessions.open(req.session_id.as_deref(), now)?;
        let answer = self.engine.answer(&req.text)?;
        let graph = answer.graph.to_document();
        let graph_id =
            self.sessions.record(&session_id, &req.text, answer.graph, answer.trace, answer.value.clone(), now)?;
        Ok(QueryResponse {
            session_id,
            graph_id,
            answer: answer.value,
            viz: answer.viz,
            graph,
            diagnostics: answer.diagnostics,
            elapsed_ms: start.elapsed().as_secs_f64() * 1000.0,
        })
    }

    pub fn graph(&self, graph_id: &str) -> Result<GraphResponse, ApiError> {
        let g = self.sessions.graph(graph_id)?;
        Ok(GraphResponse {
            graph_id: g.graph_id.clone(),
            session_id: g.session_id.clone(),
            text: g.text.clone(),
            graph: g.graph.to_document(),
            values: g.trace.values.clone(),
        })
    }

    pub fn explore(&self, req: &ExploreRequest) -> Result<ExploreResponse, ApiError> {
        let g = self.sessions.graph(&req.graph_id)?;
        let (node_id, value) = match (&req.node_id, req.steps) {
            (Some(_), Some(_)) => return Err(ApiError::new(400, "bad_request", "give either steps or node_id")),
            (Some(id), None) => (id.as_str(), g.value_of(id)?),
            (None, steps) => g.step_back(steps.unwrap_or(1))?,
        };
        let model = &self.engine.viz_model;
        let view = if node_id == g.graph.sink {
            Overlay::Stacked { specs: vec![recommend(&g.value, None, model)] }
        } else {
            overlay(&g.value, value, model)
        };
        Ok(ExploreResponse {
            graph_id: g.graph_id.clone(),
            node_id: node_id.to_string(),
            value: value.clone(),
            overlay: view,
        })
    }

    pub fn schema(&self) -> SchemaResponse {
        let e = &self.engine;
        SchemaResponse {
            rows: e.dataset.rows.len(),
            columns: e.dataset.columns.clone(),
            functions: e
                .registry
                .functions()
                .iter()
                .map(|f| FunctionSummary {
                    id: f.id.clone(),
                    role: f.role,
                    inputs: f.inputs.iter().map(|i| i.kind.kind).collect(),
                    output: f.output.kind,
                })
                .collect(),
        }
    }
}

/// Loads an engine from an optional TOML file plus environment overrides.
pub fn engine_from_files(config: Option<&Path>) -> Result<Engine, Box<dyn std::error::Error + Send + Sync>> {
    let base = match config {
        Some(p) => EngineConfig::load(p)?,
        None => EngineConfig::bundled(),
    };
    Ok(Engine::from_config(base.with_env()?)?)
}
