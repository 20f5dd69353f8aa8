//! The predefined set of semantically annotated functions.
//!
//! Every function declares typed input slots, literal parameters, an output
//! kind and a semantic description (weighted keywords, synonyms and
//! embedding terms). The builder asks the registry two questions: which
//! functions can produce a given kind, and how well a request span matches a
//! function's description.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::SemanticType;
use crate::embeddings::EmbeddingStore;

const BUNDLED_MANIFEST: &str = include_str!("../data/registry.json");

/// Score multiplier for a synonym hit relative to its keyword.
pub const SYNONYM_FACTOR: f64 = 0.9;
/// Default embedding match threshold.
pub const DEFAULT_TAU_FN: f64 = 0.55;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Scalar,
    Text,
    Boolean,
    Series,
    Table,
    GeoSeries,
    Forecast,
    AnomalyReport,
}

impl Kind {
    pub const ALL: [Kind; 8] = [
        Kind::Scalar,
        Kind::Text,
        Kind::Boolean,
        Kind::Series,
        Kind::Table,
        Kind::GeoSeries,
        Kind::Forecast,
        Kind::AnomalyReport,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Scalar => "scalar",
            Kind::Text => "text",
            Kind::Boolean => "boolean",
            Kind::Series => "series",
            Kind::Table => "table",
            Kind::GeoSeries => "geo_series",
            Kind::Forecast => "forecast",
            Kind::AnomalyReport => "anomaly_report",
        }
    }

    pub fn parse(s: &str) -> Option<Kind> {
        Kind::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

/// A value kind with an optional element hint (the label kind of a series).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ValueKind {
    pub kind: Kind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub element_hint: Option<SemanticType>,
}

impl ValueKind {
    pub const fn new(kind: Kind) -> Self {
        Self { kind, element_hint: None }
    }

    pub fn with_hint(kind: Kind, hint: SemanticType) -> Self {
        debug_assert!(matches!(kind, Kind::Series | Kind::Table | Kind::GeoSeries));
        Self { kind, element_hint: Some(hint) }
    }

    /// Whether a slot of this kind accepts a produced value of kind `produced`.
    /// A slot without a hint accepts any hint.
    pub fn accepts(&self, produced: &ValueKind) -> bool {
        self.kind == produced.kind && (self.element_hint.is_none() || self.element_hint == produced.element_hint)
    }
}

impl std::fmt::Display for ValueKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.element_hint {
            Some(h) => write!(f, "{}({})", self.kind.as_str(), h.as_str()),
            None => f.write_str(self.kind.as_str()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    /// Produces the base table without inputs.
    Source,
    /// Row filter; lowered from data anchors.
    Filter,
    /// Column projection; lowered from measure anchors.
    Projection,
    /// Everything else; instantiated from semantic matches.
    #[default]
    Operation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Keyword {
    pub term: String,
    pub weight: f64,
    /// Parameter values implied by this keyword, e.g. `average` → `fn = mean`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub binds: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Synonym {
    pub term: String,
    /// The keyword this synonym stands for.
    pub of: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticDescription {
    pub keywords: Vec<Keyword>,
    #[serde(default)]
    pub synonyms: Vec<Synonym>,
    #[serde(default)]
    pub embedding_terms: Vec<String>,
}

impl SemanticDescription {
    fn keyword(&self, term: &str) -> Option<&Keyword> {
        self.keywords.iter().find(|k| k.term == term)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSlot {
    pub name: String,
    pub kind: ValueKind,
    #[serde(default = "yes")]
    pub required: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LiteralKind {
    Column,
    Number,
    Integer,
    Text,
    Choice,
    Any,
}

/// Which columns a column-valued parameter may name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnConstraint {
    Any,
    Numerical,
    /// Any non-numerical column.
    Key,
    Location,
    Temporal,
}

impl ColumnConstraint {
    pub fn admits(self, ty: SemanticType) -> bool {
        match self {
            ColumnConstraint::Any => true,
            ColumnConstraint::Numerical => ty == SemanticType::Numerical,
            ColumnConstraint::Key => ty.is_key(),
            ColumnConstraint::Location => ty == SemanticType::Location,
            ColumnConstraint::Temporal => ty == SemanticType::Temporal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub literal: LiteralKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub choices: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column_type: Option<ColumnConstraint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionSpec {
    pub id: String,
    #[serde(default)]
    pub role: Role,
    pub description: SemanticDescription,
    pub inputs: Vec<InputSlot>,
    #[serde(default)]
    pub params: Vec<ParamSpec>,
    pub output: ValueKind,
    /// The output element hint is copied from the slot-0 input.
    #[serde(default)]
    pub output_hint_from_input: bool,
    /// May be inserted by the builder without a semantic match.
    #[serde(default)]
    pub insertable: bool,
    pub executor_ref: String,
}

impl FunctionSpec {
    pub fn param(&self, name: &str) -> Option<&ParamSpec> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn required_inputs(&self) -> usize {
        self.inputs.iter().filter(|s| s.required).count()
    }
}

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("invalid registry manifest: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("cannot read registry manifest: {0}")]
    Io(#[from] std::io::Error),
    #[error("duplicate function id {0:?}")]
    DuplicateId(String),
    #[error("function {0:?} has no keywords")]
    NoKeywords(String),
    #[error("function {id:?} references unknown executor {executor:?}")]
    UnknownExecutor { id: String, executor: String },
    #[error("function {0:?} has no inputs and is not a source")]
    NoInputs(String),
}

#[derive(Debug, Clone)]
pub struct Registry {
    functions: Vec<FunctionSpec>,
    index: BTreeMap<ValueKind, Vec<String>>,
}

/// The bundled function set.
pub fn builtin_registry() -> Registry {
    Registry::from_manifest(BUNDLED_MANIFEST).expect("bundled registry manifest is valid")
}

impl Registry {
    pub fn from_manifest(json: &str) -> Result<Self, RegistryError> {
        let functions: Vec<FunctionSpec> = serde_json::from_str(json)?;
        Self::new(functions)
    }

    pub fn load(path: &Path) -> Result<Self, RegistryError> {
        Self::from_manifest(&std::fs::read_to_string(path)?)
    }

    pub fn new(functions: Vec<FunctionSpec>) -> Result<Self, RegistryError> {
        let mut ids = BTreeSet::new();
        let mut index: BTreeMap<ValueKind, Vec<String>> = BTreeMap::new();
        for f in &functions {
            if !ids.insert(f.id.clone()) {
                return Err(RegistryError::DuplicateId(f.id.clone()));
            }
            if f.description.keywords.is_empty() {
                return Err(RegistryError::NoKeywords(f.id.clone()));
            }
            if !crate::executor::EXECUTORS.contains(&f.executor_ref.as_str()) {
                return Err(RegistryError::UnknownExecutor { id: f.id.clone(), executor: f.executor_ref.clone() });
            }
            if f.inputs.is_empty() && f.role != Role::Source {
                return Err(RegistryError::NoInputs(f.id.clone()));
            }
            index.entry(f.output).or_default().push(f.id.clone());
        }
        Ok(Self { functions, index })
    }

    pub fn functions(&self) -> &[FunctionSpec] {
        &self.functions
    }

    pub fn get(&self, id: &str) -> Option<&FunctionSpec> {
        self.functions.iter().find(|f| f.id == id)
    }

    /// Compatibility index: declared output kind → producing function ids.
    pub fn index(&self) -> &BTreeMap<ValueKind, Vec<String>> {
        &self.index
    }

    /// Functions whose declared output kind can fill `slot`. Element hints are
    /// resolved per instantiation, so only the base kind is compared here.
    pub fn producers_of(&self, slot: &ValueKind) -> impl Iterator<Item = &FunctionSpec> {
        let kind = slot.kind;
        self.functions.iter().filter(move |f| f.output.kind == kind)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum MatchVia {
    Keyword,
    Synonym,
    Embedding,
}

/// The best way a set of terms matched a function description.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionMatch {
    pub score: f64,
    pub keyword: String,
    pub via: MatchVia,
    pub binds: BTreeMap<String, serde_json::Value>,
}

/// Score in [0,1] for how well `span_terms` match the description of `spec`.
pub fn match_function(span_terms: &[String], spec: &FunctionSpec, embeddings: &EmbeddingStore, tau_fn: f64) -> f64 {
    match_detail(span_terms, spec, embeddings, tau_fn).map_or(0.0, |m| m.score)
}

/// Like [`match_function`], also reporting which keyword matched and the
/// parameter bindings it implies.
pub fn match_detail(
    span_terms: &[String],
    spec: &FunctionSpec,
    embeddings: &EmbeddingStore,
    tau_fn: f64,
) -> Option<FunctionMatch> {
    let desc = &spec.description;
    let mut best: Option<FunctionMatch> = None;
    let mut offer = |m: FunctionMatch| {
        let better = match &best {
            None => true,
            Some(b) => m.score > b.score || (m.score == b.score && (m.via, &m.keyword) < (b.via, &b.keyword)),
        };
        if better {
            best = Some(m);
        }
    };
    for term in span_terms {
        if let Some(k) = desc.keyword(term) {
            offer(FunctionMatch {
                score: k.weight,
                keyword: k.term.clone(),
                via: MatchVia::Keyword,
                binds: k.binds.clone(),
            });
        }
        for syn in desc.synonyms.iter().filter(|s| &s.term == term) {
            let (weight, binds) = desc.keyword(&syn.of).map_or((1.0, BTreeMap::new()), |k| (k.weight, k.binds.clone()));
            offer(FunctionMatch {
                score: SYNONYM_FACTOR * weight,
                keyword: syn.of.clone(),
                via: MatchVia::Synonym,
                binds,
            });
        }
        if embeddings.vector(term).is_none() {
            continue;
        }
        for e in &desc.embedding_terms {
            let Some(cos) = embeddings.cosine(term, e) else { continue };
            if cos < tau_fn {
                continue;
            }
            let (weight, binds) = desc.keyword(e).map_or((1.0, BTreeMap::new()), |k| (k.weight, k.binds.clone()));
            offer(FunctionMatch { score: cos * weight, keyword: e.clone(), via: MatchVia::Embedding, binds });
        }
    }
    best.map(|mut m| {
        m.score = m.score.clamp(0.0, 1.0);
        m
    })
    .filter(|m| m.score > 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn terms(ts: &[&str]) -> Vec<String> {
        ts.iter().map(|s| s.to_string()).collect()
    }

    fn bundled_embeddings() -> EmbeddingStore {
        EmbeddingStore::parse(include_str!("../data/embeddings.txt")).unwrap()
    }

    #[test]
    fn builtin_contents() {
        let r = builtin_registry();
        let agg = r.get("aggregate").unwrap();
        assert_eq!(agg.output, ValueKind::new(Kind::Scalar));
        let fc = r.get("forecast").unwrap();
        assert_eq!(fc.inputs[0].kind, ValueKind::with_hint(Kind::Series, SemanticType::Temporal));
        let scalars = &r.index()[&ValueKind::new(Kind::Scalar)];
        for id in ["aggregate", "lookup", "compare"] {
            assert!(scalars.iter().any(|s| s == id), "{id} missing from scalar index");
        }
    }

    #[test]
    fn index_matches_outputs() {
        let r = builtin_registry();
        for f in r.functions() {
            assert!(r.index()[&f.output].contains(&f.id));
        }
        let total: usize = r.index().values().map(Vec::len).sum();
        assert_eq!(total, r.functions().len());
    }

    #[test]
    fn exact_keyword_hit() {
        let r = builtin_registry();
        let e = EmbeddingStore::empty();
        let agg = r.get("aggregate").unwrap();
        assert_eq!(match_function(&terms(&["average"]), agg, &e, DEFAULT_TAU_FN), 1.0);
        let m = match_detail(&terms(&["average"]), agg, &e, DEFAULT_TAU_FN).unwrap();
        assert_eq!(m.binds["fn"], "mean");
    }

    #[test]
    fn embedding_path_uses_cosine() {
        let r = builtin_registry();
        let e = bundled_embeddings();
        let agg = r.get("aggregate").unwrap();
        let cos = e.cosine("mediocre", "average");
        assert_eq!(cos, None);
        // "median" is not a keyword; it reaches `average` through its vector
        let cos = e.cosine("median", "average").unwrap();
        let score = match_function(&terms(&["median"]), agg, &e, DEFAULT_TAU_FN);
        if cos >= DEFAULT_TAU_FN {
            assert!((score - cos).abs() < 1e-12, "score {score} cos {cos}");
        } else {
            assert_eq!(score, 0.0);
        }
        let fc = r.get("forecast").unwrap();
        assert_eq!(match_function(&terms(&["purple"]), fc, &e, DEFAULT_TAU_FN), 0.0);
    }

    #[test]
    fn oov_falls_back_to_keywords() {
        let r = builtin_registry();
        let e = bundled_embeddings();
        let fc = r.get("forecast").unwrap();
        assert!(e.vector("forecasted").is_none());
        assert!((match_function(&terms(&["forecasted"]), fc, &e, DEFAULT_TAU_FN) - 0.9).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_manifests() {
        let dup = r#"[{"id":"a","role":"source","description":{"keywords":[{"term":"x","weight":1}]},"inputs":[],"output":{"kind":"table"},"executor_ref":"scan"},
                     {"id":"a","role":"source","description":{"keywords":[{"term":"x","weight":1}]},"inputs":[],"output":{"kind":"table"},"executor_ref":"scan"}]"#;
        assert!(matches!(Registry::from_manifest(dup), Err(RegistryError::DuplicateId(_))));
        let unknown = r#"[{"id":"a","role":"source","description":{"keywords":[{"term":"x","weight":1}]},"inputs":[],"output":{"kind":"table"},"executor_ref":"nope"}]"#;
        assert!(matches!(Registry::from_manifest(unknown), Err(RegistryError::UnknownExecutor { .. })));
        let nokw = r#"[{"id":"a","role":"source","description":{"keywords":[]},"inputs":[],"output":{"kind":"table"},"executor_ref":"scan"}]"#;
        assert!(matches!(Registry::from_manifest(nokw), Err(RegistryError::NoKeywords(_))));
    }
}
