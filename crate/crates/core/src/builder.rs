//! Compiles a phrase structure into ranked operation graphs.
//!
//! Resolution runs in three steps. Request terms are scored against every
//! registered function to obtain cues. Data anchors are lowered to a leaf
//! chain (scan plus filters), measures (numeric columns) and key anchors.
//! Finally candidates are expanded sink-first: every unfilled input slot is
//! filled only by producers whose output kind the slot accepts, keeping the
//! best `beam_width` partial graphs per slot and nesting at most `max_depth`
//! operations deep.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;
use thiserror::Error;

use crate::annotate::{Binding, PhraseStructure, Span, Tag, TokenRole};
use crate::dataset::{Dataset, SemanticType};
use crate::embeddings::EmbeddingStore;
use crate::executor::{FilterOp, DEFAULT_ANOMALY_THRESHOLD};
use crate::graph::{OperationGraph, OperationNode};
use crate::registry::{
    match_detail, ColumnConstraint, FunctionSpec, Kind, LiteralKind, Registry, Role, ValueKind, DEFAULT_TAU_FN,
};
use crate::viz::VizType;

/// Score of an operation inserted only to connect types.
pub const INSERTION_PRIOR: f64 = 0.5;
/// Score of a cue implied by a literal (a future year or "next year") rather than a word.
pub const DERIVED_CUE_SCORE: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BuilderConfig {
    pub tau_fn: f64,
    /// Embedding threshold for mapping an unknown word to a numeric column.
    pub tau_data: f64,
    pub beam_width: usize,
    pub max_depth: usize,
    pub anomaly_threshold: f64,
    pub use_embeddings: bool,
}

impl Default for BuilderConfig {
    fn default() -> Self {
        Self {
            tau_fn: DEFAULT_TAU_FN,
            tau_data: 0.6,
            beam_width: 8,
            max_depth: 6,
            anomaly_threshold: DEFAULT_ANOMALY_THRESHOLD,
            use_embeddings: true,
        }
    }
}

/// What the builder could and could not make sense of.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub anchors: usize,
    pub cues: Vec<String>,
    pub unmatched_terms: Vec<String>,
    /// Best (term, function, score) per unmatched term, below the threshold.
    pub best_partial: Vec<(String, String, f64)>,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum BuildError {
    #[error("unintelligible request: no data anchors and no function matches")]
    Unintelligible(Diagnostics),
    #[error("no candidate graphs to select from")]
    NoCandidates,
}

#[derive(Debug, Clone)]
struct FilterSpec {
    column: String,
    op: FilterOp,
    value: Json,
    tokens: BTreeSet<usize>,
    /// Two literals a comparison can split into separate branches.
    split: Option<[Json; 2]>,
    score: f64,
    numeric_comparison: bool,
    pos: usize,
}

#[derive(Debug, Clone)]
struct Measure {
    column: String,
    score: f64,
    tokens: BTreeSet<usize>,
}

#[derive(Debug, Clone)]
struct KeyAnchor {
    column: String,
    ty: SemanticType,
    tokens: BTreeSet<usize>,
    /// "all states": the whole column is in scope; no grouping intended.
    scope: bool,
}

#[derive(Debug, Clone)]
struct Cue {
    function: String,
    score: f64,
    binds: BTreeMap<String, Json>,
    tokens: BTreeSet<usize>,
}

#[derive(Debug, Clone, Default)]
struct Intent {
    filters: Vec<FilterSpec>,
    measures: Vec<Measure>,
    keys: Vec<KeyAnchor>,
    cues: Vec<Cue>,
    k: Option<(usize, BTreeSet<usize>)>,
    threshold: Option<(f64, BTreeSet<usize>)>,
    horizon: Option<(u32, BTreeSet<usize>)>,
    table_tokens: BTreeSet<usize>,
    projection_tokens: BTreeSet<usize>,
    table_requested: bool,
    geo_requested: bool,
    countable: BTreeSet<usize>,
}

/// Runs resolution and returns every surviving graph, best first.
pub fn build(
    phrase: &PhraseStructure,
    registry: &Registry,
    dataset: &Dataset,
    embeddings: &EmbeddingStore,
    config: &BuilderConfig,
) -> Result<Vec<OperationGraph>, BuildError> {
    let empty = EmbeddingStore::empty();
    let embeddings = if config.use_embeddings { embeddings } else { &empty };
    let intent = analyze(phrase, registry, dataset, embeddings, config);
    if phrase.anchors.is_empty() && intent.cues.is_empty() && intent.measures.is_empty() && !intent.table_requested {
        return Err(BuildError::Unintelligible(diagnose(phrase, registry, embeddings, config, &intent)));
    }
    let search = Search { phrase, registry, dataset, config, intent };
    let geo_available = registry.producers_of(&ValueKind::new(Kind::GeoSeries)).next().is_some();
    let mut graphs: Vec<OperationGraph> = Vec::new();
    for kind in Kind::ALL {
        for partial in search.gen(ValueKind::new(kind), None, 0, &BTreeSet::new()) {
            if geo_available && search.location_keyed_sink(&partial) {
                continue;
            }
            let g = search.finalize(&partial);
            if !graphs.iter().any(|h| h.nodes == g.nodes) {
                graphs.push(g);
            }
        }
    }
    graphs.sort_by(rank);
    Ok(graphs)
}

/// Order used by [`select`]: complete graphs first by relevance, then fewer
/// nodes, then node ids; incomplete graphs by depth, then relevance.
pub fn rank(a: &OperationGraph, b: &OperationGraph) -> Ordering {
    b.complete
        .cmp(&a.complete)
        .then_with(|| if a.complete { Ordering::Equal } else { b.depth.cmp(&a.depth) })
        .then_with(|| b.relevance.total_cmp(&a.relevance))
        .then_with(|| a.nodes.len().cmp(&b.nodes.len()))
        .then_with(|| id_sequence(a).cmp(&id_sequence(b)))
}

fn id_sequence(g: &OperationGraph) -> Vec<&str> {
    g.nodes.iter().map(|n| n.id.as_str()).collect()
}

/// Picks the graph to execute from `candidates`.
pub fn select(candidates: &[OperationGraph]) -> Result<OperationGraph, BuildError> {
    candidates.iter().min_by(|a, b| rank(a, b)).cloned().ok_or(BuildError::NoCandidates)
}

fn diagnose(
    phrase: &PhraseStructure,
    registry: &Registry,
    embeddings: &EmbeddingStore,
    config: &BuilderConfig,
    intent: &Intent,
) -> Diagnostics {
    let mut d = Diagnostics { anchors: phrase.anchors.len(), ..Default::default() };
    d.cues = intent.cues.iter().map(|c| c.function.clone()).collect::<BTreeSet<_>>().into_iter().collect();
    for span in &phrase.content_spans {
        for term in &span.terms {
            d.unmatched_terms.push(term.clone());
            let best = registry
                .functions()
                .iter()
                .filter_map(|f| {
                    match_detail(std::slice::from_ref(term), f, embeddings, 0.0).map(|m| (f.id.clone(), m.score))
                })
                .max_by(|a, b| a.1.total_cmp(&b.1).then_with(|| b.0.cmp(&a.0)));
            if let Some((f, s)) = best {
                if s < config.tau_fn {
                    d.best_partial.push((term.clone(), f, s));
                }
            }
        }
    }
    d
}

const COMPARATIVE_BIGRAMS: [(&str, &str, FilterOp); 11] = [
    ("more", "than", FilterOp::Gt),
    ("greater", "than", FilterOp::Gt),
    ("higher", "than", FilterOp::Gt),
    ("larger", "than", FilterOp::Gt),
    ("bigger", "than", FilterOp::Gt),
    ("less", "than", FilterOp::Lt),
    ("fewer", "than", FilterOp::Lt),
    ("lower", "than", FilterOp::Lt),
    ("smaller", "than", FilterOp::Lt),
    ("at", "least", FilterOp::Ge),
    ("at", "most", FilterOp::Le),
];

const DETERMINERS: [&str; 5] = ["the", "a", "an", "all", "its"];
const PAST_AUXILIARIES: [&str; 4] = ["did", "was", "were", "had"];

fn comparative_unigram(w: &str) -> Option<FilterOp> {
    match w {
        "above" | "over" | "exceeding" | "exceed" | "exceeds" | "exceeded" | "beyond" | "surpass" | "surpassed"
        | "surpassing" => Some(FilterOp::Gt),
        "below" | "under" => Some(FilterOp::Lt),
        _ => None,
    }
}

fn analyze(
    phrase: &PhraseStructure,
    registry: &Registry,
    dataset: &Dataset,
    embeddings: &EmbeddingStore,
    config: &BuilderConfig,
) -> Intent {
    let tokens = &phrase.tokens;
    let lower: Vec<String> = tokens.iter().map(|t| t.surface.to_lowercase()).collect();
    let word = |i: Option<usize>| i.and_then(|i| lower.get(i)).map(String::as_str).unwrap_or("");
    // previous non-symbol token index
    let prev = |i: usize| (0..i).rev().find(|&j| tokens[j].tag != Tag::Symbol);
    let range = |a: (usize, usize)| (a.0..a.1).collect::<BTreeSet<usize>>();

    let mut intent = Intent::default();
    let mut reserved: BTreeSet<usize> = BTreeSet::new();
    let mut values: BTreeMap<String, Vec<(String, BTreeSet<usize>, usize)>> = BTreeMap::new();
    let mut years: Vec<(i32, (usize, usize))> = Vec::new();
    let mut numbers: Vec<(f64, (usize, usize))> = Vec::new();
    let mut measures: Vec<(Measure, usize)> = Vec::new();

    for a in &phrase.anchors {
        match &a.binding {
            Binding::Column { column } => {
                let Some(col) = dataset.column(column) else { continue };
                if col.semantic_type == SemanticType::Numerical {
                    match measures.iter_mut().find(|(m, _)| &m.column == column) {
                        Some((m, _)) => m.tokens.extend(range(a.tokens)),
                        None => measures.push((
                            Measure { column: column.clone(), score: 1.0, tokens: range(a.tokens) },
                            a.tokens.0,
                        )),
                    }
                } else {
                    let p1 = prev(a.tokens.0);
                    let p2 = p1.and_then(prev);
                    let scope = matches!(word(p1), "all" | "across") || (word(p1) == "the" && word(p2) == "across");
                    intent.keys.push(KeyAnchor {
                        column: column.clone(),
                        ty: col.semantic_type,
                        tokens: range(a.tokens),
                        scope,
                    });
                }
            }
            Binding::Value { column, value } => {
                values.entry(column.clone()).or_default().push((value.clone(), range(a.tokens), a.tokens.0));
            }
            Binding::Year { year } => years.push((*year, a.tokens)),
            Binding::Number { value } => numbers.push((*value, a.tokens)),
            Binding::Horizon { years } => {
                if intent.horizon.is_none() {
                    intent.horizon = Some((*years, range(a.tokens)));
                }
            }
        }
    }

    // value anchors: one value pins the column, several select a set
    for (column, vals) in values {
        let tokens: BTreeSet<usize> = vals.iter().flat_map(|v| v.1.iter().copied()).collect();
        let mut distinct: Vec<String> = Vec::new();
        for v in &vals {
            if !distinct.contains(&v.0) {
                distinct.push(v.0.clone());
            }
        }
        let pos = vals[0].2;
        let (op, value, split) = if distinct.len() == 1 {
            (FilterOp::Eq, Json::String(distinct[0].clone()), None)
        } else {
            let split =
                (distinct.len() == 2).then(|| [Json::String(distinct[0].clone()), Json::String(distinct[1].clone())]);
            (FilterOp::In, Json::Array(distinct.into_iter().map(Json::String).collect()), split)
        };
        intent.filters.push(FilterSpec {
            column,
            op,
            value,
            tokens,
            split,
            score: 1.0,
            numeric_comparison: false,
            pos,
        });
    }

    // year literals: comparisons, ranges, equalities and future horizons
    let temporal = dataset.columns_of(SemanticType::Temporal).next().map(|c| c.name.clone());
    if let Some(tcol) = &temporal {
        let max_year = dataset.max_of(tcol);
        let forecast_id = registry.functions().iter().find(|f| f.executor_ref == "forecast").map(|f| f.id.clone());
        let mut eq_years: Vec<(i32, BTreeSet<usize>, usize)> = Vec::new();
        let mut i = 0;
        while i < years.len() {
            let (y, toks) = years[i];
            if let (Some(max), Some(fid)) = (max_year, &forecast_id) {
                if f64::from(y) > max {
                    let horizon = (f64::from(y) - max) as u32;
                    if intent.horizon.is_none() {
                        intent.horizon = Some((horizon, range(toks)));
                    }
                    intent.cues.push(Cue {
                        function: fid.clone(),
                        score: DERIVED_CUE_SCORE,
                        binds: BTreeMap::new(),
                        tokens: range(toks),
                    });
                    i += 1;
                    continue;
                }
            }
            let p1 = prev(toks.0);
            let before = word(p1);
            let next = years.get(i + 1).copied();
            let connector = next.and_then(|(_, nt)| {
                let between: Vec<usize> = (toks.1..nt.0).collect();
                (between.len() == 1).then(|| (between[0], lower[between[0]].as_str()))
            });
            let is_range = match connector {
                Some((_, "and")) => before == "between",
                Some((_, "to" | "through" | "until" | "till" | "-" | "–")) => true,
                _ => false,
            };
            if let (true, Some((y2, nt)), Some((ci, _))) = (is_range, next, connector) {
                let mut tokens = range(toks);
                tokens.extend(range(nt));
                tokens.insert(ci);
                if let Some(p) = p1.filter(|_| matches!(before, "between" | "from")) {
                    tokens.insert(p);
                }
                let (lo, hi) = (y.min(y2), y.max(y2));
                intent.filters.push(FilterSpec {
                    column: tcol.clone(),
                    op: FilterOp::Between,
                    value: Json::from(vec![lo, hi]),
                    tokens,
                    split: Some([Json::from(y), Json::from(y2)]),
                    score: 1.0,
                    numeric_comparison: false,
                    pos: toks.0,
                });
                i += 2;
                continue;
            }
            let op = match before {
                "since" | "from" => Some(FilterOp::Ge),
                "after" => Some(FilterOp::Gt),
                "before" => Some(FilterOp::Lt),
                "until" | "till" | "through" => Some(FilterOp::Le),
                _ => None,
            };
            match op {
                Some(op) => {
                    let mut tokens = range(toks);
                    tokens.extend(p1);
                    intent.filters.push(FilterSpec {
                        column: tcol.clone(),
                        op,
                        value: Json::from(y),
                        tokens,
                        split: None,
                        score: 1.0,
                        numeric_comparison: false,
                        pos: toks.0,
                    });
                }
                None => {
                    if !eq_years.iter().any(|e| e.0 == y) {
                        eq_years.push((y, range(toks), toks.0));
                    } else if let Some(e) = eq_years.iter_mut().find(|e| e.0 == y) {
                        e.1.extend(range(toks));
                    }
                }
            }
            i += 1;
        }
        if !eq_years.is_empty() {
            let tokens: BTreeSet<usize> = eq_years.iter().flat_map(|e| e.1.iter().copied()).collect();
            let pos = eq_years[0].2;
            let (op, value, split) = if eq_years.len() == 1 {
                (FilterOp::Eq, Json::from(eq_years[0].0), None)
            } else {
                let split = (eq_years.len() == 2).then(|| [Json::from(eq_years[0].0), Json::from(eq_years[1].0)]);
                (FilterOp::In, Json::from(eq_years.iter().map(|e| e.0).collect::<Vec<_>>()), split)
            };
            intent.filters.push(FilterSpec {
                column: tcol.clone(),
                op,
                value,
                tokens,
                split,
                score: 1.0,
                numeric_comparison: false,
                pos,
            });
        }
    }

    // a measure named only by question words ("how much was") yields to a content measure
    let stop_only = |m: &Measure| m.tokens.iter().all(|&i| tokens[i].tag == Tag::Stopword);
    if measures.iter().any(|(m, _)| !stop_only(m)) {
        measures.retain(|(m, _)| {
            if stop_only(m) {
                reserved.extend(m.tokens.iter().copied());
            }
            !stop_only(m)
        });
    }
    // "A of the B": B modifies the head measure A
    measures.sort_by_key(|(_, pos)| *pos);
    let mut i = 0;
    while i + 1 < measures.len() {
        let end = measures[i].0.tokens.iter().max().map_or(0, |e| e + 1);
        let start = measures[i + 1].0.tokens.iter().min().copied().unwrap_or(0);
        let gap = if start > end { &lower[end..start] } else { &[][..] };
        let genitive =
            gap.first().is_some_and(|w| w == "of") && gap[1..].iter().all(|w| DETERMINERS.contains(&w.as_str()));
        if genitive && measures[i].0.column != measures[i + 1].0.column {
            let (modifier, _) = measures.remove(i + 1);
            measures[i].0.tokens.extend(modifier.tokens);
            measures[i].0.tokens.extend(end..start);
        } else {
            i += 1;
        }
    }

    // number literals: measure comparisons, anomaly thresholds, then counts
    for (value, toks) in numbers {
        let p1 = prev(toks.0);
        let p2 = p1.and_then(prev);
        let comparison = COMPARATIVE_BIGRAMS
            .iter()
            .find(|(a, b, _)| word(p2) == *a && word(p1) == *b)
            .map(|(_, _, op)| (*op, vec![p2, p1]))
            .or_else(|| comparative_unigram(word(p1)).map(|op| (op, vec![p1])));
        if let Some((op, words)) = comparison {
            let nearest = measures
                .iter()
                .enumerate()
                .min_by_key(|(_, (_, pos))| (pos.abs_diff(toks.0), *pos > toks.0))
                .map(|(i, _)| i);
            if let Some(mi) = nearest {
                let (m, _) = measures.remove(mi);
                let mut tokens = range(toks);
                tokens.extend(words.iter().flatten().copied());
                reserved.extend(words.iter().flatten().copied());
                tokens.extend(m.tokens.iter().copied());
                intent.filters.push(FilterSpec {
                    column: m.column,
                    op,
                    value: Json::from(value),
                    tokens,
                    split: None,
                    score: m.score,
                    numeric_comparison: true,
                    pos: toks.0,
                });
                continue;
            }
        }
        let threshold_before = (toks.0.saturating_sub(3)..toks.0).any(|j| lower[j] == "threshold");
        let threshold_after =
            matches!(tokens.get(toks.1).map(|t| t.lemma.as_str()), Some("standard" | "sigma" | "std" | "deviation"));
        if intent.threshold.is_none() && (threshold_before || threshold_after) && value > 0.0 {
            let mut tokens = range(toks);
            tokens.extend((toks.0.saturating_sub(3)..toks.0).filter(|&j| lower[j] == "threshold"));
            if threshold_after {
                tokens.extend((toks.1..(toks.1 + 2).min(lower.len())).filter(|&j| phrase.roles[j] == TokenRole::Free));
            }
            reserved.extend(tokens.iter().copied());
            intent.threshold = Some((value, tokens));
            continue;
        }
        if intent.k.is_none() && value >= 1.0 && value.fract() == 0.0 {
            intent.k = Some((value as usize, range(toks)));
        }
    }

    // function cues from unanchored words and word pairs
    let free = |i: usize| phrase.roles[i] == TokenRole::Free && tokens[i].tag != Tag::Symbol && !reserved.contains(&i);
    let mut cue_map: BTreeMap<(String, BTreeSet<usize>), Cue> = BTreeMap::new();
    let mut offer = |f: &FunctionSpec, terms: Vec<String>, toks: BTreeSet<usize>| {
        let Some(m) = match_detail(&terms, f, embeddings, config.tau_fn) else { return };
        if m.score < config.tau_fn {
            return;
        }
        let key = (f.id.clone(), toks.clone());
        let better = cue_map.get(&key).is_none_or(|c| m.score > c.score);
        if better {
            cue_map.insert(key, Cue { function: f.id.clone(), score: m.score, binds: m.binds, tokens: toks });
        }
    };
    for f in registry.functions() {
        for i in 0..tokens.len() {
            if free(i) && tokens[i].tag != Tag::Stopword {
                let mut terms = vec![tokens[i].lemma.clone()];
                if lower[i] != tokens[i].lemma {
                    terms.push(lower[i].clone());
                }
                offer(f, terms, BTreeSet::from([i]));
            }
            if i + 1 < tokens.len() && free(i) && free(i + 1) {
                let terms = vec![
                    format!("{} {}", lower[i], lower[i + 1]),
                    format!("{} {}", tokens[i].lemma, tokens[i + 1].lemma),
                ];
                offer(f, terms, BTreeSet::from([i, i + 1]));
            }
        }
    }
    // a word reads as a table or projection request only if no operation matches it better
    let role_of = |c: &Cue| registry.get(&c.function).map(|f| f.role).unwrap_or_default();
    let mut best_operation: BTreeMap<BTreeSet<usize>, f64> = BTreeMap::new();
    for c in cue_map.values().filter(|c| role_of(c) == Role::Operation) {
        let e = best_operation.entry(c.tokens.clone()).or_default();
        *e = e.max(c.score);
    }
    let mut cued_tokens = BTreeSet::new();
    for cue in cue_map.into_values() {
        let role = role_of(&cue);
        if role != Role::Operation && best_operation.get(&cue.tokens).is_some_and(|&b| b >= cue.score) {
            continue;
        }
        cued_tokens.extend(cue.tokens.iter().copied());
        match role {
            Role::Source | Role::Filter => {
                intent.table_requested = true;
                intent.table_tokens.extend(cue.tokens);
            }
            Role::Projection => intent.projection_tokens.extend(cue.tokens),
            Role::Operation => intent.cues.push(cue),
        }
    }
    // "number of <numeric measure>" reads the column, not a row count
    intent.cues.retain(|c| {
        let counts = c.binds.get("fn").and_then(Json::as_str) == Some("count");
        let Some(&last) = c.tokens.iter().max() else { return true };
        if !counts || word(Some(last + 1)) != "of" {
            return true;
        }
        let next = (last + 2..lower.len()).find(|&j| !DETERMINERS.contains(&lower[j].as_str()));
        let target = measures.iter_mut().find(|(m, _)| {
            next.is_some_and(|n| m.tokens.contains(&n))
                && dataset.column(&m.column).is_some_and(|col| col.semantic_type == SemanticType::Numerical)
        });
        match target {
            Some((m, _)) => {
                m.tokens.extend(c.tokens.iter().copied());
                m.tokens.insert(last + 1);
                false
            }
            None => true,
        }
    });
    // "which state ... highest": the superlative selects an entity instead of computing a statistic
    let asks_entity = intent.keys.iter().any(|k| {
        let before = k.tokens.iter().min().and_then(|&t| prev(t));
        matches!(word(before), "which" | "what")
    });
    if asks_entity {
        let ranking: BTreeSet<BTreeSet<usize>> = intent
            .cues
            .iter()
            .filter(|c| registry.get(&c.function).is_some_and(|f| f.executor_ref == "top_k"))
            .map(|c| c.tokens.clone())
            .collect();
        intent.cues.retain(|c| !(c.binds.contains_key("fn") && ranking.contains(&c.tokens)));
    }
    // a question about the past does not ask for a prediction
    let past = lower.iter().any(|w| PAST_AUXILIARIES.contains(&w.as_str()));
    if past && intent.horizon.is_none() {
        let forecasts: BTreeSet<&str> =
            registry.functions().iter().filter(|f| f.executor_ref == "forecast").map(|f| f.id.as_str()).collect();
        intent.cues.retain(|c| !forecasts.contains(c.function.as_str()));
    }
    if let Some((_, toks)) = &intent.horizon {
        if let Some(f) = registry.functions().iter().find(|f| f.executor_ref == "forecast") {
            if !intent.cues.iter().any(|c| c.function == f.id && &c.tokens == toks) {
                intent.cues.push(Cue {
                    function: f.id.clone(),
                    score: DERIVED_CUE_SCORE,
                    binds: BTreeMap::new(),
                    tokens: toks.clone(),
                });
            }
        }
    }

    // unknown content words may still name a numeric column through embeddings
    if !embeddings.is_empty() {
        let aliases: Vec<(&str, &str)> = dataset
            .column_aliases()
            .filter(|(a, c)| {
                !a.contains(' ') && dataset.column(c).is_some_and(|s| s.semantic_type == SemanticType::Numerical)
            })
            .collect();
        for span in &phrase.content_spans {
            for (i, token) in tokens.iter().enumerate().take(span.tokens.1).skip(span.tokens.0) {
                if cued_tokens.contains(&i) || reserved.contains(&i) {
                    continue;
                }
                let best = aliases
                    .iter()
                    .filter_map(|(a, c)| embeddings.cosine(&token.lemma, a).map(|s| (s, *c)))
                    .max_by(|x, y| x.0.total_cmp(&y.0).then_with(|| y.1.cmp(x.1)));
                if let Some((score, column)) = best.filter(|(s, _)| *s >= config.tau_data) {
                    match measures.iter_mut().find(|(m, _)| m.column == column) {
                        Some((m, _)) => {
                            m.tokens.insert(i);
                        }
                        None => measures
                            .push((Measure { column: column.to_string(), score, tokens: BTreeSet::from([i]) }, i)),
                    }
                }
            }
        }
    }
    measures.sort_by_key(|(_, pos)| *pos);
    intent.measures = measures.into_iter().map(|(m, _)| m).collect();
    intent.filters.sort_by_key(|f| f.pos);
    intent.geo_requested = phrase.modality_hint.as_ref().is_some_and(|m| m.viz == VizType::GeoHeatmap);

    for (i, (token, role)) in tokens.iter().zip(&phrase.roles).enumerate() {
        let anchored = *role == TokenRole::Anchor;
        let content = *role == TokenRole::Free && !matches!(token.tag, Tag::Stopword | Tag::Symbol);
        if (anchored || content) && !reserved.contains(&i) {
            intent.countable.insert(i);
        }
    }
    // comparison words and threshold phrases count once consumed
    for f in intent.filters.iter().filter(|f| f.numeric_comparison) {
        intent.countable.extend(f.tokens.iter().filter(|&&i| tokens[i].tag != Tag::Stopword));
    }
    if let Some((_, t)) = &intent.threshold {
        intent.countable.extend(t.iter().filter(|&&i| tokens[i].tag != Tag::Stopword));
    }
    intent
}

#[derive(Debug, Clone, PartialEq)]
enum Keyed {
    None,
    Column(String),
    All,
}

#[derive(Debug, Clone)]
struct PNode {
    function: String,
    executor: String,
    params: BTreeMap<String, Json>,
    inputs: Vec<usize>,
    score: f64,
    output: ValueKind,
    tokens: BTreeSet<usize>,
}

#[derive(Debug, Clone)]
struct Partial {
    nodes: Vec<PNode>,
    keyed: Keyed,
    cue_tokens: BTreeSet<usize>,
    value_column: Option<String>,
    is_leaf: bool,
    /// A projection over rows whose every key column is pinned.
    pinned_projection: bool,
}

impl Partial {
    fn output(&self) -> ValueKind {
        self.nodes.last().expect("partials are non-empty").output
    }

    fn ids(&self) -> Vec<String> {
        self.nodes.iter().enumerate().map(|(i, n)| format!("{}#{i}", n.function)).collect()
    }
}

struct CueOption {
    score: Option<f64>,
    binds: BTreeMap<String, Json>,
    tokens: BTreeSet<usize>,
}

struct Search<'a> {
    phrase: &'a PhraseStructure,
    registry: &'a Registry,
    dataset: &'a Dataset,
    config: &'a BuilderConfig,
    intent: Intent,
}

type Split = Option<(usize, usize)>;

impl Search<'_> {
    fn pinned(&self, split: Split) -> BTreeSet<&str> {
        self.intent
            .filters
            .iter()
            .enumerate()
            .filter(|(i, f)| f.op == FilterOp::Eq || split.is_some_and(|(si, _)| si == *i))
            .map(|(_, f)| f.column.as_str())
            .collect()
    }

    fn unpinned_keys(&self, split: Split) -> Vec<&str> {
        let pinned = self.pinned(split);
        self.dataset
            .columns
            .iter()
            .filter(|c| c.semantic_type.is_key() && !pinned.contains(c.name.as_str()))
            .map(|c| c.name.as_str())
            .collect()
    }

    fn leaf(&self, split: Split) -> Partial {
        let mut scan_tokens = self.intent.table_tokens.clone();
        for k in self.intent.keys.iter().filter(|k| k.scope) {
            scan_tokens.extend(k.tokens.iter().copied());
        }
        let scan = self.registry.functions().iter().find(|f| f.role == Role::Source);
        let filter = self.registry.functions().iter().find(|f| f.role == Role::Filter);
        let (scan_id, scan_exec) =
            scan.map_or(("scan".into(), "scan".into()), |f| (f.id.clone(), f.executor_ref.clone()));
        let (filter_id, filter_exec) =
            filter.map_or(("filter".into(), "filter".into()), |f| (f.id.clone(), f.executor_ref.clone()));
        let mut nodes = vec![PNode {
            function: scan_id,
            executor: scan_exec,
            params: BTreeMap::new(),
            inputs: vec![],
            score: 1.0,
            output: ValueKind::new(Kind::Table),
            tokens: scan_tokens,
        }];
        for (i, f) in self.intent.filters.iter().enumerate() {
            let (op, value) = match (split, &f.split) {
                (Some((si, side)), Some(vals)) if si == i => (FilterOp::Eq, vals[side].clone()),
                _ => (f.op, f.value.clone()),
            };
            let params = BTreeMap::from([
                ("column".to_string(), Json::String(f.column.clone())),
                ("op".to_string(), Json::String(op.as_str().to_string())),
                ("value".to_string(), value),
            ]);
            let input = nodes.len() - 1;
            nodes.push(PNode {
                function: filter_id.clone(),
                executor: filter_exec.clone(),
                params,
                inputs: vec![input],
                score: f.score,
                output: ValueKind::new(Kind::Table),
                tokens: f.tokens.clone(),
            });
        }
        Partial {
            nodes,
            keyed: Keyed::All,
            cue_tokens: BTreeSet::new(),
            value_column: None,
            is_leaf: true,
            pinned_projection: false,
        }
    }

    /// A sink that labels its own series by a location column; the geo form
    /// of the same result replaces it.
    fn location_keyed_sink(&self, p: &Partial) -> bool {
        let sink = p.nodes.last().expect("partials are non-empty");
        sink.output.kind == Kind::Series
            && sink.output.element_hint == Some(SemanticType::Location)
            && self.registry.get(&sink.function).is_some_and(|f| !f.output_hint_from_input)
    }

    /// Partial graphs whose sink fills a slot of kind `slot`.
    fn gen(&self, slot: ValueKind, split: Split, depth: usize, used: &BTreeSet<String>) -> Vec<Partial> {
        if slot.kind == Kind::Table {
            return vec![self.leaf(split)];
        }
        if depth >= self.config.max_depth {
            return Vec::new();
        }
        let mut out = Vec::new();
        for f in self.registry.producers_of(&slot) {
            if used.contains(&f.id) || matches!(f.role, Role::Source | Role::Filter) {
                continue;
            }
            out.extend(self.instantiate(f, slot, split, depth, used));
        }
        self.prune(out)
    }

    fn prune(&self, mut partials: Vec<Partial>) -> Vec<Partial> {
        let keyed: Vec<(f64, Vec<String>, Partial)> =
            partials.drain(..).map(|p| (self.relevance(&p).0, p.ids(), p)).collect();
        let mut keyed = keyed;
        keyed.sort_by(|a, b| {
            b.0.total_cmp(&a.0).then_with(|| a.2.nodes.len().cmp(&b.2.nodes.len())).then_with(|| a.1.cmp(&b.1))
        });
        keyed.truncate(self.config.beam_width.max(1));
        keyed.into_iter().map(|(_, _, p)| p).collect()
    }

    fn cue_options(&self, f: &FunctionSpec) -> Vec<CueOption> {
        let cues: Vec<&Cue> = self.intent.cues.iter().filter(|c| c.function == f.id).collect();
        let mut groups: BTreeMap<String, CueOption> = BTreeMap::new();
        let bound: BTreeSet<String> = cues
            .iter()
            .filter(|c| !c.binds.is_empty())
            .map(|c| serde_json::to_string(&c.binds).unwrap_or_default())
            .collect();
        for c in &cues {
            let keys: Vec<String> = if c.binds.is_empty() {
                if bound.is_empty() {
                    vec![String::new()]
                } else {
                    bound.iter().cloned().collect()
                }
            } else {
                vec![serde_json::to_string(&c.binds).unwrap_or_default()]
            };
            for key in keys {
                let g = groups.entry(key).or_insert_with(|| CueOption {
                    score: Some(0.0),
                    binds: BTreeMap::new(),
                    tokens: BTreeSet::new(),
                });
                g.score = Some(g.score.unwrap_or(0.0).max(c.score));
                g.tokens.extend(c.tokens.iter().copied());
                if !c.binds.is_empty() {
                    g.binds = c.binds.clone();
                }
            }
        }
        let mut options: Vec<CueOption> = groups.into_values().collect();
        if f.insertable || f.role == Role::Projection {
            options.push(CueOption { score: None, binds: BTreeMap::new(), tokens: BTreeSet::new() });
        }
        options
    }

    fn instantiate(
        &self,
        f: &FunctionSpec,
        slot: ValueKind,
        split: Split,
        depth: usize,
        used: &BTreeSet<String>,
    ) -> Vec<Partial> {
        let options = self.cue_options(f);
        if options.is_empty() {
            return Vec::new();
        }
        let mut used = used.clone();
        used.insert(f.id.clone());

        let child_sets: Vec<Vec<Partial>> = match f.inputs.len() {
            0 => vec![Vec::new()],
            1 => self.gen(f.inputs[0].kind, split, depth + 1, &used).into_iter().map(|p| vec![p]).collect(),
            2 if split.is_none() => {
                let mut sets = Vec::new();
                for (fi, filter) in self.intent.filters.iter().enumerate() {
                    if filter.split.is_none() {
                        continue;
                    }
                    let lhs = self.gen(f.inputs[0].kind, Some((fi, 0)), depth + 1, &used);
                    let rhs = self.gen(f.inputs[1].kind, Some((fi, 1)), depth + 1, &used);
                    for (l, r) in lhs.into_iter().zip(rhs) {
                        if l.ids() == r.ids() {
                            sets.push(vec![l, r]);
                        }
                    }
                }
                sets
            }
            _ => Vec::new(),
        };

        let mut out = Vec::new();
        for children in &child_sets {
            let child_cues: BTreeSet<usize> = children.iter().flat_map(|c| c.cue_tokens.iter().copied()).collect();
            for option in &options {
                if !option.tokens.is_disjoint(&child_cues) {
                    continue;
                }
                for binding in self.bind_params(f, option, children.first(), slot, split) {
                    if let Some(p) = self.assemble(f, option, children, binding, slot, split) {
                        out.push(p);
                    }
                }
            }
        }
        out
    }

    fn key_candidates(&self, constraint: ColumnConstraint, slot: ValueKind, split: Split) -> Vec<String> {
        let unpinned = self.unpinned_keys(split);
        let mut cols: BTreeSet<&str> = BTreeSet::new();
        for k in self.intent.keys.iter().filter(|k| !k.scope) {
            if unpinned.contains(&k.column.as_str()) && constraint.admits(k.ty) {
                cols.insert(k.column.as_str());
            }
        }
        for c in &self.dataset.columns {
            if !unpinned.contains(&c.name.as_str()) || !constraint.admits(c.semantic_type) {
                continue;
            }
            if slot.element_hint == Some(c.semantic_type)
                || (self.intent.geo_requested && c.semantic_type == SemanticType::Location)
            {
                cols.insert(c.name.as_str());
            }
        }
        self.dataset.columns.iter().filter(|c| cols.contains(c.name.as_str())).map(|c| c.name.clone()).collect()
    }

    /// Parameter assignments for `f`; column parameters fan out over candidates.
    fn bind_params(
        &self,
        f: &FunctionSpec,
        option: &CueOption,
        child: Option<&Partial>,
        slot: ValueKind,
        split: Split,
    ) -> Vec<Binding_> {
        let mut partials = vec![Binding_::default()];
        for p in &f.params {
            let mut next = Vec::new();
            if p.literal == LiteralKind::Column {
                let constraint = p.column_type.unwrap_or(ColumnConstraint::Any);
                if p.name == "label" {
                    let unpinned = self.unpinned_keys(split);
                    for mut b in partials {
                        if let [only] = unpinned.as_slice() {
                            b.params.insert(p.name.clone(), Json::String(only.to_string()));
                            b.key = Some(only.to_string());
                        }
                        next.push(b);
                    }
                    partials = next;
                    continue;
                }
                match constraint {
                    ColumnConstraint::Numerical => {
                        for b in &partials {
                            for m in &self.intent.measures {
                                let mut b = b.clone();
                                b.params.insert(p.name.clone(), Json::String(m.column.clone()));
                                b.tokens.extend(m.tokens.iter().copied());
                                b.anchor_score = b.anchor_score.min(m.score);
                                b.value_column = Some(m.column.clone());
                                next.push(b);
                            }
                        }
                    }
                    _ => {
                        for b in &partials {
                            for col in self.key_candidates(constraint, slot, split) {
                                let mut b = b.clone();
                                b.params.insert(p.name.clone(), Json::String(col.clone()));
                                b.key = Some(col);
                                next.push(b);
                            }
                        }
                    }
                }
                partials = next;
                continue;
            }
            for mut b in partials {
                if let Some(v) = option.binds.get(&p.name) {
                    b.params.insert(p.name.clone(), v.clone());
                } else if let Some(v) = self.intent_param(&p.name, &mut b, f) {
                    b.params.insert(p.name.clone(), v);
                } else if p.name == "fn" {
                    let column = b.value_column.clone().or_else(|| child.and_then(|c| c.value_column.clone()));
                    let agg = column
                        .and_then(|c| self.dataset.column(&c).and_then(|s| s.default_aggregation))
                        .map(|a| Json::String(a.as_str().to_string()));
                    if let Some(v) = agg.or_else(|| p.default.clone()) {
                        b.params.insert(p.name.clone(), v);
                    }
                } else if let Some(v) = &p.default {
                    b.params.insert(p.name.clone(), v.clone());
                }
                next.push(b);
            }
            partials = next;
        }
        partials
    }

    fn intent_param(&self, name: &str, b: &mut Binding_, f: &FunctionSpec) -> Option<Json> {
        let integer = |v: usize| Json::from(v);
        match (name, f.executor_ref.as_str()) {
            ("k", _) => self.intent.k.as_ref().map(|(k, t)| {
                b.tokens.extend(t.iter().copied());
                integer(*k)
            }),
            ("horizon", _) => self.intent.horizon.as_ref().map(|(h, t)| {
                b.tokens.extend(t.iter().copied());
                Json::from(*h)
            }),
            ("threshold", _) => Some(match &self.intent.threshold {
                Some((v, t)) => {
                    b.tokens.extend(t.iter().copied());
                    Json::from(*v)
                }
                None => Json::from(self.config.anomaly_threshold),
            }),
            _ => None,
        }
    }

    fn assemble(
        &self,
        f: &FunctionSpec,
        option: &CueOption,
        children: &[Partial],
        binding: Binding_,
        slot: ValueKind,
        split: Split,
    ) -> Option<Partial> {
        let required_missing = f
            .params
            .iter()
            .any(|p| p.literal == LiteralKind::Column && p.name != "label" && !binding.params.contains_key(&p.name));
        if required_missing {
            return None;
        }
        let output = match f.output.kind {
            Kind::Series | Kind::Table | Kind::GeoSeries if f.output_hint_from_input => {
                children.first().map_or(f.output, |c| c.output())
            }
            Kind::Series => {
                let hint = binding
                    .key
                    .as_ref()
                    .and_then(|k| self.dataset.column(k))
                    .map_or(SemanticType::Categorical, |c| c.semantic_type);
                ValueKind::with_hint(Kind::Series, hint)
            }
            _ => f.output,
        };
        if !slot.accepts(&output) {
            return None;
        }
        let keyed = match output.kind {
            Kind::Scalar | Kind::Text | Kind::Boolean => Keyed::None,
            _ => match (&binding.key, children) {
                (Some(k), _) => Keyed::Column(k.clone()),
                (None, [only]) if !only.is_leaf => only.keyed.clone(),
                _ => Keyed::None,
            },
        };
        let score = match option.score {
            Some(s) => s,
            None if f.role == Role::Projection => binding.anchor_score,
            None => INSERTION_PRIOR,
        };
        let mut tokens = binding.tokens;
        tokens.extend(option.tokens.iter().copied());
        if f.role == Role::Projection {
            tokens.extend(self.intent.projection_tokens.iter().copied());
        }
        let mut nodes: Vec<PNode> = Vec::new();
        let mut inputs = Vec::new();
        let mut cue_tokens = option.tokens.clone();
        for c in children {
            let offset = nodes.len();
            nodes.extend(c.nodes.iter().cloned().map(|mut n| {
                n.inputs.iter_mut().for_each(|i| *i += offset);
                n
            }));
            inputs.push(nodes.len() - 1);
            cue_tokens.extend(c.cue_tokens.iter().copied());
        }
        let pinned_projection = f.role == Role::Projection
            && children.first().is_some_and(|c| c.is_leaf)
            && self.unpinned_keys(split).is_empty();
        nodes.push(PNode {
            function: f.id.clone(),
            executor: f.executor_ref.clone(),
            params: binding.params,
            inputs,
            score,
            output,
            tokens,
        });
        Some(Partial {
            nodes,
            keyed,
            cue_tokens,
            value_column: binding.value_column.or_else(|| children.first().and_then(|c| c.value_column.clone())),
            is_leaf: false,
            pinned_projection,
        })
    }

    /// (relevance, coverage) of a partial graph taken as the sink.
    fn relevance(&self, p: &Partial) -> (f64, f64) {
        let mut consumed: BTreeSet<usize> = p.nodes.iter().flat_map(|n| n.tokens.iter().copied()).collect();
        for k in &self.intent.keys {
            let keyed = match &p.keyed {
                Keyed::All => true,
                Keyed::Column(c) => c == &k.column,
                Keyed::None => false,
            };
            if keyed || k.scope {
                consumed.extend(k.tokens.iter().copied());
            }
        }
        let countable = &self.intent.countable;
        let coverage = if countable.is_empty() {
            1.0
        } else {
            countable.intersection(&consumed).count() as f64 / countable.len() as f64
        };
        let mean = p.nodes.iter().map(|n| n.score).sum::<f64>() / p.nodes.len() as f64;
        (mean * coverage, coverage)
    }

    fn complete(&self, p: &Partial) -> bool {
        if p.is_leaf {
            let table_modality = self
                .phrase
                .modality_hint
                .as_ref()
                .is_some_and(|m| matches!(m.viz, VizType::TableView | VizType::MatrixHeatmap));
            return self.intent.table_requested
                || table_modality
                || self.intent.filters.iter().any(|f| f.numeric_comparison);
        }
        !p.pinned_projection
    }

    fn finalize(&self, p: &Partial) -> OperationGraph {
        let ids = p.ids();
        let nodes: Vec<OperationNode> = p
            .nodes
            .iter()
            .zip(&ids)
            .map(|(n, id)| OperationNode {
                id: id.clone(),
                function: n.function.clone(),
                executor: n.executor.clone(),
                params: n.params.clone(),
                inputs: n.inputs.iter().map(|&i| ids[i].clone()).collect(),
                score: n.score,
                output: n.output,
                consumed_spans: self.spans_of(&n.tokens),
            })
            .collect();
        let (relevance, coverage) = self.relevance(p);
        let mut g = OperationGraph {
            sink: ids.last().cloned().unwrap_or_default(),
            nodes,
            depth: 0,
            relevance,
            coverage,
            complete: self.complete(p),
        };
        g.depth = g.longest_path().unwrap_or(0);
        g
    }

    fn spans_of(&self, tokens: &BTreeSet<usize>) -> Vec<Span> {
        let mut spans: Vec<Span> = Vec::new();
        let mut last: Option<usize> = None;
        for &i in tokens {
            let s = self.phrase.tokens[i].span;
            match (spans.last_mut(), last) {
                (Some(cur), Some(l)) if l + 1 == i => cur.end = s.end,
                _ => spans.push(s),
            }
            last = Some(i);
        }
        spans
    }
}

/// One parameter assignment under construction.
#[derive(Debug, Clone)]
struct Binding_ {
    params: BTreeMap<String, Json>,
    tokens: BTreeSet<usize>,
    key: Option<String>,
    value_column: Option<String>,
    anchor_score: f64,
}

impl Default for Binding_ {
    fn default() -> Self {
        Self { params: BTreeMap::new(), tokens: BTreeSet::new(), key: None, value_column: None, anchor_score: 1.0 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotate::{annotate, AnnotatorConfig};
    use crate::dataset::{Gazetteer, SchemaOverrides};
    use crate::registry::builtin_registry;

    fn honey() -> Dataset {
        let overrides: SchemaOverrides = serde_json::from_str(include_str!("../data/honey.schema.json")).unwrap();
        Dataset::from_csv_str(include_str!("../data/honey.csv"), &overrides, Gazetteer::bundled()).unwrap()
    }

    fn best(text: &str) -> OperationGraph {
        let d = honey();
        let p = annotate(text, &d, &AnnotatorConfig { reference_year: 2020, use_embeddings: true }).unwrap();
        let emb = EmbeddingStore::parse(include_str!("../data/embeddings.txt")).unwrap();
        let graphs = build(&p, &builtin_registry(), &d, &emb, &BuilderConfig::default()).unwrap();
        select(&graphs).unwrap()
    }

    fn functions(g: &OperationGraph) -> Vec<&str> {
        g.nodes.iter().map(|n| n.function.as_str()).collect()
    }

    #[test]
    fn alabama_lookup_graph() {
        let g = best("What was the price of honey in Alabama in 2010?");
        assert_eq!(functions(&g), vec!["scan", "filter", "filter", "project", "aggregate"]);
        assert!(g.complete);
        assert_eq!(g.edges().len(), 4);
        assert_eq!(g.sink_node().params["fn"], "mean");
        assert_eq!(g.depth, 4);
    }

    #[test]
    fn florida_forecast_graph() {
        let g = best("How will the average honey price develop in Florida next year?");
        assert_eq!(functions(&g), vec!["scan", "filter", "group_aggregate", "forecast"]);
        let group = &g.nodes[2];
        assert_eq!(group.params["key"], "year");
        assert_eq!(group.params["value"], "priceperlb");
        assert_eq!(group.params["fn"], "mean");
        assert_eq!(g.sink_node().params["horizon"], 1);
    }

    #[test]
    fn single_anchor_is_a_partial_leaf() {
        let g = best("Alabama");
        assert_eq!(functions(&g), vec!["scan", "filter"]);
        assert!(!g.complete);
    }

    #[test]
    fn gibberish_is_unintelligible() {
        let d = honey();
        let p = annotate("asdf qwer", &d, &AnnotatorConfig { reference_year: 2020, use_embeddings: true }).unwrap();
        let r = build(&p, &builtin_registry(), &d, &EmbeddingStore::empty(), &BuilderConfig::default());
        match r {
            Err(BuildError::Unintelligible(diag)) => assert_eq!(diag.unmatched_terms, vec!["asdf", "qwer"]),
            other => panic!("expected unintelligible, got {other:?}"),
        }
    }

    fn stub(id: &str, complete: bool, depth: usize, relevance: f64, n: usize) -> OperationGraph {
        let nodes = (0..n)
            .map(|i| OperationNode {
                id: format!("{id}#{i}"),
                function: id.into(),
                executor: id.into(),
                params: BTreeMap::new(),
                inputs: vec![],
                score: 1.0,
                output: ValueKind::new(Kind::Table),
                consumed_spans: vec![],
            })
            .collect();
        OperationGraph { nodes, sink: format!("{id}#{}", n - 1), depth, relevance, coverage: 1.0, complete }
    }

    #[test]
    fn selection_policy() {
        let g1 = stub("a", true, 1, 0.8, 2);
        let g2 = stub("b", false, 9, 1.0, 10);
        assert_eq!(select(&[g2.clone(), g1.clone()]).unwrap(), g1);
        let d3 = stub("c", false, 3, 0.9, 4);
        let d5 = stub("d", false, 5, 0.1, 6);
        assert_eq!(select(&[d3, d5.clone()]).unwrap(), d5);
        let x = stub("x", true, 1, 0.5, 2);
        let y = stub("w", true, 1, 0.5, 2);
        assert_eq!(select(&[x, y.clone()]).unwrap(), y);
        assert_eq!(select(&[]), Err(BuildError::NoCandidates));
    }
}
