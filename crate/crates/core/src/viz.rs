//! Visualization recommendation: kNN over labeled historical results, a
//! value-kind compatibility matrix and user-requested modality pinning.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::SemanticType;
use crate::registry::Kind;
use crate::value::Value;

const BUNDLED_COMPAT: &str = include_str!("../data/viz_compat.json");

pub const FEATURE_DIM: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VizType {
    TextAnswer,
    KpiCard,
    TableView,
    BarChart,
    LineChart,
    ScatterPlot,
    PieChart,
    GeoHeatmap,
    MatrixHeatmap,
}

impl VizType {
    pub const ALL: [VizType; 9] = [
        VizType::TextAnswer,
        VizType::KpiCard,
        VizType::TableView,
        VizType::BarChart,
        VizType::LineChart,
        VizType::ScatterPlot,
        VizType::PieChart,
        VizType::GeoHeatmap,
        VizType::MatrixHeatmap,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            VizType::TextAnswer => "text_answer",
            VizType::KpiCard => "kpi_card",
            VizType::TableView => "table_view",
            VizType::BarChart => "bar_chart",
            VizType::LineChart => "line_chart",
            VizType::ScatterPlot => "scatter_plot",
            VizType::PieChart => "pie_chart",
            VizType::GeoHeatmap => "geo_heatmap",
            VizType::MatrixHeatmap => "matrix_heatmap",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        VizType::ALL.into_iter().find(|v| v.as_str() == s)
    }
}

impl std::fmt::Display for VizType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error)]
pub enum VizError {
    #[error("visualization model has no examples")]
    EmptyModel,
    #[error("invalid visualization model: {0}")]
    BadModel(String),
    #[error("invalid compatibility matrix: {0}")]
    BadCompat(String),
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Fixed-width feature vector describing a result value.
///
/// Layout: kind one-hot (8, in [`Kind::ALL`] order), log10 row bucket,
/// numeric-field count, has_temporal, has_geo, category-cardinality bucket,
/// is_single_value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub [f64; FEATURE_DIM]);

pub const F_ROWS: usize = 8;
pub const F_NUMERIC: usize = 9;
pub const F_TEMPORAL: usize = 10;
pub const F_GEO: usize = 11;
pub const F_CARDINALITY: usize = 12;
pub const F_SINGLE: usize = 13;

fn row_bucket(n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        (n as f64).log10().floor().min(4.0)
    }
}

fn cardinality_bucket(n: usize) -> f64 {
    match n {
        0..=1 => 0.0,
        2..=5 => 1.0,
        6..=20 => 2.0,
        _ => 3.0,
    }
}

pub fn featurize(value: &Value) -> FeatureVector {
    let mut f = [0.0; FEATURE_DIM];
    let kind = value.kind();
    f[Kind::ALL.iter().position(|k| *k == kind).unwrap_or(0)] = 1.0;
    let distinct = |labels: &mut dyn Iterator<Item = &str>| labels.collect::<BTreeSet<_>>().len();
    let (rows, numeric, temporal, geo, cardinality) = match value {
        Value::Scalar { .. } | Value::Text { .. } | Value::Boolean { .. } => (1, 0, false, false, 0),
        Value::Series(s) => (
            s.points.len(),
            1,
            s.label_kind == SemanticType::Temporal,
            s.label_kind == SemanticType::Location,
            distinct(&mut s.points.iter().map(|p| p.label.as_str())),
        ),
        Value::GeoSeries(g) => {
            (g.points.len(), 1, false, true, distinct(&mut g.points.iter().map(|p| p.region.as_str())))
        }
        Value::Forecast(fc) => (
            fc.history.points.len() + fc.predicted.len(),
            2,
            true,
            false,
            distinct(&mut fc.history.points.iter().map(|p| p.label.as_str())),
        ),
        Value::AnomalyReport(r) => (
            r.series.points.len(),
            1,
            r.series.label_kind == SemanticType::Temporal,
            r.series.label_kind == SemanticType::Location,
            distinct(&mut r.series.points.iter().map(|p| p.label.as_str())),
        ),
        Value::Table(t) => {
            let numeric = t.columns.iter().filter(|c| c.semantic_type == SemanticType::Numerical).count();
            let has = |ty| t.columns.iter().any(|c| c.semantic_type == ty);
            let card = t
                .columns
                .iter()
                .enumerate()
                .filter(|(_, c)| c.semantic_type.is_key())
                .map(|(i, _)| t.rows.iter().map(|r| r[i].label()).collect::<BTreeSet<_>>().len())
                .max()
                .unwrap_or(0);
            (t.rows.len(), numeric, has(SemanticType::Temporal), has(SemanticType::Location), card)
        }
    };
    f[F_ROWS] = row_bucket(rows);
    f[F_NUMERIC] = numeric as f64;
    f[F_TEMPORAL] = f64::from(u8::from(temporal));
    f[F_GEO] = f64::from(u8::from(geo));
    f[F_CARDINALITY] = cardinality_bucket(cardinality);
    let single = matches!(value, Value::Scalar { .. } | Value::Text { .. } | Value::Boolean { .. }) || rows == 1;
    f[F_SINGLE] = f64::from(u8::from(single));
    FeatureVector(f)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VizExample {
    pub features: FeatureVector,
    pub label: VizType,
}

/// Labeled history plus per-feature min-max normalization constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VizModel {
    pub examples: Vec<VizExample>,
    pub min: [f64; FEATURE_DIM],
    pub max: [f64; FEATURE_DIM],
}

/// Neighbour count for a history of `n` examples: `max(1, round(sqrt(n)))`.
pub fn k_for(n: usize) -> usize {
    ((n as f64).sqrt().round() as usize).max(1)
}

impl VizModel {
    pub fn from_examples(examples: Vec<VizExample>) -> Result<Self, VizError> {
        if examples.is_empty() {
            return Err(VizError::EmptyModel);
        }
        let mut min = [f64::INFINITY; FEATURE_DIM];
        let mut max = [f64::NEG_INFINITY; FEATURE_DIM];
        for e in &examples {
            for d in 0..FEATURE_DIM {
                min[d] = min[d].min(e.features.0[d]);
                max[d] = max[d].max(e.features.0[d]);
            }
        }
        Ok(Self { examples, min, max })
    }

    pub fn load(path: &Path) -> Result<Self, VizError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| VizError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    /// Parses a model file; normalization constants must match the examples.
    pub fn from_json(text: &str) -> Result<Self, VizError> {
        let parsed: VizModel = serde_json::from_str(text).map_err(|e| VizError::BadModel(e.to_string()))?;
        let rebuilt = Self::from_examples(parsed.examples.clone())?;
        if rebuilt.min != parsed.min || rebuilt.max != parsed.max {
            return Err(VizError::BadModel("normalization constants do not match the examples".into()));
        }
        Ok(rebuilt)
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn k(&self) -> usize {
        k_for(self.examples.len())
    }

    fn normalize(&self, f: &FeatureVector) -> [f64; FEATURE_DIM] {
        let mut out = [0.0; FEATURE_DIM];
        for (d, o) in out.iter_mut().enumerate() {
            let range = self.max[d] - self.min[d];
            *o = if range > 0.0 { (f.0[d] - self.min[d]) / range } else { 0.0 };
        }
        out
    }

    /// Euclidean distance in normalized feature space.
    pub fn distance(&self, a: &FeatureVector, b: &FeatureVector) -> f64 {
        let (a, b) = (self.normalize(a), self.normalize(b));
        a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vote {
    pub viz_type: VizType,
    pub votes: usize,
    pub mean_distance: f64,
}

/// Majority vote over the k nearest examples, at most `k_out` labels.
pub fn predict_topk(model: &VizModel, features: &FeatureVector, k_out: usize) -> Result<Vec<Vote>, VizError> {
    predict_excluding(model, features, k_out, None)
}

/// Like [`predict_topk`] but ignores example `skip` (for leave-one-out). `k`
/// is computed from the examples that remain.
pub fn predict_excluding(
    model: &VizModel,
    features: &FeatureVector,
    k_out: usize,
    skip: Option<usize>,
) -> Result<Vec<Vote>, VizError> {
    let n = model.examples.len() - usize::from(skip.is_some_and(|s| s < model.examples.len()));
    if n == 0 {
        return Err(VizError::EmptyModel);
    }
    let mut dists: Vec<(f64, usize)> = model
        .examples
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != skip)
        .map(|(i, e)| (model.distance(features, &e.features), i))
        .collect();
    // stable sort: equal distances keep insertion order
    dists.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut tally: BTreeMap<VizType, (usize, f64)> = BTreeMap::new();
    for &(d, i) in dists.iter().take(k_for(n)) {
        let e = tally.entry(model.examples[i].label).or_default();
        e.0 += 1;
        e.1 += d;
    }
    let mut votes: Vec<Vote> = tally
        .into_iter()
        .map(|(viz_type, (votes, total))| Vote { viz_type, votes, mean_distance: total / votes as f64 })
        .collect();
    votes.sort_by(|a, b| {
        b.votes.cmp(&a.votes).then(a.mean_distance.total_cmp(&b.mean_distance)).then(a.viz_type.cmp(&b.viz_type))
    });
    votes.truncate(k_out);
    Ok(votes)
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct CompatRule {
    kind: Kind,
    qualifier: Option<SemanticType>,
}

/// Which value kinds each visualization form can display.
#[derive(Debug, Clone, PartialEq)]
pub struct CompatMatrix {
    rules: BTreeMap<VizType, Vec<CompatRule>>,
}

static BUNDLED_MATRIX: OnceLock<CompatMatrix> = OnceLock::new();

impl CompatMatrix {
    pub fn bundled() -> &'static CompatMatrix {
        BUNDLED_MATRIX.get_or_init(|| Self::from_json(BUNDLED_COMPAT).expect("bundled compatibility matrix is valid"))
    }

    /// Entries are `"kind"` or `"kind:semantic_type"`; a qualified series entry
    /// needs that label kind, a qualified table entry needs such a column.
    pub fn from_json(text: &str) -> Result<Self, VizError> {
        let raw: BTreeMap<VizType, Vec<String>> =
            serde_json::from_str(text).map_err(|e| VizError::BadCompat(e.to_string()))?;
        let mut rules = BTreeMap::new();
        for (viz, entries) in raw {
            let mut parsed = Vec::new();
            for entry in entries {
                let (kind, qualifier) = match entry.split_once(':') {
                    Some((k, q)) => (k, Some(q)),
                    None => (entry.as_str(), None),
                };
                let kind = Kind::parse(kind).ok_or_else(|| VizError::BadCompat(format!("unknown kind {kind:?}")))?;
                let qualifier = match qualifier {
                    Some(q) => Some(
                        serde_json::from_value(serde_json::Value::String(q.to_string()))
                            .map_err(|_| VizError::BadCompat(format!("unknown qualifier {q:?}")))?,
                    ),
                    None => None,
                };
                parsed.push(CompatRule { kind, qualifier });
            }
            rules.insert(viz, parsed);
        }
        Ok(Self { rules })
    }

    pub fn compatible(&self, viz: VizType, value: &Value) -> bool {
        // text answers can describe anything
        if viz == VizType::TextAnswer {
            return true;
        }
        let Some(rules) = self.rules.get(&viz) else { return false };
        rules.iter().any(|r| {
            r.kind == value.kind()
                && match r.qualifier {
                    None => true,
                    Some(q) => match value {
                        Value::Series(s) => s.label_kind == q,
                        Value::Table(t) => t.columns.iter().any(|c| c.semantic_type == q),
                        Value::GeoSeries(_) => q == SemanticType::Location,
                        _ => false,
                    },
                }
        })
    }

    fn breadth(&self, viz: VizType) -> usize {
        self.rules.get(&viz).map_or(usize::MAX, Vec::len)
    }

    /// The rule-only ranking: compatible forms, most specific first.
    pub fn rule_ranking(&self, value: &Value) -> Vec<VizType> {
        let mut out: Vec<VizType> = VizType::ALL.into_iter().filter(|v| self.compatible(*v, value)).collect();
        out.sort_by_key(|v| (self.breadth(*v), *v));
        out
    }
}

/// Where the chart finds its data inside the bound value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VizBinding {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
    /// Horizontal reference line, e.g. the mean of an overlaid series.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_line: Option<f64>,
    /// First label of the predicted segment of a forecast.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted_from: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedViz {
    pub viz_type: VizType,
    pub votes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VizSpec {
    pub viz_type: VizType,
    pub binding: VizBinding,
    pub title: String,
    pub ranking: Vec<RankedViz>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

pub fn recommend(value: &Value, modality: Option<VizType>, model: &VizModel) -> VizSpec {
    recommend_with(value, modality, model, CompatMatrix::bundled())
}

/// Ranked top-3 forms for `value`.
pub fn recommend_with(value: &Value, modality: Option<VizType>, model: &VizModel, compat: &CompatMatrix) -> VizSpec {
    recommend_top(value, modality, model, compat, 3)
}

/// Ranked top-`n` forms for `value`. The kNN ranking is filtered to compatible
/// forms and padded from the rule ranking; a compatible modality is pinned
/// first, an incompatible one is ignored with a diagnostic.
pub fn recommend_top(
    value: &Value,
    modality: Option<VizType>,
    model: &VizModel,
    compat: &CompatMatrix,
    n: usize,
) -> VizSpec {
    let mut diagnostics = Vec::new();
    let mut ranking: Vec<RankedViz> = Vec::new();
    let push = |ranking: &mut Vec<RankedViz>, viz_type: VizType, votes: usize| {
        if !ranking.iter().any(|r| r.viz_type == viz_type) {
            ranking.push(RankedViz { viz_type, votes });
        }
    };
    let votes = predict_topk(model, &featurize(value), VizType::ALL.len()).unwrap_or_default();
    if let Some(m) = modality {
        if compat.compatible(m, value) {
            let v = votes.iter().find(|v| v.viz_type == m).map_or(0, |v| v.votes);
            push(&mut ranking, m, v);
        } else {
            diagnostics.push(format!("requested {m} cannot display a {} result; ignored", value.kind().as_str()));
        }
    }
    for v in votes.iter().filter(|v| compat.compatible(v.viz_type, value)) {
        push(&mut ranking, v.viz_type, v.votes);
    }
    for viz in compat.rule_ranking(value) {
        push(&mut ranking, viz, 0);
    }
    if ranking.is_empty() {
        ranking.push(RankedViz { viz_type: VizType::TextAnswer, votes: 0 });
    }
    ranking.truncate(n.max(1));
    let viz_type = ranking[0].viz_type;
    VizSpec { viz_type, binding: binding_for(viz_type, value), title: default_title(value), ranking, diagnostics }
}

/// A `VizSpec` for a fixed form, without a ranking beyond itself.
pub fn spec_for(viz_type: VizType, value: &Value) -> VizSpec {
    VizSpec {
        viz_type,
        binding: binding_for(viz_type, value),
        title: default_title(value),
        ranking: vec![RankedViz { viz_type, votes: 0 }],
        diagnostics: Vec::new(),
    }
}

pub fn default_title(value: &Value) -> String {
    match value {
        Value::Scalar { number, unit } => match unit {
            Some(u) => format!("{} {u}", crate::value::format_number(*number)),
            None => crate::value::format_number(*number),
        },
        Value::Text { text } => text.clone(),
        Value::Boolean { value } => value.to_string(),
        Value::Series(s) => format!("{} values by {}", s.points.len(), s.label_kind.as_str()),
        Value::Table(t) => format!("{} rows × {} columns", t.rows.len(), t.columns.len()),
        Value::GeoSeries(g) => format!("{} regions", g.points.len()),
        Value::Forecast(f) => format!("forecast of {} periods", f.predicted.len()),
        Value::AnomalyReport(r) => format!("{} anomalies in {} values", r.flagged.len(), r.series.points.len()),
    }
}

fn binding_for(viz: VizType, value: &Value) -> VizBinding {
    let mut b = VizBinding::default();
    match value {
        Value::Scalar { .. } => b.value = Some("number".into()),
        Value::Text { .. } => b.value = Some("text".into()),
        Value::Boolean { .. } => b.value = Some("value".into()),
        Value::Series(_) | Value::AnomalyReport(_) => {
            let prefix = if matches!(value, Value::AnomalyReport(_)) { "series.points" } else { "points" };
            if viz == VizType::GeoHeatmap {
                b.region = Some(format!("{prefix}[].label"));
                b.value = Some(format!("{prefix}[].value"));
            } else {
                b.x = Some(format!("{prefix}[].label"));
                b.y = Some(format!("{prefix}[].value"));
            }
        }
        Value::GeoSeries(_) => {
            if matches!(viz, VizType::GeoHeatmap | VizType::PieChart | VizType::TableView | VizType::TextAnswer) {
                b.region = Some("points[].region".into());
                b.value = Some("points[].value".into());
            } else {
                b.x = Some("points[].region".into());
                b.y = Some("points[].value".into());
            }
        }
        Value::Forecast(f) => {
            b.x = Some("history.points[].label".into());
            b.y = Some("history.points[].value".into());
            b.predicted_from = f.predicted.first().map(|p| p.label.clone());
        }
        Value::Table(t) => {
            let key = t.columns.iter().find(|c| c.semantic_type.is_key());
            let num = t.columns.iter().find(|c| c.semantic_type == SemanticType::Numerical);
            if viz == VizType::GeoHeatmap {
                b.region = t.columns.iter().find(|c| c.semantic_type == SemanticType::Location).map(|c| c.name.clone());
                b.value = num.map(|c| c.name.clone());
            } else {
                b.x = key.map(|c| c.name.clone());
                b.y = num.map(|c| c.name.clone());
            }
        }
    }
    b
}

/// Combined rendering of a final result and an intermediate one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Overlay {
    /// One chart showing both values.
    Combined { spec: VizSpec },
    /// Independent specs shown one above the other, intermediate first.
    Stacked { specs: Vec<VizSpec> },
}

pub fn overlay(final_value: &Value, intermediate: &Value, model: &VizModel) -> Overlay {
    let chart_for = |label_kind: SemanticType| {
        if label_kind == SemanticType::Temporal {
            VizType::LineChart
        } else {
            VizType::BarChart
        }
    };
    match (final_value, intermediate) {
        (Value::Scalar { number, .. }, Value::Series(s)) => {
            let mut spec = spec_for(chart_for(s.label_kind), intermediate);
            spec.binding.reference_line = Some(*number);
            spec.title = format!(
                "{} with reference line at {}",
                default_title(intermediate),
                crate::value::format_number(*number)
            );
            Overlay::Combined { spec }
        }
        (Value::Forecast(f), Value::Series(_)) => {
            let mut spec = spec_for(VizType::LineChart, final_value);
            spec.title = format!("history and {}", default_title(final_value));
            spec.binding.predicted_from = f.predicted.first().map(|p| p.label.clone());
            Overlay::Combined { spec }
        }
        (Value::Series(a), Value::Series(b)) if a.label_kind == b.label_kind => {
            let mut spec = spec_for(chart_for(a.label_kind), final_value);
            spec.title = "final and intermediate series".into();
            spec.binding.value = Some("series[0..2]".into());
            Overlay::Combined { spec }
        }
        _ => {
            let stacked = |v: &Value| match v {
                Value::Scalar { .. } => spec_for(VizType::KpiCard, v),
                _ => recommend(v, None, model),
            };
            Overlay::Stacked { specs: vec![stacked(intermediate), stacked(final_value)] }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::value::{GeoPoint, GeoSeries, Point, Series};

    fn ex(features: [f64; FEATURE_DIM], label: VizType) -> VizExample {
        VizExample { features: FeatureVector(features), label }
    }

    fn one_hot(i: usize) -> [f64; FEATURE_DIM] {
        let mut f = [0.0; FEATURE_DIM];
        f[i] = 1.0;
        f
    }

    #[test]
    fn exactly_nine_forms() {
        assert_eq!(VizType::ALL.len(), 9);
        for v in VizType::ALL {
            assert_eq!(VizType::parse(v.as_str()), Some(v));
        }
    }

    #[test]
    fn k_values() {
        assert_eq!(k_for(1), 1);
        assert_eq!(k_for(4), 2);
        assert_eq!(k_for(9), 3);
        assert_eq!(k_for(100), 10);
        assert_eq!(k_for(10_000), 100);
        assert_eq!(k_for(2), 1);
        assert_eq!(k_for(3), 2);
    }

    #[test]
    fn scalar_features() {
        let f = featurize(&Value::Scalar { number: 2.4, unit: None });
        let mut expect = [0.0; FEATURE_DIM];
        expect[0] = 1.0;
        expect[F_SINGLE] = 1.0;
        assert_eq!(f.0, expect);
    }

    #[test]
    fn geo_features() {
        let points = (0..44).map(|i| GeoPoint { region: format!("R{i}"), value: i as f64 }).collect();
        let f = featurize(&Value::GeoSeries(GeoSeries { unit: None, points }));
        assert_eq!(f.0[5], 1.0);
        assert_eq!(f.0[F_GEO], 1.0);
        assert_eq!(f.0[F_CARDINALITY], 3.0);
        assert_eq!(f.0[F_ROWS], 1.0);
    }

    #[test]
    fn four_example_vote() {
        // two bar_chart examples sit next to the query, two line_chart far away
        let model = VizModel::from_examples(vec![
            ex(one_hot(3), VizType::BarChart),
            ex(one_hot(4), VizType::LineChart),
            ex(one_hot(3), VizType::BarChart),
            ex(one_hot(4), VizType::LineChart),
        ])
        .unwrap();
        assert_eq!(model.k(), 2);
        let votes = predict_topk(&model, &FeatureVector(one_hot(3)), 3).unwrap();
        assert_eq!(votes, vec![Vote { viz_type: VizType::BarChart, votes: 2, mean_distance: 0.0 }]);
    }

    #[test]
    fn single_example_model() {
        let model = VizModel::from_examples(vec![ex(one_hot(0), VizType::KpiCard)]).unwrap();
        let votes = predict_topk(&model, &FeatureVector(one_hot(4)), 3).unwrap();
        assert_eq!(votes[0].viz_type, VizType::KpiCard);
        assert_eq!(votes[0].votes, 1);
        assert!(matches!(VizModel::from_examples(vec![]), Err(VizError::EmptyModel)));
    }

    #[test]
    fn ties_fall_back_to_insertion_order_and_type_order() {
        // all examples equidistant: the first k in insertion order vote
        let model = VizModel::from_examples(vec![
            ex(one_hot(1), VizType::PieChart),
            ex(one_hot(2), VizType::BarChart),
            ex(one_hot(3), VizType::LineChart),
            ex(one_hot(4), VizType::TableView),
        ])
        .unwrap();
        let votes = predict_topk(&model, &FeatureVector(one_hot(0)), 3).unwrap();
        let types: Vec<_> = votes.iter().map(|v| v.viz_type).collect();
        assert_eq!(types, vec![VizType::BarChart, VizType::PieChart]);
    }

    fn scalar_model() -> VizModel {
        let s = featurize(&Value::Scalar { number: 1.0, unit: None });
        VizModel::from_examples(vec![VizExample { features: s, label: VizType::KpiCard }]).unwrap()
    }

    #[test]
    fn modality_pins_when_compatible() {
        let v = Value::Scalar { number: 2.4, unit: Some("USD/lb".into()) };
        let spec = recommend(&v, Some(VizType::TableView), &scalar_model());
        assert_eq!(spec.viz_type, VizType::TableView);
        assert_eq!(spec.ranking[1].viz_type, VizType::KpiCard);
        assert!(spec.diagnostics.is_empty());
    }

    #[test]
    fn incompatible_modality_is_ignored() {
        let t = Value::Table(crate::value::Table {
            columns: vec![crate::value::TableColumn {
                name: "v".into(),
                semantic_type: SemanticType::Numerical,
                unit: None,
            }],
            rows: vec![],
        });
        let spec = recommend(&t, Some(VizType::GeoHeatmap), &scalar_model());
        assert_ne!(spec.viz_type, VizType::GeoHeatmap);
        assert_eq!(spec.diagnostics.len(), 1);
        assert!(spec.ranking.iter().all(|r| CompatMatrix::bundled().compatible(r.viz_type, &t)));
    }

    #[test]
    fn overlay_mean_reference_line() {
        let s = Value::Series(Series {
            label_kind: SemanticType::Temporal,
            unit: None,
            points: vec![Point { label: "2010".into(), value: 2.0 }, Point { label: "2011".into(), value: 4.0 }],
        });
        let before = s.clone();
        let m = Value::Scalar { number: 3.0, unit: None };
        match overlay(&m, &s, &scalar_model()) {
            Overlay::Combined { spec } => {
                assert_eq!(spec.viz_type, VizType::LineChart);
                assert_eq!(spec.binding.reference_line, Some(3.0));
            }
            other => panic!("expected combined overlay, got {other:?}"),
        }
        assert_eq!(s, before);
        match overlay(&m, &m, &scalar_model()) {
            Overlay::Stacked { specs } => assert!(specs.iter().all(|s| s.viz_type == VizType::KpiCard)),
            other => panic!("expected stacked overlay, got {other:?}"),
        }
    }
}
