//! Scores the pipeline against a request corpus.
//!
//! Each record carries four paraphrased variants of one request, the expected
//! result and the acceptable visualization forms. Results are compared with
//! a per-record tolerance; visualization metrics only count requests whose
//! result was correct.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value as Json;
use thiserror::Error;

use crate::api::Engine;
use crate::registry::Kind;
use crate::value::{round_sig6, Cell, Value};
use crate::viz::{featurize, predict_excluding, CompatMatrix, FeatureVector, VizExample, VizModel, VizType};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {source}")]
    Parse { line: usize, source: serde_json::Error },
    #[error("record {0}: expected 4 variants")]
    Variants(String),
    #[error("record {0}: no acceptable visualization listed")]
    NoViz(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequestClass {
    Simple,
    Complex,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tolerance {
    Abs(f64),
    Rel(f64),
}

impl Tolerance {
    pub fn accepts(self, expected: f64, actual: f64) -> bool {
        let diff = (expected - actual).abs();
        match self {
            Tolerance::Abs(t) => diff <= t,
            Tolerance::Rel(r) => diff <= r * expected.abs().max(f64::MIN_POSITIVE),
        }
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance::Rel(1e-6)
    }
}

/// Expected result. Without `value` only the kind is checked.
///
/// Value forms per kind: scalar `number`; series and geo series
/// `[[label, number], ...]`; forecast `{"predicted": [[label, number], ...]}`;
/// anomaly report `{"flagged": [label, ...]}`; table `[[cell, ...], ...]` with
/// cells in column order; text a string; boolean a bool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectedResult {
    pub kind: Kind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<Json>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<Tolerance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestRecord {
    pub id: String,
    pub class: RequestClass,
    pub variants: Vec<String>,
    pub expected_result: ExpectedResult,
    pub expected_viz: Vec<VizType>,
    #[serde(default)]
    pub notes: String,
}

pub fn parse_corpus(text: &str) -> Result<Vec<RequestRecord>, EvalError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let r: RequestRecord = serde_json::from_str(line).map_err(|source| EvalError::Parse { line: i + 1, source })?;
        if r.variants.len() != 4 {
            return Err(EvalError::Variants(r.id));
        }
        if r.expected_viz.is_empty() {
            return Err(EvalError::NoViz(r.id));
        }
        out.push(r);
    }
    Ok(out)
}

pub fn load_corpus(path: &Path) -> Result<Vec<RequestRecord>, EvalError> {
    let text =
        std::fs::read_to_string(path).map_err(|source| EvalError::Io { path: path.display().to_string(), source })?;
    parse_corpus(&text)
}

pub const BUNDLED_CORPUS: &str = include_str!("../data/corpus.jsonl");

pub fn bundled_corpus() -> Vec<RequestRecord> {
    parse_corpus(BUNDLED_CORPUS).expect("bundled corpus is valid")
}

fn pairs(v: &Json) -> Option<Vec<(String, f64)>> {
    v.as_array()?
        .iter()
        .map(|p| {
            let p = p.as_array()?;
            Some((cell_text(p.first()?), p.get(1)?.as_f64()?))
        })
        .collect()
}

fn cell_text(v: &Json) -> String {
    match v {
        Json::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Canonical text of a cell for multiset comparison.
fn canonical(v: &Json) -> String {
    match v.as_f64() {
        Some(x) => format!("{}", round_sig6(x)),
        None => cell_text(v),
    }
}

fn sorted<T: Ord>(mut v: Vec<T>) -> Vec<T> {
    v.sort();
    v
}

fn pair_multiset(pairs: &[(String, f64)]) -> Vec<(String, String)> {
    sorted(pairs.iter().map(|(l, v)| (l.clone(), format!("{}", round_sig6(*v)))).collect())
}

fn pairs_within(expected: &[(String, f64)], actual: &[(String, f64)], tol: Tolerance) -> bool {
    expected.len() == actual.len() && expected.iter().zip(actual).all(|(e, a)| e.0 == a.0 && tol.accepts(e.1, a.1))
}

/// Whether `actual` satisfies `expected`; `Err` explains a mismatch.
///
/// Scalars and forecasts compare within the tolerance. Series, geo series and
/// tables compare as multisets of rows after rounding to six significant digits.
pub fn check_result(expected: &ExpectedResult, actual: &Value) -> Result<(), String> {
    if actual.kind() != expected.kind {
        return Err(format!("expected a {} result, got {}", expected.kind.as_str(), actual.kind().as_str()));
    }
    let Some(want) = &expected.value else { return Ok(()) };
    let tol = expected.tolerance.unwrap_or_default();
    let ok = match actual {
        Value::Scalar { number, .. } => want.as_f64().is_some_and(|w| tol.accepts(w, *number)),
        Value::Text { text } => want.as_str() == Some(text.as_str()),
        Value::Boolean { value } => want.as_bool() == Some(*value),
        Value::Series(s) => {
            let got: Vec<(String, f64)> = s.points.iter().map(|p| (p.label.clone(), p.value)).collect();
            pairs(want).is_some_and(|w| pair_multiset(&w) == pair_multiset(&got))
        }
        Value::GeoSeries(g) => {
            let got: Vec<(String, f64)> = g.points.iter().map(|p| (p.region.clone(), p.value)).collect();
            pairs(want).is_some_and(|w| pair_multiset(&w) == pair_multiset(&got))
        }
        Value::Forecast(f) => {
            let got: Vec<(String, f64)> = f.predicted.iter().map(|p| (p.label.clone(), p.value)).collect();
            want.get("predicted").and_then(pairs).is_some_and(|w| pairs_within(&w, &got, tol))
        }
        Value::AnomalyReport(r) => {
            let got: Vec<String> = r.flagged.iter().map(|&i| r.series.points[i].label.clone()).collect();
            want.get("flagged")
                .and_then(Json::as_array)
                .is_some_and(|w| sorted(w.iter().map(cell_text).collect()) == sorted(got))
        }
        Value::Table(t) => {
            let got: Vec<Vec<String>> = sorted(
                t.rows
                    .iter()
                    .map(|r| {
                        r.iter()
                            .map(|c| match c {
                                Cell::Num(x) => format!("{}", round_sig6(*x)),
                                Cell::Text(s) => s.clone(),
                            })
                            .collect()
                    })
                    .collect(),
            );
            want.as_array().is_some_and(|rows| {
                let w: Option<Vec<Vec<String>>> =
                    rows.iter().map(|r| r.as_array().map(|cells| cells.iter().map(canonical).collect())).collect();
                w.is_some_and(|w| sorted(w) == got)
            })
        }
    };
    if ok {
        Ok(())
    } else {
        Err(format!("value mismatch: expected {want}"))
    }
}

/// Fraction of cases whose top `n` predictions contain an acceptable label.
pub fn topn_accuracy(predictions: &[Vec<VizType>], truths: &[Vec<VizType>], n: usize) -> f64 {
    if predictions.is_empty() {
        return 0.0;
    }
    let hits = predictions.iter().zip(truths).filter(|(p, t)| p.iter().take(n).any(|v| t.contains(v))).count();
    hits as f64 / predictions.len() as f64
}

/// Mean over primary labels (first acceptable form) of the share of that
/// label's cases whose top `n` predictions contain it.
pub fn macro_recall(predictions: &[Vec<VizType>], truths: &[Vec<VizType>], n: usize) -> f64 {
    let per = recall_per_label(predictions, truths, n);
    if per.is_empty() {
        return 0.0;
    }
    per.values().sum::<f64>() / per.len() as f64
}

/// Recall@n for every primary label that occurs in `truths`.
pub fn recall_per_label(predictions: &[Vec<VizType>], truths: &[Vec<VizType>], n: usize) -> BTreeMap<VizType, f64> {
    let mut per: BTreeMap<VizType, (usize, usize)> = BTreeMap::new();
    for (p, t) in predictions.iter().zip(truths) {
        let Some(&label) = t.first() else { continue };
        let e = per.entry(label).or_default();
        e.1 += 1;
        if p.iter().take(n).any(|v| *v == label) {
            e.0 += 1;
        }
    }
    per.into_iter().map(|(l, (hit, total))| (l, hit as f64 / total as f64)).collect()
}

/// Labels ordered by frequency in `labels`, ties in form order.
pub fn zero_r(labels: &[VizType]) -> Vec<VizType> {
    let mut counts: BTreeMap<VizType, usize> = BTreeMap::new();
    for l in labels {
        *counts.entry(*l).or_default() += 1;
    }
    let mut ranked: Vec<(VizType, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked.into_iter().map(|(v, _)| v).collect()
}

/// The top `n` forms from kNN votes filtered to forms compatible with the
/// value and padded from the rule ranking, skipping example `skip`.
pub fn knn_ranking(
    model: &VizModel,
    features: &FeatureVector,
    value: &Value,
    compat: &CompatMatrix,
    skip: Option<usize>,
    n: usize,
) -> Vec<VizType> {
    let mut out: Vec<VizType> = Vec::new();
    let votes = predict_excluding(model, features, VizType::ALL.len(), skip).unwrap_or_default();
    for v in votes.iter().map(|v| v.viz_type).chain(compat.rule_ranking(value)) {
        if compat.compatible(v, value) && !out.contains(&v) {
            out.push(v);
        }
    }
    out.truncate(n);
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantOutcome {
    pub variant: usize,
    pub correct: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub viz: Vec<VizType>,
    #[serde(skip)]
    pub value: Option<Value>,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordOutcome {
    pub id: String,
    pub class: RequestClass,
    pub variants: Vec<VariantOutcome>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassAccuracy {
    pub records: usize,
    /// Accuracy of each variant position over the class.
    pub per_variant: Vec<f64>,
    /// Accuracy of the first (canonical) phrasing.
    pub base: f64,
    /// Share of records answered correctly under all four phrasings.
    pub all_variants: f64,
    /// Accuracy over every variant of every record.
    pub overall: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VizMetrics {
    /// Correct results the visualization was scored on.
    pub evaluated: usize,
    pub top1: f64,
    pub top3: f64,
    pub macro_recall_at_1: f64,
    pub macro_recall_at_3: f64,
    pub zero_r_top1: f64,
    pub zero_r_top3: f64,
    pub compat_rule_top1: f64,
    pub compat_rule_top3: f64,
    /// The configured ranking length and its accuracy figures.
    pub n: usize,
    pub top_n: f64,
    pub macro_recall_at_n: f64,
    pub zero_r_top_n: f64,
    pub compat_rule_top_n: f64,
    pub recall_at_1: BTreeMap<VizType, f64>,
    pub recall_at_n: BTreeMap<VizType, f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LooMetrics {
    pub examples: usize,
    pub knn_top3: f64,
    pub zero_r_top3: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub records: usize,
    pub classes: BTreeMap<RequestClass, ClassAccuracy>,
    pub viz: VizMetrics,
    pub loo: LooMetrics,
    pub mean_latency_ms: f64,
    pub max_latency_ms: f64,
    pub wall_time_ms: f64,
    pub failures: Vec<String>,
    pub outcomes: Vec<RecordOutcome>,
}

fn run_record(engine: &Engine, r: &RequestRecord) -> RecordOutcome {
    let variants = r
        .variants
        .iter()
        .enumerate()
        .map(|(i, text)| {
            let start = Instant::now();
            let answer = engine.answer(text);
            let elapsed_ms = start.elapsed().as_secs_f64() * 1000.0;
            match answer {
                Ok(a) => {
                    let check = check_result(&r.expected_result, &a.value);
                    VariantOutcome {
                        variant: i,
                        correct: check.is_ok(),
                        error: check.err(),
                        viz: a.viz.ranking.iter().map(|v| v.viz_type).collect(),
                        value: Some(a.value),
                        elapsed_ms,
                    }
                }
                Err(e) => VariantOutcome {
                    variant: i,
                    correct: false,
                    error: Some(e.to_string()),
                    viz: Vec::new(),
                    value: None,
                    elapsed_ms,
                },
            }
        })
        .collect();
    RecordOutcome { id: r.id.clone(), class: r.class, variants }
}

/// Labeled examples from the canonical phrasing of every correctly answered record.
pub fn training_examples(engine: &Engine, corpus: &[RequestRecord]) -> Vec<VizExample> {
    corpus
        .par_iter()
        .filter_map(|r| {
            let a = engine.answer(&r.variants[0]).ok()?;
            check_result(&r.expected_result, &a.value).ok()?;
            Some(VizExample { features: featurize(&a.value), label: r.expected_viz[0] })
        })
        .collect()
}

/// Scores every variant of every record; the visualization top-N uses the
/// engine's configured ranking length.
pub fn evaluate(engine: &Engine, corpus: &[RequestRecord]) -> EvalReport {
    let top_n = engine.config.viz_top_n;
    let start = Instant::now();
    let outcomes: Vec<RecordOutcome> = corpus.par_iter().map(|r| run_record(engine, r)).collect();
    let mut report = EvalReport { records: corpus.len(), ..Default::default() };

    for class in [RequestClass::Simple, RequestClass::Complex] {
        let recs: Vec<&RecordOutcome> = outcomes.iter().filter(|o| o.class == class).collect();
        if recs.is_empty() {
            continue;
        }
        let n = recs.len() as f64;
        let per_variant: Vec<f64> =
            (0..4).map(|v| recs.iter().filter(|o| o.variants[v].correct).count() as f64 / n).collect();
        let all = recs.iter().filter(|o| o.variants.iter().all(|v| v.correct)).count() as f64 / n;
        report.classes.insert(
            class,
            ClassAccuracy {
                records: recs.len(),
                base: per_variant[0],
                overall: per_variant.iter().sum::<f64>() / 4.0,
                per_variant,
                all_variants: all,
            },
        );
    }

    // visualization over correct results
    let compat = CompatMatrix::bundled();
    let mut preds = Vec::new();
    let mut truths = Vec::new();
    let mut rule_preds = Vec::new();
    for (o, r) in outcomes.iter().zip(corpus) {
        for v in o.variants.iter().filter(|v| v.correct) {
            preds.push(v.viz.clone());
            truths.push(r.expected_viz.clone());
            rule_preds.push(v.value.as_ref().map(|x| compat.rule_ranking(x)).unwrap_or_default());
        }
    }
    let primary: Vec<VizType> = truths.iter().map(|t| t[0]).collect();
    let zr = zero_r(&primary);
    let zr_preds: Vec<Vec<VizType>> = vec![zr; truths.len()];
    report.viz = VizMetrics {
        evaluated: preds.len(),
        top1: topn_accuracy(&preds, &truths, 1),
        top3: topn_accuracy(&preds, &truths, 3),
        macro_recall_at_1: macro_recall(&preds, &truths, 1),
        macro_recall_at_3: macro_recall(&preds, &truths, 3),
        zero_r_top1: topn_accuracy(&zr_preds, &truths, 1),
        zero_r_top3: topn_accuracy(&zr_preds, &truths, 3),
        compat_rule_top1: topn_accuracy(&rule_preds, &truths, 1),
        compat_rule_top3: topn_accuracy(&rule_preds, &truths, 3),
        n: top_n,
        top_n: topn_accuracy(&preds, &truths, top_n),
        macro_recall_at_n: macro_recall(&preds, &truths, top_n),
        zero_r_top_n: topn_accuracy(&zr_preds, &truths, top_n),
        compat_rule_top_n: topn_accuracy(&rule_preds, &truths, top_n),
        recall_at_1: recall_per_label(&preds, &truths, 1),
        recall_at_n: recall_per_label(&preds, &truths, top_n),
    };
    report.loo = leave_one_out(&engine.viz_model, &outcomes, corpus);

    let lat: Vec<f64> = outcomes.iter().flat_map(|o| o.variants.iter().map(|v| v.elapsed_ms)).collect();
    if !lat.is_empty() {
        report.mean_latency_ms = lat.iter().sum::<f64>() / lat.len() as f64;
        report.max_latency_ms = lat.iter().copied().fold(0.0, f64::max);
    }
    for o in &outcomes {
        for v in o.variants.iter().filter(|v| !v.correct) {
            report.failures.push(format!("{} v{}: {}", o.id, v.variant, v.error.clone().unwrap_or_default()));
        }
    }
    report.outcomes = outcomes;
    report.wall_time_ms = start.elapsed().as_secs_f64() * 1000.0;
    report
}

/// Leave-one-out top-3 over the model's examples, matched to the corpus
/// records that produced them, against a frequency baseline refit per fold.
pub fn leave_one_out(model: &VizModel, outcomes: &[RecordOutcome], corpus: &[RequestRecord]) -> LooMetrics {
    let compat = CompatMatrix::bundled();
    let mut cases: Vec<(usize, &Value, &Vec<VizType>)> = Vec::new();
    for (o, r) in outcomes.iter().zip(corpus) {
        let Some(value) = o.variants[0].value.as_ref().filter(|_| o.variants[0].correct) else { continue };
        let f = featurize(value);
        let free = |i: &usize| !cases.iter().any(|c| c.0 == *i);
        let matched = (0..model.examples.len())
            .filter(free)
            .find(|&i| model.examples[i].features == f && model.examples[i].label == r.expected_viz[0]);
        if let Some(i) = matched {
            cases.push((i, value, &r.expected_viz));
        }
    }
    let labels: Vec<VizType> = model.examples.iter().map(|e| e.label).collect();
    let mut knn = Vec::new();
    let mut zr = Vec::new();
    let mut truths = Vec::new();
    for (i, value, truth) in &cases {
        knn.push(knn_ranking(model, &model.examples[*i].features, value, compat, Some(*i), 3));
        let rest: Vec<VizType> = labels.iter().enumerate().filter(|(j, _)| j != i).map(|(_, l)| *l).collect();
        zr.push(zero_r(&rest));
        truths.push((*truth).clone());
    }
    LooMetrics {
        examples: cases.len(),
        knn_top3: topn_accuracy(&knn, &truths, 3),
        zero_r_top3: topn_accuracy(&zr, &truths, 3),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use VizType::*;

    // five hand-scored records
    fn fixture() -> (Vec<Vec<VizType>>, Vec<Vec<VizType>>) {
        let preds = vec![
            vec![BarChart, LineChart, TableView],
            vec![LineChart, BarChart, TextAnswer],
            vec![KpiCard, TextAnswer, BarChart],
            vec![TableView, BarChart, LineChart],
            vec![GeoHeatmap, BarChart, TableView],
        ];
        let truths = vec![vec![BarChart], vec![BarChart, LineChart], vec![TextAnswer], vec![LineChart], vec![PieChart]];
        (preds, truths)
    }

    #[test]
    fn topn_on_fixture() {
        let (p, t) = fixture();
        // top1 hits: r1 (bar), r2 (line acceptable) -> 2/5
        assert!((topn_accuracy(&p, &t, 1) - 0.4).abs() < 1e-12);
        // top3 adds r3 (text) and r4 (line) -> 4/5
        assert!((topn_accuracy(&p, &t, 3) - 0.8).abs() < 1e-12);
    }

    #[test]
    fn macro_recall_on_fixture() {
        let (p, t) = fixture();
        // primaries: bar x2, text, line, pie
        // @1: bar 1/2, text 0, line 0, pie 0 -> 0.125
        assert!((macro_recall(&p, &t, 1) - 0.125).abs() < 1e-12);
        // @3: bar 2/2, text 1, line 1, pie 0 -> 0.75
        assert!((macro_recall(&p, &t, 3) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn zero_r_on_fixture() {
        let (_, t) = fixture();
        let primary: Vec<VizType> = t.iter().map(|x| x[0]).collect();
        let zr = zero_r(&primary);
        assert_eq!(zr, vec![BarChart, TextAnswer, LineChart, PieChart]);
        let preds = vec![zr; 5];
        // top1 bar: r1, r2 -> 0.4; top3 bar/text/line: r1, r2, r3, r4 -> 0.8
        assert!((topn_accuracy(&preds, &t, 1) - 0.4).abs() < 1e-12);
        assert!((topn_accuracy(&preds, &t, 3) - 0.8).abs() < 1e-12);
    }

    #[test]
    fn tolerances() {
        assert!(Tolerance::Abs(0.05).accepts(2.4, 2.44));
        assert!(!Tolerance::Abs(0.05).accepts(2.4, 2.46));
        assert!(Tolerance::Rel(0.01).accepts(100.0, 100.9));
        assert!(!Tolerance::Rel(0.01).accepts(100.0, 101.1));
    }

    #[test]
    fn result_checks() {
        let exp =
            ExpectedResult { kind: Kind::Scalar, value: Some(Json::from(2.4)), tolerance: Some(Tolerance::Abs(0.05)) };
        assert!(check_result(&exp, &Value::Scalar { number: 2.41, unit: None }).is_ok());
        assert!(check_result(&exp, &Value::Text { text: "2.4".into() }).is_err());
        let kind_only = ExpectedResult { kind: Kind::Boolean, value: None, tolerance: None };
        assert!(check_result(&kind_only, &Value::Boolean { value: false }).is_ok());
    }

    #[test]
    fn series_and_tables_compare_as_rounded_multisets() {
        use crate::dataset::SemanticType;
        use crate::value::{Point, Series, Table, TableColumn};
        let series = Value::Series(Series {
            label_kind: SemanticType::Categorical,
            unit: None,
            points: vec![Point { label: "b".into(), value: 2.0 }, Point { label: "a".into(), value: 1.000_000_4 }],
        });
        let exp = |v: Json| ExpectedResult { kind: Kind::Series, value: Some(v), tolerance: None };
        assert!(check_result(&exp(serde_json::json!([["a", 1.0], ["b", 2.0]])), &series).is_ok());
        assert!(check_result(&exp(serde_json::json!([["a", 1.00001], ["b", 2.0]])), &series).is_err());
        assert!(check_result(&exp(serde_json::json!([["a", 1.0]])), &series).is_err());

        let col = |name: &str, t| TableColumn { name: name.into(), semantic_type: t, unit: None };
        let table = Value::Table(Table {
            columns: vec![col("state", SemanticType::Location), col("n", SemanticType::Numerical)],
            rows: vec![
                vec![Cell::Text("Ohio".into()), Cell::Num(3.0)],
                vec![Cell::Text("Iowa".into()), Cell::Num(1.0)],
            ],
        });
        let exp = |v: Json| ExpectedResult { kind: Kind::Table, value: Some(v), tolerance: None };
        assert!(check_result(&exp(serde_json::json!([["Iowa", 1.0], ["Ohio", 3]])), &table).is_ok());
        assert!(check_result(&exp(serde_json::json!([["Iowa", 1.0], ["Iowa", 1.0]])), &table).is_err());
    }

    #[test]
    fn corpus_lines_are_validated() {
        let bad = r#"{"id":"x","class":"simple","variants":["a"],"expected_result":{"kind":"scalar"},"expected_viz":["kpi_card"]}"#;
        assert!(matches!(parse_corpus(bad), Err(EvalError::Variants(_))));
    }
}
