//! Executes operation graphs in dependency order over an in-memory dataset.

use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Dataset, Gazetteer, SemanticType};
use crate::graph::{GraphError, OperationGraph, OperationNode};
use crate::value::{
    format_number, AggFn, AnomalyReport, Cell, Forecast, GeoPoint, GeoSeries, Point, PredictedPoint, Series, Table,
    TableColumn, Value,
};

/// Built-in implementations a manifest may reference.
pub const EXECUTORS: [&str; 11] = [
    "scan",
    "filter",
    "project",
    "aggregate",
    "group_aggregate",
    "geo_aggregate",
    "top_k",
    "lookup",
    "compare",
    "forecast",
    "detect_anomalies",
];

pub const DEFAULT_ANOMALY_THRESHOLD: f64 = 2.5;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum OpError {
    #[error("empty aggregation: {0} over zero values")]
    EmptyAggregation(&'static str),
    #[error("column {column:?} holds non-numeric cell {value:?}")]
    NonNumeric { column: String, value: String },
    #[error("unknown column {0:?}")]
    UnknownColumn(String),
    #[error("parameter {name:?}: {reason}")]
    BadParam { name: String, reason: String },
    #[error("input slot {slot}: expected {expected}, found {found}")]
    WrongInput { slot: usize, expected: &'static str, found: &'static str },
    #[error("missing input for slot {0}")]
    MissingInput(usize),
    #[error("needs at least {needed} points, found {found}")]
    TooFewPoints { needed: usize, found: usize },
    #[error("degenerate fit: all labels are identical")]
    DegenerateFit,
    #[error("label {0:?} is not numeric")]
    NonNumericLabel(String),
    #[error("duplicate label {0:?}; aggregate before projecting")]
    DuplicateLabel(String),
    #[error("lookup matched {0} rows, expected exactly one")]
    NotSingleRow(usize),
    #[error("division by zero")]
    DivisionByZero,
    #[error("no executor named {0:?}")]
    UnknownExecutor(String),
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ExecError {
    #[error("node {node}: {source}")]
    Node { node: String, source: OpError },
    #[error("invalid graph: {0}")]
    Graph(#[from] GraphError),
}

impl ExecError {
    pub fn node(&self) -> Option<&str> {
        match self {
            ExecError::Node { node, .. } => Some(node),
            ExecError::Graph(_) => None,
        }
    }
}

/// Per-node results of one execution.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExecutionTrace {
    pub order: Vec<String>,
    pub values: BTreeMap<String, Value>,
    pub timings_us: BTreeMap<String, u64>,
}

/// Runs `graph` and returns the sink value with the per-node trace.
pub fn execute(graph: &OperationGraph, dataset: &Dataset) -> Result<(Value, ExecutionTrace), ExecError> {
    let order = graph.topological_order()?;
    let by_id: HashMap<&str, &OperationNode> = graph.nodes.iter().map(|n| (n.id.as_str(), n)).collect();
    let mut trace = ExecutionTrace::default();
    for id in &order {
        let node = by_id[id.as_str()];
        let started = Instant::now();
        let inputs: Vec<&Value> = node.inputs.iter().map(|i| &trace.values[i]).collect();
        let value =
            run_node(node, &inputs, dataset).map_err(|source| ExecError::Node { node: node.id.clone(), source })?;
        trace.timings_us.insert(id.clone(), started.elapsed().as_micros() as u64);
        trace.values.insert(id.clone(), value);
        trace.order.push(id.clone());
    }
    let answer = trace.values[&graph.sink].clone();
    Ok((answer, trace))
}

fn kind_name(v: &Value) -> &'static str {
    v.kind().as_str()
}

fn input<'a>(inputs: &[&'a Value], slot: usize) -> Result<&'a Value, OpError> {
    inputs.get(slot).copied().ok_or(OpError::MissingInput(slot))
}

fn table_in<'a>(inputs: &[&'a Value], slot: usize) -> Result<&'a Table, OpError> {
    match input(inputs, slot)? {
        Value::Table(t) => Ok(t),
        other => Err(OpError::WrongInput { slot, expected: "table", found: kind_name(other) }),
    }
}

fn series_in<'a>(inputs: &[&'a Value], slot: usize) -> Result<&'a Series, OpError> {
    match input(inputs, slot)? {
        Value::Series(s) => Ok(s),
        other => Err(OpError::WrongInput { slot, expected: "series", found: kind_name(other) }),
    }
}

fn scalar_in(inputs: &[&Value], slot: usize) -> Result<(f64, Option<String>), OpError> {
    match input(inputs, slot)? {
        Value::Scalar { number, unit } => Ok((*number, unit.clone())),
        other => Err(OpError::WrongInput { slot, expected: "scalar", found: kind_name(other) }),
    }
}

struct Params<'a>(&'a BTreeMap<String, serde_json::Value>);

impl Params<'_> {
    fn bad(name: &str, reason: &str) -> OpError {
        OpError::BadParam { name: name.into(), reason: reason.into() }
    }

    fn get(&self, name: &str) -> Result<&serde_json::Value, OpError> {
        self.0.get(name).ok_or_else(|| Self::bad(name, "missing"))
    }

    fn str(&self, name: &str) -> Result<&str, OpError> {
        self.get(name)?.as_str().ok_or_else(|| Self::bad(name, "expected a string"))
    }

    fn opt_str(&self, name: &str) -> Result<Option<&str>, OpError> {
        match self.0.get(name) {
            None | Some(serde_json::Value::Null) => Ok(None),
            Some(_) => self.str(name).map(Some),
        }
    }

    fn f64_or(&self, name: &str, default: f64) -> Result<f64, OpError> {
        match self.0.get(name) {
            None => Ok(default),
            Some(v) => v.as_f64().ok_or_else(|| Self::bad(name, "expected a number")),
        }
    }

    fn usize_or(&self, name: &str, default: usize) -> Result<usize, OpError> {
        match self.0.get(name) {
            None => Ok(default),
            Some(v) => v.as_u64().map(|n| n as usize).ok_or_else(|| Self::bad(name, "expected a non-negative integer")),
        }
    }

    fn agg(&self) -> Result<AggFn, OpError> {
        match self.0.get("fn") {
            None => Ok(AggFn::Mean),
            Some(_) => AggFn::parse(self.str("fn")?).ok_or_else(|| Self::bad("fn", "unknown aggregation")),
        }
    }
}

fn run_node(node: &OperationNode, inputs: &[&Value], dataset: &Dataset) -> Result<Value, OpError> {
    let p = Params(&node.params);
    match node.executor.as_str() {
        "scan" => Ok(Value::Table(op_scan(dataset))),
        "filter" => {
            let op = FilterOp::parse(p.str("op").unwrap_or("="))
                .ok_or_else(|| Params::bad("op", "unknown comparison operator"))?;
            Ok(Value::Table(op_filter(table_in(inputs, 0)?, p.str("column")?, op, p.get("value")?)?))
        }
        "project" => Ok(Value::Series(op_project(table_in(inputs, 0)?, p.str("column")?, p.opt_str("label")?)?)),
        "aggregate" => {
            let s = series_in(inputs, 0)?;
            let f = p.agg()?;
            let unit = if f == AggFn::Count { None } else { s.unit.clone() };
            Ok(Value::Scalar { number: op_aggregate(&s.values(), f)?, unit })
        }
        "group_aggregate" => {
            Ok(Value::Series(op_group_aggregate(table_in(inputs, 0)?, p.str("key")?, p.str("value")?, p.agg()?)?))
        }
        "geo_aggregate" => Ok(Value::GeoSeries(op_geo_aggregate(
            table_in(inputs, 0)?,
            p.str("key")?,
            p.str("value")?,
            p.agg()?,
            dataset.gazetteer(),
        )?)),
        "top_k" => {
            let desc = match p.opt_str("direction")?.unwrap_or("desc") {
                "desc" => true,
                "asc" => false,
                _ => return Err(Params::bad("direction", "expected asc or desc")),
            };
            Ok(Value::Series(op_top_k(series_in(inputs, 0)?, p.usize_or("k", 1)?, desc)?))
        }
        "lookup" => op_lookup(table_in(inputs, 0)?, p.str("column")?),
        "compare" => {
            let mode = CompareMode::parse(p.opt_str("mode")?.unwrap_or("difference"))
                .ok_or_else(|| Params::bad("mode", "unknown comparison mode"))?;
            op_compare(scalar_in(inputs, 0)?, scalar_in(inputs, 1)?, mode)
        }
        "forecast" => Ok(Value::Forecast(op_forecast(series_in(inputs, 0)?, p.usize_or("horizon", 1)?)?)),
        "detect_anomalies" => Ok(Value::AnomalyReport(op_detect_anomalies(
            series_in(inputs, 0)?,
            p.f64_or("threshold", DEFAULT_ANOMALY_THRESHOLD)?,
        )?)),
        other => Err(OpError::UnknownExecutor(other.to_string())),
    }
}

pub fn op_scan(dataset: &Dataset) -> Table {
    Table {
        columns: dataset
            .columns
            .iter()
            .map(|c| TableColumn { name: c.name.clone(), semantic_type: c.semantic_type, unit: c.unit.clone() })
            .collect(),
        rows: dataset.rows.clone(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FilterOp {
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "between")]
    Between,
    #[serde(rename = "in")]
    In,
}

impl FilterOp {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "=" => FilterOp::Eq,
            "<" => FilterOp::Lt,
            ">" => FilterOp::Gt,
            "<=" | "≤" => FilterOp::Le,
            ">=" | "≥" => FilterOp::Ge,
            "between" => FilterOp::Between,
            "in" => FilterOp::In,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FilterOp::Eq => "=",
            FilterOp::Lt => "<",
            FilterOp::Gt => ">",
            FilterOp::Le => "<=",
            FilterOp::Ge => ">=",
            FilterOp::Between => "between",
            FilterOp::In => "in",
        }
    }
}

/// A literal converted to the cell type of the filtered column.
fn literal_cell(v: &serde_json::Value, numeric: bool) -> Option<Cell> {
    match v {
        serde_json::Value::Number(n) if numeric => n.as_f64().map(Cell::Num),
        serde_json::Value::String(s) if numeric => crate::dataset::parse_number(s).map(Cell::Num),
        serde_json::Value::String(s) => Some(Cell::Text(s.clone())),
        serde_json::Value::Number(n) => Some(Cell::Text(format_number(n.as_f64()?))),
        _ => None,
    }
}

fn cmp_cells(a: &Cell, b: &Cell) -> Option<std::cmp::Ordering> {
    match (a, b) {
        (Cell::Num(x), Cell::Num(y)) => x.partial_cmp(y),
        (Cell::Text(x), Cell::Text(y)) => Some(x.cmp(y)),
        _ => None,
    }
}

pub fn op_filter(table: &Table, column: &str, op: FilterOp, value: &serde_json::Value) -> Result<Table, OpError> {
    use std::cmp::Ordering::*;
    let ci = table.column_index(column).ok_or_else(|| OpError::UnknownColumn(column.into()))?;
    let numeric = !matches!(table.columns[ci].semantic_type, SemanticType::Categorical | SemanticType::Location);
    let bad = |reason: &str| OpError::BadParam { name: "value".into(), reason: reason.into() };
    let one = || literal_cell(value, numeric).ok_or_else(|| bad("literal does not fit the column type"));
    let list = || -> Result<Vec<Cell>, OpError> {
        value
            .as_array()
            .ok_or_else(|| bad("expected a list"))?
            .iter()
            .map(|v| literal_cell(v, numeric).ok_or_else(|| bad("literal does not fit the column type")))
            .collect()
    };
    let keep: Box<dyn Fn(&Cell) -> bool> = match op {
        FilterOp::Eq => {
            let x = one()?;
            Box::new(move |c| cmp_cells(c, &x) == Some(Equal))
        }
        FilterOp::Lt => {
            let x = one()?;
            Box::new(move |c| cmp_cells(c, &x) == Some(Less))
        }
        FilterOp::Gt => {
            let x = one()?;
            Box::new(move |c| cmp_cells(c, &x) == Some(Greater))
        }
        FilterOp::Le => {
            let x = one()?;
            Box::new(move |c| matches!(cmp_cells(c, &x), Some(Less | Equal)))
        }
        FilterOp::Ge => {
            let x = one()?;
            Box::new(move |c| matches!(cmp_cells(c, &x), Some(Greater | Equal)))
        }
        FilterOp::Between => {
            let bounds = list()?;
            let [lo, hi] = <[Cell; 2]>::try_from(bounds).map_err(|_| bad("between needs two bounds"))?;
            Box::new(move |c| {
                matches!(cmp_cells(c, &lo), Some(Greater | Equal)) && matches!(cmp_cells(c, &hi), Some(Less | Equal))
            })
        }
        FilterOp::In => {
            let set = list()?;
            Box::new(move |c| set.iter().any(|x| cmp_cells(c, x) == Some(Equal)))
        }
    };
    Ok(Table { columns: table.columns.clone(), rows: table.rows.iter().filter(|r| keep(&r[ci])).cloned().collect() })
}

fn numeric_cell(cell: &Cell, column: &str) -> Result<f64, OpError> {
    cell.as_f64().ok_or_else(|| OpError::NonNumeric { column: column.into(), value: cell.label() })
}

/// Projects a numeric column to a series. With `label` the labels come from
/// that key column; otherwise from the key columns whose values vary (all key
/// columns when none vary), joined with ", ".
pub fn op_project(table: &Table, column: &str, label: Option<&str>) -> Result<Series, OpError> {
    let ci = table.column_index(column).ok_or_else(|| OpError::UnknownColumn(column.into()))?;
    let (label_cols, label_kind) = match label {
        Some(l) => {
            let li = table.column_index(l).ok_or_else(|| OpError::UnknownColumn(l.into()))?;
            (vec![li], table.columns[li].semantic_type)
        }
        None => {
            let keys: Vec<usize> =
                (0..table.columns.len()).filter(|&i| table.columns[i].semantic_type.is_key()).collect();
            let varying: Vec<usize> =
                keys.iter().copied().filter(|&i| table.rows.iter().any(|r| r[i] != table.rows[0][i])).collect();
            (if varying.is_empty() { keys } else { varying }, SemanticType::Categorical)
        }
    };
    let mut points = Vec::with_capacity(table.rows.len());
    let mut seen = std::collections::HashSet::new();
    for row in &table.rows {
        let text = label_cols.iter().map(|&i| row[i].label()).collect::<Vec<_>>().join(", ");
        if !seen.insert(text.clone()) {
            return Err(OpError::DuplicateLabel(text));
        }
        points.push(Point { label: text, value: numeric_cell(&row[ci], column)? });
    }
    Ok(Series { label_kind, unit: table.columns[ci].unit.clone(), points })
}

pub fn op_aggregate(values: &[f64], f: AggFn) -> Result<f64, OpError> {
    match f {
        AggFn::Sum => Ok(values.iter().sum()),
        AggFn::Count => Ok(values.len() as f64),
        AggFn::Mean if values.is_empty() => Err(OpError::EmptyAggregation("mean")),
        AggFn::Min if values.is_empty() => Err(OpError::EmptyAggregation("min")),
        AggFn::Max if values.is_empty() => Err(OpError::EmptyAggregation("max")),
        AggFn::Mean => Ok(values.iter().sum::<f64>() / values.len() as f64),
        AggFn::Min => Ok(values.iter().copied().fold(f64::INFINITY, f64::min)),
        AggFn::Max => Ok(values.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
    }
}

/// Groups rows by `key` (sorted ascending) and aggregates `value` per group.
fn grouped(table: &Table, key: &str, value: &str, f: AggFn) -> Result<Vec<(Cell, f64)>, OpError> {
    let ki = table.column_index(key).ok_or_else(|| OpError::UnknownColumn(key.into()))?;
    let vi = table.column_index(value).ok_or_else(|| OpError::UnknownColumn(value.into()))?;
    let mut groups: Vec<(Cell, Vec<f64>)> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for row in &table.rows {
        let v = numeric_cell(&row[vi], value)?;
        let slot = *index.entry(row[ki].label()).or_insert_with(|| {
            groups.push((row[ki].clone(), Vec::new()));
            groups.len() - 1
        });
        groups[slot].1.push(v);
    }
    groups.sort_by(|a, b| cmp_cells(&a.0, &b.0).unwrap_or(std::cmp::Ordering::Equal));
    groups.into_iter().map(|(k, vs)| Ok((k, op_aggregate(&vs, f)?))).collect()
}

fn agg_unit(table: &Table, value: &str, f: AggFn) -> Option<String> {
    if f == AggFn::Count {
        return None;
    }
    table.column_index(value).and_then(|i| table.columns[i].unit.clone())
}

pub fn op_group_aggregate(table: &Table, key: &str, value: &str, f: AggFn) -> Result<Series, OpError> {
    let groups = grouped(table, key, value, f)?;
    let ki = table.column_index(key).expect("checked by grouped");
    Ok(Series {
        label_kind: table.columns[ki].semantic_type,
        unit: agg_unit(table, value, f),
        points: groups.into_iter().map(|(k, v)| Point { label: k.label(), value: v }).collect(),
    })
}

pub fn op_geo_aggregate(
    table: &Table,
    key: &str,
    value: &str,
    f: AggFn,
    gazetteer: &Gazetteer,
) -> Result<GeoSeries, OpError> {
    let mut points: Vec<GeoPoint> = grouped(table, key, value, f)?
        .into_iter()
        .map(|(k, v)| GeoPoint { region: gazetteer.code_for(&k.label()), value: v })
        .collect();
    points.sort_by(|a, b| a.region.cmp(&b.region));
    Ok(GeoSeries { unit: agg_unit(table, value, f), points })
}

/// The `k` largest (or smallest) points; equal values order by label.
pub fn op_top_k(series: &Series, k: usize, descending: bool) -> Result<Series, OpError> {
    if k == 0 {
        return Err(OpError::BadParam { name: "k".into(), reason: "must be at least 1".into() });
    }
    let mut points = series.points.clone();
    points.sort_by(|a, b| {
        let by_value = if descending { b.value.total_cmp(&a.value) } else { a.value.total_cmp(&b.value) };
        by_value.then_with(|| a.label.cmp(&b.label))
    });
    points.truncate(k);
    Ok(Series { label_kind: series.label_kind, unit: series.unit.clone(), points })
}

pub fn op_lookup(table: &Table, column: &str) -> Result<Value, OpError> {
    let ci = table.column_index(column).ok_or_else(|| OpError::UnknownColumn(column.into()))?;
    if table.rows.len() != 1 {
        return Err(OpError::NotSingleRow(table.rows.len()));
    }
    Ok(match &table.rows[0][ci] {
        Cell::Num(v) => Value::Scalar { number: *v, unit: table.columns[ci].unit.clone() },
        Cell::Text(s) => Value::Text { text: s.clone() },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompareMode {
    /// rhs − lhs, the change from the first operand to the second.
    Difference,
    /// lhs / rhs.
    Ratio,
    /// (rhs − lhs) / lhs × 100.
    PercentChange,
}

impl CompareMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "difference" => Some(CompareMode::Difference),
            "ratio" => Some(CompareMode::Ratio),
            "percent_change" => Some(CompareMode::PercentChange),
            _ => None,
        }
    }
}

pub fn op_compare(lhs: (f64, Option<String>), rhs: (f64, Option<String>), mode: CompareMode) -> Result<Value, OpError> {
    let (a, unit) = lhs;
    let (b, _) = rhs;
    Ok(match mode {
        CompareMode::Difference => Value::Scalar { number: b - a, unit },
        CompareMode::Ratio if b == 0.0 => return Err(OpError::DivisionByZero),
        CompareMode::Ratio => Value::Scalar { number: a / b, unit: None },
        CompareMode::PercentChange if a == 0.0 => return Err(OpError::DivisionByZero),
        CompareMode::PercentChange => Value::Scalar { number: (b - a) / a * 100.0, unit: Some("%".into()) },
    })
}

fn numeric_labels(series: &Series) -> Result<Vec<f64>, OpError> {
    series
        .points
        .iter()
        .map(|p| p.label.trim().parse::<f64>().map_err(|_| OpError::NonNumericLabel(p.label.clone())))
        .collect()
}

/// Ordinary least squares on (label, value) and `horizon` predictions past the last label.
pub fn op_forecast(history: &Series, horizon: usize) -> Result<Forecast, OpError> {
    if horizon == 0 {
        return Err(OpError::BadParam { name: "horizon".into(), reason: "must be at least 1".into() });
    }
    let n = history.points.len();
    if n < 2 {
        return Err(OpError::TooFewPoints { needed: 2, found: n });
    }
    let t = numeric_labels(history)?;
    let y = history.values();
    let t_mean = t.iter().sum::<f64>() / n as f64;
    let y_mean = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = t.iter().map(|ti| (ti - t_mean).powi(2)).sum();
    if sxx == 0.0 {
        return Err(OpError::DegenerateFit);
    }
    let sxy: f64 = t.iter().zip(&y).map(|(ti, yi)| (ti - t_mean) * (yi - y_mean)).sum();
    let slope = sxy / sxx;
    let intercept = y_mean - slope * t_mean;
    let stderr = if n > 2 {
        let ssr: f64 = t.iter().zip(&y).map(|(ti, yi)| (yi - (intercept + slope * ti)).powi(2)).sum();
        (ssr / (n - 2) as f64).sqrt()
    } else {
        0.0
    };
    let last = t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let predicted = (1..=horizon)
        .map(|h| {
            let at = last + h as f64;
            PredictedPoint { label: format_number(at), value: intercept + slope * at, stderr }
        })
        .collect();
    Ok(Forecast { history: history.clone(), predicted, slope, intercept })
}

/// Flags points whose population z-score exceeds `threshold`.
pub fn op_detect_anomalies(series: &Series, threshold: f64) -> Result<AnomalyReport, OpError> {
    if !(threshold > 0.0 && threshold.is_finite()) {
        return Err(OpError::BadParam { name: "threshold".into(), reason: "must be a positive number".into() });
    }
    let n = series.points.len();
    if n < 3 {
        return Err(OpError::TooFewPoints { needed: 3, found: n });
    }
    let x = series.values();
    let mean = x.iter().sum::<f64>() / n as f64;
    let std = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    let flagged =
        if std == 0.0 { Vec::new() } else { (0..n).filter(|&i| (x[i] - mean).abs() / std > threshold).collect() };
    Ok(AnomalyReport { series: series.clone(), flagged, threshold })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(points: &[(&str, f64)]) -> Series {
        Series {
            label_kind: SemanticType::Temporal,
            unit: None,
            points: points.iter().map(|(l, v)| Point { label: l.to_string(), value: *v }).collect(),
        }
    }

    #[test]
    fn aggregate_basics() {
        assert_eq!(op_aggregate(&[2.0, 4.0, 6.0], AggFn::Mean).unwrap(), 4.0);
        assert_eq!(op_aggregate(&[], AggFn::Sum).unwrap(), 0.0);
        assert_eq!(op_aggregate(&[], AggFn::Count).unwrap(), 0.0);
        assert_eq!(op_aggregate(&[], AggFn::Mean), Err(OpError::EmptyAggregation("mean")));
        assert_eq!(op_aggregate(&[], AggFn::Max), Err(OpError::EmptyAggregation("max")));
    }

    #[test]
    fn forecast_exact_line() {
        let f = op_forecast(&series(&[("1", 1.0), ("2", 2.0), ("3", 3.0)]), 1).unwrap();
        assert_eq!(f.predicted.len(), 1);
        assert_eq!(f.predicted[0].label, "4");
        assert!((f.predicted[0].value - 4.0).abs() < 1e-12);
        assert!((f.slope - 1.0).abs() < 1e-12);
        assert!(f.intercept.abs() < 1e-12);
        assert_eq!(f.predicted[0].stderr, 0.0);
    }

    #[test]
    fn forecast_constant_and_degenerate() {
        let f = op_forecast(&series(&[("2000", 5.0), ("2001", 5.0)]), 1).unwrap();
        assert_eq!(f.predicted[0].value, 5.0);
        assert_eq!(f.predicted[0].label, "2002");
        assert_eq!(op_forecast(&series(&[("2000", 5.0)]), 1), Err(OpError::TooFewPoints { needed: 2, found: 1 }));
        let same = Series {
            label_kind: SemanticType::Categorical,
            unit: None,
            points: vec![Point { label: "2000".into(), value: 1.0 }, Point { label: "2000.0".into(), value: 2.0 }],
        };
        assert_eq!(op_forecast(&same, 1), Err(OpError::DegenerateFit));
    }

    #[test]
    fn anomaly_thresholds() {
        let s = series(&[("a", 1.0), ("b", 1.0), ("c", 1.0), ("d", 100.0)]);
        assert!(op_detect_anomalies(&s, 2.5).unwrap().flagged.is_empty());
        assert_eq!(op_detect_anomalies(&s, 1.5).unwrap().flagged, vec![3]);
        let flat = series(&[("a", 3.0), ("b", 3.0), ("c", 3.0)]);
        assert!(op_detect_anomalies(&flat, 2.5).unwrap().flagged.is_empty());
        assert!(matches!(
            op_detect_anomalies(&series(&[("a", 1.0), ("b", 2.0)]), 2.5),
            Err(OpError::TooFewPoints { .. })
        ));
    }

    fn table() -> Table {
        let col = |name: &str, ty| TableColumn { name: name.into(), semantic_type: ty, unit: None };
        Table {
            columns: vec![
                col("state", SemanticType::Location),
                col("year", SemanticType::Temporal),
                col("v", SemanticType::Numerical),
            ],
            rows: vec![
                vec![Cell::Text("A".into()), Cell::Num(2000.0), Cell::Num(1.0)],
                vec![Cell::Text("A".into()), Cell::Num(2001.0), Cell::Num(3.0)],
                vec![Cell::Text("B".into()), Cell::Num(2000.0), Cell::Num(5.0)],
            ],
        }
    }

    #[test]
    fn filters_and_projection_labels() {
        let t = table();
        let a = op_filter(&t, "state", FilterOp::Eq, &serde_json::json!("A")).unwrap();
        assert_eq!(a.rows.len(), 2);
        let s = op_project(&a, "v", Some("year")).unwrap();
        assert_eq!(s.label_kind, SemanticType::Temporal);
        assert_eq!(s.points[1].label, "2001");
        let all = op_project(&t, "v", None).unwrap();
        assert_eq!(all.points[0].label, "A, 2000");
        assert!(matches!(op_project(&t, "v", Some("state")), Err(OpError::DuplicateLabel(_))));
        let between = op_filter(&t, "year", FilterOp::Between, &serde_json::json!([2001, 2005])).unwrap();
        assert_eq!(between.rows.len(), 1);
        let within = op_filter(&t, "state", FilterOp::In, &serde_json::json!(["B", "C"])).unwrap();
        assert_eq!(within.rows.len(), 1);
    }

    #[test]
    fn group_and_top_k() {
        let t = table();
        let g = op_group_aggregate(&t, "state", "v", AggFn::Mean).unwrap();
        assert_eq!(g.points, vec![Point { label: "A".into(), value: 2.0 }, Point { label: "B".into(), value: 5.0 }]);
        let top = op_top_k(&g, 1, true).unwrap();
        assert_eq!(top.points[0].label, "B");
        let tie = series(&[("z", 1.0), ("a", 1.0)]);
        assert_eq!(op_top_k(&tie, 1, true).unwrap().points[0].label, "a");
    }

    #[test]
    fn compare_modes() {
        let l = (2.0, Some("lb".to_string()));
        let r = (3.0, Some("lb".to_string()));
        assert_eq!(
            op_compare(l.clone(), r.clone(), CompareMode::Difference).unwrap(),
            Value::Scalar { number: 1.0, unit: Some("lb".into()) }
        );
        assert_eq!(
            op_compare(l.clone(), r.clone(), CompareMode::PercentChange).unwrap(),
            Value::Scalar { number: 50.0, unit: Some("%".into()) }
        );
        assert_eq!(op_compare(l, (0.0, None), CompareMode::Ratio), Err(OpError::DivisionByZero));
    }
}
