//! Machine-readable results and the cell type shared with the dataset.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dataset::SemanticType;
use crate::registry::{Kind, ValueKind};

/// One table cell. Numerical and temporal columns hold numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(v) => Some(*v),
            Cell::Text(_) => None,
        }
    }

    /// Text form used for labels; integral numbers print without a fraction.
    pub fn label(&self) -> String {
        match self {
            Cell::Num(v) => format_number(*v),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

pub fn format_number(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

/// Aggregation kinds understood by `aggregate`, `group_aggregate` and `geo_aggregate`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggFn {
    Sum,
    Mean,
    Min,
    Max,
    Count,
}

impl AggFn {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "sum" => Some(AggFn::Sum),
            "mean" => Some(AggFn::Mean),
            "min" => Some(AggFn::Min),
            "max" => Some(AggFn::Max),
            "count" => Some(AggFn::Count),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AggFn::Sum => "sum",
            AggFn::Mean => "mean",
            AggFn::Min => "min",
            AggFn::Max => "max",
            AggFn::Count => "count",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub label: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub label_kind: SemanticType,
    #[serde(default)]
    pub unit: Option<String>,
    pub points: Vec<Point>,
}

impl Series {
    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub region: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoSeries {
    #[serde(default)]
    pub unit: Option<String>,
    pub points: Vec<GeoPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableColumn {
    pub name: String,
    pub semantic_type: SemanticType,
    #[serde(default)]
    pub unit: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<TableColumn>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictedPoint {
    pub label: String,
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forecast {
    pub history: Series,
    pub predicted: Vec<PredictedPoint>,
    pub slope: f64,
    pub intercept: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalyReport {
    pub series: Series,
    pub flagged: Vec<usize>,
    pub threshold: f64,
}

/// Tagged result union; the `kind` field carries the tag on the wire.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Value {
    Scalar {
        number: f64,
        #[serde(default)]
        unit: Option<String>,
    },
    Text {
        text: String,
    },
    Boolean {
        value: bool,
    },
    Series(Series),
    Table(Table),
    GeoSeries(GeoSeries),
    Forecast(Forecast),
    AnomalyReport(AnomalyReport),
}

impl Value {
    pub fn kind(&self) -> Kind {
        match self {
            Value::Scalar { .. } => Kind::Scalar,
            Value::Text { .. } => Kind::Text,
            Value::Boolean { .. } => Kind::Boolean,
            Value::Series(_) => Kind::Series,
            Value::Table(_) => Kind::Table,
            Value::GeoSeries(_) => Kind::GeoSeries,
            Value::Forecast(_) => Kind::Forecast,
            Value::AnomalyReport(_) => Kind::AnomalyReport,
        }
    }

    pub fn value_kind(&self) -> ValueKind {
        match self {
            Value::Series(s) => ValueKind::with_hint(Kind::Series, s.label_kind),
            other => ValueKind::new(other.kind()),
        }
    }

    pub fn as_series(&self) -> Option<&Series> {
        match self {
            Value::Series(s) => Some(s),
            _ => None,
        }
    }

    /// Checks the structural invariants of the variant.
    pub fn validate(&self) -> Result<(), String> {
        fn unique_labels(s: &Series) -> Result<(), String> {
            let mut seen = std::collections::HashSet::new();
            for p in &s.points {
                if !seen.insert(p.label.as_str()) {
                    return Err(format!("duplicate series label {:?}", p.label));
                }
            }
            Ok(())
        }
        match self {
            Value::Series(s) => unique_labels(s),
            Value::Table(t) => {
                for (i, row) in t.rows.iter().enumerate() {
                    if row.len() != t.columns.len() {
                        return Err(format!("row {i} has {} cells, expected {}", row.len(), t.columns.len()));
                    }
                }
                Ok(())
            }
            Value::Forecast(f) => {
                unique_labels(&f.history)?;
                let last = f
                    .history
                    .points
                    .iter()
                    .filter_map(|p| p.label.parse::<f64>().ok())
                    .fold(f64::NEG_INFINITY, f64::max);
                for p in &f.predicted {
                    match p.label.parse::<f64>() {
                        Ok(v) if v > last => {}
                        _ => return Err(format!("predicted label {} does not extend the history", p.label)),
                    }
                }
                Ok(())
            }
            Value::AnomalyReport(r) => {
                unique_labels(&r.series)?;
                if let Some(i) = r.flagged.iter().find(|&&i| i >= r.series.points.len()) {
                    return Err(format!("flagged index {i} out of bounds"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Rounds to six significant digits, the precision results are compared at.
pub fn round_sig6(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    format!("{v:.5e}").parse().unwrap_or(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wire_format_tags_kind() {
        let v = Value::Scalar { number: 2.4, unit: Some("USD/lb".into()) };
        let json = serde_json::to_string(&v).unwrap();
        assert_eq!(json, r#"{"kind":"scalar","number":2.4,"unit":"USD/lb"}"#);
        let back: Value = serde_json::from_str(&json).unwrap();
        assert_eq!(back, v);

        let s = Value::Series(Series {
            label_kind: SemanticType::Temporal,
            unit: None,
            points: vec![Point { label: "2010".into(), value: 1.0 }],
        });
        let json = serde_json::to_string(&s).unwrap();
        assert!(json.starts_with(r#"{"kind":"series","label_kind":"temporal""#), "{json}");
    }

    #[test]
    fn validate_catches_bad_reports() {
        let series = Series { label_kind: SemanticType::Temporal, unit: None, points: vec![] };
        let bad = Value::AnomalyReport(AnomalyReport { series, flagged: vec![0], threshold: 2.5 });
        assert!(bad.validate().is_err());
    }

    #[test]
    fn sig6_rounding() {
        assert_eq!(round_sig6(2.4000000001), 2.4);
        assert_eq!(round_sig6(123456789.0), 123457000.0);
        assert_eq!(round_sig6(0.0), 0.0);
    }

    #[test]
    fn labels_drop_integral_fraction() {
        assert_eq!(Cell::Num(2010.0).label(), "2010");
        assert_eq!(Cell::Num(2.5).label(), "2.5");
    }
}
