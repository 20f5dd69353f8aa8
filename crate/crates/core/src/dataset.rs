//! CSV ingestion, semantic type inference and the alias lexicon.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::value::{AggFn, Cell};

const BUNDLED_GAZETTEER: &str = include_str!("../data/us_states.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SemanticType {
    Numerical,
    Categorical,
    Temporal,
    Location,
}

impl SemanticType {
    pub fn as_str(self) -> &'static str {
        match self {
            SemanticType::Numerical => "numerical",
            SemanticType::Categorical => "categorical",
            SemanticType::Temporal => "temporal",
            SemanticType::Location => "location",
        }
    }

    pub fn is_key(self) -> bool {
        self != SemanticType::Numerical
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub name: String,
    pub semantic_type: SemanticType,
    #[serde(default)]
    pub unit: Option<String>,
    #[serde(default)]
    pub aliases: Vec<String>,
    /// Aggregation applied when a request groups this column without naming one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default_aggregation: Option<AggFn>,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("dataset file not found: {0}")]
    MissingFile(PathBuf),
    #[error("i/o error reading {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("line {line}: expected {expected} cells, found {found}")]
    RaggedRow { line: u64, expected: usize, found: usize },
    #[error("duplicate column name {0:?}")]
    DuplicateColumn(String),
    #[error("line {line}: column {column:?} is numerical but {value:?} is not a finite number")]
    NonNumeric { line: u64, column: String, value: String },
    #[error("alias {alias:?} is used by both {first:?} and {second:?}")]
    DuplicateAlias { alias: String, first: String, second: String },
    #[error("schema override names unknown column {0:?}")]
    UnknownOverrideColumn(String),
    #[error("invalid schema override file: {0}")]
    BadOverride(serde_json::Error),
    #[error("invalid gazetteer file: {0}")]
    BadGazetteer(serde_json::Error),
}

/// Per-column override, as read from the schema override file.
#[derive(Debug, Clone, Default, Deserialize)]
pub struct ColumnOverride {
    pub semantic_type: Option<SemanticType>,
    pub unit: Option<String>,
    #[serde(default)]
    pub aliases: Vec<String>,
    pub default_aggregation: Option<AggFn>,
}

pub type SchemaOverrides = BTreeMap<String, ColumnOverride>;

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct GazetteerEntry {
    pub name: String,
    pub code: String,
}

/// Region names and their short codes (US states by default).
#[derive(Debug, Clone, Default)]
pub struct Gazetteer {
    by_name: HashMap<String, GazetteerEntry>,
    by_code: HashMap<String, GazetteerEntry>,
}

impl Gazetteer {
    pub fn from_json(text: &str) -> Result<Self, DatasetError> {
        let entries: Vec<GazetteerEntry> = serde_json::from_str(text).map_err(DatasetError::BadGazetteer)?;
        let mut g = Gazetteer::default();
        for e in entries {
            g.by_name.insert(e.name.to_lowercase(), e.clone());
            g.by_code.insert(e.code.to_lowercase(), e);
        }
        Ok(g)
    }

    pub fn bundled() -> Self {
        Self::from_json(BUNDLED_GAZETTEER).expect("bundled gazetteer is valid")
    }

    /// Finds an entry by name or code, case-insensitively.
    pub fn lookup(&self, s: &str) -> Option<&GazetteerEntry> {
        let key = s.trim().to_lowercase();
        self.by_name.get(&key).or_else(|| self.by_code.get(&key))
    }

    /// Region code for a cell value; unknown regions map to themselves.
    pub fn code_for(&self, s: &str) -> String {
        self.lookup(s).map(|e| e.code.clone()).unwrap_or_else(|| s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum AliasBinding {
    Column { column: String },
    Value { column: String, value: String },
}

/// An immutable in-memory table plus its lexicons.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub columns: Vec<ColumnSchema>,
    pub rows: Vec<Vec<Cell>>,
    /// alias → (column, canonical cell value)
    pub value_lexicon: BTreeMap<String, (String, String)>,
    column_lexicon: BTreeMap<String, String>,
    gazetteer: Gazetteer,
}

/// Loads `path` with the bundled gazetteer and optional schema overrides.
pub fn load_dataset(path: &Path, schema_overrides: Option<&Path>) -> Result<Dataset, DatasetError> {
    Dataset::load(path, schema_overrides, None)
}

/// Parses a number the way request corpora write them: leading currency
/// symbols and thousands separators are stripped.
pub fn parse_number(raw: &str) -> Option<f64> {
    let s = raw.trim();
    let s = s.trim_start_matches(['$', '€', '£']);
    if s.is_empty() {
        return None;
    }
    let cleaned: String = s.chars().filter(|&c| c != ',').collect();
    let v: f64 = cleaned.parse().ok()?;
    v.is_finite().then_some(v)
}

fn is_year_literal(s: &str) -> bool {
    let s = s.trim();
    s.len() == 4
        && s.bytes().all(|b| b.is_ascii_digit())
        && s.parse::<u32>().map(|y| (1900..=2100).contains(&y)).unwrap_or(false)
}

fn read_to_string(path: &Path) -> Result<String, DatasetError> {
    if !path.exists() {
        return Err(DatasetError::MissingFile(path.to_path_buf()));
    }
    fs::read_to_string(path).map_err(|source| DatasetError::Io { path: path.to_path_buf(), source })
}

impl Dataset {
    pub fn load(path: &Path, schema_overrides: Option<&Path>, gazetteer: Option<&Path>) -> Result<Self, DatasetError> {
        let text = read_to_string(path)?;
        let overrides = match schema_overrides {
            Some(p) => serde_json::from_str(&read_to_string(p)?).map_err(DatasetError::BadOverride)?,
            None => SchemaOverrides::new(),
        };
        let gazetteer = match gazetteer {
            Some(p) => Gazetteer::from_json(&read_to_string(p)?)?,
            None => Gazetteer::bundled(),
        };
        Self::from_csv_str(&text, &overrides, gazetteer)
    }

    pub fn from_csv_str(text: &str, overrides: &SchemaOverrides, gazetteer: Gazetteer) -> Result<Self, DatasetError> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(text.as_bytes());
        let header: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
        let mut seen = BTreeSet::new();
        for h in &header {
            if !seen.insert(h.clone()) {
                return Err(DatasetError::DuplicateColumn(h.clone()));
            }
        }
        for name in overrides.keys() {
            if !seen.contains(name) {
                return Err(DatasetError::UnknownOverrideColumn(name.clone()));
            }
        }

        let mut raw_rows: Vec<(u64, Vec<String>)> = Vec::new();
        for record in reader.records() {
            let record = record?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            if record.len() != header.len() {
                return Err(DatasetError::RaggedRow { line, expected: header.len(), found: record.len() });
            }
            raw_rows.push((line, record.iter().map(|c| c.trim().to_string()).collect()));
        }

        let mut columns = Vec::with_capacity(header.len());
        for (i, name) in header.iter().enumerate() {
            let inferred = infer_type(raw_rows.iter().map(|(_, r)| r[i].as_str()), &gazetteer);
            let ov = overrides.get(name).cloned().unwrap_or_default();
            columns.push(ColumnSchema {
                name: name.clone(),
                semantic_type: ov.semantic_type.unwrap_or(inferred),
                unit: ov.unit,
                aliases: ov.aliases.iter().map(|a| a.trim().to_lowercase()).collect(),
                default_aggregation: ov.default_aggregation,
            });
        }

        let mut rows = Vec::with_capacity(raw_rows.len());
        for (line, raw) in raw_rows {
            let mut row = Vec::with_capacity(raw.len());
            for (col, cell) in columns.iter().zip(raw) {
                match col.semantic_type {
                    SemanticType::Numerical | SemanticType::Temporal => match parse_number(&cell) {
                        Some(v) => row.push(Cell::Num(v)),
                        None => return Err(DatasetError::NonNumeric { line, column: col.name.clone(), value: cell }),
                    },
                    _ => row.push(Cell::Text(cell)),
                }
            }
            rows.push(row);
        }

        let mut column_lexicon: BTreeMap<String, String> = BTreeMap::new();
        for col in &columns {
            for alias in std::iter::once(col.name.to_lowercase()).chain(col.aliases.iter().cloned()) {
                if let Some(first) = column_lexicon.get(&alias) {
                    if first != &col.name {
                        return Err(DatasetError::DuplicateAlias {
                            alias,
                            first: first.clone(),
                            second: col.name.clone(),
                        });
                    }
                    continue;
                }
                column_lexicon.insert(alias, col.name.clone());
            }
        }

        let mut dataset = Dataset { columns, rows, value_lexicon: BTreeMap::new(), column_lexicon, gazetteer };
        dataset.value_lexicon = dataset.build_value_lexicon();
        Ok(dataset)
    }

    fn build_value_lexicon(&self) -> BTreeMap<String, (String, String)> {
        let mut lex = BTreeMap::new();
        // gazetteer aliases take precedence over raw cell text
        for (ci, col) in self.columns.iter().enumerate() {
            if col.semantic_type != SemanticType::Location {
                continue;
            }
            for value in self.distinct_text(ci) {
                if let Some(entry) = self.gazetteer.lookup(&value) {
                    lex.entry(entry.name.to_lowercase()).or_insert((col.name.clone(), value.clone()));
                    lex.entry(entry.code.to_lowercase()).or_insert((col.name.clone(), value.clone()));
                }
            }
        }
        for (ci, col) in self.columns.iter().enumerate() {
            if !matches!(col.semantic_type, SemanticType::Categorical | SemanticType::Location) {
                continue;
            }
            for value in self.distinct_text(ci) {
                lex.entry(value.to_lowercase()).or_insert((col.name.clone(), value.clone()));
            }
        }
        lex
    }

    fn distinct_text(&self, ci: usize) -> BTreeSet<String> {
        self.rows
            .iter()
            .filter_map(|r| match &r[ci] {
                Cell::Text(s) if !s.is_empty() => Some(s.clone()),
                _ => None,
            })
            .collect()
    }

    /// Resolves a request token or n-gram: column names, column aliases,
    /// gazetteer names/codes, then cell values. Matching is exact after lowercasing.
    pub fn resolve_alias(&self, token: &str) -> Option<AliasBinding> {
        let key = token.trim().to_lowercase();
        if let Some(col) = self.column_lexicon.get(&key) {
            return Some(AliasBinding::Column { column: col.clone() });
        }
        self.resolve_value(&key)
    }

    /// Value-lexicon half of [`Dataset::resolve_alias`].
    pub fn resolve_value(&self, token: &str) -> Option<AliasBinding> {
        let key = token.trim().to_lowercase();
        self.value_lexicon
            .get(&key)
            .map(|(column, value)| AliasBinding::Value { column: column.clone(), value: value.clone() })
    }

    pub fn column(&self, name: &str) -> Option<&ColumnSchema> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn columns_of(&self, ty: SemanticType) -> impl Iterator<Item = &ColumnSchema> {
        self.columns.iter().filter(move |c| c.semantic_type == ty)
    }

    pub fn gazetteer(&self) -> &Gazetteer {
        &self.gazetteer
    }

    /// All column-alias entries, column names included.
    pub fn column_aliases(&self) -> impl Iterator<Item = (&str, &str)> {
        self.column_lexicon.iter().map(|(a, c)| (a.as_str(), c.as_str()))
    }

    /// Largest value of a numeric column, if any rows exist.
    pub fn max_of(&self, column: &str) -> Option<f64> {
        let ci = self.column_index(column)?;
        self.rows.iter().filter_map(|r| r[ci].as_f64()).reduce(f64::max)
    }
}

fn infer_type<'a>(values: impl Iterator<Item = &'a str> + Clone, gazetteer: &Gazetteer) -> SemanticType {
    let mut non_empty = values.filter(|v| !v.is_empty()).peekable();
    if non_empty.peek().is_none() {
        return SemanticType::Categorical;
    }
    let vals: Vec<&str> = non_empty.collect();
    if vals.iter().all(|v| is_year_literal(v)) {
        SemanticType::Temporal
    } else if vals.iter().all(|v| parse_number(v).is_some()) {
        SemanticType::Numerical
    } else if vals.iter().all(|v| gazetteer.lookup(v).is_some()) {
        SemanticType::Location
    } else {
        SemanticType::Categorical
    }
}
