//! Seeded random requests for robustness checks of the builder.
//!
//! Phrases mix dataset vocabulary (column aliases, cell values, years),
//! function keywords, question words, numbers and junk tokens, either as free
//! word soup or poured into a question template.

use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::api::{Engine, QueryError};
use crate::builder::select;
use crate::dataset::Dataset;
use crate::registry::Registry;
use crate::value::Cell;

const FILLER: &[&str] = &[
    "what", "which", "how", "much", "many", "was", "were", "is", "the", "of", "in", "for", "per", "by", "each", "show",
    "me", "did", "will", "between", "and", "from", "to", "than", "more", "less", "all", "states", "next", "year",
    "ago", "ten", "three", "top", "vs", "compare", "?", ",", "!",
];
const JUNK: &[&str] = &["zxqv", "blorf", "quantum", "banana", "xylophone", "glimmer", "12abc", "$", "%", "--"];

/// Vocabulary drawn from a dataset and registry.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    aliases: Vec<String>,
    values: Vec<String>,
    years: Vec<i64>,
    keywords: Vec<String>,
}

impl Vocabulary {
    pub fn new(dataset: &Dataset, registry: &Registry) -> Self {
        let aliases = dataset.column_aliases().map(|(a, _)| a.to_string()).collect();
        let mut values = BTreeSet::new();
        let mut years = BTreeSet::new();
        for row in &dataset.rows {
            for cell in row {
                match cell {
                    Cell::Text(s) if !s.is_empty() => {
                        values.insert(s.clone());
                    }
                    Cell::Num(v) if v.fract() == 0.0 && (1900.0..=2100.0).contains(v) => {
                        years.insert(*v as i64);
                    }
                    _ => {}
                }
            }
        }
        let mut keywords = BTreeSet::new();
        for f in registry.functions() {
            keywords.extend(f.description.keywords.iter().map(|k| k.term.clone()));
            keywords.extend(f.description.synonyms.iter().map(|s| s.term.clone()));
        }
        Self {
            aliases,
            values: values.into_iter().collect(),
            years: years.into_iter().collect(),
            keywords: keywords.into_iter().collect(),
        }
    }

    fn word(&self, rng: &mut ChaCha8Rng) -> String {
        let pick = |v: &[String], rng: &mut ChaCha8Rng| v.choose(rng).cloned().unwrap_or_default();
        match rng.random_range(0..10) {
            0 | 1 => pick(&self.aliases, rng),
            2 => pick(&self.values, rng),
            3 => self.year(rng),
            4 | 5 => pick(&self.keywords, rng),
            6 => number(rng),
            7 => JUNK.choose(rng).copied().unwrap_or_default().to_string(),
            _ => FILLER.choose(rng).copied().unwrap_or_default().to_string(),
        }
    }

    fn year(&self, rng: &mut ChaCha8Rng) -> String {
        let (lo, hi) = (self.years.first().copied().unwrap_or(2000), self.years.last().copied().unwrap_or(2010));
        rng.random_range(lo - 5..=hi + 5).to_string()
    }

    /// One random request.
    pub fn phrase(&self, rng: &mut ChaCha8Rng) -> String {
        if rng.random_bool(0.5) {
            let n = rng.random_range(1..=14);
            return (0..n).map(|_| self.word(rng)).collect::<Vec<_>>().join(" ");
        }
        let pick = |v: &[String], rng: &mut ChaCha8Rng| v.choose(rng).cloned().unwrap_or_default();
        let a = pick(&self.aliases, rng);
        let v = pick(&self.values, rng);
        let w = pick(&self.values, rng);
        let k = pick(&self.keywords, rng);
        let y = self.year(rng);
        let z = self.year(rng);
        match rng.random_range(0..8) {
            0 => format!("What was the {a} of {v} in {y}?"),
            1 => format!("{k} {a} in {v} between {y} and {z}"),
            2 => format!("Which {} states had the {k} {a} in {y}?", rng.random_range(1..12)),
            3 => format!("Compare the {a} of {v} and {w} in {y}"),
            4 => format!("{k} the {a} per year in {v}"),
            5 => format!("Show {a} above {} in {y}", number(rng)),
            6 => format!("Were there unusual {a} in {v}?"),
            _ => format!("How will the {a} of {v} {k} in {z}?"),
        }
    }
}

fn number(rng: &mut ChaCha8Rng) -> String {
    match rng.random_range(0..3) {
        0 => rng.random_range(0..100).to_string(),
        1 => format!("{:.2}", rng.random_range(0.0..10.0)),
        _ => rng.random_range(1_000..50_000_000).to_string(),
    }
}

/// `n` requests from `seed`; equal seeds give equal lists.
pub fn phrases(vocabulary: &Vocabulary, seed: u64, n: usize) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| vocabulary.phrase(&mut rng)).collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FuzzReport {
    pub phrases: usize,
    /// Requests that produced at least one candidate graph.
    pub built: usize,
    /// Requests rejected before any graph was built.
    pub unintelligible: usize,
    /// Candidate graphs checked for structure and edge types.
    pub graphs_checked: usize,
    /// `phrase: problem` for every structural or edge-type violation.
    pub violations: Vec<String>,
    /// Phrases whose second build or selection differed from the first.
    pub nondeterministic: Vec<String>,
}

enum Outcome {
    Built { graphs: usize, violations: Vec<String>, deterministic: bool },
    Rejected,
    Failed(String),
    Unstable,
}

fn check_one(engine: &Engine, text: &str) -> Outcome {
    match (engine.candidates(text), engine.candidates(text)) {
        (Ok((_, a)), Ok((_, b))) => {
            let violations =
                a.iter().filter_map(|g| g.validate(&engine.registry).err().map(|e| format!("{text}: {e}"))).collect();
            let same_pick = match (select(&a), select(&b)) {
                (Ok(x), Ok(y)) => x == y,
                (Err(_), Err(_)) => true,
                _ => false,
            };
            Outcome::Built { graphs: a.len(), violations, deterministic: a == b && same_pick }
        }
        (Err(QueryError::Build(_) | QueryError::Empty), Err(_)) => Outcome::Rejected,
        (Err(e), Err(_)) => Outcome::Failed(format!("{text}: {e}")),
        _ => Outcome::Unstable,
    }
}

/// Builds every phrase twice, validates every candidate graph against the
/// registry and compares the two runs.
pub fn check(engine: &Engine, phrases: &[String]) -> FuzzReport {
    let outcomes: Vec<Outcome> = phrases.par_iter().map(|t| check_one(engine, t)).collect();
    let mut report = FuzzReport { phrases: phrases.len(), ..Default::default() };
    for (text, outcome) in phrases.iter().zip(outcomes) {
        match outcome {
            Outcome::Built { graphs, violations, deterministic } => {
                report.built += 1;
                report.graphs_checked += graphs;
                report.violations.extend(violations);
                if !deterministic {
                    report.nondeterministic.push(text.clone());
                }
            }
            Outcome::Rejected => report.unintelligible += 1,
            Outcome::Failed(e) => report.violations.push(e),
            Outcome::Unstable => report.nondeterministic.push(text.clone()),
        }
    }
    report
}
