//! Request annotation: tokens, data anchors, literals and modality hints.

use std::collections::{BTreeMap, HashSet};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_segmentation::UnicodeSegmentation;

use crate::dataset::{parse_number, AliasBinding, Dataset};
use crate::viz::VizType;

const BUNDLED_STOPWORDS: &str = include_str!("../data/stopwords.txt");
const BUNDLED_TRIGGERS: &str = include_str!("../data/triggers.json");

/// Longest n-gram tried against the alias lexicon.
pub const MAX_NGRAM: usize = 4;

#[derive(Debug, Error)]
pub enum AnnotateError {
    #[error("empty request")]
    Empty,
    #[error("invalid trigger lexicon: {0}")]
    BadTriggers(serde_json::Error),
    #[error("cannot read lexicon {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tag {
    Noun,
    Verb,
    Adjective,
    Number,
    Stopword,
    Symbol,
    Other,
}

/// Character offsets, end exclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub lemma: String,
    pub tag: Tag,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Binding {
    Column {
        column: String,
    },
    Value {
        column: String,
        value: String,
    },
    Year {
        year: i32,
    },
    Number {
        value: f64,
    },
    /// A forward-looking period in years ("next year", "in five years").
    Horizon {
        years: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub span: Span,
    /// Token index range, end exclusive.
    pub tokens: (usize, usize),
    pub text: String,
    pub binding: Binding,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalityHint {
    pub viz: VizType,
    pub trigger: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContentSpan {
    pub span: Span,
    pub tokens: (usize, usize),
    pub terms: Vec<String>,
    pub head: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenRole {
    Free,
    Anchor,
    Trigger,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhraseStructure {
    pub text: String,
    pub tokens: Vec<Token>,
    pub anchors: Vec<Anchor>,
    pub modality_hint: Option<ModalityHint>,
    pub content_spans: Vec<ContentSpan>,
    pub roles: Vec<TokenRole>,
    pub reference_year: i32,
}

impl PhraseStructure {
    /// Index of the anchor covering token `i`, if any.
    pub fn anchor_at(&self, i: usize) -> Option<usize> {
        self.anchors.iter().position(|a| (a.tokens.0..a.tokens.1).contains(&i))
    }

    pub fn is_content(&self, i: usize) -> bool {
        self.content_spans.iter().any(|s| (s.tokens.0..s.tokens.1).contains(&i))
    }

    /// Surface text rebuilt from the tokens, separated by single spaces.
    pub fn reconstructed(&self) -> String {
        self.tokens.iter().map(|t| t.surface.as_str()).collect::<Vec<_>>().join(" ")
    }
}

/// The requested output form named by the longest trigger phrase, if any.
pub fn extract_modality(phrase: &PhraseStructure) -> Option<VizType> {
    phrase.modality_hint.as_ref().map(|m| m.viz)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatorConfig {
    /// Year that relative phrases such as "ten years ago" count from.
    pub reference_year: i32,
    /// Let the builder fall back to embeddings for unmatched terms.
    pub use_embeddings: bool,
}

impl Default for AnnotatorConfig {
    fn default() -> Self {
        use chrono::Datelike;
        Self { reference_year: chrono::Local::now().year(), use_embeddings: true }
    }
}

/// Lexicons used for annotation; immutable after construction.
#[derive(Debug, Clone)]
pub struct Annotator {
    stopwords: HashSet<String>,
    /// Trigger phrases as lowercase word sequences, longest first.
    triggers: Vec<(Vec<String>, VizType)>,
}

static BUNDLED: OnceLock<Annotator> = OnceLock::new();

/// Annotates with the bundled stopword and trigger lexicons.
pub fn annotate(text: &str, dataset: &Dataset, config: &AnnotatorConfig) -> Result<PhraseStructure, AnnotateError> {
    BUNDLED.get_or_init(Annotator::bundled).annotate(text, dataset, config)
}

impl Annotator {
    pub fn bundled() -> Self {
        Self::from_lexicons(BUNDLED_STOPWORDS, BUNDLED_TRIGGERS).expect("bundled lexicons are valid")
    }

    pub fn load(stopwords: &std::path::Path, triggers: &std::path::Path) -> Result<Self, AnnotateError> {
        let read = |p: &std::path::Path| {
            std::fs::read_to_string(p).map_err(|source| AnnotateError::Io { path: p.display().to_string(), source })
        };
        Self::from_lexicons(&read(stopwords)?, &read(triggers)?)
    }

    /// `stopwords` is whitespace-separated words with `#` comments; `triggers` maps phrase → viz type.
    pub fn from_lexicons(stopwords: &str, triggers: &str) -> Result<Self, AnnotateError> {
        let stopwords = stopwords
            .lines()
            .flat_map(|l| l.split('#').next().unwrap_or("").split_whitespace())
            .map(str::to_lowercase)
            .collect();
        let map: BTreeMap<String, VizType> = serde_json::from_str(triggers).map_err(AnnotateError::BadTriggers)?;
        let mut triggers: Vec<(Vec<String>, VizType)> = map
            .into_iter()
            .map(|(phrase, viz)| (phrase.split_whitespace().map(str::to_lowercase).collect(), viz))
            .collect();
        triggers.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
        Ok(Self { stopwords, triggers })
    }

    pub fn is_stopword(&self, word: &str) -> bool {
        self.stopwords.contains(word)
    }

    pub fn annotate(
        &self,
        text: &str,
        dataset: &Dataset,
        config: &AnnotatorConfig,
    ) -> Result<PhraseStructure, AnnotateError> {
        if text.trim().is_empty() {
            return Err(AnnotateError::Empty);
        }
        let tokens = self.tokenize(text);
        let lower: Vec<String> = tokens.iter().map(|t| t.surface.to_lowercase()).collect();
        let mut roles = vec![TokenRole::Free; tokens.len()];
        let mut anchors = Vec::new();

        let modality_hint = self.find_triggers(&tokens, &lower, &mut roles);
        find_relative_years(&tokens, &lower, config.reference_year, &mut roles, &mut anchors);
        self.find_aliases(&tokens, &lower, dataset, &mut roles, &mut anchors);
        find_literals(&tokens, &mut roles, &mut anchors);
        anchors.sort_by_key(|a| a.tokens.0);

        let content_spans = content_spans(&tokens, &roles);
        Ok(PhraseStructure {
            text: text.to_string(),
            tokens,
            anchors,
            modality_hint,
            content_spans,
            roles,
            reference_year: config.reference_year,
        })
    }

    pub fn tokenize(&self, text: &str) -> Vec<Token> {
        let mut tokens = Vec::new();
        for (byte_start, word) in text.split_word_bound_indices() {
            if word.trim().is_empty() {
                continue;
            }
            let word = strip_possessive(word);
            let start = text[..byte_start].chars().count();
            let span = Span { start, end: start + word.chars().count() };
            let lower = word.to_lowercase();
            let tag = self.tag(word, &lower);
            let lemma = if tag == Tag::Symbol { lower.clone() } else { lemmatize(&lower) };
            tokens.push(Token { surface: word.to_string(), lemma, tag, span });
        }
        tokens
    }

    fn tag(&self, word: &str, lower: &str) -> Tag {
        if !word.chars().any(char::is_alphanumeric) {
            Tag::Symbol
        } else if parse_number(word).is_some() || number_word(lower).is_some() {
            Tag::Number
        } else if self.stopwords.contains(lower) {
            Tag::Stopword
        } else {
            pos_tag(lower)
        }
    }

    fn find_triggers(&self, tokens: &[Token], lower: &[String], roles: &mut [TokenRole]) -> Option<ModalityHint> {
        let mut best: Option<(usize, usize, VizType)> = None;
        let mut i = 0;
        while i < tokens.len() {
            let hit = self.triggers.iter().find(|(words, _)| {
                i + words.len() <= tokens.len() && words.iter().zip(&lower[i..]).all(|(w, t)| w == t)
            });
            match hit {
                Some((words, viz)) => {
                    let n = words.len();
                    roles[i..i + n].iter_mut().for_each(|r| *r = TokenRole::Trigger);
                    if best.is_none_or(|(_, len, _)| n > len) {
                        best = Some((i, n, *viz));
                    }
                    i += n;
                }
                None => i += 1,
            }
        }
        best.map(|(i, n, viz)| ModalityHint {
            viz,
            trigger: lower[i..i + n].join(" "),
            span: Span { start: tokens[i].span.start, end: tokens[i + n - 1].span.end },
        })
    }

    fn find_aliases(
        &self,
        tokens: &[Token],
        lower: &[String],
        dataset: &Dataset,
        roles: &mut [TokenRole],
        anchors: &mut Vec<Anchor>,
    ) {
        let mut i = 0;
        while i < tokens.len() {
            let mut matched = 0;
            for n in (1..=MAX_NGRAM.min(tokens.len() - i)).rev() {
                let range = i..i + n;
                if roles[range.clone()].iter().any(|r| *r != TokenRole::Free)
                    || tokens[range.clone()].iter().all(|t| t.tag == Tag::Symbol)
                {
                    continue;
                }
                let surface = lower[range.clone()].join(" ");
                let lemma = tokens[range.clone()].iter().map(|t| t.lemma.as_str()).collect::<Vec<_>>().join(" ");
                let found = dataset.resolve_alias(&surface).or_else(|| dataset.resolve_alias(&lemma));
                let Some(found) = found else { continue };
                // a lone stopword ("in", "me", "or") never stands for a cell value
                if n == 1 && tokens[i].tag == Tag::Stopword && matches!(found, AliasBinding::Value { .. }) {
                    continue;
                }
                let binding = match found {
                    AliasBinding::Column { column } => Binding::Column { column },
                    AliasBinding::Value { column, value } => Binding::Value { column, value },
                };
                push_anchor(tokens, i, n, binding, roles, anchors);
                matched = n;
                break;
            }
            i += matched.max(1);
        }
    }
}

fn push_anchor(
    tokens: &[Token],
    start: usize,
    len: usize,
    binding: Binding,
    roles: &mut [TokenRole],
    anchors: &mut Vec<Anchor>,
) {
    let end = start + len;
    roles[start..end].iter_mut().for_each(|r| *r = TokenRole::Anchor);
    anchors.push(Anchor {
        span: Span { start: tokens[start].span.start, end: tokens[end - 1].span.end },
        tokens: (start, end),
        text: tokens[start..end].iter().map(|t| t.surface.as_str()).collect::<Vec<_>>().join(" "),
        binding,
    });
}

/// Resolves "ten years ago", "last year", "next year", "in the next 3 years" and similar.
fn find_relative_years(
    tokens: &[Token],
    lower: &[String],
    reference_year: i32,
    roles: &mut [TokenRole],
    anchors: &mut Vec<Anchor>,
) {
    let word = |i: usize| lower.get(i).map(String::as_str).unwrap_or("");
    let free =
        |roles: &[TokenRole], a: usize, b: usize| b <= roles.len() && roles[a..b].iter().all(|r| *r == TokenRole::Free);
    let count = |i: usize| -> Option<i64> {
        match word(i) {
            "a" | "an" => Some(1),
            w => integer_value(w),
        }
    };
    let unit = |w: &str| match w {
        "year" | "years" => Some(1),
        "decade" | "decades" => Some(10),
        _ => None,
    };
    let mut i = 0;
    while i < tokens.len() {
        let mut hit: Option<(usize, Binding)> = None;
        if let (Some(n), Some(u)) = (count(i), unit(word(i + 1))) {
            if word(i + 2) == "ago" {
                hit = Some((3, Binding::Year { year: reference_year - (n * u) as i32 }));
            }
        }
        if hit.is_none() && unit(word(i + 1)) == Some(1) {
            hit = match word(i) {
                "last" | "previous" => Some((2, Binding::Year { year: reference_year - 1 })),
                "this" | "current" => Some((2, Binding::Year { year: reference_year })),
                "next" | "coming" | "following" => Some((2, Binding::Horizon { years: 1 })),
                _ => None,
            };
        }
        if hit.is_none() && matches!(word(i), "next" | "coming" | "following" | "in") {
            if let (Some(n), Some(u)) = (integer_value(word(i + 1)), unit(word(i + 2))) {
                if n > 0 && !(word(i) == "in" && is_year_number(n)) {
                    hit = Some((3, Binding::Horizon { years: (n * u) as u32 }));
                }
            }
        }
        match hit {
            Some((len, binding)) if free(roles, i, i + len) => {
                push_anchor(tokens, i, len, binding, roles, anchors);
                i += len;
            }
            _ => i += 1,
        }
    }
}

fn find_literals(tokens: &[Token], roles: &mut [TokenRole], anchors: &mut Vec<Anchor>) {
    for i in 0..tokens.len() {
        if roles[i] != TokenRole::Free || tokens[i].tag != Tag::Number {
            continue;
        }
        let surface = tokens[i].surface.as_str();
        let binding = if surface.len() == 4
            && surface.bytes().all(|b| b.is_ascii_digit())
            && is_year_number(surface.parse().unwrap_or(0))
        {
            Binding::Year { year: surface.parse().unwrap_or_default() }
        } else if let Some(v) = parse_number(surface) {
            Binding::Number { value: v }
        } else if let Some(v) = number_word(&surface.to_lowercase()) {
            Binding::Number { value: v as f64 }
        } else {
            continue;
        };
        push_anchor(tokens, i, 1, binding, roles, anchors);
    }
}

fn content_spans(tokens: &[Token], roles: &[TokenRole]) -> Vec<ContentSpan> {
    let is_content = |i: usize| roles[i] == TokenRole::Free && !matches!(tokens[i].tag, Tag::Stopword | Tag::Symbol);
    let mut spans = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        if !is_content(i) {
            i += 1;
            continue;
        }
        let start = i;
        while i < tokens.len() && is_content(i) {
            i += 1;
        }
        let run = &tokens[start..i];
        let head = run.iter().find(|t| matches!(t.tag, Tag::Verb | Tag::Noun)).unwrap_or(&run[0]).lemma.clone();
        spans.push(ContentSpan {
            span: Span { start: run[0].span.start, end: run[run.len() - 1].span.end },
            tokens: (start, i),
            terms: run.iter().map(|t| t.lemma.clone()).collect(),
            head,
        });
    }
    spans
}

fn strip_possessive(word: &str) -> &str {
    for suffix in ["'s", "\u{2019}s"] {
        if let Some(stem) = word.strip_suffix(suffix) {
            if !stem.is_empty() {
                return stem;
            }
        }
    }
    word
}

fn is_year_number(n: i64) -> bool {
    (1900..=2100).contains(&n)
}

fn integer_value(w: &str) -> Option<i64> {
    if let Some(v) = number_word(w) {
        return Some(v);
    }
    let v = parse_number(w)?;
    (v.fract() == 0.0 && v.abs() < 1e12).then_some(v as i64)
}

pub fn number_word(w: &str) -> Option<i64> {
    const WORDS: [&str; 21] = [
        "zero",
        "one",
        "two",
        "three",
        "four",
        "five",
        "six",
        "seven",
        "eight",
        "nine",
        "ten",
        "eleven",
        "twelve",
        "thirteen",
        "fourteen",
        "fifteen",
        "sixteen",
        "seventeen",
        "eighteen",
        "nineteen",
        "twenty",
    ];
    if let Some(i) = WORDS.iter().position(|x| *x == w) {
        return Some(i as i64);
    }
    match w {
        "thirty" => Some(30),
        "forty" => Some(40),
        "fifty" => Some(50),
        "hundred" => Some(100),
        "dozen" => Some(12),
        _ => None,
    }
}

pub fn lemmatize(lower: &str) -> String {
    const IRREGULAR: [(&str, &str); 20] = [
        ("is", "be"),
        ("are", "be"),
        ("was", "be"),
        ("were", "be"),
        ("been", "be"),
        ("am", "be"),
        ("did", "do"),
        ("does", "do"),
        ("has", "have"),
        ("had", "have"),
        ("grew", "grow"),
        ("rose", "rise"),
        ("made", "make"),
        ("people", "person"),
        ("series", "series"),
        ("data", "data"),
        ("analyses", "analysis"),
        ("less", "less"),
        ("news", "news"),
        ("its", "its"),
    ];
    if let Some((_, l)) = IRREGULAR.iter().find(|(w, _)| *w == lower) {
        return l.to_string();
    }
    let n = lower.chars().count();
    if n > 4 && lower.ends_with("ies") {
        return format!("{}y", &lower[..lower.len() - 3]);
    }
    for suffix in ["sses", "ches", "shes", "xes"] {
        if n > suffix.len() + 1 && lower.ends_with(suffix) {
            return lower[..lower.len() - 2].to_string();
        }
    }
    if n > 3 && lower.ends_with('s') && !["ss", "us", "is"].iter().any(|s| lower.ends_with(s)) {
        return lower[..lower.len() - 1].to_string();
    }
    lower.to_string()
}

fn pos_tag(lower: &str) -> Tag {
    const VERBS: [&str; 26] = [
        "be", "show", "compare", "forecast", "predict", "develop", "change", "increase", "decrease", "rise", "drop",
        "grow", "cost", "produce", "make", "expect", "estimate", "will", "rank", "detect", "plot", "map", "list",
        "sum", "count", "look",
    ];
    const ADJECTIVES: [&str; 22] = [
        "average",
        "mean",
        "total",
        "highest",
        "lowest",
        "most",
        "least",
        "high",
        "low",
        "unusual",
        "abnormal",
        "typical",
        "expensive",
        "cheap",
        "overall",
        "top",
        "bottom",
        "annual",
        "next",
        "last",
        "previous",
        "odd",
    ];
    if VERBS.contains(&lower) {
        return Tag::Verb;
    }
    if ADJECTIVES.contains(&lower) {
        return Tag::Adjective;
    }
    if lower.ends_with("ly") {
        Tag::Other
    } else if lower.ends_with("ing") || lower.ends_with("ed") {
        Tag::Verb
    } else if ["ous", "ful", "ive", "able", "ible", "al", "ic", "est"].iter().any(|s| lower.ends_with(s)) {
        Tag::Adjective
    } else {
        Tag::Noun
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Gazetteer, SchemaOverrides};

    fn honey() -> Dataset {
        let overrides: SchemaOverrides = serde_json::from_str(include_str!("../data/honey.schema.json")).unwrap();
        Dataset::from_csv_str(include_str!("../data/honey.csv"), &overrides, Gazetteer::bundled()).unwrap()
    }

    fn cfg() -> AnnotatorConfig {
        AnnotatorConfig { reference_year: 2020, use_embeddings: true }
    }

    fn bindings(p: &PhraseStructure) -> Vec<Binding> {
        p.anchors.iter().map(|a| a.binding.clone()).collect()
    }

    #[test]
    fn alabama_request_anchors() {
        let p = annotate("What was the price of honey in Alabama in 2010?", &honey(), &cfg()).unwrap();
        assert_eq!(
            bindings(&p),
            vec![
                Binding::Column { column: "priceperlb".into() },
                Binding::Value { column: "state".into(), value: "Alabama".into() },
                Binding::Year { year: 2010 },
            ]
        );
        assert!(p.content_spans.is_empty(), "{:?}", p.content_spans);
        assert_eq!(extract_modality(&p), None);
    }

    #[test]
    fn relative_years_use_reference_year() {
        let p = annotate("What did honey cost in Alabama ten years ago?", &honey(), &cfg()).unwrap();
        assert!(bindings(&p).contains(&Binding::Year { year: 2010 }));
        let p = annotate("How will the price develop in Florida next year?", &honey(), &cfg()).unwrap();
        assert!(bindings(&p).contains(&Binding::Horizon { years: 1 }));
        let p = annotate("forecast production for the next three years", &honey(), &cfg()).unwrap();
        assert!(bindings(&p).contains(&Binding::Horizon { years: 3 }));
    }

    #[test]
    fn single_year_literal() {
        let p = annotate("2010", &honey(), &cfg()).unwrap();
        assert_eq!(p.tokens.len(), 1);
        assert_eq!(p.tokens[0].tag, Tag::Number);
        assert_eq!(bindings(&p), vec![Binding::Year { year: 2010 }]);
        assert!(p.content_spans.is_empty());
    }

    #[test]
    fn triggers_pick_the_longest_phrase() {
        let d = honey();
        let p = annotate("show me the production by state as a table", &d, &cfg()).unwrap();
        assert_eq!(extract_modality(&p), Some(VizType::TableView));
        let p = annotate("put it on a geographical heat map", &d, &cfg()).unwrap();
        assert_eq!(extract_modality(&p), Some(VizType::GeoHeatmap));
        let p = annotate("where is the plant with the highest production output located?", &d, &cfg()).unwrap();
        assert_eq!(extract_modality(&p), None);
    }

    #[test]
    fn stopword_codes_are_not_states() {
        let p = annotate("what is the yield in Indiana or me", &honey(), &cfg()).unwrap();
        let values: Vec<_> = p.anchors.iter().filter(|a| matches!(a.binding, Binding::Value { .. })).collect();
        assert_eq!(values.len(), 1, "{values:?}");
        assert_eq!(values[0].text, "Indiana");
    }

    #[test]
    fn codes_and_possessives() {
        let p = annotate("the average price of honey in AL", &honey(), &cfg()).unwrap();
        assert!(bindings(&p).contains(&Binding::Value { column: "state".into(), value: "Alabama".into() }));
        let p = annotate("Texas's honey yield", &honey(), &cfg()).unwrap();
        assert_eq!(p.tokens[0].surface, "Texas");
        assert!(bindings(&p).contains(&Binding::Column { column: "yieldpercol".into() }));
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(annotate("   ", &honey(), &cfg()), Err(AnnotateError::Empty)));
    }

    #[test]
    fn lemmas() {
        assert_eq!(lemmatize("colonies"), "colony");
        assert_eq!(lemmatize("prices"), "price");
        assert_eq!(lemmatize("anomalous"), "anomalous");
        assert_eq!(lemmatize("was"), "be");
        assert_eq!(lemmatize("matches"), "match");
    }

    #[test]
    fn spans_are_ordered_and_disjoint() {
        let p = annotate("Which states' yields rose above 60 since 2005?", &honey(), &cfg()).unwrap();
        for w in p.tokens.windows(2) {
            assert!(w[0].span.end <= w[1].span.start);
        }
        for t in &p.tokens {
            assert!(t.tag == Tag::Symbol || !t.lemma.is_empty());
        }
    }
}
