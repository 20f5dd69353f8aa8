//! Brute-force and exact-arithmetic oracles for the executor, plus seeded
//! generators of random inputs.

#![allow(dead_code)]

use std::collections::BTreeMap;

use askgraph::executor::{
    op_aggregate, op_detect_anomalies, op_filter, op_forecast, op_group_aggregate, op_project, op_top_k, FilterOp,
};
use askgraph::value::{AggFn, Cell, Point, Series, Table, TableColumn};
use askgraph::SemanticType;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value as Json};

pub const KEYS: [&str; 5] = ["ash", "birch", "cedar", "elm", "fir"];
pub const FNS: [AggFn; 5] = [AggFn::Sum, AggFn::Mean, AggFn::Min, AggFn::Max, AggFn::Count];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Text rendering after rounding to six significant digits.
pub fn sig6(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let digits = 5 - v.abs().log10().floor() as i32;
    let scale = 10f64.powi(digits.abs());
    let r = if digits >= 0 { (v * scale).round() / scale } else { (v / scale).round() * scale };
    let text = format!("{:.*}", digits.max(0) as usize, r);
    if text.contains('.') {
        text.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        text
    }
}

fn pairs_sig6(points: &[(String, f64)]) -> Vec<(String, String)> {
    points.iter().map(|(l, v)| (l.clone(), sig6(*v))).collect()
}

pub fn series_pairs(s: &Series) -> Vec<(String, f64)> {
    s.points.iter().map(|p| (p.label.clone(), p.value)).collect()
}

/// Random table: a text key column, an optional year column and one or two
/// numeric columns; at most 4 columns and 12 rows.
pub fn random_table(r: &mut ChaCha8Rng) -> Table {
    let mut columns = vec![TableColumn { name: "key".into(), semantic_type: SemanticType::Categorical, unit: None }];
    let with_year = r.random_bool(0.5);
    if with_year {
        columns.push(TableColumn { name: "year".into(), semantic_type: SemanticType::Temporal, unit: None });
    }
    let numeric = r.random_range(1..=(4 - columns.len()).min(2));
    for i in 0..numeric {
        columns.push(TableColumn { name: format!("m{i}"), semantic_type: SemanticType::Numerical, unit: None });
    }
    let n = r.random_range(0..=12);
    let rows = (0..n)
        .map(|_| {
            columns
                .iter()
                .map(|c| match c.semantic_type {
                    SemanticType::Categorical => Cell::Text(KEYS.choose(r).unwrap().to_string()),
                    SemanticType::Temporal => Cell::Num(f64::from(r.random_range(2000..2006))),
                    _ => Cell::Num(f64::from(r.random_range(-50_000..50_000)) / 100.0),
                })
                .collect()
        })
        .collect();
    Table { columns, rows }
}

/// Random filter over a random column with a literal of the column's type.
pub fn random_filter(r: &mut ChaCha8Rng, t: &Table) -> (String, FilterOp, Json) {
    let col = t.columns.choose(r).unwrap();
    let ops = [FilterOp::Eq, FilterOp::Lt, FilterOp::Gt, FilterOp::Le, FilterOp::Ge, FilterOp::Between, FilterOp::In];
    let op = *ops.choose(r).unwrap();
    let scalar = |r: &mut ChaCha8Rng| -> Json {
        match col.semantic_type {
            SemanticType::Categorical => json!(KEYS.choose(r).unwrap()),
            SemanticType::Temporal => json!(r.random_range(1999..2007)),
            _ => json!(f64::from(r.random_range(-50_000..50_000)) / 100.0),
        }
    };
    let value = match op {
        FilterOp::Between => json!([scalar(r), scalar(r)]),
        FilterOp::In => Json::Array((0..r.random_range(1..4)).map(|_| scalar(r)).collect()),
        _ => scalar(r),
    };
    (col.name.clone(), op, value)
}

#[derive(Debug, Clone, PartialEq, PartialOrd)]
enum Lit {
    N(f64),
    T(String),
}

fn lit(v: &Json) -> Lit {
    match v {
        Json::String(s) => Lit::T(s.clone()),
        other => Lit::N(other.as_f64().unwrap()),
    }
}

fn cell_lit(c: &Cell) -> Lit {
    match c {
        Cell::Num(v) => Lit::N(*v),
        Cell::Text(s) => Lit::T(s.clone()),
    }
}

/// Row-by-row filter written from the comparison definitions.
pub fn oracle_filter(t: &Table, column: &str, op: FilterOp, value: &Json) -> Vec<Vec<Cell>> {
    let ci = t.columns.iter().position(|c| c.name == column).unwrap();
    let keep = |c: &Lit| -> bool {
        match op {
            FilterOp::Eq => *c == lit(value),
            FilterOp::Lt => *c < lit(value),
            FilterOp::Gt => *c > lit(value),
            FilterOp::Le => *c <= lit(value),
            FilterOp::Ge => *c >= lit(value),
            FilterOp::Between => {
                let b = value.as_array().unwrap();
                *c >= lit(&b[0]) && *c <= lit(&b[1])
            }
            FilterOp::In => value.as_array().unwrap().iter().any(|v| *c == lit(v)),
        }
    };
    t.rows.iter().filter(|row| keep(&cell_lit(&row[ci]))).cloned().collect()
}

fn label_of(c: &Cell) -> String {
    match c {
        Cell::Num(v) if v.fract() == 0.0 => format!("{}", *v as i64),
        Cell::Num(v) => format!("{v}"),
        Cell::Text(s) => s.clone(),
    }
}

/// `None` when the label column repeats a value.
pub fn oracle_project(t: &Table, column: &str, label: &str) -> Option<Vec<(String, f64)>> {
    let ci = t.columns.iter().position(|c| c.name == column).unwrap();
    let li = t.columns.iter().position(|c| c.name == label).unwrap();
    let mut out: Vec<(String, f64)> = Vec::new();
    for row in &t.rows {
        let l = label_of(&row[li]);
        if out.iter().any(|(x, _)| *x == l) {
            return None;
        }
        out.push((l, row[ci].as_f64().unwrap()));
    }
    Some(out)
}

/// `None` when the statistic is undefined on no values.
pub fn oracle_aggregate(values: &[f64], f: AggFn) -> Option<f64> {
    match f {
        AggFn::Count => Some(values.len() as f64),
        AggFn::Sum => Some(values.iter().fold(0.0, |a, b| a + b)),
        _ if values.is_empty() => None,
        AggFn::Mean => Some(values.iter().fold(0.0, |a, b| a + b) / values.len() as f64),
        AggFn::Min => values.iter().copied().reduce(|a, b| if b < a { b } else { a }),
        AggFn::Max => values.iter().copied().reduce(|a, b| if b > a { b } else { a }),
    }
}

pub fn oracle_group(t: &Table, key: &str, value: &str, f: AggFn) -> Vec<(String, f64)> {
    let ki = t.columns.iter().position(|c| c.name == key).unwrap();
    let vi = t.columns.iter().position(|c| c.name == value).unwrap();
    let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for row in &t.rows {
        groups.entry(label_of(&row[ki])).or_default().push(row[vi].as_f64().unwrap());
    }
    groups.into_iter().map(|(k, vs)| (k, oracle_aggregate(&vs, f).unwrap())).collect()
}

/// Repeated selection of the best remaining point.
pub fn oracle_top_k(points: &[(String, f64)], k: usize, descending: bool) -> Vec<(String, f64)> {
    let mut rest = points.to_vec();
    let mut out = Vec::new();
    while out.len() < k && !rest.is_empty() {
        let mut best = 0;
        for i in 1..rest.len() {
            let (a, b) = (&rest[i], &rest[best]);
            let better = if descending { a.1 > b.1 } else { a.1 < b.1 };
            if better || (a.1 == b.1 && a.0 < b.0) {
                best = i;
            }
        }
        out.push(rest.remove(best));
    }
    out
}

/// Outcome of one randomized table: number of operation outputs compared and
/// a description of the first mismatch.
pub fn check_table(r: &mut ChaCha8Rng) -> Result<usize, String> {
    let t = random_table(r);
    let mut compared = 0;

    let (col, op, value) = random_filter(r, &t);
    let got = op_filter(&t, &col, op, &value).map_err(|e| format!("filter {col} {op:?} {value}: {e}"))?;
    if got.rows != oracle_filter(&t, &col, op, &value) {
        return Err(format!("filter {col} {op:?} {value} on {:?}", t.rows));
    }
    compared += 1;

    let numeric: Vec<&str> =
        t.columns.iter().filter(|c| c.semantic_type == SemanticType::Numerical).map(|c| c.name.as_str()).collect();
    let keys: Vec<&str> =
        t.columns.iter().filter(|c| c.semantic_type != SemanticType::Numerical).map(|c| c.name.as_str()).collect();
    let m = *numeric.choose(r).unwrap();
    let key = *keys.choose(r).unwrap();

    match (op_project(&t, m, Some(key)), oracle_project(&t, m, key)) {
        (Ok(s), Some(o)) if pairs_sig6(&series_pairs(&s)) == pairs_sig6(&o) => {}
        (Err(_), None) => {}
        (got, want) => return Err(format!("project {m} by {key}: {got:?} vs {want:?}")),
    }
    compared += 1;

    let values: Vec<f64> =
        t.rows.iter().map(|row| row[t.columns.iter().position(|c| c.name == m).unwrap()].as_f64().unwrap()).collect();
    let f = *FNS.choose(r).unwrap();
    match (op_aggregate(&values, f), oracle_aggregate(&values, f)) {
        (Ok(a), Some(b)) if sig6(a) == sig6(b) => {}
        (Err(_), None) => {}
        (got, want) => return Err(format!("aggregate {f:?} of {values:?}: {got:?} vs {want:?}")),
    }
    compared += 1;

    let f = *FNS.choose(r).unwrap();
    let grouped = op_group_aggregate(&t, key, m, f).map_err(|e| format!("group: {e}"))?;
    if pairs_sig6(&series_pairs(&grouped)) != pairs_sig6(&oracle_group(&t, key, m, f)) {
        return Err(format!("group {m} by {key} with {f:?} on {:?}", t.rows));
    }
    compared += 1;

    let k = r.random_range(1..=grouped.points.len() + 2);
    let descending = r.random_bool(0.5);
    let top = op_top_k(&grouped, k, descending).map_err(|e| format!("top_k: {e}"))?;
    if pairs_sig6(&series_pairs(&top)) != pairs_sig6(&oracle_top_k(&series_pairs(&grouped), k, descending)) {
        return Err(format!("top {k} (desc {descending}) of {:?}", grouped.points));
    }
    compared += 1;
    Ok(compared)
}

/// Closed-form least squares in exact integer arithmetic. Values are given in
/// hundredths; returns the predictions for `horizon` steps past the last label.
pub fn oracle_forecast(xs: &[i64], ys_hundredths: &[i64], horizon: i64) -> Vec<f64> {
    let n = xs.len() as i128;
    let sx: i128 = xs.iter().map(|&x| x as i128).sum();
    let sy: i128 = ys_hundredths.iter().map(|&y| y as i128).sum();
    let sxx: i128 = xs.iter().map(|&x| (x as i128) * (x as i128)).sum();
    let sxy: i128 = xs.iter().zip(ys_hundredths).map(|(&x, &y)| (x as i128) * (y as i128)).sum();
    let d = n * sxx - sx * sx;
    let b = n * sxy - sx * sy;
    let last = *xs.iter().max().unwrap() as i128;
    (1..=horizon as i128)
        .map(|h| {
            let at = last + h;
            // (sy * d - b * sx + b * n * at) / (n * d), then hundredths to units
            let num = sy * d - b * sx + b * n * at;
            num as f64 / (n * d * 100) as f64
        })
        .collect()
}

pub fn check_forecast(r: &mut ChaCha8Rng) -> Result<(), String> {
    let n = r.random_range(2..=30);
    let mut xs: Vec<i64> = (1990..2031).collect();
    xs.shuffle(r);
    xs.truncate(n);
    xs.sort_unstable();
    let ys: Vec<i64> = (0..n).map(|_| r.random_range(1..1_000_000)).collect();
    let horizon = r.random_range(1..=5);
    let series = Series {
        label_kind: SemanticType::Temporal,
        unit: None,
        points: xs.iter().zip(&ys).map(|(x, y)| Point { label: x.to_string(), value: *y as f64 / 100.0 }).collect(),
    };
    let got = op_forecast(&series, horizon as usize).map_err(|e| e.to_string())?;
    let want = oracle_forecast(&xs, &ys, horizon);
    for (p, w) in got.predicted.iter().zip(&want) {
        let rel = (p.value - w).abs() / w.abs().max(f64::MIN_POSITIVE);
        if rel > 1e-9 {
            return Err(format!("forecast at {}: {} vs {w} (rel {rel:e})", p.label, p.value));
        }
    }
    if got.predicted.len() != want.len() {
        return Err("forecast length".into());
    }
    Ok(())
}

/// Two-pass z-score flags in integer arithmetic: with deviations
/// d_i = n x_i - sum, |z_i| > t iff n d_i^2 > t^2 sum_j d_j^2.
pub fn oracle_anomalies(xs: &[i64], threshold_quarters: i64) -> Vec<usize> {
    let n = xs.len() as i128;
    let s: i128 = xs.iter().map(|&x| x as i128).sum();
    let d: Vec<i128> = xs.iter().map(|&x| n * x as i128 - s).collect();
    let ss: i128 = d.iter().map(|v| v * v).sum();
    let t2 = (threshold_quarters as i128) * (threshold_quarters as i128);
    if ss == 0 {
        return Vec::new();
    }
    (0..xs.len()).filter(|&i| 16 * n * d[i] * d[i] > t2 * ss).collect()
}

pub fn check_anomalies(r: &mut ChaCha8Rng) -> Result<(), String> {
    let n = r.random_range(3..=40);
    let mut xs: Vec<i64> = (0..n).map(|_| r.random_range(0..100)).collect();
    for _ in 0..r.random_range(0..3) {
        let i = r.random_range(0..n);
        xs[i] += if r.random_bool(0.5) { 1000 } else { -1000 };
    }
    let quarters = *[6, 8, 10, 12].choose(r).unwrap();
    let series = Series {
        label_kind: SemanticType::Temporal,
        unit: None,
        points: xs.iter().enumerate().map(|(i, x)| Point { label: i.to_string(), value: *x as f64 }).collect(),
    };
    let got = op_detect_anomalies(&series, quarters as f64 / 4.0).map_err(|e| e.to_string())?;
    let want = oracle_anomalies(&xs, quarters);
    if got.flagged != want {
        return Err(format!("flags {:?} vs {want:?} for {xs:?} at {}", got.flagged, quarters as f64 / 4.0));
    }
    Ok(())
}
