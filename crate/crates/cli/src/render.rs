//! Plain-text renditions of results, graphs and recommendations.

use std::fmt::Write;

use askgraph::eval::{EvalReport, RequestClass};
use askgraph::value::{format_number, Cell};
use askgraph::viz::VizSpec;
use askgraph::{OperationGraph, Value};

const MAX_ROWS: usize = 20;
const BAR_WIDTH: usize = 40;

fn bars(out: &mut String, rows: &[(String, f64)], marks: &[usize]) {
    let width = rows.iter().take(MAX_ROWS).map(|r| r.0.chars().count()).max().unwrap_or(0);
    let max = rows.iter().map(|r| r.1.abs()).fold(0.0, f64::max);
    for (i, (label, v)) in rows.iter().enumerate().take(MAX_ROWS) {
        let n = if max > 0.0 { ((v.abs() / max) * BAR_WIDTH as f64).round() as usize } else { 0 };
        let mark = if marks.contains(&i) { " *" } else { "" };
        let _ = writeln!(out, "  {label:<width$} | {} {}{mark}", "#".repeat(n), format_number(*v));
    }
    if rows.len() > MAX_ROWS {
        let _ = writeln!(out, "  ... {} more", rows.len() - MAX_ROWS);
    }
}

pub fn value(v: &Value) -> String {
    let mut out = String::new();
    match v {
        Value::Scalar { number, unit } => {
            let _ = write!(out, "{}", format_number(*number));
            if let Some(u) = unit {
                let _ = write!(out, " {u}");
            }
            out.push('\n');
        }
        Value::Text { text } => {
            let _ = writeln!(out, "{text}");
        }
        Value::Boolean { value } => {
            let _ = writeln!(out, "{}", if *value { "yes" } else { "no" });
        }
        Value::Series(s) => {
            let rows: Vec<(String, f64)> = s.points.iter().map(|p| (p.label.clone(), p.value)).collect();
            bars(&mut out, &rows, &[]);
        }
        Value::GeoSeries(g) => {
            let rows: Vec<(String, f64)> = g.points.iter().map(|p| (p.region.clone(), p.value)).collect();
            bars(&mut out, &rows, &[]);
        }
        Value::Forecast(f) => {
            let rows: Vec<(String, f64)> = f.history.points.iter().map(|p| (p.label.clone(), p.value)).collect();
            bars(&mut out, &rows, &[]);
            for p in &f.predicted {
                let _ =
                    writeln!(out, "  {} (predicted) {} ± {}", p.label, format_number(p.value), format_number(p.stderr));
            }
        }
        Value::AnomalyReport(r) => {
            let rows: Vec<(String, f64)> = r.series.points.iter().map(|p| (p.label.clone(), p.value)).collect();
            bars(&mut out, &rows, &r.flagged);
            let flagged: Vec<&str> = r.flagged.iter().map(|&i| r.series.points[i].label.as_str()).collect();
            let _ = writeln!(out, "  flagged (|z| > {}): {}", format_number(r.threshold), flagged.join(", "));
        }
        Value::Table(t) => {
            let header: Vec<&str> = t.columns.iter().map(|c| c.name.as_str()).collect();
            let cells: Vec<Vec<String>> = t
                .rows
                .iter()
                .take(MAX_ROWS)
                .map(|r| {
                    r.iter()
                        .map(|c| match c {
                            Cell::Num(n) => format_number(*n),
                            Cell::Text(s) => s.clone(),
                        })
                        .collect()
                })
                .collect();
            let widths: Vec<usize> = (0..header.len())
                .map(|i| cells.iter().map(|r| r[i].chars().count()).chain([header[i].len()]).max().unwrap_or(0))
                .collect();
            let line = |row: Vec<&str>| {
                row.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect::<Vec<_>>().join("  ")
            };
            let _ = writeln!(out, "  {}", line(header.clone()));
            for r in &cells {
                let _ = writeln!(out, "  {}", line(r.iter().map(String::as_str).collect()));
            }
            if t.rows.len() > MAX_ROWS {
                let _ = writeln!(out, "  ... {} more rows", t.rows.len() - MAX_ROWS);
            }
        }
    }
    out
}

/// One line per node, inputs first.
pub fn graph(g: &OperationGraph) -> String {
    let mut out = String::new();
    for n in &g.nodes {
        let params: Vec<String> = n.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let inputs = if n.inputs.is_empty() { String::new() } else { format!(" <- {}", n.inputs.join(", ")) };
        let _ = writeln!(out, "  {:<20} {}({}){inputs}  [{:.2}]", n.id, n.function, params.join(", "), n.score);
    }
    let _ = writeln!(
        out,
        "  depth {}, relevance {:.3}, coverage {:.3}{}",
        g.depth,
        g.relevance,
        g.coverage,
        if g.complete { "" } else { ", partial" }
    );
    out
}

pub fn viz(spec: &VizSpec) -> String {
    let ranked: Vec<String> = spec.ranking.iter().map(|r| format!("{} ({} votes)", r.viz_type, r.votes)).collect();
    format!("  {}\n", ranked.join(", "))
}

fn class_name(c: RequestClass) -> &'static str {
    match c {
        RequestClass::Simple => "simple",
        RequestClass::Complex => "complex",
    }
}

/// Human-readable evaluation report: summary figures, per-form recall and
/// one line per record.
pub fn report(r: &EvalReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "records: {}", r.records);
    let _ = writeln!(out, "graph accuracy");
    let _ = writeln!(out, "  {:<8} {:>3}  {:>6}  {:>6}  {:>7}  per-variant", "class", "n", "base", "all-4", "overall");
    for (class, a) in &r.classes {
        let per: Vec<String> = a.per_variant.iter().map(|v| format!("{v:.3}")).collect();
        let _ = writeln!(
            out,
            "  {:<8} {:>3}  {:>6.3}  {:>6.3}  {:>7.3}  [{}]",
            class_name(*class),
            a.records,
            a.base,
            a.all_variants,
            a.overall,
            per.join(", ")
        );
    }
    let v = &r.viz;
    let _ = writeln!(out, "visualization (scored on {} correct results)", v.evaluated);
    let _ = writeln!(out, "  {:<22} {:>6}  {:>6}  {:>6}", "", "top1", "top3", format!("top{}", v.n));
    let _ = writeln!(out, "  {:<22} {:>6.3}  {:>6.3}  {:>6.3}", "knn", v.top1, v.top3, v.top_n);
    let _ = writeln!(
        out,
        "  {:<22} {:>6.3}  {:>6.3}  {:>6.3}",
        "zero-r baseline", v.zero_r_top1, v.zero_r_top3, v.zero_r_top_n
    );
    let _ = writeln!(
        out,
        "  {:<22} {:>6.3}  {:>6.3}  {:>6.3}",
        "compat-rule baseline", v.compat_rule_top1, v.compat_rule_top3, v.compat_rule_top_n
    );
    let _ = writeln!(
        out,
        "  macro-recall @1 {:.3}  @3 {:.3}  @{} {:.3}",
        v.macro_recall_at_1, v.macro_recall_at_3, v.n, v.macro_recall_at_n
    );
    let _ = writeln!(out, "  {:<16} {:>9}  {:>9}", "form", "recall@1", format!("recall@{}", v.n));
    for (form, r1) in &v.recall_at_1 {
        let rn = v.recall_at_n.get(form).copied().unwrap_or_default();
        let _ = writeln!(out, "  {:<16} {:>9.3}  {:>9.3}", form.to_string(), r1, rn);
    }
    let _ = writeln!(
        out,
        "leave-one-out (n={}): knn top3 {:.3}  zero-r top3 {:.3}",
        r.loo.examples, r.loo.knn_top3, r.loo.zero_r_top3
    );
    let _ = writeln!(
        out,
        "latency: mean {:.2} ms, max {:.2} ms; wall {:.0} ms",
        r.mean_latency_ms, r.max_latency_ms, r.wall_time_ms
    );
    let _ = writeln!(out, "records");
    for o in &r.outcomes {
        let marks: String = o.variants.iter().map(|v| if v.correct { 'o' } else { 'x' }).collect();
        let viz = o.variants.first().map(|v| v.viz.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" "));
        let _ = writeln!(out, "  {:<5} {:<8} {marks}  {}", o.id, class_name(o.class), viz.unwrap_or_default());
    }
    for f in &r.failures {
        let _ = writeln!(out, "  FAIL {f}");
    }
    out
}
