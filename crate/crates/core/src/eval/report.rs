//! Rendering of retrieval results as an aligned text table and as CSV.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{EvalError, MethodMetrics, MetricsReport};

const HEADER: [&str; 9] = [
    "Method",
    "Pred",
    "TP",
    "Macro Recall",
    "Micro Recall",
    "Macro Precision",
    "Micro Precision",
    "Macro F1",
    "Micro F1",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedReport {
    pub text: String,
    pub csv: String,
}

fn cells(m: &MethodMetrics) -> [String; 9] {
    [
        m.method.clone(),
        m.pred.to_string(),
        m.tp.to_string(),
        format!("{:.3}", m.macro_recall),
        format!("{:.3}", m.micro_recall),
        format!("{:.3}", m.macro_precision),
        format!("{:.3}", m.micro_precision),
        format!("{:.3}", m.macro_f1),
        format!("{:.3}", m.micro_f1),
    ]
}

/// Rates are printed with three decimals. An empty report renders the header only.
pub fn render_report(report: &MetricsReport) -> RenderedReport {
    let rows: Vec<[String; 9]> = report.rows.iter().map(cells).collect();
    let mut widths: Vec<usize> = HEADER.iter().map(|h| h.len()).collect();
    for r in &rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let mut text = String::new();
    let line = |out: &mut String, r: &[&str]| {
        for (i, (c, w)) in r.iter().zip(&widths).enumerate() {
            if i == 0 {
                let _ = write!(out, "{c:<w$}");
            } else {
                let _ = write!(out, "  {c:>w$}");
            }
        }
        out.push('\n');
    };
    line(&mut text, &HEADER);
    for r in &rows {
        line(&mut text, &r.iter().map(String::as_str).collect::<Vec<_>>());
    }

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(HEADER).expect("in-memory write");
    for r in &rows {
        w.write_record(r).expect("in-memory write");
    }
    let csv = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells");
    RenderedReport { text, csv }
}

/// Reads back the CSV produced by [`render_report`]. Rates keep the printed precision.
pub fn parse_report_csv(csv_text: &str) -> Result<Vec<MethodMetrics>, EvalError> {
    let bad = |e: &dyn std::fmt::Display| EvalError::InvalidReport(e.to_string());
    let mut r = csv::Reader::from_reader(csv_text.as_bytes());
    let header = r.headers().map_err(|e| bad(&e))?;
    if header.iter().ne(HEADER) {
        return Err(EvalError::InvalidReport(format!("unexpected header {header:?}")));
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| bad(&e))?;
        let int = |i: usize| rec[i].parse::<usize>().map_err(|e| bad(&e));
        let real = |i: usize| rec[i].parse::<f64>().map_err(|e| bad(&e));
        out.push(MethodMetrics {
            method: rec[0].to_string(),
            pred: int(1)?,
            tp: int(2)?,
            macro_recall: real(3)?,
            micro_recall: real(4)?,
            macro_precision: real(5)?,
            micro_precision: real(6)?,
            macro_f1: real(7)?,
            micro_f1: real(8)?,
        });
    }
    Ok(out)
}

/// Everything needed to reproduce an evaluation run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub predictors: Vec<String>,
    pub seeds: Vec<u64>,
    pub provider_fingerprint: Option<String>,
    pub embedder_fingerprint: String,
    pub graph_fingerprint: String,
    pub gold_total: usize,
}
