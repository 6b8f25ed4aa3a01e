use std::fmt::Write as _;
use std::str::FromStr;

use super::MetricsReport;
use crate::model::ActionKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Json,
    Csv,
}

#[derive(Debug, thiserror::Error)]
#[error("unknown report format '{0}' (expected txt, json or csv)")]
pub struct UnknownFormat(pub String);

impl FromStr for ReportFormat {
    type Err = UnknownFormat;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "txt" | "text" => Ok(ReportFormat::Text),
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(UnknownFormat(other.to_owned())),
        }
    }
}

impl ReportFormat {
    /// Format implied by a file name's extension.
    pub fn from_path(path: &std::path::Path) -> Result<Self, UnknownFormat> {
        path.extension().and_then(|e| e.to_str()).unwrap_or_default().parse()
    }
}

/// Renders reports side by side, in input order. Actions appear in
/// workflow order.
pub fn render_report(reports: &[MetricsReport], format: ReportFormat) -> String {
    match format {
        ReportFormat::Text => text(reports),
        ReportFormat::Json => serde_json::to_string_pretty(reports).expect("reports serialize") + "\n",
        ReportFormat::Csv => csv(reports),
    }
}

fn text(reports: &[MetricsReport]) -> String {
    let widths: Vec<usize> = reports.iter().map(|r| r.decider.len().max(8)).collect();
    let mut out = String::new();
    out.push_str("# allow is the positive class; macro_f1 is the unweighted mean of the allow and deny F1\n");
    out.push_str("# a ratio with an empty denominator is reported as 1.000\n\n");

    let row = |out: &mut String, label: &str, cells: Vec<String>| {
        let _ = write!(out, "{label:<24}");
        for (cell, w) in cells.iter().zip(&widths) {
            let _ = write!(out, " {cell:>w$}");
        }
        out.push('\n');
    };
    let header = |out: &mut String, title: &str| {
        row(out, title, reports.iter().map(|r| r.decider.clone()).collect());
    };

    header(&mut out, "action");
    for action in ActionKind::ALL {
        let cells = reports
            .iter()
            .map(|r| r.action_accuracy(action).map_or("-".to_owned(), |a| format!("{a:.3}")))
            .collect();
        row(&mut out, action.as_str(), cells);
    }
    out.push('\n');

    header(&mut out, "metric");
    let fixed = |f: fn(&MetricsReport) -> f64, digits: usize| -> Vec<String> {
        reports.iter().map(|r| format!("{:.digits$}", f(r))).collect()
    };
    row(&mut out, "n", reports.iter().map(|r| r.n.to_string()).collect());
    row(&mut out, "accuracy", fixed(|r| r.accuracy, 3));
    row(&mut out, "precision_allow", fixed(|r| r.precision_allow, 3));
    row(&mut out, "recall_allow", fixed(|r| r.recall_allow, 3));
    row(&mut out, "f1_allow", fixed(|r| r.f1_allow, 3));
    row(&mut out, "f1_deny", fixed(|r| r.f1_deny, 3));
    row(&mut out, "macro_f1", fixed(|r| r.macro_f1, 3));
    row(&mut out, "tp", reports.iter().map(|r| r.confusion.tp.to_string()).collect());
    row(&mut out, "fp", reports.iter().map(|r| r.confusion.fp.to_string()).collect());
    row(&mut out, "tn", reports.iter().map(|r| r.confusion.tn.to_string()).collect());
    row(&mut out, "fn", reports.iter().map(|r| r.confusion.fn_.to_string()).collect());
    row(&mut out, "errors", reports.iter().map(|r| r.error_count.to_string()).collect());
    row(&mut out, "latency_mean_ms", fixed(|r| r.latency_ms.mean, 4));
    row(&mut out, "latency_p50_ms", fixed(|r| r.latency_ms.p50, 4));
    row(&mut out, "latency_p95_ms", fixed(|r| r.latency_ms.p95, 4));
    row(&mut out, "throughput_rps", fixed(|r| r.throughput_rps, 0));
    out
}

fn csv(reports: &[MetricsReport]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = [
        "decider", "n", "accuracy", "precision_allow", "recall_allow", "f1_allow", "f1_deny", "macro_f1", "tp", "fp",
        "tn", "fn", "error_count", "latency_mean_ms", "latency_p50_ms", "latency_p95_ms", "throughput_rps",
    ]
    .map(String::from)
    .to_vec();
    header.extend(ActionKind::ALL.map(|a| format!("acc_{a}")));
    w.write_record(&header).expect("in-memory write");
    for r in reports {
        let c = r.confusion;
        let mut rec = vec![
            r.decider.clone(),
            r.n.to_string(),
            r.accuracy.to_string(),
            r.precision_allow.to_string(),
            r.recall_allow.to_string(),
            r.f1_allow.to_string(),
            r.f1_deny.to_string(),
            r.macro_f1.to_string(),
            c.tp.to_string(),
            c.fp.to_string(),
            c.tn.to_string(),
            c.fn_.to_string(),
            r.error_count.to_string(),
            r.latency_ms.mean.to_string(),
            r.latency_ms.p50.to_string(),
            r.latency_ms.p95.to_string(),
            r.throughput_rps.to_string(),
        ];
        rec.extend(ActionKind::ALL.map(|a| r.action_accuracy(a).map_or(String::new(), |v| v.to_string())));
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("csv is utf-8")
}
