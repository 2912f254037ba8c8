//! Text and JSON renderings of evaluation reports and training histories.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::EvalReport;
use crate::keypoint::LabelMap;
use crate::model::Prediction;
use crate::train::TrainHistory;

pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(ReportFormat::Text),
            "json" | "structured" => Ok(ReportFormat::Json),
            other => Err(Error::InvalidArgument(format!("unknown report format `{other}`"))),
        }
    }
}

/// Everything written for one evaluation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub engine_version: String,
    pub report: EvalReport,
    pub history: Option<TrainHistory>,
    /// Free-form echo of the settings that produced the report.
    pub config: Option<serde_json::Value>,
}

impl ReportDocument {
    pub fn new(report: EvalReport) -> Self {
        Self {
            engine_version: ENGINE_VERSION.to_string(),
            report,
            history: None,
            config: None,
        }
    }
}

/// `round(x, 3)` printed as its shortest representation ("1.0", "0.9",
/// "0.856").
pub fn short3(x: f64) -> String {
    let rounded: f64 = format!("{x:.3}").parse().expect("formatted float");
    format!("{rounded:?}")
}

pub const TABLE_HEADER: &str = "Model\tAccuracy\tF1-score\tPrecision\tRecall";

/// One comparison-table row; accuracy and recall use the short form,
/// F1 and precision three fixed decimals.
pub fn table_row(model: &str, accuracy: f64, f1: f64, precision: f64, recall: f64) -> String {
    format!(
        "{model}\t{}\t{f1:.3}\t{precision:.3}\t{}",
        short3(accuracy),
        short3(recall)
    )
}

pub fn comparison_table(reports: &[&EvalReport]) -> String {
    let mut out = String::from(TABLE_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&table_row(&r.model, r.accuracy, r.f1, r.precision, r.recall));
        out.push('\n');
    }
    out
}

fn render_text(doc: &ReportDocument) -> String {
    let r = &doc.report;
    let mut out = comparison_table(&[r]);
    let _ = writeln!(out);
    let _ = writeln!(out, "Model {} Accuracy: {:?}", r.model, r.accuracy);
    let _ = writeln!(out, "Model {} F1 score: {:?}", r.model, r.f1);
    let _ = writeln!(out, "Model {} Precision: {:?}", r.model, r.precision);
    let _ = writeln!(out, "Model {} Recall: {:?}", r.model, r.recall);
    let _ = writeln!(out, "samples: {}  averaging: {:?}  architecture: {}", r.samples, r.averaging, r.architecture);
    if r.zero_division > 0 {
        let _ = writeln!(out, "warning: {} per-class ratios had a zero denominator and were set to 0", r.zero_division);
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "class\tprecision\trecall\tf1-score\tsupport");
    for (name, c) in r.labels.iter().zip(&r.per_class) {
        let _ = writeln!(out, "{name}\t{:.3}\t{:.3}\t{:.3}\t{}", c.precision, c.recall, c.f1, c.support);
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "confusion matrix (rows = true, columns = predicted)");
    for row in &r.confusion.counts {
        let cells: Vec<String> = row.iter().map(u64::to_string).collect();
        let _ = writeln!(out, "{}", cells.join("\t"));
    }
    if let Some(h) = &doc.history {
        let _ = writeln!(out);
        out.push_str(&render_history(h));
    }
    out
}

pub fn render_report(doc: &ReportDocument, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Text => Ok(render_text(doc)),
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(doc)?;
            s.push('\n');
            Ok(s)
        }
    }
}

pub fn parse_report(text: &str) -> Result<ReportDocument> {
    Ok(serde_json::from_str(text)?)
}

/// A single prediction: the winning label, then one line per class.
pub fn render_prediction(labels: &LabelMap, p: &Prediction, format: ReportFormat) -> String {
    let name = |i: usize| labels.name(i).unwrap_or("?");
    match format {
        ReportFormat::Text => {
            let mut out = format!("label: {} ({:.6})\n", name(p.label), p.probabilities[p.label]);
            for (i, v) in p.probabilities.iter().enumerate() {
                let _ = writeln!(out, "{}\t{v:.6}", name(i));
            }
            out
        }
        ReportFormat::Json => {
            let scores: serde_json::Map<String, serde_json::Value> = p
                .probabilities
                .iter()
                .enumerate()
                .map(|(i, v)| (name(i).to_string(), serde_json::json!(v)))
                .collect();
            let doc = serde_json::json!({
                "label": name(p.label),
                "label_index": p.label,
                "confidence": p.probabilities[p.label],
                "scores": scores,
            });
            format!("{doc}\n")
        }
    }
}

/// Per-epoch progress lines.
pub fn render_history(history: &TrainHistory) -> String {
    let total = history.records.len();
    let mut out = String::new();
    for r in &history.records {
        let _ = write!(
            out,
            "Epoch {}/{total} - loss: {:.4} - accuracy: {:.4} - val_loss: {:.4} - val_accuracy: {:.4} - lr: {:e}",
            r.epoch, r.train_loss, r.train_accuracy, r.val_loss, r.val_accuracy, r.learning_rate
        );
        if let Some(t) = r.wall_time_secs {
            let _ = write!(out, " - {t:.2}s");
        }
        out.push('\n');
    }
    if history.stopped_early {
        out.push_str("early stopping triggered\n");
    }
    if let Some(e) = history.restored_epoch {
        let _ = writeln!(out, "restored weights from epoch {e}");
    }
    out
}
