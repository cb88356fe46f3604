//! Results tables in the probe/query layout and the probe-minus-query gap summary.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Task;
use crate::error::{Error, Result};
use crate::eval::{EvalReport, Method, PrecisionRecallF1};

const MISSING: &str = "—";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultsRow {
    pub model_id: String,
    pub method: Option<Method>,
    pub wic_accuracy: Option<f64>,
    pub ner: Option<PrecisionRecallF1>,
    pub analogy_accuracy: Option<f64>,
}

impl ResultsRow {
    fn task_metric(&self, task: Task) -> Option<f64> {
        match task {
            Task::Wic => self.wic_accuracy,
            Task::Ner => self.ner.map(|s| s.f1),
            Task::Analogy => self.analogy_accuracy,
        }
    }
}

/// Rows keyed by (model, method), ordered by model order then Query before Probe.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultsMatrix {
    rows: Vec<ResultsRow>,
}

impl ResultsMatrix {
    /// Assemble reports. Models follow `model_order`; models missing from it
    /// come after, sorted by id.
    pub fn from_reports(reports: &[EvalReport], model_order: &[String]) -> Result<Self> {
        let mut cells: BTreeMap<(String, Method), ResultsRow> = BTreeMap::new();
        for r in reports {
            let task: Task = r.task.parse()?;
            let row = cells
                .entry((r.model_id.clone(), r.method))
                .or_insert_with(|| ResultsRow {
                    model_id: r.model_id.clone(),
                    method: Some(r.method),
                    ..ResultsRow::default()
                });
            let duplicate = match task {
                Task::Wic => row.wic_accuracy.replace(r.accuracy).is_some(),
                Task::Analogy => row.analogy_accuracy.replace(r.accuracy).is_some(),
                Task::Ner => {
                    let prf = r.ner.ok_or_else(|| Error::Data {
                        name: format!("{}/{}/ner", r.model_id, r.method.as_str()),
                        message: "NER report lacks precision/recall/F1".into(),
                    })?;
                    row.ner.replace(prf).is_some()
                }
            };
            if duplicate {
                return Err(Error::Data {
                    name: format!("{}/{}/{task}", r.model_id, r.method.as_str()),
                    message: "more than one report for this cell".into(),
                });
            }
        }

        let rank = |model: &str| model_order.iter().position(|m| m == model).unwrap_or(usize::MAX);
        let mut rows: Vec<ResultsRow> = cells.into_values().collect();
        rows.sort_by(|a, b| {
            (rank(&a.model_id), &a.model_id, a.method).cmp(&(rank(&b.model_id), &b.model_id, b.method))
        });
        Ok(ResultsMatrix { rows })
    }

    pub fn rows(&self) -> &[ResultsRow] {
        &self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn row(&self, model: &str, method: Method) -> Option<&ResultsRow> {
        self.rows
            .iter()
            .find(|r| r.model_id == model && r.method == Some(method))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableFormat {
    Markdown,
    Csv,
    Latex,
}

impl TableFormat {
    pub fn extension(self) -> &'static str {
        match self {
            TableFormat::Markdown => "md",
            TableFormat::Csv => "csv",
            TableFormat::Latex => "tex",
        }
    }
}

impl FromStr for TableFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "markdown" | "md" => Ok(TableFormat::Markdown),
            "csv" => Ok(TableFormat::Csv),
            "latex" | "tex" => Ok(TableFormat::Latex),
            other => Err(Error::invalid(format!("unknown table format `{other}`"))),
        }
    }
}

/// Integer percent, as displayed in the results table.
pub fn percent(value: f64) -> String {
    format!("{}", (value * 100.0).round() as i64)
}

fn cells(row: &ResultsRow) -> [String; 5] {
    let show = |v: Option<f64>| v.map(percent).unwrap_or_else(|| MISSING.to_string());
    [
        show(row.wic_accuracy),
        show(row.ner.map(|s| s.precision)),
        show(row.ner.map(|s| s.recall)),
        show(row.ner.map(|s| s.f1)),
        show(row.analogy_accuracy),
    ]
}

fn method_name(row: &ResultsRow) -> String {
    row.method.map(|m| m.to_string()).unwrap_or_default()
}

pub fn render_table(matrix: &ResultsMatrix, format: TableFormat) -> Result<String> {
    if matrix.is_empty() {
        return Err(Error::invalid("results matrix is empty"));
    }
    let mut out = String::new();
    match format {
        TableFormat::Markdown => {
            out.push_str("| Model | Method | WiC Acc(%) | NER Precision | NER Recall | NER F1 | Analogy Acc(%) |\n");
            out.push_str("|---|---|---|---|---|---|---|\n");
            for row in matrix.rows() {
                writeln!(out, "| {} | {} | {} |", row.model_id, method_name(row), cells(row).join(" | ")).unwrap();
            }
        }
        TableFormat::Csv => {
            out.push_str("model,method,wic_acc,ner_precision,ner_recall,ner_f1,analogy_acc\n");
            for row in matrix.rows() {
                writeln!(out, "{},{},{}", csv_field(&row.model_id), method_name(row), cells(row).join(",")).unwrap();
            }
        }
        TableFormat::Latex => {
            out.push_str("\\begin{tabular}{cc|c|ccc|c}\n\\hline\n");
            out.push_str("\\multirow{2}{*}{Model} & \\multirow{2}{*}{method} & WiC & \\multicolumn{3}{c|}{NER} & Analogy \\\\ \\cline{3-7}\n");
            out.push_str(" & & Acc(\\%) & Precision & Recall & F1 & Acc(\\%) \\\\ \\hline\n");
            let mut i = 0;
            let rows = matrix.rows();
            while i < rows.len() {
                let model = &rows[i].model_id;
                let span = rows[i..].iter().take_while(|r| &r.model_id == model).count();
                for (k, row) in rows[i..i + span].iter().enumerate() {
                    let head = if k == 0 {
                        format!("\\multirow{{{span}}}{{*}}{{{}}}", latex_escape(model))
                    } else {
                        String::new()
                    };
                    writeln!(out, "{head} & {} & {} \\\\", method_name(row), cells(row).join(" & ")).unwrap();
                }
                out.push_str("\\hline\n");
                i += span;
            }
            out.push_str("\\end{tabular}\n");
        }
    }
    Ok(out)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn latex_escape(s: &str) -> String {
    s.replace('\\', "\\textbackslash{}")
        .replace('_', "\\_")
        .replace('%', "\\%")
        .replace('&', "\\&")
        .replace('#', "\\#")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapEntry {
    pub model_id: String,
    pub task: Task,
    pub query: f64,
    pub probe: f64,
    /// (probe - query) in percentage points.
    pub delta_points: f64,
    pub probe_wins: bool,
}

/// Probe-minus-query deltas for every (model, task) holding both methods.
/// The task metric is accuracy for WiC and analogy, F1 for NER.
pub fn gap_entries(matrix: &ResultsMatrix) -> Vec<GapEntry> {
    let mut out = Vec::new();
    let mut models: Vec<&str> = Vec::new();
    for row in matrix.rows() {
        if !models.contains(&row.model_id.as_str()) {
            models.push(&row.model_id);
        }
    }
    for model in models {
        let (Some(q), Some(p)) = (matrix.row(model, Method::Query), matrix.row(model, Method::Probe)) else {
            continue;
        };
        for task in Task::ALL {
            if let (Some(query), Some(probe)) = (q.task_metric(task), p.task_metric(task)) {
                out.push(GapEntry {
                    model_id: model.to_string(),
                    task,
                    query,
                    probe,
                    delta_points: (probe - query) * 100.0,
                    probe_wins: probe > query,
                });
            }
        }
    }
    out
}

pub fn render_gap_summary(matrix: &ResultsMatrix) -> Result<String> {
    let entries = gap_entries(matrix);
    if entries.is_empty() {
        return Err(Error::invalid(
            "gap summary needs both query and probe results for at least one model and task",
        ));
    }
    let mut out = String::from("| Model | Task | Query | Probe | Delta (points) | Probe > Query |\n|---|---|---|---|---|---|\n");
    for e in &entries {
        writeln!(
            out,
            "| {} | {} | {} | {} | {:+.1} | {} |",
            e.model_id,
            e.task,
            percent(e.query),
            percent(e.probe),
            e.delta_points,
            if e.probe_wins { "yes" } else { "no" }
        )
        .unwrap();
    }
    Ok(out)
}
