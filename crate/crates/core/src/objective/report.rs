//! Multi-task metric reports: a plain-text table (percent, two decimals) and a
//! machine-readable `key=value` file.
//!
//! Key-value lines:
//!
//! ```text
//! split=<name>
//! task=<task> class=<label> precision=<f> recall=<f> f1=<f>
//! task=<task> macro_precision=<f> macro_recall=<f> macro_f1=<f>
//! averaged_precision=<f> averaged_recall=<f> averaged_f1=<f>
//! ```

use std::fmt::Write as _;

use super::{ClassificationMetrics, ObjectiveError, Prf};

#[derive(Debug, Clone, PartialEq)]
pub struct TaskMetrics {
    pub name: String,
    pub class_names: Vec<String>,
    pub metrics: ClassificationMetrics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub split: String,
    pub tasks: Vec<TaskMetrics>,
    /// Arithmetic mean of the tasks' macro scores.
    pub averaged: Prf,
}

pub const TABLE_HEADER: &str = "Task     | Precision | Recall | F1 score";

/// Combines per-task metrics; the averaged row is the mean of the macro
/// scores across tasks.
pub fn multi_task_report(split: &str, tasks: Vec<TaskMetrics>) -> MetricsReport {
    let macros: Vec<Prf> = tasks.iter().map(|t| t.metrics.macro_avg).collect();
    MetricsReport {
        split: split.to_string(),
        averaged: Prf::mean(&macros),
        tasks,
    }
}

fn pct(v: f64) -> String {
    format!("{:.2}", v * 100.0)
}

fn table_row(name: &str, p: &Prf) -> String {
    format!(
        "{:<8} | {:>9} | {:>6} | {:>8}",
        name,
        pct(p.precision),
        pct(p.recall),
        pct(p.f1)
    )
}

impl MetricsReport {
    pub fn task(&self, name: &str) -> Option<&TaskMetrics> {
        self.tasks.iter().find(|t| t.name == name)
    }

    /// Plain-text table: one row per task and a final `average` row.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# split: {}", self.split).unwrap();
        writeln!(out, "{TABLE_HEADER}").unwrap();
        for t in &self.tasks {
            writeln!(out, "{}", table_row(&t.name, &t.metrics.macro_avg)).unwrap();
        }
        writeln!(out, "{}", table_row("average", &self.averaged)).unwrap();
        out
    }

    pub fn render_kv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "split={}", self.split).unwrap();
        for t in &self.tasks {
            for (name, p) in t.class_names.iter().zip(&t.metrics.per_class) {
                writeln!(
                    out,
                    "task={} class={} precision={:.6} recall={:.6} f1={:.6}",
                    t.name, name, p.precision, p.recall, p.f1
                )
                .unwrap();
            }
            let m = &t.metrics.macro_avg;
            writeln!(
                out,
                "task={} macro_precision={:.6} macro_recall={:.6} macro_f1={:.6}",
                t.name, m.precision, m.recall, m.f1
            )
            .unwrap();
        }
        let a = &self.averaged;
        writeln!(
            out,
            "averaged_precision={:.6} averaged_recall={:.6} averaged_f1={:.6}",
            a.precision, a.recall, a.f1
        )
        .unwrap();
        out
    }
}

/// One model row of a validation/test comparison table, values in percent.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub model: String,
    pub validation: Prf,
    pub test: Prf,
}

pub const COMPARISON_HEADER: [&str; 2] = [
    "Models | Validation                   | Test",
    "       | Precision | Recall | F1 score | Precision | Recall | F1 score",
];

impl ComparisonRow {
    /// Builds a row from the averaged scores of a validation and a test report.
    pub fn from_reports(model: &str, validation: &MetricsReport, test: &MetricsReport) -> Self {
        let scale = |p: &Prf| Prf {
            precision: p.precision * 100.0,
            recall: p.recall * 100.0,
            f1: p.f1 * 100.0,
        };
        Self {
            model: model.to_string(),
            validation: scale(&validation.averaged),
            test: scale(&test.averaged),
        }
    }

    pub fn render(&self) -> String {
        let (v, t) = (&self.validation, &self.test);
        format!(
            "{} | {:.2} | {:.2} | {:.2} | {:.2} | {:.2} | {:.2}",
            self.model, v.precision, v.recall, v.f1, t.precision, t.recall, t.f1
        )
    }

    /// Parses `model | P | R | F1 | P | R | F1`.
    pub fn parse(line: &str) -> Result<Self, ObjectiveError> {
        let fields: Vec<&str> = line.split('|').map(str::trim).collect();
        if fields.len() != 7 {
            return Err(ObjectiveError::Parse(format!(
                "expected 7 '|'-separated fields, found {}",
                fields.len()
            )));
        }
        let nums = fields[1..]
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| ObjectiveError::Parse(format!("not a number: {f:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            model: fields[0].to_string(),
            validation: Prf {
                precision: nums[0],
                recall: nums[1],
                f1: nums[2],
            },
            test: Prf {
                precision: nums[3],
                recall: nums[4],
                f1: nums[5],
            },
        })
    }
}

pub fn render_comparison(rows: &[ComparisonRow]) -> String {
    let mut out = format!("{}\n{}\n", COMPARISON_HEADER[0], COMPARISON_HEADER[1]);
    for r in rows {
        out.push_str(&r.render());
        out.push('\n');
    }
    out
}
