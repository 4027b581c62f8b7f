//! Aggregation of run directories into a mean ± std comparison table.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use weldkg::eval::RankingReport;
use weldkg::kg::Question;

use crate::{CliResult, DAGGER, TRAIN_REPORT_FILE};

/// One evaluation report together with the training time of its run.
#[derive(Debug, Clone)]
pub struct RunEntry {
    pub run: PathBuf,
    pub report: RankingReport,
    pub time_train: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stat {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single value.
    pub std: f64,
    pub n: usize,
}

pub fn mean_std(xs: &[f64]) -> Option<Stat> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let std = if n < 2 {
        0.0
    } else {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    };
    Some(Stat { mean, std, n })
}

fn time_train_of(dir: &Path) -> Option<f64> {
    let text = std::fs::read_to_string(dir.join(TRAIN_REPORT_FILE)).ok()?;
    let v: serde_json::Value = serde_json::from_str(&text).ok()?;
    v.get("time_train")?.as_f64()
}

/// Every ranking report (`*.json`) found directly inside the run directories.
pub fn collect_runs(dirs: &[PathBuf]) -> CliResult<Vec<RunEntry>> {
    let mut out = Vec::new();
    for dir in dirs {
        let listing = std::fs::read_dir(dir).map_err(|e| weldkg::Error::io(dir, e))?;
        let mut files: Vec<PathBuf> = listing
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        let time_train = time_train_of(dir);
        for f in files {
            if let Ok(report) = RankingReport::read_json(&f) {
                out.push(RunEntry { run: dir.clone(), report, time_train });
            }
        }
    }
    Ok(out)
}

const ORDER: [&str; 7] = ["MLP", "TransE", "DistMult", "RotatE", "AttH", "TransE-MLP", "DistMult-MLP"];

fn model_rank(label: &str) -> (usize, bool, String) {
    let dagger = label.ends_with(DAGGER);
    let base = label.trim_end_matches(DAGGER);
    let i = ORDER.iter().position(|&m| m == base).unwrap_or(ORDER.len());
    (i, dagger, base.to_string())
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonRow {
    pub question: Question,
    pub metric: String,
    pub cells: Vec<Option<Stat>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub models: Vec<String>,
    pub rows: Vec<ComparisonRow>,
}

type Extract = fn(&RunEntry) -> Option<f64>;

fn metrics(q: Question) -> Vec<(&'static str, Extract)> {
    let mut m: Vec<(&'static str, Extract)> = vec![
        ("Acc(Hits@1)", |e| Some(e.report.hits_at_1)),
        ("Hits@3", |e| e.report.hits_at_k.get(&3).copied()),
        ("Hits@10", |e| e.report.hits_at_k.get(&10).copied()),
        ("MRR", |e| Some(e.report.mrr)),
    ];
    match q {
        Question::Q1 => m.push(("nrmse", |e| e.report.nrmse)),
        Question::Q2 => m.push(("Hits@GroupBy3", |e| e.report.hits_groupby3)),
    }
    m.push(("time_train", |e| e.time_train));
    m.push(("time_test", |e| e.report.time_test));
    m
}

pub fn compare_runs(entries: &[RunEntry]) -> Comparison {
    let mut models: Vec<String> = entries.iter().map(|e| e.report.model.clone()).collect();
    models.sort_by_key(|m| model_rank(m));
    models.dedup();
    let mut rows = Vec::new();
    for q in [Question::Q1, Question::Q2] {
        if !entries.iter().any(|e| e.report.question == q) {
            continue;
        }
        for (name, get) in metrics(q) {
            let cells = models
                .iter()
                .map(|m| {
                    let xs: Vec<f64> = entries
                        .iter()
                        .filter(|e| e.report.question == q && &e.report.model == m)
                        .filter_map(get)
                        .collect();
                    mean_std(&xs)
                })
                .collect();
            rows.push(ComparisonRow { question: q, metric: name.to_string(), cells });
        }
    }
    Comparison { models, rows }
}

impl Comparison {
    /// Markdown table: one column per model, rows grouped by question.
    pub fn markdown(&self) -> String {
        let runs: BTreeMap<&str, usize> = self
            .models
            .iter()
            .enumerate()
            .map(|(i, m)| (m.as_str(), self.rows.iter().filter_map(|r| r.cells[i].map(|s| s.n)).max().unwrap_or(0)))
            .collect();
        let mut s = String::new();
        let counts: Vec<String> = self.models.iter().map(|m| format!("{m} n={}", runs[m.as_str()])).collect();
        writeln!(s, "Results are mean ± std over repeated runs ({}).", counts.join(", ")).unwrap();
        if self.models.iter().any(|m| m.ends_with(DAGGER)) {
            writeln!(s, "Models without literals are marked with {DAGGER}.").unwrap();
        }
        writeln!(s).unwrap();
        writeln!(s, "| | | {} |", self.models.join(" | ")).unwrap();
        writeln!(s, "|---|---|{}", "---|".repeat(self.models.len())).unwrap();
        let mut last = None;
        for r in &self.rows {
            let q = if last == Some(r.question) { String::new() } else { r.question.to_string() };
            last = Some(r.question);
            let cells: Vec<String> = r
                .cells
                .iter()
                .map(|c| match c {
                    None => "-".to_string(),
                    Some(st) if r.metric.starts_with("time") => format!("{:.1} ± {:.1} s", st.mean, st.std),
                    Some(st) => format!("{:.2} ± {:.2}", st.mean, st.std),
                })
                .collect();
            writeln!(s, "| {q} | {} | {} |", r.metric, cells.join(" | ")).unwrap();
        }
        s
    }
}
