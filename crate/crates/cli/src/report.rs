use std::collections::BTreeMap;
use std::fmt::Write;

use crate::record::RunRecord;

/// Column order of the comparison grid.
pub const BACKENDS: [&str; 4] = ["fmgd", "ilp", "smt", "enum"];

/// Fastest successful run and its success fraction, if reported; `None`
/// when every run of the pair failed.
type Cell = Option<(f64, Option<f64>)>;

/// Parse records (one JSON object per line), warning about and skipping
/// lines that do not parse.
pub fn parse_records(text: &str, warn: &mut impl FnMut(String)) -> Vec<RunRecord> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<RunRecord>(line) {
            Ok(r) => out.push(r),
            Err(e) => warn(format!("line {}: skipping malformed record ({e})", i + 1)),
        }
    }
    out
}

/// Task × backend grid: the fastest successful time in seconds, `-` when
/// every run failed or timed out, blank when the pair was never run.
pub fn render_grid(records: &[RunRecord]) -> String {
    let mut tasks: Vec<&str> = Vec::new();
    let mut cells: BTreeMap<(&str, &str), Cell> = BTreeMap::new();
    for r in records {
        if !tasks.contains(&r.task.as_str()) {
            tasks.push(&r.task);
        }
        let cell = cells.entry((r.task.as_str(), r.backend.as_str())).or_default();
        if r.status == "Success" && cell.is_none_or(|(t, _)| r.wall_time_s < t) {
            let fraction = r.stats.get("success_fraction").and_then(|v| v.as_f64());
            *cell = Some((r.wall_time_s, fraction));
        }
    }
    let text = |task: &str, backend: &str| -> String {
        match cells.get(&(task, backend)) {
            None => String::new(),
            Some(Some((t, Some(f)))) => format!("{t:.1} ({:.0}%)", f * 100.0),
            Some(Some((t, None))) => format!("{t:.1}"),
            Some(None) => "-".to_string(),
        }
    };
    let name_width = tasks.iter().map(|t| t.len()).chain([4]).max().unwrap_or(4);
    let widths: Vec<usize> = BACKENDS
        .iter()
        .map(|b| tasks.iter().map(|t| text(t, b).len()).chain([b.len()]).max().unwrap_or(b.len()))
        .collect();
    let mut out = String::new();
    let _ = write!(out, "{:<name_width$}", "task");
    for (b, w) in BACKENDS.iter().zip(&widths) {
        let _ = write!(out, "  {b:>w$}");
    }
    out.push('\n');
    let total = name_width + widths.iter().map(|w| w + 2).sum::<usize>();
    out.push_str(&"-".repeat(total));
    out.push('\n');
    for t in &tasks {
        let _ = write!(out, "{t:<name_width$}");
        for (b, w) in BACKENDS.iter().zip(&widths) {
            let _ = write!(out, "  {:>w$}", text(t, b));
        }
        out.truncate(out.trim_end().len());
        out.push('\n');
    }
    out
}
