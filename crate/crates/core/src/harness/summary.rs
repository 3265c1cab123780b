use serde::Serialize;

use super::{RunRecord, RunStatus};
use crate::error::{Error, Result};

/// Aggregate of all runs sharing a config hash.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub label: String,
    pub config_hash: String,
    pub runs: usize,
    pub converged: usize,
    pub budget: usize,
    /// Diverged runs; excluded from every statistic below.
    pub failed: usize,
    /// FEs-to-tolerance statistics over converged runs.
    pub fes_mean: Option<f64>,
    pub fes_median: Option<f64>,
    pub fes_min: Option<u64>,
    pub fes_max: Option<u64>,
    /// Mean of best value minus E0.
    pub raw_error_mean: Option<f64>,
    /// Mean of corrected final value minus E0.
    pub corrected_error_mean: Option<f64>,
    pub sigma_noise_mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryTable {
    pub rows: Vec<SummaryRow>,
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn median(v: &[u64]) -> Option<f64> {
    let mut s = v.to_vec();
    s.sort_unstable();
    let n = s.len();
    match n {
        0 => None,
        _ if n % 2 == 1 => Some(s[n / 2] as f64),
        _ => Some((s[n / 2 - 1] + s[n / 2]) as f64 / 2.0),
    }
}

fn summarize_group(records: &[&RunRecord]) -> SummaryRow {
    let count = |s: RunStatus| records.iter().filter(|r| r.status == s).count();
    let ok: Vec<&&RunRecord> = records.iter().filter(|r| r.status != RunStatus::Diverged).collect();
    let fes: Vec<u64> = ok
        .iter()
        .filter(|r| r.status == RunStatus::Converged)
        .filter_map(|r| r.fes_to_tolerance)
        .collect();
    let fes_f: Vec<f64> = fes.iter().map(|&f| f as f64).collect();
    let collect = |f: fn(&RunRecord) -> f64| -> Vec<f64> { ok.iter().map(|r| f(r)).collect() };
    SummaryRow {
        label: records[0].label.clone(),
        config_hash: records[0].config_hash[..12.min(records[0].config_hash.len())].to_string(),
        runs: records.len(),
        converged: count(RunStatus::Converged),
        budget: count(RunStatus::Budget),
        failed: count(RunStatus::Diverged),
        fes_mean: mean(&fes_f),
        fes_median: median(&fes),
        fes_min: fes.iter().copied().min(),
        fes_max: fes.iter().copied().max(),
        raw_error_mean: mean(&collect(RunRecord::raw_error)),
        corrected_error_mean: mean(&collect(RunRecord::corrected_error)),
        sigma_noise_mean: mean(&collect(|r| r.sigma_noise)),
    }
}

/// One row per config hash, in order of first appearance.
pub fn summarize(records: &[RunRecord]) -> Result<SummaryTable> {
    if records.is_empty() {
        return Err(Error::Config("nothing to summarize: no run records".into()));
    }
    let mut hashes: Vec<&str> = Vec::new();
    for r in records {
        if !hashes.contains(&r.config_hash.as_str()) {
            hashes.push(&r.config_hash);
        }
    }
    let rows = hashes
        .into_iter()
        .map(|h| {
            let group: Vec<&RunRecord> = records.iter().filter(|r| r.config_hash == h).collect();
            summarize_group(&group)
        })
        .collect();
    Ok(SummaryTable { rows })
}

const HEADERS: [&str; 13] = [
    "label",
    "config_hash",
    "runs",
    "converged",
    "budget",
    "failed",
    "fes_mean",
    "fes_median",
    "fes_min",
    "fes_max",
    "raw_error_mean",
    "corrected_error_mean",
    "sigma_noise_mean",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

fn sci(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.3e}"))
}

impl SummaryRow {
    fn cells(&self, short: bool) -> Vec<String> {
        let float = |v: Option<f64>| if short { sci(v) } else { opt(v) };
        vec![
            self.label.clone(),
            self.config_hash.clone(),
            self.runs.to_string(),
            self.converged.to_string(),
            self.budget.to_string(),
            self.failed.to_string(),
            if short { self.fes_mean.map_or_else(String::new, |x| format!("{x:.1}")) } else { opt(self.fes_mean) },
            opt(self.fes_median),
            opt(self.fes_min),
            opt(self.fes_max),
            float(self.raw_error_mean),
            float(self.corrected_error_mean),
            float(self.sigma_noise_mean),
        ]
    }
}

impl SummaryTable {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Diagnostic(format!("csv: {e}"));
        w.write_record(HEADERS).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.cells(false)).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Diagnostic(format!("csv: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::Diagnostic(e.to_string()))
    }

    /// Column-aligned plain text.
    pub fn to_text(&self) -> String {
        let mut table: Vec<Vec<String>> = vec![HEADERS.iter().map(|h| h.to_string()).collect()];
        table.extend(self.rows.iter().map(|r| r.cells(true)));
        let widths: Vec<usize> = (0..HEADERS.len())
            .map(|c| table.iter().map(|row| row[c].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for row in table {
            let line: Vec<String> = row
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(c, (cell, &w))| {
                    if c == 0 {
                        format!("{cell:<w$}")
                    } else {
                        format!("{cell:>w$}")
                    }
                })
                .collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizers::Termination;

    fn record(run: usize, status: RunStatus, fes: Option<u64>) -> RunRecord {
        RunRecord {
            config_hash: "abcdef0123456789".into(),
            label: "test".into(),
            run,
            seed: run as u64,
            status,
            termination: Termination::Budget,
            e0: -1.0,
            n_evaluations: 5000,
            fes_to_tolerance: fes,
            best_value: -0.9,
            corrected_best: -0.95,
            corrected_final: -0.95,
            sigma_noise: 0.01,
            best_theta: vec![],
            final_theta: vec![],
            wall_clock_s: 0.0,
            trace_file: None,
        }
    }

    #[test]
    fn fe_mean_of_converged_runs() {
        let records: Vec<RunRecord> = [1400, 1500, 1500, 1600, 1500]
            .iter()
            .enumerate()
            .map(|(i, &f)| record(i, RunStatus::Converged, Some(f)))
            .collect();
        let t = summarize(&records).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.rows[0].fes_mean, Some(1500.0));
        assert_eq!(t.rows[0].fes_median, Some(1500.0));
        assert_eq!((t.rows[0].fes_min, t.rows[0].fes_max), (Some(1400), Some(1600)));
    }

    #[test]
    fn diverged_runs_are_counted_not_averaged() {
        let mut diverged = record(2, RunStatus::Diverged, Some(10));
        diverged.best_value = -1e9;
        let records = vec![
            record(0, RunStatus::Converged, Some(1000)),
            record(1, RunStatus::Converged, Some(2000)),
            diverged,
        ];
        let row = &summarize(&records).unwrap().rows[0];
        assert_eq!(row.failed, 1);
        assert_eq!(row.fes_mean, Some(1500.0));
        assert!((row.raw_error_mean.unwrap() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn renders_csv_and_text() {
        let t = summarize(&[record(0, RunStatus::Budget, None)]).unwrap();
        let csv = t.to_csv().unwrap();
        assert!(csv.starts_with("label,config_hash,runs"));
        assert_eq!(csv.lines().count(), 2);
        let text = t.to_text();
        assert_eq!(text.lines().count(), 2);
        assert!(text.contains("abcdef012345"));
        assert!(summarize(&[]).is_err());
    }
}
