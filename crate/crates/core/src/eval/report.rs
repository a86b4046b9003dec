//! Experiment reports: CSV for machines, a text summary for people.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Aggregate of one (condition, tier) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub condition: String,
    pub tier: String,
    pub mean_progress: f64,
    /// Standard error of the per-episode progress values.
    pub stderr: f64,
    /// Episodes pooled into the cell.
    pub n: usize,
    /// Training seed indices pooled into the cell, joined with '|'.
    pub seed_set: String,
    /// Fraction of episodes that physically reached the goal (text summary
    /// only; the CSV column set is fixed).
    pub reached: f64,
}

/// A full experiment's worth of cells under one config.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub title: String,
    pub config_hash: String,
    pub rows: Vec<ReportRow>,
}

impl ExperimentReport {
    /// CSV form with the fixed column set.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("condition,tier,mean_progress,stderr,n,seed_set,config_hash\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                row.condition,
                row.tier,
                row.mean_progress,
                row.stderr,
                row.n,
                row.seed_set,
                self.config_hash
            ));
        }
        out
    }

    /// Human-readable table, including the reached fraction.
    pub fn summary(&self) -> String {
        let mut out = format!("{} (config {})\n", self.title, self.config_hash);
        out.push_str(&format!(
            "{:<32} {:<10} {:>9} {:>9} {:>5} {:>9}\n",
            "condition", "tier", "progress", "stderr", "n", "reached"
        ));
        for row in &self.rows {
            out.push_str(&format!(
                "{:<32} {:<10} {:>9.3} {:>9.3} {:>5} {:>9.3}\n",
                row.condition, row.tier, row.mean_progress, row.stderr, row.n, row.reached
            ));
        }
        out
    }

    /// Write `<stem>.csv` and `<stem>.txt` under `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let csv_path = dir.join(format!("{stem}.csv"));
        let txt_path = dir.join(format!("{stem}.txt"));
        std::fs::write(&csv_path, self.to_csv())?;
        std::fs::write(&txt_path, self.summary())?;
        Ok((csv_path, txt_path))
    }

    /// Look up one cell.
    pub fn cell(&self, condition: &str, tier: &str) -> Result<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.condition == condition && r.tier == tier)
            .ok_or_else(|| Error::Missing(format!("report cell {condition}/{tier}")))
    }

    /// Episode-weighted mean progress of one condition over several tiers.
    pub fn pooled_mean(&self, condition: &str, tiers: &[&str]) -> Result<f64> {
        let mut total = 0.0;
        let mut count = 0usize;
        for tier in tiers {
            let row = self.cell(condition, tier)?;
            total += row.mean_progress * row.n as f64;
            count += row.n;
        }
        if count == 0 {
            return Err(Error::EmptySelection(format!(
                "no episodes under condition {condition}"
            )));
        }
        Ok(total / count as f64)
    }
}

/// Mean, standard error, and reached fraction of raw episode outcomes.
pub fn summarize(values: &[(f64, bool)]) -> (f64, f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0, 0.0);
    }
    let mean = values.iter().map(|v| v.0).sum::<f64>() / n as f64;
    let var = if n > 1 {
        values.iter().map(|v| (v.0 - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    let stderr = (var / n as f64).sqrt();
    let reached = values.iter().filter(|v| v.1).count() as f64 / n as f64;
    (mean, stderr, reached)
}
