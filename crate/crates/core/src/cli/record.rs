use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::{Error, Result};

pub const ROUNDS_FILE: &str = "rounds.csv";
pub const SUMMARY_FILE: &str = "summary.toml";

/// One bin of one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRow {
    pub round: usize,
    pub bin: usize,
    pub sigma: f64,
    pub lambda: f64,
    pub pi: f64,
    pub risk: f64,
    /// Zero for closed-form evaluations.
    pub risk_stderr: f64,
    /// `R - r` on the linear scale, `R / L_delta - 1` on the log scale.
    pub gap: f64,
    pub psnr: f64,
    /// PSNR of the best individual estimator minus `psnr`.
    pub psnr_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSummary {
    pub converged: bool,
    pub rounds: usize,
    pub overall_risk: f64,
    pub max_gap: f64,
    /// Primal objective minus the final dual value. The primal objective is
    /// the overall risk for p1 and the max gap for p2.
    pub duality_gap: f64,
    pub final_gain: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_min_best: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap_spread: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support_gap_spread: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub advisory: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub config: ExperimentConfig,
    pub rows: Vec<RoundRow>,
    pub summary: RunSummary,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SummaryDocument {
    summary: RunSummary,
    config: ExperimentConfig,
}

impl RunRecord {
    pub fn bin_count(&self) -> usize {
        self.config.grid.bin_count
    }

    /// Rows of the last recorded round.
    pub fn final_round(&self) -> &[RoundRow] {
        let n = self.bin_count();
        &self.rows[self.rows.len().saturating_sub(n)..]
    }

    /// Rows grouped by round, in order.
    pub fn rounds(&self) -> impl Iterator<Item = &[RoundRow]> {
        self.rows.chunks(self.bin_count().max(1))
    }

    /// Rows per round equal the bin count, rounds are numbered 1.. in order,
    /// and the summary max gap is the max of the final gap column.
    pub fn check(&self) -> Result<()> {
        let n = self.bin_count();
        if n == 0 || self.rows.is_empty() || !self.rows.len().is_multiple_of(n) {
            return Err(Error::Record(format!(
                "{} rows do not split into rounds of {n} bins",
                self.rows.len()
            )));
        }
        for (k, chunk) in self.rounds().enumerate() {
            for (bin, row) in chunk.iter().enumerate() {
                if row.round != k + 1 || row.bin != bin {
                    return Err(Error::Record(format!(
                        "row for round {} bin {} found where round {} bin {bin} was expected",
                        row.round,
                        row.bin,
                        k + 1
                    )));
                }
            }
        }
        if self.rows.len() / n != self.summary.rounds {
            return Err(Error::Record(format!(
                "summary reports {} rounds but rows hold {}",
                self.summary.rounds,
                self.rows.len() / n
            )));
        }
        let max_gap = self.final_round().iter().map(|r| r.gap).fold(f64::NEG_INFINITY, f64::max);
        if max_gap.to_bits() != self.summary.max_gap.to_bits() {
            return Err(Error::Record(format!(
                "summary max gap {} differs from final-round max {max_gap}",
                self.summary.max_gap
            )));
        }
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        self.check()?;
        fs::create_dir_all(dir)?;
        let mut w = csv::Writer::from_path(dir.join(ROUNDS_FILE))?;
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        let doc = SummaryDocument {
            summary: self.summary.clone(),
            config: self.config.clone(),
        };
        fs::write(dir.join(SUMMARY_FILE), toml::to_string(&doc)?)?;
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(dir.join(ROUNDS_FILE))?;
        let rows = r.deserialize().collect::<std::result::Result<Vec<RoundRow>, _>>()?;
        let text = fs::read_to_string(dir.join(SUMMARY_FILE))?;
        let doc: SummaryDocument = toml::from_str(&text).map_err(|e| Error::Record(e.to_string()))?;
        let record = RunRecord {
            config: doc.config,
            rows,
            summary: doc.summary,
        };
        record.check()?;
        Ok(record)
    }
}
