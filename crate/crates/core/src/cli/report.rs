use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::record::RunRecord;
use crate::error::{Error, Result};

pub const REPORT_FILE: &str = "report.txt";
pub const GAP_CURVE_FILE: &str = "gap_curve.csv";
pub const LAMBDA_TRAJECTORY_FILE: &str = "lambda_trajectory.csv";

/// Rounds `weights` to tenths of a percent, half-up.
///
/// Plain half-up rounding can leave the total more than 0.1 away from 100.
/// When that happens the entries whose fractional part sat closest to the
/// rounding boundary are moved one tenth toward the total until it is back
/// within 0.1. Rows that already sum correctly are left untouched.
pub fn percentage_tenths(weights: &[f64]) -> Result<Vec<i64>> {
    let total: f64 = weights.iter().sum();
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) || !(total > 0.0) {
        return Err(Error::Domain("percentages need finite nonnegative weights with a positive sum".into()));
    }
    let scaled: Vec<f64> = weights.iter().map(|w| w / total * 1000.0).collect();
    // the small nudge keeps decimal ties such as 0.0685 from landing just below .5
    let mut tenths: Vec<i64> = scaled.iter().map(|x| (x + 0.5 + 1e-9).floor() as i64).collect();
    let mut excess: i64 = tenths.iter().sum::<i64>() - 1000;
    if excess.abs() > 1 {
        // residual = rounded - exact; larger means rounded up by more
        let mut order: Vec<usize> = (0..tenths.len()).collect();
        let residual = |i: usize, t: &[i64]| t[i] as f64 - scaled[i];
        if excess > 0 {
            order.sort_by(|&a, &b| residual(b, &tenths).total_cmp(&residual(a, &tenths)).then(a.cmp(&b)));
            for &i in &order {
                if excess <= 1 {
                    break;
                }
                if tenths[i] == 0 {
                    continue;
                }
                tenths[i] -= 1;
                excess -= 1;
            }
        } else {
            order.sort_by(|&a, &b| residual(a, &tenths).total_cmp(&residual(b, &tenths)).then(a.cmp(&b)));
            for &i in &order {
                if excess >= -1 {
                    break;
                }
                tenths[i] += 1;
                excess += 1;
            }
        }
    }
    Ok(tenths)
}

/// Formats weights as one-decimal percentages, e.g. `"32.7%"`.
pub fn format_percentages(weights: &[f64]) -> Result<Vec<String>> {
    Ok(percentage_tenths(weights)?
        .into_iter()
        .map(|t| format!("{}.{}%", t / 10, t % 10))
        .collect())
}

/// Paths of the files written by [`emit_report`].
#[derive(Debug, Clone)]
pub struct ReportFiles {
    pub report: PathBuf,
    pub gap_curve: PathBuf,
    pub lambda_trajectory: PathBuf,
}

/// Writes the distribution table, the final gap curve and the multiplier
/// trajectory next to the record.
pub fn emit_report(record: &RunRecord, dir: &Path) -> Result<ReportFiles> {
    record.check()?;
    fs::create_dir_all(dir)?;
    let files = ReportFiles {
        report: dir.join(REPORT_FILE),
        gap_curve: dir.join(GAP_CURVE_FILE),
        lambda_trajectory: dir.join(LAMBDA_TRAJECTORY_FILE),
    };
    fs::write(&files.report, render_table(record)?)?;

    let mut w = csv::Writer::from_path(&files.gap_curve)?;
    w.write_record(["bin", "sigma", "risk", "gap", "psnr_gap"])?;
    for row in record.final_round() {
        w.write_record([
            row.bin.to_string(),
            row.sigma.to_string(),
            row.risk.to_string(),
            row.gap.to_string(),
            row.psnr_gap.to_string(),
        ])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(&files.lambda_trajectory)?;
    let mut header = vec!["round".to_string()];
    header.extend((0..record.bin_count()).map(|b| format!("bin_{b}")));
    w.write_record(&header)?;
    for chunk in record.rounds() {
        let mut line = vec![chunk[0].round.to_string()];
        line.extend(chunk.iter().map(|r| r.lambda.to_string()));
        w.write_record(&line)?;
    }
    w.flush()?;
    Ok(files)
}

/// Human-readable table: one line per bin with the training share, the PSNR
/// reached and the shortfall against the best individual estimator.
pub fn render_table(record: &RunRecord) -> Result<String> {
    let cfg = &record.config;
    let s = &record.summary;
    let last = record.final_round();
    let shares = format_percentages(&last.iter().map(|r| r.pi).collect::<Vec<_>>())?;
    let width = (cfg.grid.sigma_max - cfg.grid.sigma_min) / cfg.grid.bin_count as f64;

    let mut out = String::new();
    let eps = cfg.epsilon.map(|e| format!(", epsilon = {e}")).unwrap_or_default();
    writeln!(
        out,
        "{} on the {} backend{eps}, sigma_y = {}",
        cfg.problem.as_str(),
        cfg.backend.as_str(),
        cfg.model.sigma_y
    )
    .unwrap();
    writeln!(
        out,
        "rounds: {}  converged: {}  overall risk: {:.6}  max gap: {:.6}  duality gap: {:.3e}  gain: {:.6}",
        s.rounds, s.converged, s.overall_risk, s.max_gap, s.duality_gap, s.final_gain
    )
    .unwrap();
    if let Some(e) = s.epsilon_min {
        writeln!(
            out,
            "epsilon_min: {e:.6} (best over rounds {:.6}, gap spread {:.6}, spread on support {:.6})",
            s.epsilon_min_best.unwrap_or(e),
            s.gap_spread.unwrap_or(f64::NAN),
            s.support_gap_spread.unwrap_or(f64::NAN)
        )
        .unwrap();
    }
    if let Some(a) = &s.advisory {
        writeln!(out, "note: {a}").unwrap();
    }
    writeln!(out).unwrap();
    writeln!(
        out,
        "{:>17}  {:>8}  {:>12}  {:>12}  {:>9}  {:>9}",
        "noise level", "share", "risk", "gap", "psnr", "psnr gap"
    )
    .unwrap();
    for (row, share) in last.iter().zip(&shares) {
        let lo = cfg.grid.sigma_min + width * row.bin as f64;
        let range = format!("{:.4}-{:.4}", lo, lo + width);
        writeln!(
            out,
            "{range:>17}  {share:>8}  {:>12.6}  {:>12.6}  {:>9.2}  {:>9.2}",
            row.risk, row.gap, row.psnr, row.psnr_gap
        )
        .unwrap();
    }
    Ok(out)
}

/// A row of the shipped denoiser fixture table.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct FixtureEntry {
    pub row: String,
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub distribution_pct: Option<f64>,
    pub psnr: f64,
}

/// Per-bin distributions and PSNRs of the reference deep-denoiser
/// experiment. Used only to test formatting and gap arithmetic.
pub fn denoiser_fixture() -> Result<Vec<FixtureEntry>> {
    let text = include_str!("../../data/denoiser_reference.csv");
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(Error::from)
}

/// Entries of one fixture row (`ideal`, `uniform`, `p1` or `p2`) in bin order.
pub fn fixture_row(name: &str) -> Result<Vec<FixtureEntry>> {
    let rows: Vec<_> = denoiser_fixture()?.into_iter().filter(|e| e.row == name).collect();
    if rows.is_empty() {
        return Err(Error::Record(format!("no fixture row named {name}")));
    }
    Ok(rows)
}
