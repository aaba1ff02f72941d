use std::path::Path;

use super::{plot, ExperimentKind, ExperimentReport, TrialStats};
use crate::error::{Error, Result};
use crate::profile::NormConditionReport;

pub(crate) fn csv_header(kind: ExperimentKind) -> Vec<&'static str> {
    match kind {
        ExperimentKind::Circlaw => vec!["trial", "seed", "radial_ks", "angular_ks", "op_norm", "status"],
        ExperimentKind::Locallaw => vec!["trial", "eta", "abs_err", "normalized_err", "entry_spot_max", "status"],
        ExperimentKind::Singcount => vec!["trial", "count", "bound", "max_stieltjes_ratio", "status"],
        ExperimentKind::Leastsing => vec!["trial", "sigma_min", "thresh_2_10", "thresh_2_3", "status"],
        ExperimentKind::Replacement => vec!["trial", "delta", "kolmogorov", "status"],
        ExperimentKind::Normcond => NormConditionReport::CSV_HEADER.to_vec(),
        ExperimentKind::Mc => vec!["eta", "mc_re", "mc_im", "residual"],
    }
}

fn num(x: f64) -> String {
    crate::fmt::float(x)
}

pub(crate) fn csv_rows(report: &ExperimentReport) -> Vec<Vec<String>> {
    let width = csv_header(report.config.kind).len();
    let mut rows = Vec::new();
    for t in &report.trials {
        let status = t.status();
        let Ok(stats) = &t.outcome else {
            // keep the row: trial index first, status last, blanks between
            if !report.config.kind.is_deterministic() {
                let mut row = vec![String::new(); width];
                row[0] = t.trial.to_string();
                if report.config.kind == ExperimentKind::Circlaw {
                    row[1] = t.seed.to_string();
                }
                row[width - 1] = status;
                rows.push(row);
            }
            continue;
        };
        let trial = t.trial.to_string();
        match stats {
            TrialStats::Circlaw {
                radial_ks,
                angular_ks,
                op_norm,
                ..
            } => rows.push(vec![
                trial,
                t.seed.to_string(),
                num(*radial_ks),
                num(*angular_ks),
                num(*op_norm),
                status,
            ]),
            TrialStats::Locallaw { points } => {
                for p in points {
                    rows.push(vec![
                        trial.clone(),
                        num(p.eta),
                        num(p.abs_err),
                        num(p.normalized_err),
                        num(p.entry_spot_max),
                        status.clone(),
                    ]);
                }
            }
            TrialStats::Singcount {
                count,
                bound,
                max_stieltjes_ratio,
            } => rows.push(vec![trial, count.to_string(), num(*bound), num(*max_stieltjes_ratio), status]),
            TrialStats::Leastsing {
                sigma_min,
                thresh_2_10,
                thresh_2_3,
            } => rows.push(vec![
                trial,
                num(*sigma_min),
                num(*thresh_2_10),
                thresh_2_3.map(num).unwrap_or_default(),
                status,
            ]),
            TrialStats::Replacement { delta, kolmogorov } => {
                rows.push(vec![trial, num(*delta), num(*kolmogorov), status])
            }
            TrialStats::Normcond { scan, .. } => rows.extend(scan.csv_records()),
            TrialStats::Mc { points } => {
                for p in points {
                    rows.push(vec![num(p.eta), num(p.mc.re), num(p.mc.im), num(p.residual)]);
                }
            }
        }
    }
    rows
}

fn write_rows<W: std::io::Write>(report: &ExperimentReport, w: &mut csv::Writer<W>) -> csv::Result<()> {
    w.write_record(csv_header(report.config.kind))?;
    for row in csv_rows(report) {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the per-kind CSV (header row first).
pub fn emit_csv(report: &ExperimentReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    write_rows(report, &mut w).map_err(|e| Error::csv(path, e))
}

/// Same as [`emit_csv`] but to any writer, e.g. stdout.
pub fn write_csv(report: &ExperimentReport, out: impl std::io::Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    write_rows(report, &mut w).map_err(|e| Error::csv("<stream>", e))
}

/// Header and rows of a CSV written by [`emit_csv`].
pub fn read_csv(path: impl AsRef<Path>) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let header = r
        .headers()
        .map_err(|e| Error::csv(path, e))?
        .iter()
        .map(str::to_owned)
        .collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        rows.push(rec.iter().map(str::to_owned).collect());
    }
    Ok((header, rows))
}

/// Circlaw: eigenvalue scatter with the unit circle. Locallaw: log-log error
/// curve against `W^{-1/2} η^{-3/4}`. Other kinds: histogram of the primary
/// statistic.
pub fn emit_plot(report: &ExperimentReport, path: impl AsRef<Path>) -> Result<()> {
    plot::render(report).save(path)
}
