//! CSV and JSON output. Files are written to a temporary name and renamed
//! into place, so readers never see a half-written table.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::experiments::ExperimentReport;
use crate::error::Result;
use crate::ledger::write_grid_csv;

fn write_atomic(path: &Path, fill: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
    let mut buf = Vec::new();
    fill(&mut buf)?;
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&buf)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn csv_rows<T: Serialize>(rows: &[T], buf: &mut Vec<u8>) -> Result<()> {
    let mut w = csv::Writer::from_writer(buf);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Header-only CSV for an empty run table, so the column order is always
/// visible.
const RUN_HEADER: &str = "experiment,algorithm,n,k,a,epsilon,p,seed,total_transmissions,\
final_rel_error,max_hops,iterations,duration\n";

/// Writes every table of `report` into `dir` and returns the paths written.
///
/// * `<exp>.csv`: one row per run
/// * `<exp>_summary.csv`: mean/std/min/max per config point
/// * `<exp>.json`: the whole report
/// * `<exp>_failures.csv`, `<exp>_nodes.csv`, `<exp>_cdf.csv`,
///   `<exp>_classes.csv`, `<exp>_fit.csv`, `<exp>_slopes.csv` when present
/// * `<exp>_<algorithm>_n<n>_grid.csv`: heatmaps, row-major, no header
pub fn write_report(report: &ExperimentReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let exp = report.experiment.name();
    let mut written = Vec::new();
    let mut emit = |name: String, fill: &mut dyn FnMut(&mut Vec<u8>) -> Result<()>| -> Result<()> {
        let path = dir.join(name);
        write_atomic(&path, fill)?;
        written.push(path);
        Ok(())
    };
    emit(format!("{exp}.csv"), &mut |b| {
        if report.rows.is_empty() {
            b.extend_from_slice(RUN_HEADER.as_bytes());
            Ok(())
        } else {
            csv_rows(&report.rows, b)
        }
    })?;
    emit(format!("{exp}_summary.csv"), &mut |b| csv_rows(&report.summary, b))?;
    if !report.failures.is_empty() {
        emit(format!("{exp}_failures.csv"), &mut |b| csv_rows(&report.failures, b))?;
    }
    if !report.nodes.is_empty() {
        emit(format!("{exp}_nodes.csv"), &mut |b| csv_rows(&report.nodes, b))?;
    }
    if let Some(cdf) = &report.cdf {
        emit(format!("{exp}_cdf.csv"), &mut |b| csv_rows(&cdf.curve, b))?;
    }
    if !report.classes.is_empty() {
        emit(format!("{exp}_classes.csv"), &mut |b| csv_rows(&report.classes, b))?;
    }
    if let Some(fit) = &report.fit {
        emit(format!("{exp}_fit.csv"), &mut |b| csv_rows(&fit.points, b))?;
        emit(format!("{exp}_slopes.csv"), &mut |b| csv_rows(&fit.slopes, b))?;
    }
    for h in &report.heatmaps {
        emit(format!("{exp}_{}_n{}_grid.csv", h.algorithm, h.n), &mut |b| {
            write_grid_csv(&h.grid, b)
        })?;
    }
    emit(format!("{exp}.json"), &mut |b| {
        serde_json::to_writer_pretty(&mut *b, report)?;
        b.push(b'\n');
        Ok(())
    })?;
    Ok(written)
}
