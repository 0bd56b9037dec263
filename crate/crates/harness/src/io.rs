//! Output files: `<name>.csv` (rows), `<name>.json` (full report with
//! families) and `<name>.txt` (summary).

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use crate::report::{Report, SweepRow};
use crate::Result;

pub fn write_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json(report: &Report, path: &Path) -> Result<()> {
    let w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(w, report)?;
    Ok(())
}

/// Plain-text summary: the experiment, its ladder and every metric.
pub fn summary(report: &Report) -> String {
    let c = &report.config;
    let mut s = String::new();
    let _ = writeln!(s, "experiment  {}", report.experiment);
    let _ = writeln!(s, "operator    {:?}", c.operator);
    let _ = writeln!(s, "resolutions {:?}", c.resolutions);
    if !c.smooth_resolutions.is_empty() {
        let _ = writeln!(s, "smooth      {:?}", c.smooth_resolutions);
    }
    let _ = writeln!(s, "seed        {}", c.seed);
    let _ = writeln!(s, "rows        {}", report.rows.len());
    let flagged = report.rows.iter().filter(|r| r.flagged).count();
    if flagged > 0 {
        let _ = writeln!(s, "flagged     {flagged}");
    }
    for m in &report.metrics {
        let _ = writeln!(s, "{:<32} {:.6e}", m.name, m.value);
    }
    s
}

/// Writes the three files into `dir` and returns their paths.
pub fn write_all(report: &Report, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let name = report.experiment.name();
    let csv = dir.join(format!("{name}.csv"));
    let json = dir.join(format!("{name}.json"));
    let txt = dir.join(format!("{name}.txt"));
    write_csv(&report.rows, &csv)?;
    write_json(report, &json)?;
    fs::write(&txt, summary(report))?;
    Ok(vec![csv, json, txt])
}
