//! Reading run artifacts back and summarizing them.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::diagnostics::{MetricsRow, RowKind};
use super::plot;

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(f))
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, path: &Path, line: usize) -> Result<Option<T>> {
    let s = rec.get(i).unwrap_or("");
    if s.is_empty() {
        return Ok(None);
    }
    s.parse().map(Some).map_err(|_| Error::Parse {
        origin: path.display().to_string(),
        line,
        message: format!("bad value `{s}` in column {i}"),
    })
}

/// Parse a `metrics.csv` written by [`super::train`].
pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRow>> {
    let mut rows = Vec::new();
    for (n, rec) in reader(path)?.records().enumerate() {
        let rec = rec?;
        let line = n + 2;
        let missing = |what: &str| Error::Parse {
            origin: path.display().to_string(),
            line,
            message: format!("missing {what}"),
        };
        let kind = match rec.get(0) {
            Some("episode") => RowKind::Episode,
            Some("eval") => RowKind::Eval,
            other => {
                return Err(Error::Parse {
                    origin: path.display().to_string(),
                    line,
                    message: format!("unknown row kind {other:?}"),
                })
            }
        };
        let resources = rec
            .get(9)
            .unwrap_or("")
            .split_whitespace()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| missing("resource_at_end"))?;
        rows.push(MetricsRow {
            kind,
            step: field(&rec, 1, path, line)?.ok_or_else(|| missing("step"))?,
            episode: field(&rec, 2, path, line)?.ok_or_else(|| missing("episode"))?,
            extrinsic_return: field(&rec, 3, path, line)?.ok_or_else(|| missing("extrinsic_return"))?,
            shaped_return: field(&rec, 4, path, line)?,
            g_mean: field(&rec, 5, path, line)?,
            bonus_mean: field(&rec, 6, path, line)?,
            bonus_raw_mean: field(&rec, 7, path, line)?,
            length: field(&rec, 8, path, line)?,
            resource_at_end: resources,
            steps_to_exhaustion: field(&rec, 10, path, line)?,
            max_height_any: field(&rec, 11, path, line)?,
            max_height_pre_exhaustion: field(&rec, 12, path, line)?,
            eval_std: field(&rec, 13, path, line)?,
        });
    }
    Ok(rows)
}

/// `(position, velocity)` points from an `unloads.csv`.
pub fn read_unloads(path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut pts = Vec::new();
    for (n, rec) in reader(path)?.records().enumerate() {
        let rec = rec?;
        let p = field(&rec, 1, path, n + 2)?;
        let v = field(&rec, 2, path, n + 2)?;
        if let (Some(p), Some(v)) = (p, v) {
            pts.push((p, v));
        }
    }
    Ok(pts)
}

/// Run directories under `dir`: `dir` itself if it holds `metrics.csv`,
/// otherwise every descendant that does, in sorted order.
pub fn find_runs(dir: &Path) -> Result<Vec<PathBuf>> {
    if dir.join("metrics.csv").is_file() {
        return Ok(vec![dir.to_path_buf()]);
    }
    let mut out = Vec::new();
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    entries.sort();
    for e in entries {
        out.extend(find_runs(&e)?);
    }
    Ok(out)
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        f64::NAN
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Text summary of every run under `dir`; also refreshes each run's plots.
pub fn report(dir: &Path) -> Result<String> {
    let runs = find_runs(dir)?;
    if runs.is_empty() {
        return Err(Error::contract(format!("no metrics.csv found under {}", dir.display())));
    }
    let mut text = String::new();
    let _ = writeln!(
        text,
        "Eval return = mean extrinsic return over the configured greedy eval episodes at each checkpoint."
    );
    let _ = writeln!(
        text,
        "{:<40} {:>9} {:>10} {:>10} {:>9} {:>10} {:>10}",
        "run", "episodes", "final_eval", "best_eval", "ste_mean", "h_any", "h_pre"
    );
    let mut finals = Vec::new();
    for run in &runs {
        let rows = read_metrics(&run.join("metrics.csv"))?;
        let eps: Vec<&MetricsRow> = rows.iter().filter(|r| r.kind == RowKind::Episode).collect();
        let evals: Vec<f64> = rows.iter().filter(|r| r.kind == RowKind::Eval).map(|r| r.extrinsic_return).collect();
        let fin = evals.last().copied().unwrap_or(f64::NAN);
        finals.push(fin);
        let best = evals.iter().copied().fold(f64::NAN, f64::max);
        let ste = mean(&eps.iter().filter_map(|r| r.steps_to_exhaustion).map(|k| k as f64).collect::<Vec<_>>());
        let h_any = mean(&eps.iter().filter_map(|r| r.max_height_any).collect::<Vec<_>>());
        let h_pre = mean(&eps.iter().filter_map(|r| r.max_height_pre_exhaustion).collect::<Vec<_>>());
        let name = run.strip_prefix(dir).unwrap_or(run).display().to_string();
        let name = if name.is_empty() { ".".to_string() } else { name };
        let _ = writeln!(
            text,
            "{name:<40} {:>9} {fin:>10.2} {best:>10.2} {ste:>9.1} {h_any:>10.3} {h_pre:>10.3}",
            eps.len()
        );
        let unloads_path = run.join("unloads.csv");
        let unloads = if unloads_path.is_file() { read_unloads(&unloads_path)? } else { Vec::new() };
        plot::write_run_plots(run, &rows, &unloads, unloads_path.is_file())?;
    }
    if runs.len() > 1 {
        let m = mean(&finals);
        let sd = (finals.iter().map(|f| (f - m).powi(2)).sum::<f64>() / finals.len() as f64).sqrt();
        let _ = writeln!(text, "final eval over {} runs: {m:.2} ± {sd:.2}", runs.len());
    }
    let summary = dir.join("summary.csv");
    if summary.is_file() {
        let body = std::fs::read_to_string(&summary).map_err(|e| Error::io(&summary, e))?;
        let _ = writeln!(text, "\nsweep summary ({}):\n{body}", summary.display());
    }
    Ok(text)
}
