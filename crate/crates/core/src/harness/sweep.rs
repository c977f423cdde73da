//! Cartesian parameter sweeps over seeds, run on a bounded worker pool.

use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};

use super::config::{RunConfig, KEYS};
use super::train::{train, TrainOutcome};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepGrid {
    pub axes: Vec<(String, Vec<String>)>,
}

impl SweepGrid {
    /// Parse axes written as `key=v1,v2,...`.
    pub fn parse(specs: &[String]) -> Result<Self> {
        let mut axes = Vec::new();
        for s in specs {
            let (k, v) = s
                .split_once('=')
                .ok_or_else(|| Error::config(s.as_str(), "grid axis must look like key=v1,v2"))?;
            let values = v
                .split(',')
                .map(str::trim)
                .filter(|x| !x.is_empty())
                .map(String::from)
                .collect();
            axes.push((k.trim().trim_end_matches("[]").to_string(), values));
        }
        let g = Self { axes };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if self.axes.is_empty() {
            bad.push(("grid".to_string(), "sweep grid is empty".to_string()));
        }
        for (i, (k, vals)) in self.axes.iter().enumerate() {
            if self.axes[..i].iter().any(|(other, _)| other == k) {
                bad.push((k.clone(), "appears on more than one grid axis".into()));
            }
            if !KEYS.contains(&k.as_str()) {
                bad.push((k.clone(), "unknown key".into()));
            }
            if k == "run.seeds" || k == "run.out" {
                bad.push((k.clone(), "set by the sweep itself; use --seeds/--out".into()));
            }
            if vals.is_empty() {
                bad.push((k.clone(), "grid axis has no values".into()));
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config { keys: bad })
        }
    }

    /// All override combinations, last axis varying fastest.
    pub fn cells(&self) -> Vec<Vec<(String, String)>> {
        let mut out: Vec<Vec<(String, String)>> = vec![Vec::new()];
        for (k, vals) in &self.axes {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    vals.iter().map(move |v| {
                        let mut c = prefix.clone();
                        c.push((k.clone(), v.clone()));
                        c
                    })
                })
                .collect();
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub index: usize,
    pub overrides: Vec<(String, String)>,
    pub seed: u64,
    pub dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummaryRow {
    pub index: usize,
    pub overrides: String,
    pub completed: usize,
    pub failed: usize,
    pub final_eval_mean: f64,
    pub final_eval_std: f64,
    pub failures: Vec<String>,
}

/// Worker bound from `R3L_WORKERS`, else the available parallelism.
pub fn worker_count() -> usize {
    std::env::var("R3L_WORKERS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|n| *n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn describe(overrides: &[(String, String)]) -> String {
    overrides.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" ")
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    (m, (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt())
}

/// Run every grid cell for every seed of `base`. Each run writes into
/// `out/cell-NNN/seed-S`. Config errors in any cell abort before training;
/// runtime failures become failure rows in `runs.csv` and `summary.csv`.
pub fn sweep(base: &RunConfig, grid: &SweepGrid, out: &Path) -> Result<Vec<SweepSummaryRow>> {
    grid.validate()?;
    if base.seeds.is_empty() {
        return Err(Error::config("run.seeds", "seed list is empty"));
    }
    let combos = grid.cells();
    let mut configs = Vec::with_capacity(combos.len());
    let mut bad = Vec::new();
    for c in &combos {
        let mut doc = base.to_kv();
        for (k, v) in c {
            doc.set(k, v.clone());
        }
        match RunConfig::from_kv(&doc) {
            Ok(cfg) => configs.push(cfg),
            Err(Error::Config { keys }) => bad.extend(keys),
            Err(e) => return Err(e),
        }
    }
    if !bad.is_empty() {
        bad.sort();
        bad.dedup();
        return Err(Error::Config { keys: bad });
    }
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;

    let jobs: Vec<SweepCell> = combos
        .iter()
        .enumerate()
        .flat_map(|(i, c)| {
            base.seeds.iter().map(move |&seed| SweepCell {
                index: i,
                overrides: c.clone(),
                seed,
                dir: out.join(format!("cell-{i:03}")).join(format!("seed-{seed}")),
            })
        })
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count())
        .build()
        .map_err(|e| Error::contract(format!("worker pool: {e}")))?;
    let results: Vec<std::result::Result<f64, String>> = pool.install(|| {
        jobs.par_iter()
            .map(|job| {
                let cfg = &configs[job.index];
                let r = catch_unwind(AssertUnwindSafe(|| train(cfg, job.seed, Some(&job.dir))));
                match r {
                    Ok(Ok(o)) => o.final_eval().ok_or_else(|| "no eval checkpoint reached".to_string()),
                    Ok(Err(e)) => Err(e.to_string()),
                    Err(_) => Err("run panicked".to_string()),
                }
            })
            .collect()
    });

    let runs_path = out.join("runs.csv");
    let mut runs = csv::Writer::from_writer(Vec::new());
    runs.write_record(["cell", "seed", "overrides", "status", "final_eval", "message"])?;
    for (job, r) in jobs.iter().zip(&results) {
        let (status, val, msg) = match r {
            Ok(v) => ("ok", v.to_string(), String::new()),
            Err(m) => ("failed", String::new(), m.clone()),
        };
        runs.write_record(&[
            job.index.to_string(),
            job.seed.to_string(),
            describe(&job.overrides),
            status.to_string(),
            val,
            msg,
        ])?;
    }
    write_with_schema(&runs_path, runs)?;

    let mut summary = Vec::with_capacity(combos.len());
    for (i, c) in combos.iter().enumerate() {
        let mine: Vec<&std::result::Result<f64, String>> =
            jobs.iter().zip(&results).filter(|(j, _)| j.index == i).map(|(_, r)| r).collect();
        let ok: Vec<f64> = mine.iter().filter_map(|r| r.as_ref().ok().copied()).collect();
        let failures: Vec<String> = mine.iter().filter_map(|r| r.as_ref().err().cloned()).collect();
        let (m, s) = mean_std(&ok);
        summary.push(SweepSummaryRow {
            index: i,
            overrides: describe(c),
            completed: ok.len(),
            failed: failures.len(),
            final_eval_mean: m,
            final_eval_std: s,
            failures,
        });
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["cell", "overrides", "completed", "failed", "final_eval_mean", "final_eval_std", "failures"])?;
    for r in &summary {
        w.write_record(&[
            r.index.to_string(),
            r.overrides.clone(),
            r.completed.to_string(),
            r.failed.to_string(),
            r.final_eval_mean.to_string(),
            r.final_eval_std.to_string(),
            r.failures.join("; "),
        ])?;
    }
    write_with_schema(&out.join("summary.csv"), w)?;
    Ok(summary)
}

/// Train every seed of `cfg` into `out/seed-S` on the worker pool.
pub fn train_seeds(cfg: &RunConfig, out: &Path) -> Result<Vec<(u64, Result<TrainOutcome>)>> {
    cfg.validate()?;
    if cfg.seeds.is_empty() {
        return Err(Error::config("run.seeds", "seed list is empty"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count())
        .build()
        .map_err(|e| Error::contract(format!("worker pool: {e}")))?;
    Ok(pool.install(|| {
        cfg.seeds
            .par_iter()
            .map(|&seed| (seed, train(cfg, seed, Some(&out.join(format!("seed-{seed}"))))))
            .collect()
    }))
}

fn write_with_schema(path: &Path, w: csv::Writer<Vec<u8>>) -> Result<()> {
    let body = w.into_inner().map_err(|e| Error::contract(e.to_string()))?;
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(b"# schema=1\n")
        .and_then(|_| f.write_all(&body))
        .map_err(|e| Error::io(path, e))
}
