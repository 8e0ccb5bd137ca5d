//! One-parameter sweeps over a template configuration.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::harness::checkpoint::Checkpoint;
use crate::harness::config::{override_key, SimConfig};
use crate::harness::output::{fmt_f64, RecordWriter};
use crate::harness::twin::Simulation;
use crate::movement::{min_distinct_windows_per_cycle, SchemeKind};

/// Most cycles inspected when counting windows visited per cycle.
const MAX_CYCLES_COUNTED: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: String,
    pub csv: PathBuf,
    pub time_to_tolerance: Option<f64>,
    pub final_error: Option<f64>,
    pub distinct_windows_per_cycle: Option<usize>,
    /// Error message if the run failed.
    pub failure: Option<String>,
}

/// Parses `name=v1,v2,...`.
pub fn parse_axis(spec: &str) -> Result<(String, Vec<String>)> {
    let (name, values) =
        spec.split_once('=').ok_or_else(|| Error::Config(format!("axis `{spec}` is not of the form name=v1,v2")))?;
    let values: Vec<String> = values.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
    if name.trim().is_empty() || values.is_empty() {
        return Err(Error::Config(format!("axis `{spec}` needs a name and at least one value")));
    }
    Ok((name.trim().to_string(), values))
}

/// Inputs that determine the reference trajectory.
fn reference_key(cfg: &SimConfig) -> String {
    format!(
        "{}|{:e}|{:e}|{:e}|{:?}|{}",
        cfg.grid,
        cfg.nu,
        cfg.dt,
        cfg.run.spinup_time,
        cfg.run.spinup_dt,
        toml::to_string(&cfg.forcing).expect("forcing serializes")
    )
}

/// Runs every axis value against `template`, writing `run_<i>.csv` files
/// and `summary.csv` into `out_dir`. Spin-ups are shared between runs with
/// the same reference inputs; `reference`, if given, is used for all runs.
pub fn sweep(
    template: &SimConfig,
    key: &str,
    values: &[String],
    out_dir: &Path,
    reference: Option<&Checkpoint>,
) -> Result<Vec<SweepRow>> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let configs: Vec<Result<SimConfig>> = values.iter().map(|v| override_key(template, key, v)).collect();

    let mut spinups: HashMap<String, std::result::Result<Checkpoint, String>> = HashMap::new();
    if reference.is_none() {
        let keys: Vec<(String, SimConfig)> = configs.iter().flatten().map(|c| (reference_key(c), c.clone())).collect();
        for (k, c) in keys {
            if spinups.contains_key(&k) {
                continue;
            }
            let ck = Simulation::new(&c)
                .map_err(|e| e.to_string())
                .and_then(|s| s.spinup().map_err(|f| f.error.to_string()));
            spinups.insert(k, ck);
        }
    }

    let rows: Vec<SweepRow> = configs
        .into_par_iter()
        .zip(values.par_iter())
        .enumerate()
        .map(|(i, (cfg, value))| {
            let csv = out_dir.join(format!("run_{i}.csv"));
            let mut row = SweepRow {
                value: value.clone(),
                csv: csv.clone(),
                time_to_tolerance: None,
                final_error: None,
                distinct_windows_per_cycle: None,
                failure: None,
            };
            let result = cfg.and_then(|cfg| {
                row.distinct_windows_per_cycle = windows_per_cycle(&cfg);
                let ck = match reference {
                    Some(r) => r.clone(),
                    None => spinups[&reference_key(&cfg)].clone().map_err(Error::Config)?,
                };
                run_to_csv(&cfg, &ck, &csv)
            });
            match result {
                Ok((ttt, fin)) => {
                    row.time_to_tolerance = ttt;
                    row.final_error = Some(fin);
                }
                Err(e) => row.failure = Some(e.to_string()),
            }
            row
        })
        .collect();

    write_summary(&rows, key, &out_dir.join("summary.csv"))?;
    Ok(rows)
}

fn run_to_csv(cfg: &SimConfig, ck: &Checkpoint, path: &Path) -> Result<(Option<f64>, f64)> {
    let sim = Simulation::new(cfg)?;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = RecordWriter::new(BufWriter::new(file)).map_err(|e| Error::io(path, e))?;
    let out = sim.run_twin(ck, &mut |r| w.write(r).map_err(|e| Error::io(path, e)))?;
    w.into_inner().map_err(|e| Error::io(path, e))?;
    Ok((out.time_to_tolerance, out.final_error))
}

/// Fewest distinct windows per cycle for periodic schemes.
pub fn windows_per_cycle(cfg: &SimConfig) -> Option<usize> {
    let kind = match cfg.scheme_spec().kind {
        SchemeKind::Hybrid { then, .. } => *then,
        k => k,
    };
    match kind {
        SchemeKind::Periodic { kind, frequency } => {
            let cycles = ((frequency * cfg.run.t_end).floor() as usize).clamp(1, MAX_CYCLES_COUNTED);
            Some(min_distinct_windows_per_cycle(kind, frequency, cfg.dt, cfg.assimilation.partition, cfg.grid, cycles))
        }
        _ => None,
    }
}

fn write_summary(rows: &[SweepRow], key: &str, path: &Path) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    writeln!(w, "{key},time_to_tolerance,final_error,distinct_windows_per_cycle,csv,failure").map_err(io)?;
    for r in rows {
        let file = r.csv.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
        let failure = r.failure.as_deref().unwrap_or("").replace([',', '\n'], ";");
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.value,
            r.time_to_tolerance.map(fmt_f64).unwrap_or_default(),
            r.final_error.map(fmt_f64).unwrap_or_default(),
            r.distinct_windows_per_cycle.map(|d| d.to_string()).unwrap_or_default(),
            file,
            failure
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}
