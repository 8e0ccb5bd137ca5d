use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use mobile_nudging::harness::output::{bounds_report, fmt_f64, write_grid_csv, RecordWriter};
use mobile_nudging::harness::sweep::{parse_axis, sweep};
use mobile_nudging::harness::{Checkpoint, SimConfig, Simulation};
use mobile_nudging::SpectralOps;

/// Mobile nudging data assimilation for 2D periodic Navier-Stokes.
#[derive(Parser)]
#[command(name = "mnda", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the reference flow from rest and write a checkpoint.
    Spinup {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the nudged twin against a reference checkpoint.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Write the final reference and nudged states here (`.ref`/`.nudged`
        /// are appended).
        #[arg(long)]
        final_ckpt: Option<PathBuf>,
    },
    /// Print parameter bounds and condition checks as key=value lines.
    Bounds {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run one twin per value of a config key.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// `name=v1,v2,...` with a dotted config key.
        #[arg(long)]
        axis: String,
        #[arg(long)]
        out_dir: PathBuf,
        /// Reference checkpoint shared by all runs (otherwise spun up).
        #[arg(long)]
        ckpt: Option<PathBuf>,
    },
    /// Dump the vorticity of a checkpoint on the grid nodes.
    ExportGrid {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Spinup { config, out } => spinup(&config, &out),
        Command::Run { config, ckpt, out, final_ckpt } => run(&config, &ckpt, &out, final_ckpt.as_deref()),
        Command::Bounds { config } => {
            let cfg = load_config(&config)?;
            print!("{}", bounds_report(&cfg)?);
            Ok(())
        }
        Command::Sweep { config, axis, out_dir, ckpt } => run_sweep(&config, &axis, &out_dir, ckpt.as_deref()),
        Command::ExportGrid { ckpt, out } => export_grid(&ckpt, &out),
    }
}

fn load_config(path: &Path) -> Result<SimConfig> {
    SimConfig::load(path).with_context(|| format!("loading {}", path.display()))
}

fn spinup(config: &Path, out: &Path) -> Result<()> {
    let cfg = load_config(config)?;
    let sim = Simulation::new(&cfg)?;
    match sim.spinup() {
        Ok(ck) => {
            ck.save(out)?;
            eprintln!("reference at t = {} written to {}", ck.time, out.display());
            Ok(())
        }
        Err(failure) => {
            failure.last_good.save(out)?;
            bail!(
                "spin-up failed ({}); last good state at t = {} written to {}",
                failure.error,
                failure.last_good.time,
                out.display()
            )
        }
    }
}

fn run(config: &Path, ckpt: &Path, out: &Path, final_ckpt: Option<&Path>) -> Result<()> {
    let cfg = load_config(config)?;
    let reference = Checkpoint::load(ckpt).with_context(|| format!("reading {}", ckpt.display()))?;
    let sim = Simulation::new(&cfg)?;
    let file = File::create(out).with_context(|| format!("creating {}", out.display()))?;
    let mut writer = RecordWriter::new(BufWriter::new(file))?;
    let outcome = sim.run_twin(&reference, &mut |r| {
        writer.write(r).map_err(|e| mobile_nudging::Error::Format(format!("writing {}: {e}", out.display())))
    })?;
    writer.into_inner()?;
    if let Some(base) = final_ckpt {
        outcome.reference.save(&with_suffix(base, "ref"))?;
        outcome.nudged.save(&with_suffix(base, "nudged"))?;
    }
    match outcome.time_to_tolerance {
        Some(t) => eprintln!("relative error below {} at t = {}", cfg.run.tolerance, fmt_f64(t)),
        None => eprintln!("relative error never fell below {}", cfg.run.tolerance),
    }
    eprintln!("final relative error {}", fmt_f64(outcome.final_error));
    Ok(())
}

fn with_suffix(base: &Path, suffix: &str) -> PathBuf {
    let mut s = base.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

fn run_sweep(config: &Path, axis: &str, out_dir: &Path, ckpt: Option<&Path>) -> Result<()> {
    let cfg = load_config(config)?;
    let (key, values) = parse_axis(axis)?;
    let reference = ckpt.map(Checkpoint::load).transpose()?;
    let rows = sweep(&cfg, &key, &values, out_dir, reference.as_ref())?;
    let failed = rows.iter().filter(|r| r.failure.is_some()).count();
    for r in &rows {
        match &r.failure {
            Some(e) => eprintln!("{key}={}: failed: {e}", r.value),
            None => eprintln!(
                "{key}={}: time to tolerance {}, final error {}",
                r.value,
                r.time_to_tolerance.map(fmt_f64).unwrap_or_else(|| "-".into()),
                r.final_error.map(fmt_f64).unwrap_or_else(|| "-".into())
            ),
        }
    }
    if failed > 0 {
        bail!("{failed} of {} runs failed", rows.len());
    }
    Ok(())
}

fn export_grid(ckpt: &Path, out: &Path) -> Result<()> {
    let ck = Checkpoint::load(ckpt).with_context(|| format!("reading {}", ckpt.display()))?;
    let ops = SpectralOps::new(ck.size())?;
    let g = ops.to_grid(&ck.omega)?;
    let mut w = BufWriter::new(File::create(out).with_context(|| format!("creating {}", out.display()))?);
    write_grid_csv(&g, &mut w)?;
    w.flush()?;
    Ok(())
}
