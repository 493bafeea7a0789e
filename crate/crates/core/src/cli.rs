//! Command-line front end: `single`, `sweep2d`, `tempcurves` and `optkappa`.
//!
//! Exit codes: 0 success, 2 usage error, 3 numerical failure, 4 I/O failure.

use std::ffi::OsString;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use crate::config::{resolve, Command, Flags, RunConfig};
use crate::csv::{plot_script_path, render_plot_script, write_atomic, write_curve, write_map, write_trajectory};
use crate::experiments::{optimal_kappa, sweep, RunOptions};
use crate::integrator::{propagate, DensityMatrix};
use crate::{Error, Result};

/// Runs the program on `args` (program name first).
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let flags = match Flags::try_parse_from(args) {
        Ok(f) => f,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(2);
        }
    };
    match load(&flags).and_then(|cfg| execute(&cfg)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

/// Resolves flags over the `--config` file, if any.
pub fn load(flags: &Flags) -> Result<RunConfig> {
    let text = match &flags.config {
        Some(path) => Some(std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.clone(), source })?),
        None => None,
    };
    resolve(flags, text.as_deref())
}

/// Runs a resolved configuration and writes its output.
pub fn execute(cfg: &RunConfig) -> Result<()> {
    let opts = RunOptions { workers: cfg.workers, progress: cfg.progress };
    let path = &cfg.output_path;
    match cfg.command {
        Command::Single => {
            let tr = propagate(&DensityMatrix::pure(cfg.initial), &cfg.model, &cfg.solver, cfg.samples)?;
            write_trajectory(cfg, &tr, path)?;
            let pops = tr.rho_final.populations();
            println!(
                "final populations (m = -1, 0, 1): {:.10} {:.10} {:.10}; efficiency {:.10}",
                pops[0],
                pops[1],
                pops[2],
                tr.rho_final.population(cfg.target)
            );
        }
        Command::Sweep2d | Command::TempCurves => {
            let spec = cfg.sweep.as_ref().ok_or_else(|| Error::Usage("missing sweep axes".into()))?;
            let map = sweep(spec, &cfg.solver, &opts)?;
            write_map(cfg, &map, path)?;
            report_failures(map.failures.len(), map.values.len());
        }
        Command::OptKappa => {
            let spec = cfg.optkappa.as_ref().ok_or_else(|| Error::Usage("missing optimal-κ settings".into()))?;
            let curve = optimal_kappa(spec, &cfg.solver, &opts)?;
            write_curve(cfg, &curve, path)?;
            report_failures(curve.failures.len(), curve.lambdas.len() * curve.coarse_kappas.len());
            let flagged = curve.non_unimodal.iter().filter(|&&f| f).count();
            if flagged > 0 {
                eprintln!("note: {flagged} λ value(s) have a coarse profile with several local maxima");
            }
        }
    }
    if cfg.plot_script {
        write_atomic(&plot_script_path(path), &render_plot_script(cfg.command, path))?;
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn report_failures(failed: usize, total: usize) {
    if failed > 0 {
        eprintln!("warning: {failed} of {total} cells failed and hold NaN; see the `failure` lines in the output");
    }
}
