//! Deterministic CSV output for trajectories, efficiency maps and optimal-κ
//! curves.
//!
//! Each file starts with `# key = value` metadata lines describing the run,
//! then a header row and the data rows. Floats carry 17 significant digits.
//! Files are written to a temporary sibling and renamed into place, so a
//! failed write never leaves a partial file behind.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::config::{fmt_f64, Command, RunConfig};
use crate::experiments::{EfficiencyMap, OptKappaCurve, VERSION};
use crate::integrator::Trajectory;
use crate::{Error, Result};

pub const TRAJECTORY_HEADER: &str = "t,pop_m-1,pop_0,pop_p1";
pub const MAP_HEADER: &str = "axis1,axis2,efficiency";
pub const CURVE_HEADER: &str = "lambda,kappa_opt,efficiency_opt";

fn metadata(cfg: &RunConfig) -> String {
    let mut out = String::new();
    for (k, v) in cfg.metadata_entries() {
        let _ = writeln!(out, "# {k} = {v}");
    }
    let _ = writeln!(out, "# version = {VERSION}");
    out
}

pub fn render_trajectory(cfg: &RunConfig, tr: &Trajectory) -> String {
    let mut out = metadata(cfg);
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for (t, pops) in tr.times.iter().zip(&tr.populations) {
        let _ = writeln!(out, "{},{},{},{}", fmt_f64(*t), fmt_f64(pops[0]), fmt_f64(pops[1]), fmt_f64(pops[2]));
    }
    out
}

/// Row-major cells. A one-axis map leaves the `axis2` column empty.
pub fn render_map(cfg: &RunConfig, map: &EfficiencyMap) -> String {
    let mut out = metadata(cfg);
    for f in &map.failures {
        let _ = writeln!(out, "# failure = cell {}: {}", f.index, f.message.replace('\n', " "));
    }
    out.push_str(MAP_HEADER);
    out.push('\n');
    for (a1, a2, v) in map.cells() {
        let a2 = a2.map_or_else(String::new, fmt_f64);
        let _ = writeln!(out, "{},{a2},{}", fmt_f64(a1), fmt_f64(v));
    }
    out
}

pub fn render_curve(cfg: &RunConfig, curve: &OptKappaCurve) -> String {
    let mut out = metadata(cfg);
    for (k, &l) in curve.lambdas.iter().enumerate() {
        let (lo, hi) = curve.edge_efficiency[k];
        let _ = writeln!(out, "# edge_efficiency = lambda {}: {}, {}", fmt_f64(l), fmt_f64(lo), fmt_f64(hi));
    }
    for (&l, _) in curve.lambdas.iter().zip(&curve.non_unimodal).filter(|(_, &flag)| flag) {
        let _ = writeln!(out, "# non_unimodal = lambda {}", fmt_f64(l));
    }
    for f in &curve.failures {
        let _ = writeln!(out, "# failure = {}", f.replace('\n', " "));
    }
    out.push_str(CURVE_HEADER);
    out.push('\n');
    for k in 0..curve.lambdas.len() {
        let _ = writeln!(
            out,
            "{},{},{}",
            fmt_f64(curve.lambdas[k]),
            fmt_f64(curve.kappa_opt[k]),
            fmt_f64(curve.efficiency_at_opt[k])
        );
    }
    out
}

/// Writes `contents` to `path` through a temporary file in the same directory
/// followed by a rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let io = |source| Error::Io { path: path.to_path_buf(), source };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

pub fn write_trajectory(cfg: &RunConfig, tr: &Trajectory, path: &Path) -> Result<()> {
    write_atomic(path, &render_trajectory(cfg, tr))
}

pub fn write_map(cfg: &RunConfig, map: &EfficiencyMap, path: &Path) -> Result<()> {
    write_atomic(path, &render_map(cfg, map))
}

pub fn write_curve(cfg: &RunConfig, curve: &OptKappaCurve, path: &Path) -> Result<()> {
    write_atomic(path, &render_curve(cfg, curve))
}

/// The leading `# key = value` block of a CSV as config-file text.
pub fn metadata_as_config(csv: &str) -> String {
    csv.lines()
        .map_while(|l| l.strip_prefix('#'))
        .map(|l| format!("{}\n", l.trim()))
        .collect()
}

/// Path of the plot script written next to `csv_path`.
pub fn plot_script_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("gp")
}

/// A gnuplot script that plots the CSV at `csv_path`.
pub fn render_plot_script(command: Command, csv_path: &Path) -> String {
    let name = csv_path.file_name().map_or_else(|| csv_path.display().to_string(), |n| n.to_string_lossy().into_owned());
    let png = Path::new(&name).with_extension("png");
    let mut out = String::new();
    let _ = writeln!(out, "set datafile separator ','");
    let _ = writeln!(out, "set datafile commentschars '#'");
    let _ = writeln!(out, "set key autotitle columnhead");
    let _ = writeln!(out, "set terminal pngcairo size 900,650");
    let _ = writeln!(out, "set output '{}'", png.display());
    match command {
        Command::Single => {
            let _ = writeln!(out, "set xlabel 't'");
            let _ = writeln!(out, "set ylabel 'population'");
            let _ = writeln!(out, "plot for [c=2:4] '{name}' using 1:c with lines");
        }
        Command::Sweep2d => {
            let _ = writeln!(out, "set view map");
            let _ = writeln!(out, "set xlabel 'axis2'");
            let _ = writeln!(out, "set ylabel 'axis1'");
            let _ = writeln!(out, "set cbrange [0:1]");
            let _ = writeln!(out, "splot '{name}' using 2:1:3 with points pointtype 5 pointsize 1 palette notitle");
        }
        Command::TempCurves => {
            let _ = writeln!(out, "set xlabel 'lambda'");
            let _ = writeln!(out, "set ylabel 'efficiency'");
            let _ = writeln!(out, "plot '{name}' using 2:3:1 with points palette title 'k_BT (colour)'");
        }
        Command::OptKappa => {
            let _ = writeln!(out, "set xlabel 'lambda'");
            let _ = writeln!(out, "set ylabel 'kappa_opt'");
            let _ = writeln!(out, "set y2label 'efficiency'");
            let _ = writeln!(out, "set y2tics");
            let _ = writeln!(out, "plot '{name}' using 1:2 with linespoints, '' using 1:3 axes x1y2 with linespoints");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        write_atomic(&path, "a\n").unwrap();
        write_atomic(&path, "b\n").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "b\n");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let e = write_atomic(Path::new("/nonexistent-dir/x/out.csv"), "a").unwrap_err();
        assert!(matches!(e, Error::Io { ref path, .. } if path.ends_with("out.csv")));
        assert_eq!(e.exit_code(), 4);
    }

    #[test]
    fn metadata_block_extraction() {
        let csv = "# command = single\n# lambda = 1e-1\nt,pop\n# not metadata\n";
        assert_eq!(metadata_as_config(csv), "command = single\nlambda = 1e-1\n");
    }

    #[test]
    fn floats_have_seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(0.1).parse::<f64>().unwrap(), 0.1);
        assert_eq!(fmt_f64(f64::NAN), "NaN");
    }

    #[test]
    fn plot_script_mentions_csv() {
        let cfg = parse_config(["x", "sweep2d", "--out", "dir/map.csv"], None).unwrap();
        let s = render_plot_script(cfg.command, &cfg.output_path);
        assert!(s.contains("'map.csv'"));
        assert_eq!(plot_script_path(&cfg.output_path), Path::new("dir/map.gp"));
    }
}
