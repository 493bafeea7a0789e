//! Run configuration: command-line flags, `key = value` config files, and
//! the metadata block written at the top of every CSV.
//!
//! Precedence is flags, then config file, then defaults. Every value passes
//! through the same key-based parser, so an error always names the offending
//! key whether it came from a flag or a file.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::Parser;

use crate::experiments::{Axis, Grid, OptKappaSpec, SweepParam, SweepSpec, MIN_COARSE_POINTS};
use crate::hamiltonian::ModelParams;
use crate::integrator::SolverConfig;
use crate::spin_algebra::Level;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    /// One trajectory.
    Single,
    /// Two-axis efficiency map.
    Sweep2d,
    /// Efficiency vs λ for each temperature.
    TempCurves,
    /// Optimal chirp rate vs λ.
    OptKappa,
}

impl Command {
    pub const ALL: [Command; 4] = [Command::Single, Command::Sweep2d, Command::TempCurves, Command::OptKappa];

    pub fn name(self) -> &'static str {
        match self {
            Command::Single => "single",
            Command::Sweep2d => "sweep2d",
            Command::TempCurves => "tempcurves",
            Command::OptKappa => "optkappa",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s.trim())
            .ok_or_else(|| Error::invalid("command", format!("unknown command {s:?}")))
    }
}

/// Everything needed to reproduce one invocation.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub model: ModelParams,
    pub solver: SolverConfig,
    pub initial: Level,
    pub target: Level,
    /// Trajectory samples for `single`.
    pub samples: usize,
    /// Grid for `sweep2d` and `tempcurves`; for `tempcurves` axis 1 lists
    /// the temperatures and axis 2 is λ.
    pub sweep: Option<SweepSpec>,
    pub optkappa: Option<OptKappaSpec>,
    pub output_path: PathBuf,
    pub workers: usize,
    pub plot_script: bool,
    pub progress: bool,
}

pub const DEFAULT_SAMPLES: usize = 1001;
pub const DEFAULT_SWEEP_AXIS1: &str = "lambda:0:0.5:101";
pub const DEFAULT_SWEEP_AXIS2: &str = "phi:0:pi:101";
pub const DEFAULT_KBT_LIST: &str = "0.001,1,3,10";
pub const DEFAULT_CURVE_LAMBDA_AXIS: &str = "lambda:0:0.5:201";
pub const DEFAULT_OPT_LAMBDA_AXIS: &str = "lambda:0:0.2:11";
pub const DEFAULT_KAPPA_BRACKET: (f64, f64) = (1e-2, 2.0);

/// Keys accepted in config files and CSV metadata, with the commands they
/// apply to (`None` for all).
const KEYS: &[(&str, Option<&[Command]>)] = &[
    ("command", None),
    ("kappa", None),
    ("kt0", None),
    ("t0", None),
    ("omega_rabi", None),
    ("lambda", None),
    ("phi", None),
    ("varphi", None),
    ("kbt", None),
    ("initial", None),
    ("target", None),
    ("rtol", None),
    ("atol", None),
    ("dt_max", None),
    ("dt_init", None),
    ("hermitize_each_step", None),
    ("samples", Some(&[Command::Single])),
    ("axis1", Some(&[Command::Sweep2d])),
    ("axis2", Some(&[Command::Sweep2d])),
    ("kbt_list", Some(&[Command::TempCurves])),
    ("lambda_axis", Some(&[Command::TempCurves, Command::OptKappa])),
    ("kappa_min", Some(&[Command::OptKappa])),
    ("kappa_max", Some(&[Command::OptKappa])),
    ("coarse", Some(&[Command::OptKappa])),
    ("workers", None),
    ("out", None),
    ("plot_script", None),
    ("progress", None),
];

/// Keys written by the CSV writer for information only; accepted and ignored.
const INFO_KEYS: &[&str] = &["version", "failure", "non_unimodal", "edge_efficiency"];

/// Command-line flags. Values are kept as text and parsed per key.
#[derive(Parser, Debug, Default, Clone)]
#[command(
    name = "open-majorana",
    version,
    about = "Dissipative spin-1 Majorana model: trajectories, efficiency maps, temperature curves and optimal chirp rates",
    allow_negative_numbers = true
)]
pub struct Flags {
    /// single | sweep2d | tempcurves | optkappa
    pub command: Option<String>,

    /// Config file with `key = value` lines; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Chirp rate κ (Ω²).
    #[arg(long)]
    pub kappa: Option<String>,
    /// Product κ·t₀ (default 25); sets t₀ = kt0/κ.
    #[arg(long, conflicts_with = "t0")]
    pub kt0: Option<String>,
    /// Half duration t₀ (Ω⁻¹).
    #[arg(long)]
    pub t0: Option<String>,
    /// Cascade coupling Ω; the frequency unit, must be 1.
    #[arg(long)]
    pub omega_rabi: Option<String>,
    /// System–bath coupling λ.
    #[arg(long)]
    pub lambda: Option<String>,
    /// Polar coupling angle φ (radians, or e.g. `0.5pi`).
    #[arg(long)]
    pub phi: Option<String>,
    /// Azimuthal coupling angle ϕ (radians, or e.g. `0.5pi`).
    #[arg(long)]
    pub varphi: Option<String>,
    /// Bath temperature k_B·T (Ω).
    #[arg(long)]
    pub kbt: Option<String>,
    /// Initial bare state: -1, 0 or 1.
    #[arg(long)]
    pub initial: Option<String>,
    /// Target bare state: -1, 0 or 1.
    #[arg(long)]
    pub target: Option<String>,

    /// Relative error tolerance per step (default 1e-10).
    #[arg(long)]
    pub rtol: Option<String>,
    /// Absolute error tolerance per step (default 1e-12).
    #[arg(long)]
    pub atol: Option<String>,
    /// Step bound; capped at 0.1/(2ω(t₀)).
    #[arg(long)]
    pub dt_max: Option<String>,
    /// First trial step, or `auto`.
    #[arg(long)]
    pub dt_init: Option<String>,
    /// true | false
    #[arg(long)]
    pub hermitize_each_step: Option<String>,

    /// Trajectory samples (single).
    #[arg(long)]
    pub samples: Option<String>,
    /// First axis, `param:min:max:count` or `param:v1,v2,...` (sweep2d).
    #[arg(long)]
    pub axis1: Option<String>,
    /// Second axis, same format, or `none` (sweep2d).
    #[arg(long)]
    pub axis2: Option<String>,
    /// Temperatures, comma separated (tempcurves).
    #[arg(long)]
    pub kbt_list: Option<String>,
    /// λ axis, `lambda:min:max:count` (tempcurves, optkappa).
    #[arg(long)]
    pub lambda_axis: Option<String>,
    /// Lower end of the κ bracket (optkappa).
    #[arg(long)]
    pub kappa_min: Option<String>,
    /// Upper end of the κ bracket (optkappa).
    #[arg(long)]
    pub kappa_max: Option<String>,
    /// Coarse log-spaced κ points (optkappa).
    #[arg(long)]
    pub coarse: Option<String>,

    /// Worker threads for sweeps.
    #[arg(long)]
    pub workers: Option<String>,
    /// Output CSV path.
    #[arg(long)]
    pub out: Option<String>,
    /// Also write a gnuplot script next to the CSV.
    #[arg(long)]
    pub plot_script: bool,
    /// Print a per-cell counter on standard error.
    #[arg(long)]
    pub progress: bool,
}

impl Flags {
    pub fn parse_args<I, T>(args: I) -> Result<Flags>
    where
        I: IntoIterator<Item = T>,
        T: Into<std::ffi::OsString> + Clone,
    {
        Flags::try_parse_from(args).map_err(|e| Error::Usage(e.render().to_string()))
    }

    fn entries(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let mut push = |k: &'static str, v: &Option<String>| {
            if let Some(v) = v {
                out.push((k, v.clone()));
            }
        };
        push("command", &self.command);
        push("kappa", &self.kappa);
        push("kt0", &self.kt0);
        push("t0", &self.t0);
        push("omega_rabi", &self.omega_rabi);
        push("lambda", &self.lambda);
        push("phi", &self.phi);
        push("varphi", &self.varphi);
        push("kbt", &self.kbt);
        push("initial", &self.initial);
        push("target", &self.target);
        push("rtol", &self.rtol);
        push("atol", &self.atol);
        push("dt_max", &self.dt_max);
        push("dt_init", &self.dt_init);
        push("hermitize_each_step", &self.hermitize_each_step);
        push("samples", &self.samples);
        push("axis1", &self.axis1);
        push("axis2", &self.axis2);
        push("kbt_list", &self.kbt_list);
        push("lambda_axis", &self.lambda_axis);
        push("kappa_min", &self.kappa_min);
        push("kappa_max", &self.kappa_max);
        push("coarse", &self.coarse);
        push("workers", &self.workers);
        push("out", &self.out);
        if self.plot_script {
            out.push(("plot_script", "true".into()));
        }
        if self.progress {
            out.push(("progress", "true".into()));
        }
        out
    }
}

/// Parses `key = value` lines; blank lines and lines starting with `#` are
/// skipped. Unknown and repeated keys are errors.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("config line {}: expected `key = value`, got {line:?}", n + 1)))?;
        let key = key.trim().replace('-', "_");
        let value = value.trim().to_string();
        if INFO_KEYS.contains(&key.as_str()) {
            continue;
        }
        if !KEYS.iter().any(|(k, _)| *k == key) {
            return Err(Error::invalid(key, "unknown key"));
        }
        if map.insert(key.clone(), value).is_some() {
            return Err(Error::invalid(key, "given more than once"));
        }
    }
    if map.contains_key("kt0") && map.contains_key("t0") {
        return Err(Error::invalid("t0", "conflicts with kt0; give only one"));
    }
    Ok(map)
}

/// Parses command-line arguments (program name first) over an optional
/// config-file text.
pub fn parse_config<I, T>(args: I, file: Option<&str>) -> Result<RunConfig>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    resolve(&Flags::parse_args(args)?, file)
}

/// Merges flags over file values over defaults and validates the result.
pub fn resolve(flags: &Flags, file: Option<&str>) -> Result<RunConfig> {
    let mut merged = match file {
        Some(text) => parse_config_text(text)?,
        None => BTreeMap::new(),
    };
    let flag_entries = flags.entries();
    // the duration is set either way; a flag for one form replaces the file's other form
    if flag_entries.iter().any(|(k, _)| *k == "kt0") {
        merged.remove("t0");
    }
    if flag_entries.iter().any(|(k, _)| *k == "t0") {
        merged.remove("kt0");
    }
    for (k, v) in flag_entries {
        merged.insert(k.to_string(), v);
    }
    build(&merged)
}

fn build(m: &BTreeMap<String, String>) -> Result<RunConfig> {
    let command: Command = match m.get("command") {
        Some(c) => c.parse()?,
        None => return Err(Error::Usage("missing command: single, sweep2d, tempcurves or optkappa".into())),
    };
    for key in m.keys() {
        if let Some((_, Some(cmds))) = KEYS.iter().find(|(k, _)| k == key) {
            if !cmds.contains(&command) {
                return Err(Error::invalid(key.as_str(), format!("does not apply to `{command}`")));
            }
        }
    }
    let get = |key: &str| m.get(key).map(String::as_str);

    let defaults = ModelParams::default();
    let kappa = opt(get("kappa"), "kappa", parse_f64)?.unwrap_or(defaults.kappa);
    if let Some(kt0) = get("kt0") {
        if !(parse_f64("kt0", kt0)? > 0.0) {
            return Err(Error::invalid("kt0", "must be positive"));
        }
    }
    let t0 = match (get("t0"), get("kt0")) {
        (Some(t0), _) => parse_f64("t0", t0)?,
        (None, Some(kt0)) => parse_f64("kt0", kt0)? / kappa,
        (None, None) => ModelParams::DEFAULT_KT0 / kappa,
    };
    let model = ModelParams {
        kappa,
        omega_rabi: opt(get("omega_rabi"), "omega_rabi", parse_f64)?.unwrap_or(defaults.omega_rabi),
        t0,
        lambda: opt(get("lambda"), "lambda", parse_f64)?.unwrap_or(defaults.lambda),
        phi: opt(get("phi"), "phi", parse_angle)?.unwrap_or(defaults.phi),
        varphi: opt(get("varphi"), "varphi", parse_angle)?.unwrap_or(defaults.varphi),
        kbt: opt(get("kbt"), "kbt", parse_f64)?.unwrap_or(defaults.kbt),
    };
    model.validate()?;

    let sd = SolverConfig::default();
    let solver = SolverConfig {
        rtol: opt(get("rtol"), "rtol", parse_f64)?.unwrap_or(sd.rtol),
        atol: opt(get("atol"), "atol", parse_f64)?.unwrap_or(sd.atol),
        dt_max: opt(get("dt_max"), "dt_max", parse_auto)?.unwrap_or(sd.dt_max),
        dt_init: opt(get("dt_init"), "dt_init", parse_auto)?.unwrap_or(sd.dt_init),
        hermitize_each_step: opt(get("hermitize_each_step"), "hermitize_each_step", parse_bool)?
            .unwrap_or(sd.hermitize_each_step),
    };
    solver.validate()?;

    let initial = opt(get("initial"), "initial", parse_level)?.unwrap_or(Level::Down);
    let target = opt(get("target"), "target", parse_level)?.unwrap_or(Level::Up);
    let samples = opt(get("samples"), "samples", parse_usize)?.unwrap_or(DEFAULT_SAMPLES);
    if samples < 2 {
        return Err(Error::invalid("samples", "at least two samples are required"));
    }
    let workers = match get("workers") {
        Some(w) => parse_usize("workers", w)?,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    if workers < 1 {
        return Err(Error::invalid("workers", "must be at least 1"));
    }
    let output_path = PathBuf::from(get("out").map_or_else(|| format!("{command}.csv"), str::to_string));
    if output_path.as_os_str().is_empty() {
        return Err(Error::invalid("out", "path is empty"));
    }
    let plot_script = opt(get("plot_script"), "plot_script", parse_bool)?.unwrap_or(false);
    let progress = opt(get("progress"), "progress", parse_bool)?.unwrap_or(false);

    let mut sweep = None;
    let mut optkappa = None;
    match command {
        Command::Single => {}
        Command::Sweep2d => {
            let axis1 = parse_axis("axis1", get("axis1").unwrap_or(DEFAULT_SWEEP_AXIS1))?;
            let axis2 = match get("axis2").unwrap_or(DEFAULT_SWEEP_AXIS2) {
                "none" => None,
                s => Some(parse_axis("axis2", s)?),
            };
            let spec = SweepSpec { axis1, axis2, fixed: model, initial, target };
            spec.validate()?;
            sweep = Some(spec);
        }
        Command::TempCurves => {
            let kbts = parse_list("kbt_list", get("kbt_list").unwrap_or(DEFAULT_KBT_LIST), false)?;
            let lambda_axis = parse_axis("lambda_axis", get("lambda_axis").unwrap_or(DEFAULT_CURVE_LAMBDA_AXIS))?;
            if lambda_axis.param != SweepParam::Lambda {
                return Err(Error::invalid("lambda_axis", "must vary lambda"));
            }
            let axis1 = Axis::list(SweepParam::Kbt, kbts);
            axis1.validate("kbt_list", &model)?;
            lambda_axis.validate("lambda_axis", &model)?;
            sweep = Some(SweepSpec { axis1, axis2: Some(lambda_axis), fixed: model, initial, target });
        }
        Command::OptKappa => {
            let lambda_axis = parse_axis("lambda_axis", get("lambda_axis").unwrap_or(DEFAULT_OPT_LAMBDA_AXIS))?;
            let lo = opt(get("kappa_min"), "kappa_min", parse_f64)?.unwrap_or(DEFAULT_KAPPA_BRACKET.0);
            let hi = opt(get("kappa_max"), "kappa_max", parse_f64)?.unwrap_or(DEFAULT_KAPPA_BRACKET.1);
            let coarse = opt(get("coarse"), "coarse", parse_usize)?.unwrap_or(MIN_COARSE_POINTS);
            let spec = OptKappaSpec { lambda_axis, fixed: model, bracket: (lo, hi), coarse, initial, target };
            spec.validate()?;
            optkappa = Some(spec);
        }
    }

    Ok(RunConfig {
        command,
        model,
        solver,
        initial,
        target,
        samples,
        sweep,
        optkappa,
        output_path,
        workers,
        plot_script,
        progress,
    })
}

fn opt<T>(v: Option<&str>, key: &str, parse: fn(&str, &str) -> Result<T>) -> Result<Option<T>> {
    v.map(|s| parse(key, s)).transpose()
}

fn parse_f64(key: &str, s: &str) -> Result<f64> {
    let v: f64 = s.trim().parse().map_err(|_| Error::invalid(key, format!("not a number: {s:?}")))?;
    if !v.is_finite() {
        return Err(Error::invalid(key, format!("not a finite number: {s:?}")));
    }
    Ok(v)
}

fn parse_usize(key: &str, s: &str) -> Result<usize> {
    s.trim().parse().map_err(|_| Error::invalid(key, format!("not a non-negative integer: {s:?}")))
}

fn parse_bool(key: &str, s: &str) -> Result<bool> {
    match s.trim() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(Error::invalid(key, format!("expected true or false, got {s:?}"))),
    }
}

fn parse_auto(key: &str, s: &str) -> Result<Option<f64>> {
    match s.trim() {
        "auto" => Ok(None),
        other => parse_f64(key, other).map(Some),
    }
}

fn parse_level(key: &str, s: &str) -> Result<Level> {
    s.parse().map_err(|_| Error::invalid(key, format!("expected -1, 0 or 1, got {s:?}")))
}

/// Radians, or a multiple of π written `<x>pi` (`pi`, `0.5pi`, `-pi`).
pub fn parse_angle(key: &str, s: &str) -> Result<f64> {
    let t = s.trim();
    let stripped = t.strip_suffix("pi").or_else(|| t.strip_suffix('π'));
    match stripped {
        Some(m) => {
            let m = m.trim().trim_end_matches('*');
            let factor = match m {
                "" | "+" => 1.0,
                "-" => -1.0,
                m => parse_f64(key, m)?,
            };
            Ok(factor * PI)
        }
        None => parse_f64(key, t),
    }
}

fn parse_list(key: &str, s: &str, angles: bool) -> Result<Vec<f64>> {
    s.split(',')
        .map(|v| if angles { parse_angle(key, v) } else { parse_f64(key, v) })
        .collect()
}

/// `param:min:max:count` for a range or `param:v1,v2,...` for a list.
pub fn parse_axis(key: &str, s: &str) -> Result<Axis> {
    let parts: Vec<&str> = s.trim().split(':').collect();
    let param: SweepParam = parts[0]
        .parse()
        .map_err(|_| Error::invalid(key, format!("unknown sweep parameter {:?}", parts[0])))?;
    let num = |v: &str| if param.is_angle() { parse_angle(key, v) } else { parse_f64(key, v) };
    match parts[1..] {
        [min, max, count] => Ok(Axis::linspace(param, num(min)?, num(max)?, parse_usize(key, count)?)),
        [list] => Ok(Axis::list(param, parse_list(key, list, param.is_angle())?)),
        _ => Err(Error::invalid(key, format!("expected `param:min:max:count` or `param:v1,v2,...`, got {s:?}"))),
    }
}

/// Float text that reads back to the same value: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn fmt_axis(a: &Axis) -> String {
    match &a.grid {
        Grid::Linspace { min, max, count } => format!("{}:{}:{}:{count}", a.param, fmt_f64(*min), fmt_f64(*max)),
        Grid::List(v) => format!("{}:{}", a.param, fmt_list(v)),
    }
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|&x| fmt_f64(x)).collect::<Vec<_>>().join(",")
}

fn fmt_auto(v: Option<f64>) -> String {
    v.map_or_else(|| "auto".to_string(), fmt_f64)
}

impl RunConfig {
    /// `key = value` pairs that determine the numbers in the output. Worker
    /// count, output path and display options are left out, so the same run
    /// produces the same file however it is executed.
    pub fn metadata_entries(&self) -> Vec<(&'static str, String)> {
        let m = &self.model;
        let s = &self.solver;
        let mut out = vec![
            ("command", self.command.to_string()),
            ("kappa", fmt_f64(m.kappa)),
            ("omega_rabi", fmt_f64(m.omega_rabi)),
            ("t0", fmt_f64(m.t0)),
            ("lambda", fmt_f64(m.lambda)),
            ("phi", fmt_f64(m.phi)),
            ("varphi", fmt_f64(m.varphi)),
            ("kbt", fmt_f64(m.kbt)),
            ("initial", self.initial.to_string()),
            ("target", self.target.to_string()),
            ("rtol", fmt_f64(s.rtol)),
            ("atol", fmt_f64(s.atol)),
            ("dt_max", fmt_auto(s.dt_max)),
            ("dt_init", fmt_auto(s.dt_init)),
            ("hermitize_each_step", s.hermitize_each_step.to_string()),
        ];
        match self.command {
            Command::Single => out.push(("samples", self.samples.to_string())),
            Command::Sweep2d => {
                if let Some(spec) = &self.sweep {
                    out.push(("axis1", fmt_axis(&spec.axis1)));
                    out.push(("axis2", spec.axis2.as_ref().map_or_else(|| "none".to_string(), fmt_axis)));
                }
            }
            Command::TempCurves => {
                if let Some(spec) = &self.sweep {
                    out.push(("kbt_list", fmt_list(&spec.axis1.values())));
                    if let Some(a2) = &spec.axis2 {
                        out.push(("lambda_axis", fmt_axis(a2)));
                    }
                }
            }
            Command::OptKappa => {
                if let Some(spec) = &self.optkappa {
                    out.push(("lambda_axis", fmt_axis(&spec.lambda_axis)));
                    out.push(("kappa_min", fmt_f64(spec.bracket.0)));
                    out.push(("kappa_max", fmt_f64(spec.bracket.1)));
                    out.push(("coarse", spec.coarse.to_string()));
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<RunConfig> {
        let mut v = vec!["open-majorana"];
        v.extend_from_slice(args);
        parse_config(v, None)
    }

    #[test]
    fn empty_single_gives_baseline() {
        let c = parse(&["single"]).unwrap();
        assert_eq!(c.command, Command::Single);
        assert_eq!(c.model, ModelParams::default());
        assert_eq!(c.model.kappa, 0.25);
        assert_eq!(c.model.kt0(), 25.0);
        assert_eq!(c.model.varphi, 0.0);
        assert_eq!(c.model.kbt, 0.001);
        assert_eq!((c.initial, c.target), (Level::Down, Level::Up));
        assert_eq!(c.solver, SolverConfig::default());
        assert!(c.sweep.is_none() && c.optkappa.is_none());
    }

    #[test]
    fn angles_in_units_of_pi() {
        let c = parse(&["single", "--phi", "0.5pi", "--varphi", "pi"]).unwrap();
        assert_eq!(c.model.phi, 0.5 * PI);
        assert_eq!(c.model.varphi, PI);
        assert_eq!(parse_angle("phi", "-pi").unwrap(), -PI);
        assert_eq!(parse_angle("phi", "0.25").unwrap(), 0.25);
        assert!(parse(&["single", "--varphi", "2pi"]).is_err());
    }

    #[test]
    fn negative_temperature_names_key() {
        let e = parse(&["single", "--kbt", "-1"]).unwrap_err();
        assert!(matches!(e, Error::InvalidParameter { ref key, .. } if key == "kbt"), "{e}");
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn bad_number_names_key() {
        let e = parse(&["single", "--lambda", "abc"]).unwrap_err();
        assert!(matches!(e, Error::InvalidParameter { ref key, .. } if key == "lambda"));
    }

    #[test]
    fn unknown_key_and_flag() {
        let e = parse_config(["x", "single"], Some("gamma = 2\n")).unwrap_err();
        assert!(matches!(e, Error::InvalidParameter { ref key, .. } if key == "gamma"));
        assert!(matches!(parse(&["single", "--gamma", "2"]), Err(Error::Usage(_))));
    }

    #[test]
    fn conflicting_duration_flags() {
        assert!(matches!(parse(&["single", "--kt0", "25", "--t0", "100"]), Err(Error::Usage(_))));
        assert!(parse_config(["x", "single"], Some("kt0 = 25\nt0 = 100\n")).is_err());
        assert!(parse_config(["x", "single"], Some("lambda = 0.1\nlambda = 0.2\n")).is_err());
    }

    #[test]
    fn flags_override_file_override_defaults() {
        let file = "# comment\ncommand = single\nlambda = 0.2\nkappa = 0.5\nt0 = 10\n";
        let c = parse_config(["x", "--lambda", "0.3"], Some(file)).unwrap();
        assert_eq!(c.model.lambda, 0.3);
        assert_eq!(c.model.kappa, 0.5);
        assert_eq!(c.model.t0, 10.0);
        // a flag for the product replaces the file's t0
        let c = parse_config(["x", "--kt0", "20"], Some(file)).unwrap();
        assert_eq!(c.model.t0, 40.0);
        assert_eq!(c.model.phi, 0.0);
    }

    #[test]
    fn kt0_keeps_product() {
        let c = parse(&["single", "--kappa", "0.1", "--kt0", "25"]).unwrap();
        assert!((c.model.t0 - 250.0).abs() < 1e-12);
        let e = parse(&["single", "--kt0", "-3"]).unwrap_err();
        assert!(matches!(e, Error::InvalidParameter { ref key, .. } if key == "kt0"));
    }

    #[test]
    fn sweep_defaults() {
        let c = parse(&["sweep2d"]).unwrap();
        let s = c.sweep.unwrap();
        assert_eq!(s.axis1, Axis::linspace(SweepParam::Lambda, 0.0, 0.5, 101));
        assert_eq!(s.axis2, Some(Axis::linspace(SweepParam::Phi, 0.0, PI, 101)));

        let c = parse(&["tempcurves"]).unwrap();
        let s = c.sweep.unwrap();
        assert_eq!(s.axis1.values(), vec![0.001, 1.0, 3.0, 10.0]);
        assert_eq!(s.axis2.unwrap().len(), 201);

        let c = parse(&["optkappa"]).unwrap();
        let o = c.optkappa.unwrap();
        assert_eq!(o.bracket, (1e-2, 2.0));
        assert_eq!(o.coarse, 20);
        assert_eq!(o.lambda_axis.len(), 11);
    }

    #[test]
    fn axis_formats() {
        let a = parse_axis("axis1", "varphi:0:pi:11").unwrap();
        assert_eq!(a, Axis::linspace(SweepParam::Varphi, 0.0, PI, 11));
        let a = parse_axis("axis1", "lambda:0.1,0.2").unwrap();
        assert_eq!(a.values(), vec![0.1, 0.2]);
        assert_eq!(parse_axis("axis1", &fmt_axis(&a)).unwrap(), a);
        assert!(parse_axis("axis1", "lambda:0:1").is_err());
        assert!(parse_axis("axis1", "omega:0:1:3").is_err());
        let e = parse(&["sweep2d", "--axis1", "lambda:0:0.5:1"]).unwrap_err();
        assert!(matches!(e, Error::InvalidParameter { ref key, .. } if key == "axis1"));
    }

    #[test]
    fn keys_must_match_command() {
        let e = parse(&["single", "--axis1", "lambda:0:1:3"]).unwrap_err();
        assert!(matches!(e, Error::InvalidParameter { ref key, .. } if key == "axis1"));
        assert!(parse(&["optkappa", "--coarse", "5"]).is_err());
        assert!(matches!(parse(&[]), Err(Error::Usage(_))));
        assert!(parse(&["fly"]).is_err());
        assert!(parse(&["single", "--workers", "0"]).is_err());
    }

    #[test]
    fn metadata_round_trips() {
        for args in [
            vec!["single", "--lambda", "0.1234567890123", "--phi", "0.3pi", "--dt-max", "0.001"],
            vec!["sweep2d", "--axis1", "varphi:0:pi:3", "--axis2", "lambda:0.1,0.2", "--kbt", "2.5"],
            vec!["tempcurves", "--kbt-list", "0.001,250", "--initial", "1", "--target", "-1"],
            vec!["optkappa", "--lambda-axis", "lambda:0.01:0.2:3", "--coarse", "24", "--rtol", "1e-9"],
        ] {
            let mut full = vec!["open-majorana"];
            full.extend(args.iter());
            full.extend(["--workers", "1", "--out", "unused.csv"]);
            let c = parse_config(full, None).unwrap();
            let text: String =
                c.metadata_entries().iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
            let back = parse_config(["open-majorana", "--workers", "1", "--out", "unused.csv"], Some(&text)).unwrap();
            assert_eq!(back, c, "{args:?}");
        }
    }
}
