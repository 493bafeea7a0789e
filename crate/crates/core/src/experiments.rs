//! Transfer efficiency and the parameter studies built on it: 2-D efficiency
//! maps, efficiency-vs-λ curves per temperature, and the optimal chirp-rate
//! search.
//!
//! Every grid cell is an independent propagation. Cells run on a rayon pool
//! of a chosen size, and results are collected by cell index, so output never
//! depends on the number of workers or on scheduling.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::hamiltonian::ModelParams;
use crate::integrator::{propagate, DensityMatrix, SolverConfig};
use crate::spin_algebra::Level;
use crate::{Error, Result};

/// Slack allowed on a probability computed from a validated density matrix.
pub const PROBABILITY_SLACK: f64 = 1e-9;

/// Relative width `(κ_hi − κ_lo)/κ_lo` at which the golden-section search stops.
pub const KAPPA_REL_WIDTH: f64 = 1e-3;

/// Fewest log-spaced κ points of the coarse scan.
pub const MIN_COARSE_POINTS: usize = 20;

/// Differences below this count as ties when judging the shape of a profile.
const PROFILE_NOISE: f64 = 1e-9;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Final population of `target` after propagating `ρ(-t₀) = |initial⟩⟨initial|`.
pub fn efficiency(p: &ModelParams, initial: Level, target: Level, s: &SolverConfig) -> Result<f64> {
    let tr = propagate(&DensityMatrix::pure(initial), p, s, 2)?;
    Ok(tr.rho_final.population(target))
}

/// A model parameter that a sweep axis may vary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SweepParam {
    Lambda,
    Phi,
    Varphi,
    /// Varies κ at fixed `κ·t₀`.
    Kappa,
    Kbt,
}

impl SweepParam {
    pub const ALL: [SweepParam; 5] =
        [SweepParam::Lambda, SweepParam::Phi, SweepParam::Varphi, SweepParam::Kappa, SweepParam::Kbt];

    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Lambda => "lambda",
            SweepParam::Phi => "phi",
            SweepParam::Varphi => "varphi",
            SweepParam::Kappa => "kappa",
            SweepParam::Kbt => "kbt",
        }
    }

    pub fn is_angle(self) -> bool {
        matches!(self, SweepParam::Phi | SweepParam::Varphi)
    }

    pub fn apply(self, p: &ModelParams, value: f64) -> ModelParams {
        let mut q = *p;
        match self {
            SweepParam::Lambda => q.lambda = value,
            SweepParam::Phi => q.phi = value,
            SweepParam::Varphi => q.varphi = value,
            SweepParam::Kappa => q = q.with_kappa_fixed_kt0(value),
            SweepParam::Kbt => q.kbt = value,
        }
        q
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepParam::ALL
            .into_iter()
            .find(|p| p.name() == s.trim())
            .ok_or_else(|| Error::Usage(format!("unknown sweep parameter {s:?}; expected one of lambda, phi, varphi, kappa, kbt")))
    }
}

/// Sample points along one axis.
#[derive(Clone, Debug, PartialEq)]
pub enum Grid {
    /// `count` evenly spaced points from `min` to `max`, both included.
    Linspace { min: f64, max: f64, count: usize },
    /// Explicit values, in the given order.
    List(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Axis {
    pub param: SweepParam,
    pub grid: Grid,
}

impl Axis {
    pub fn linspace(param: SweepParam, min: f64, max: f64, count: usize) -> Self {
        Axis { param, grid: Grid::Linspace { min, max, count } }
    }

    pub fn list(param: SweepParam, values: Vec<f64>) -> Self {
        Axis { param, grid: Grid::List(values) }
    }

    pub fn values(&self) -> Vec<f64> {
        match &self.grid {
            Grid::Linspace { min, max, count } => linspace(*min, *max, *count),
            Grid::List(v) => v.clone(),
        }
    }

    pub fn len(&self) -> usize {
        match &self.grid {
            Grid::Linspace { count, .. } => *count,
            Grid::List(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Checks the grid shape and that every point yields valid parameters
    /// when applied to `base`.
    pub fn validate(&self, key: &str, base: &ModelParams) -> Result<()> {
        match &self.grid {
            Grid::Linspace { min, max, count } => {
                if *count < 2 {
                    return Err(Error::invalid(key, "a range needs at least two points"));
                }
                if !(min.is_finite() && max.is_finite() && min < max) {
                    return Err(Error::invalid(key, "range minimum must be below its maximum"));
                }
            }
            Grid::List(v) => {
                if v.is_empty() {
                    return Err(Error::invalid(key, "value list is empty"));
                }
            }
        }
        for v in self.values() {
            self.param.apply(base, v).validate().map_err(|e| match e {
                Error::InvalidParameter { reason, .. } => {
                    Error::invalid(key, format!("{} = {v}: {reason}", self.param))
                }
                other => other,
            })?;
        }
        Ok(())
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.grid {
            Grid::Linspace { min, max, count } => write!(f, "{}:{min:?}:{max:?}:{count}", self.param),
            Grid::List(v) => {
                write!(f, "{}:", self.param)?;
                for (k, x) in v.iter().enumerate() {
                    if k > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{x:?}")?;
                }
                Ok(())
            }
        }
    }
}

/// `count` evenly spaced points with both end points exact.
pub fn linspace(min: f64, max: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![min],
        n => (0..n)
            .map(|k| if k + 1 == n { max } else { min + (max - min) * k as f64 / (n - 1) as f64 })
            .collect(),
    }
}

/// `count ≥ 2` logarithmically spaced points with both end points exact.
pub fn logspace(min: f64, max: f64, count: usize) -> Vec<f64> {
    let (a, b) = (min.ln(), max.ln());
    (0..count)
        .map(|k| match k {
            0 => min,
            k if k + 1 == count => max,
            k => (a + (b - a) * k as f64 / (count - 1) as f64).exp(),
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub axis1: Axis,
    pub axis2: Option<Axis>,
    pub fixed: ModelParams,
    pub initial: Level,
    pub target: Level,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        self.fixed.validate()?;
        self.axis1.validate("axis1", &self.fixed)?;
        if let Some(a2) = &self.axis2 {
            a2.validate("axis2", &self.fixed)?;
            if a2.param == self.axis1.param {
                return Err(Error::invalid("axis2", "must vary a different parameter than axis1"));
            }
        }
        Ok(())
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.axis1.len(), self.axis2.as_ref().map_or(1, Axis::len))
    }

    /// Parameters of cell `(i, j)`, with `axis2` applied last.
    pub fn params_at(&self, a1: f64, a2: Option<f64>) -> ModelParams {
        let p = self.axis1.param.apply(&self.fixed, a1);
        match (&self.axis2, a2) {
            (Some(ax), Some(v)) => ax.param.apply(&p, v),
            _ => p,
        }
    }
}

/// How a sweep is executed; never affects the numbers produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunOptions {
    pub workers: usize,
    /// Print a per-cell counter on standard error.
    pub progress: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { workers: 1, progress: false }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellFailure {
    /// Row-major cell index.
    pub index: usize,
    pub message: String,
}

#[derive(Clone, Debug)]
pub struct EfficiencyMap {
    pub spec: SweepSpec,
    pub axis1_values: Vec<f64>,
    /// Empty for a one-axis sweep.
    pub axis2_values: Vec<f64>,
    /// Row-major over `axis1 × axis2`; failed cells hold NaN.
    pub values: Vec<f64>,
    pub failures: Vec<CellFailure>,
    pub solver: SolverConfig,
    pub version: &'static str,
    pub wall_time: Duration,
}

impl EfficiencyMap {
    pub fn shape(&self) -> (usize, usize) {
        self.spec.shape()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.shape().1 + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n2 = self.shape().1;
        &self.values[i * n2..(i + 1) * n2]
    }

    /// `(axis1 value, axis2 value, efficiency)` in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = (f64, Option<f64>, f64)> + '_ {
        let n2 = self.shape().1;
        self.values.iter().enumerate().map(move |(k, &v)| {
            let a2 = self.axis2_values.get(k % n2).copied();
            (self.axis1_values[k / n2], a2, v)
        })
    }
}

fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    if workers == 0 {
        return Err(Error::invalid("workers", "must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Usage(format!("cannot start {workers} workers: {e}")))
}

struct Progress {
    enabled: bool,
    done: AtomicUsize,
    total: usize,
}

impl Progress {
    fn new(enabled: bool, total: usize) -> Self {
        Progress { enabled, done: AtomicUsize::new(0), total }
    }

    fn tick(&self) {
        if self.enabled {
            let n = self.done.fetch_add(1, Ordering::Relaxed) + 1;
            eprint!("\r{n}/{}", self.total);
            if n == self.total {
                eprintln!();
            }
        }
    }
}

/// Efficiency of one cell, with out-of-range results reported as errors.
fn checked_efficiency(p: &ModelParams, initial: Level, target: Level, s: &SolverConfig) -> Result<f64> {
    let e = efficiency(p, initial, target, s)?;
    if !(-PROBABILITY_SLACK..=1.0 + PROBABILITY_SLACK).contains(&e) {
        return Err(Error::InvalidState { metric: "target population", value: e, tolerance: PROBABILITY_SLACK });
    }
    Ok(e)
}

/// Evaluates every job on the pool, in order, turning failures into NaN.
fn evaluate_all(
    jobs: &[ModelParams],
    initial: Level,
    target: Level,
    s: &SolverConfig,
    opts: &RunOptions,
) -> Result<(Vec<f64>, Vec<CellFailure>)> {
    let pool = thread_pool(opts.workers)?;
    let progress = Progress::new(opts.progress, jobs.len());
    let results: Vec<Result<f64>> = pool.install(|| {
        jobs.par_iter()
            .map(|p| {
                let r = checked_efficiency(p, initial, target, s);
                progress.tick();
                r
            })
            .collect()
    });
    let mut values = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (index, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => values.push(v),
            Err(e) => {
                values.push(f64::NAN);
                failures.push(CellFailure { index, message: e.to_string() });
            }
        }
    }
    Ok((values, failures))
}

/// Efficiency over the Cartesian grid of `spec`, row-major over `axis1 × axis2`.
///
/// A cell whose propagation fails holds NaN and an entry in `failures`; the
/// remaining cells are unaffected.
pub fn sweep(spec: &SweepSpec, s: &SolverConfig, opts: &RunOptions) -> Result<EfficiencyMap> {
    spec.validate()?;
    s.validate()?;
    let start = Instant::now();
    let axis1_values = spec.axis1.values();
    let axis2_values = spec.axis2.as_ref().map_or_else(Vec::new, Axis::values);
    let jobs: Vec<ModelParams> = axis1_values
        .iter()
        .flat_map(|&a1| {
            if axis2_values.is_empty() {
                vec![spec.params_at(a1, None)]
            } else {
                axis2_values.iter().map(|&a2| spec.params_at(a1, Some(a2))).collect()
            }
        })
        .collect();
    let (values, failures) = evaluate_all(&jobs, spec.initial, spec.target, s, opts)?;
    Ok(EfficiencyMap {
        spec: spec.clone(),
        axis1_values,
        axis2_values,
        values,
        failures,
        solver: *s,
        version: VERSION,
        wall_time: start.elapsed(),
    })
}

/// One efficiency-vs-λ curve per temperature: row `i` of the result is the
/// curve at `kbt_list[i]`.
pub fn temperature_curves(
    p_base: &ModelParams,
    kbt_list: &[f64],
    lambda_axis: &Axis,
    initial: Level,
    target: Level,
    s: &SolverConfig,
    opts: &RunOptions,
) -> Result<EfficiencyMap> {
    if lambda_axis.param != SweepParam::Lambda {
        return Err(Error::invalid("lambda_axis", "must vary lambda"));
    }
    let spec = SweepSpec {
        axis1: Axis::list(SweepParam::Kbt, kbt_list.to_vec()),
        axis2: Some(lambda_axis.clone()),
        fixed: *p_base,
        initial,
        target,
    };
    sweep(&spec, s, opts)
}

/// Settings of the optimal chirp-rate search.
#[derive(Clone, Debug, PartialEq)]
pub struct OptKappaSpec {
    pub lambda_axis: Axis,
    pub fixed: ModelParams,
    pub bracket: (f64, f64),
    /// Number of log-spaced κ points in the coarse scan.
    pub coarse: usize,
    pub initial: Level,
    pub target: Level,
}

impl OptKappaSpec {
    pub fn validate(&self) -> Result<()> {
        self.fixed.validate()?;
        if self.lambda_axis.param != SweepParam::Lambda {
            return Err(Error::invalid("lambda_axis", "must vary lambda"));
        }
        self.lambda_axis.validate("lambda_axis", &self.fixed)?;
        let (lo, hi) = self.bracket;
        if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo < hi) {
            return Err(Error::invalid("kappa_min", "bracket must satisfy 0 < kappa_min < kappa_max"));
        }
        if self.coarse < MIN_COARSE_POINTS {
            return Err(Error::invalid("coarse", format!("at least {MIN_COARSE_POINTS} points are required")));
        }
        Ok(())
    }
}

/// Optimal chirp rate per λ.
#[derive(Clone, Debug)]
pub struct OptKappaCurve {
    pub spec: OptKappaSpec,
    pub lambdas: Vec<f64>,
    pub kappa_opt: Vec<f64>,
    pub efficiency_at_opt: Vec<f64>,
    /// Efficiency at `(κ_min, κ_max)` for each λ.
    pub edge_efficiency: Vec<(f64, f64)>,
    /// Set when the coarse profile has more than one local maximum.
    pub non_unimodal: Vec<bool>,
    pub coarse_kappas: Vec<f64>,
    /// Coarse profile per λ, aligned with `coarse_kappas`.
    pub coarse_values: Vec<Vec<f64>>,
    pub failures: Vec<String>,
    pub solver: SolverConfig,
    pub version: &'static str,
    pub wall_time: Duration,
}

/// Whether a sampled profile rises to a single peak and then falls, with
/// differences below the noise floor counted as flat.
pub fn is_unimodal(values: &[f64]) -> bool {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    let mut falling = false;
    for w in finite.windows(2) {
        let d = w[1] - w[0];
        if d < -PROFILE_NOISE {
            falling = true;
        } else if d > PROFILE_NOISE && falling {
            return false;
        }
    }
    true
}

/// Index of the largest finite value, the first one on ties.
fn argmax_first(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (k, &v) in values.iter().enumerate() {
        if v.is_finite() && best.is_none_or(|b| v > values[b]) {
            best = Some(k);
        }
    }
    best
}

/// Golden-section maximization of `f(κ)` over `[lo, hi]` in `ln κ`, stopping
/// at relative width [`KAPPA_REL_WIDTH`]. Returns every evaluated point.
pub fn golden_section_log<F>(mut f: F, lo: f64, hi: f64) -> Vec<(f64, f64)>
where
    F: FnMut(f64) -> f64,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let max_width = KAPPA_REL_WIDTH.ln_1p();
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let mut evaluated = Vec::new();
    let mut eval = |u: f64, evaluated: &mut Vec<(f64, f64)>| {
        let k = u.exp();
        let v = f(k);
        evaluated.push((k, v));
        // failed points never win a comparison
        if v.is_nan() { f64::NEG_INFINITY } else { v }
    };
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = eval(c, &mut evaluated);
    let mut fd = eval(d, &mut evaluated);
    while b - a > max_width {
        // ties keep the lower interval, favouring smaller κ
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = eval(c, &mut evaluated);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = eval(d, &mut evaluated);
        }
    }
    evaluated
}

/// Best of a set of `(κ, efficiency)` points: highest efficiency, smaller κ on ties.
fn best_point(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    points
        .iter()
        .copied()
        .filter(|(_, v)| v.is_finite())
        .fold(None, |best: Option<(f64, f64)>, (k, v)| match best {
            Some((bk, bv)) if bv > v || (bv == v && bk <= k) => Some((bk, bv)),
            _ => Some((k, v)),
        })
}

/// For each λ, maximizes the efficiency over κ at fixed `κ·t₀`: a coarse
/// log-spaced scan over the bracket, then golden-section refinement between
/// the neighbours of the best coarse point. The reported optimum is the best
/// point evaluated anywhere, so it never falls below the coarse scan.
pub fn optimal_kappa(spec: &OptKappaSpec, s: &SolverConfig, opts: &RunOptions) -> Result<OptKappaCurve> {
    spec.validate()?;
    s.validate()?;
    let start = Instant::now();
    let lambdas = spec.lambda_axis.values();
    let (lo, hi) = spec.bracket;
    let kappas = logspace(lo, hi, spec.coarse);
    let nk = kappas.len();

    let jobs: Vec<ModelParams> = lambdas
        .iter()
        .flat_map(|&l| {
            let base = SweepParam::Lambda.apply(&spec.fixed, l);
            kappas.iter().map(move |&k| base.with_kappa_fixed_kt0(k))
        })
        .collect();
    let (coarse, coarse_failures) = evaluate_all(&jobs, spec.initial, spec.target, s, opts)?;
    let mut failures: Vec<String> = coarse_failures
        .iter()
        .map(|f| format!("lambda = {}, kappa = {}: {}", lambdas[f.index / nk], kappas[f.index % nk], f.message))
        .collect();
    let coarse_values: Vec<Vec<f64>> = coarse.chunks(nk).map(<[f64]>::to_vec).collect();

    let pool = thread_pool(opts.workers)?;
    let refined: Vec<(Vec<(f64, f64)>, Vec<String>)> = pool.install(|| {
        lambdas
            .par_iter()
            .zip(coarse_values.par_iter())
            .map(|(&l, profile)| {
                let Some(i) = argmax_first(profile) else {
                    return (Vec::new(), Vec::new());
                };
                let a = kappas[i.saturating_sub(1)];
                let b = kappas[(i + 1).min(nk - 1)];
                let base = SweepParam::Lambda.apply(&spec.fixed, l);
                let mut errs = Vec::new();
                let points = golden_section_log(
                    |k| match checked_efficiency(&base.with_kappa_fixed_kt0(k), spec.initial, spec.target, s) {
                        Ok(v) => v,
                        Err(e) => {
                            errs.push(format!("lambda = {l}, kappa = {k}: {e}"));
                            f64::NAN
                        }
                    },
                    a,
                    b,
                );
                (points, errs)
            })
            .collect()
    });

    let mut kappa_opt = Vec::with_capacity(lambdas.len());
    let mut efficiency_at_opt = Vec::with_capacity(lambdas.len());
    for ((points, errs), profile) in refined.into_iter().zip(&coarse_values) {
        failures.extend(errs);
        let mut all: Vec<(f64, f64)> = kappas.iter().copied().zip(profile.iter().copied()).collect();
        all.extend(points);
        let (k, v) = best_point(&all).unwrap_or((f64::NAN, f64::NAN));
        kappa_opt.push(k);
        efficiency_at_opt.push(v);
    }

    Ok(OptKappaCurve {
        spec: spec.clone(),
        edge_efficiency: coarse_values.iter().map(|p| (p[0], p[nk - 1])).collect(),
        non_unimodal: coarse_values.iter().map(|p| !is_unimodal(p)).collect(),
        lambdas,
        kappa_opt,
        efficiency_at_opt,
        coarse_kappas: kappas,
        coarse_values,
        failures,
        solver: *s,
        version: VERSION,
        wall_time: start.elapsed(),
    })
}
