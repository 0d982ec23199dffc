//! The six experiments. Each returns an [`Outcome`] holding the report, the
//! CSV tables and the acceptance checks evaluated on the results.
//!
//! Independent runs (sweep members, optimizer starts, random trials) go
//! through rayon inside the caller's thread pool; results are collected in
//! input order, so the outputs do not depend on scheduling.

use crate::config::{ExperimentConfig, LambdaSpec, StartSpec};
use crate::report::{num, Check, Outcome, Table};
use crate::{CliError, Experiment, Result};
use collapsar_core::blowup::{self, BlowupVerdict};
use collapsar_core::critical::{maximize_ratio, RatioEstimate};
use collapsar_core::energy::negative_energy_threshold;
use collapsar_core::evolution::{
    evolve, evolve_with, HartreeParams, MonitorSeries, Termination, Trajectory,
};
use collapsar_core::fock::{self, FockSpace, FockVector, ModeVector};
use collapsar_core::interaction::{
    build_inverse_square_kernel, build_kernel, hardy_ratio_with, kato_ratio_with,
};
use collapsar_core::spectral::{self, homogeneous_energy, sobolev_norm, SobolevIndex};
use collapsar_core::{Complex64, Field, Grid, Representation};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde_json::{json, Value};
use std::f64::consts::PI;
use std::sync::Arc;

/// Acceptance thresholds checked on the results.
pub mod thresholds {
    pub const SLOPE_L2: (f64, f64) = (0.85, 1.15);
    pub const SLOPE_H_HALF_MIN: f64 = 0.45;
    pub const LAMBDA_UPPER: (f64, f64) = (4.0 / std::f64::consts::PI - 0.02, 2.7);
    pub const START_SPREAD_MAX: f64 = 0.05;
    pub const REFINEMENT_DELTA_MAX: f64 = 0.03;
    pub const RESTART_ITERATIONS_MAX: usize = 10;
    pub const KATO_MAX: f64 = std::f64::consts::FRAC_PI_2 + 0.05;
    pub const HARDY_MAX: f64 = 4.0 + 0.1;
    pub const BLOWUP_GROWTH_MIN: f64 = 10.0;
    pub const T_DETECT_SHIFT_MAX: f64 = 0.1;
    pub const MASS_DRIFT_PER_TIME: f64 = 1e-10;
    pub const MASS_DRIFT_QUIET: f64 = 1e-10;
    pub const FREE_NORM_DRIFT: f64 = 1e-10;
}

/// Relative threshold below which a field counts as constant for the
/// homogeneous-seminorm ratios.
pub const SEMINORM_GUARD: f64 = 1e-10;

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    match cfg.experiment {
        Experiment::Evolve => run_evolve(cfg),
        Experiment::RegSweep => run_reg_sweep(cfg),
        Experiment::Blowup => run_blowup(cfg),
        Experiment::CriticalLambda => run_critical_lambda(cfg),
        Experiment::FockCheck => run_fock_check(cfg),
        Experiment::Inequalities => run_inequalities(cfg),
    }
}

fn grid_json(grid: &Grid) -> Value {
    json!({"n": grid.n(), "box_length": num(grid.box_length()), "dx": num(grid.dx())})
}

fn params_json(p: &HartreeParams) -> Value {
    json!({
        "lambda": num(p.lambda),
        "alpha": num(p.alpha),
        "dt_init": num(p.dt_init),
        "dt_min": num(p.dt_min),
        "t_end": num(p.t_end),
        "adapt_exponent": num(p.adapt_exponent),
        "cfl_like_constant": num(p.cfl_like_constant),
        "monitor_stride": p.monitor_stride,
        "h_half_factor": num(p.blowup.h_half_factor),
        "tail_max": num(p.blowup.tail_max),
    })
}

fn header(cfg: &ExperimentConfig, grid: &Grid) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("experiment".into(), json!(cfg.experiment.name()));
    m.insert("grid".into(), grid_json(grid));
    m.insert("seed".into(), json!(cfg.seed));
    m
}

fn initial_field(cfg: &ExperimentConfig, grid: Grid) -> Result<Field> {
    cfg.initial.build(grid)
}

/// Coupling for `f0` together with its negative-energy threshold (if any).
fn resolve_lambda(cfg: &ExperimentConfig, f0: &Field, alpha: f64) -> Result<(f64, Option<f64>)> {
    let threshold = negative_energy_threshold(f0, alpha).ok();
    match cfg.lambda {
        LambdaSpec::Value(l) => Ok((l, threshold)),
        LambdaSpec::OverThreshold(m) => {
            let t = threshold.ok_or_else(|| {
                CliError::Numeric("initial datum has no negative-energy threshold".into())
            })?;
            Ok((m * t, Some(t)))
        }
    }
}

const MONITOR_COLUMNS: [&str; 13] = [
    "time",
    "dt",
    "mass",
    "energy",
    "h_half",
    "h_one",
    "h_two",
    "tail_fraction",
    "n",
    "box_length",
    "lambda",
    "alpha",
    "dt_init",
];

fn push_monitors(table: &mut Table, series: &MonitorSeries, grid: &Grid, p: &HartreeParams) {
    for i in 0..series.len() {
        let s = series.row(i);
        table.push(vec![
            s.time,
            s.dt,
            s.mass,
            s.energy,
            s.h_half,
            s.h_one,
            s.h_two,
            s.tail,
            grid.n() as f64,
            grid.box_length(),
            p.lambda,
            p.alpha,
            p.dt_init,
        ]);
    }
}

fn max_deviation(values: &[f64]) -> f64 {
    values
        .iter()
        .map(|v| (v - values[0]).abs())
        .fold(0.0, f64::max)
}

fn final_time(traj: &Trajectory) -> f64 {
    traj.series.time.last().copied().unwrap_or(0.0)
}

fn verdict_json(v: &BlowupVerdict) -> Value {
    json!({
        "detected": v.detected,
        "reason": v.reason,
        "t_detect": v.t_detect.map_or(Value::Null, num),
        "h_half_at_detect": num(v.h_half_at_detect),
        "tail_fraction_at_detect": num(v.tail_fraction_at_detect),
        "h_half_growth": num(v.h_half_growth),
        "unresolved": v.unresolved,
    })
}

fn trajectory_json(traj: &Trajectory) -> Value {
    let s = &traj.series;
    json!({
        "termination": traj.termination,
        "steps": traj.steps,
        "final_time": num(final_time(traj)),
        "mass_drift": num(max_deviation(&s.mass)),
        "energy_drift": num(max_deviation(&s.energy)),
        "verdict": verdict_json(&traj.verdict),
    })
}

/// Plain evolution, optionally over a list of couplings (`sweep.lambda`).
pub fn run_evolve(cfg: &ExperimentConfig) -> Result<Outcome> {
    let grid = cfg.grid()?;
    let f0 = initial_field(cfg, grid)?;
    let lambdas = if cfg.sweep_lambda.is_empty() {
        vec![resolve_lambda(cfg, &f0, cfg.params.alpha)?.0]
    } else {
        cfg.sweep_lambda.clone()
    };
    let runs: Vec<(HartreeParams, Trajectory)> = lambdas
        .par_iter()
        .map(|&lambda| {
            let p = HartreeParams {
                lambda,
                ..cfg.params
            };
            Ok((p, evolve(&f0, &p)?))
        })
        .collect::<Result<_>>()?;

    let mut monitors = Table::new("monitors", &MONITOR_COLUMNS);
    let mut checks = Vec::new();
    let mut reports = Vec::new();
    for (p, traj) in &runs {
        push_monitors(&mut monitors, &traj.series, &grid, p);
        let s = &traj.series;
        let t = final_time(traj);
        let tag = format!("lambda={}", p.lambda);
        checks.push(Check::at_most(
            &format!("{tag}: mass drift"),
            max_deviation(&s.mass),
            thresholds::MASS_DRIFT_PER_TIME * t,
        ));
        let mut r = trajectory_json(traj);
        r["lambda"] = num(p.lambda);
        if p.lambda == 0.0 {
            let drift = [&s.h_half, &s.h_one, &s.h_two]
                .iter()
                .map(|v| max_deviation(v))
                .fold(0.0, f64::max);
            r["free_norm_drift"] = num(drift);
            checks.push(Check::at_most(
                &format!("{tag}: H^s norm drift"),
                drift,
                thresholds::FREE_NORM_DRIFT,
            ));
        }
        reports.push(r);
    }
    let mut m = header(cfg, &grid);
    m.insert(
        "initial".into(),
        serde_json::to_value(&cfg.initial).unwrap(),
    );
    m.insert("params".into(), params_json(&cfg.params));
    m.insert("runs".into(), Value::Array(reports));
    Ok(Outcome {
        report: Value::Object(m),
        tables: vec![monitors],
        checks,
    })
}

/// One row of the regularization sweep.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub sup_l2_distance: f64,
    pub sup_h_half_distance: f64,
    pub steps: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepReport {
    /// Sorted by `alpha` descending.
    pub rows: Vec<SweepRow>,
    /// `None` when some distance is zero or not finite (e.g. `λ = 0`).
    pub fitted_slope_l2: Option<f64>,
    pub fitted_slope_h_half: Option<f64>,
    pub reference_alpha_range: [f64; 2],
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 2 || xs.len() != ys.len() {
        return None;
    }
    if xs.iter().chain(ys).any(|v| !(v.is_finite() && *v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Builds the report from unordered rows.
pub fn sweep_report(mut rows: Vec<SweepRow>) -> SweepReport {
    rows.sort_by(|a, b| b.alpha.total_cmp(&a.alpha));
    let alphas: Vec<f64> = rows.iter().map(|r| r.alpha).collect();
    let l2: Vec<f64> = rows.iter().map(|r| r.sup_l2_distance).collect();
    let hh: Vec<f64> = rows.iter().map(|r| r.sup_h_half_distance).collect();
    SweepReport {
        fitted_slope_l2: log_log_slope(&alphas, &l2),
        fitted_slope_h_half: log_log_slope(&alphas, &hh),
        reference_alpha_range: [
            alphas.last().copied().unwrap_or(f64::NAN),
            alphas.first().copied().unwrap_or(f64::NAN),
        ],
        rows,
    }
}

fn describe_stop(alpha: f64, traj: &Trajectory) -> CliError {
    CliError::Numeric(format!(
        "sweep aborted: run with alpha = {alpha} ended with {:?} at t = {}",
        traj.termination,
        final_time(traj)
    ))
}

/// Distances between the unregularized flow and each regularized one,
/// sampled at the monitor times.
pub fn run_reg_sweep(cfg: &ExperimentConfig) -> Result<Outcome> {
    let grid = cfg.grid()?;
    let f0 = initial_field(cfg, grid)?;
    let (lambda, _) = resolve_lambda(cfg, &f0, 0.0)?;
    let reference_params = HartreeParams {
        lambda,
        alpha: 0.0,
        ..cfg.params
    };
    let mut snapshots: Vec<(f64, Field)> = Vec::new();
    let reference = evolve_with(&f0, &reference_params, |s, f| {
        snapshots.push((s.time, f.clone()))
    })?;
    if reference.termination != Termination::Completed {
        return Err(describe_stop(0.0, &reference));
    }

    let rows: Vec<SweepRow> = cfg
        .sweep_alpha
        .par_iter()
        .map(|&alpha| {
            let p = HartreeParams {
                alpha,
                ..reference_params
            };
            let (mut k, mut sup_l2, mut sup_h) = (0usize, 0.0f64, 0.0f64);
            let mut failure: Option<CliError> = None;
            let traj = evolve_with(&f0, &p, |s, f| {
                if failure.is_some() {
                    return;
                }
                let distances = match snapshots.get(k) {
                    Some((t, g)) if (t - s.time).abs() <= 1e-12 * t.abs().max(1.0) => f
                        .sub(g)
                        .and_then(|d| Ok((d.norm(), sobolev_norm(&d, SobolevIndex::HALF)?)))
                        .map_err(CliError::from),
                    _ => Err(CliError::Numeric(format!(
                        "alpha = {alpha}: monitor time {} has no reference sample; \
                         lower params.dt_init so both runs take the same steps",
                        s.time
                    ))),
                };
                match distances {
                    Ok((l2, h)) => {
                        sup_l2 = sup_l2.max(l2);
                        sup_h = sup_h.max(h);
                    }
                    Err(e) => failure = Some(e),
                }
                k += 1;
            })?;
            if let Some(e) = failure {
                return Err(e);
            }
            if traj.termination != Termination::Completed {
                return Err(describe_stop(alpha, &traj));
            }
            if k != snapshots.len() {
                return Err(CliError::Numeric(format!(
                    "alpha = {alpha}: {k} monitor samples against {} in the reference run",
                    snapshots.len()
                )));
            }
            Ok(SweepRow {
                alpha,
                sup_l2_distance: sup_l2,
                sup_h_half_distance: sup_h,
                steps: traj.steps,
            })
        })
        .collect::<Result<_>>()?;
    let sweep = sweep_report(rows);

    let mut table = Table::new(
        "sweep",
        &[
            "alpha",
            "sup_l2_distance",
            "sup_h_half_distance",
            "n",
            "box_length",
            "lambda",
            "dt_init",
            "t_end",
        ],
    );
    for r in &sweep.rows {
        table.push(vec![
            r.alpha,
            r.sup_l2_distance,
            r.sup_h_half_distance,
            grid.n() as f64,
            grid.box_length(),
            lambda,
            reference_params.dt_init,
            reference_params.t_end,
        ]);
    }
    let mut monitors = Table::new("monitors", &MONITOR_COLUMNS);
    push_monitors(&mut monitors, &reference.series, &grid, &reference_params);

    let slope = |s: Option<f64>| s.map_or(Value::Null, num);
    let mut m = header(cfg, &grid);
    m.insert(
        "initial".into(),
        serde_json::to_value(&cfg.initial).unwrap(),
    );
    m.insert("params".into(), params_json(&reference_params));
    m.insert("rows".into(), serde_json::to_value(&sweep.rows).unwrap());
    m.insert("fitted_slope_l2".into(), slope(sweep.fitted_slope_l2));
    m.insert(
        "fitted_slope_h_half".into(),
        slope(sweep.fitted_slope_h_half),
    );
    m.insert(
        "slopes_defined".into(),
        json!(sweep.fitted_slope_l2.is_some() && sweep.fitted_slope_h_half.is_some()),
    );
    m.insert(
        "reference_alpha_range".into(),
        json!(sweep.reference_alpha_range.map(num)),
    );
    m.insert("reference".into(), trajectory_json(&reference));

    let checks = vec![
        Check::within(
            "L2 distance slope",
            sweep.fitted_slope_l2,
            thresholds::SLOPE_L2.0,
            thresholds::SLOPE_L2.1,
        ),
        Check::within(
            "H^1/2 distance slope",
            sweep.fitted_slope_h_half,
            thresholds::SLOPE_H_HALF_MIN,
            f64::INFINITY,
        ),
    ];
    Ok(Outcome {
        report: Value::Object(m),
        tables: vec![table, monitors],
        checks,
    })
}

/// Collapse study: hypothesis check on the datum, then one evolution (and
/// optionally a second one with half the step).
pub fn run_blowup(cfg: &ExperimentConfig) -> Result<Outcome> {
    let grid = cfg.grid()?;
    let f0 = initial_field(cfg, grid)?;
    let alpha = cfg.params.alpha;
    let (lambda, threshold) = resolve_lambda(cfg, &f0, alpha)?;
    let fl = blowup::fl_check(&f0, lambda, alpha, cfg.blowup.radial_tol)?;
    let p = HartreeParams {
        lambda,
        ..cfg.params
    };
    let mut variants = vec![p];
    if cfg.blowup.dt_halving {
        variants.push(HartreeParams {
            dt_init: 0.5 * p.dt_init,
            ..p
        });
    }
    let runs: Vec<Trajectory> = variants
        .par_iter()
        .map(|q| evolve(&f0, q).map_err(CliError::from))
        .collect::<Result<_>>()?;
    let traj = &runs[0];

    let mut monitors = Table::new("monitors", &MONITOR_COLUMNS);
    push_monitors(&mut monitors, &traj.series, &grid, &p);

    let mut m = header(cfg, &grid);
    m.insert(
        "initial".into(),
        serde_json::to_value(&cfg.initial).unwrap(),
    );
    m.insert("params".into(), params_json(&p));
    m.insert(
        "lambda_threshold".into(),
        threshold.map_or(Value::Null, num),
    );
    m.insert("fl_check".into(), serde_json::to_value(fl).unwrap());
    m.insert("run".into(), trajectory_json(traj));

    let mut checks = Vec::new();
    let v = traj.verdict;
    if fl.eligible {
        checks.push(Check::flag(
            "collapse detected",
            v.detected,
            "detected before t_end",
        ));
        checks.push(Check::at_least(
            "H^1/2 growth at detection",
            v.h_half_growth,
            thresholds::BLOWUP_GROWTH_MIN,
        ));
    } else {
        checks.push(Check::flag(
            "no collapse detected",
            !v.detected,
            "not detected",
        ));
        checks.push(Check::at_most(
            "mass drift",
            max_deviation(&traj.series.mass),
            thresholds::MASS_DRIFT_QUIET,
        ));
    }
    if let Some(half) = runs.get(1) {
        let shift = match (v.t_detect, half.verdict.t_detect) {
            (Some(a), Some(b)) => Some((a - b).abs() / a),
            (None, None) => Some(0.0),
            _ => None,
        };
        m.insert(
            "halved_dt".into(),
            json!({
                "dt_init": num(variants[1].dt_init),
                "run": trajectory_json(half),
                "t_detect_relative_shift": shift.map_or(Value::Null, num),
            }),
        );
        checks.push(Check::within(
            "t_detect shift under dt halving",
            shift,
            0.0,
            thresholds::T_DETECT_SHIFT_MAX,
        ));
    }
    Ok(Outcome {
        report: Value::Object(m),
        tables: vec![monitors],
        checks,
    })
}

fn estimate_json(start: StartSpec, e: &RatioEstimate, radial: f64) -> Value {
    json!({
        "start": start.label(),
        "ratio": num(e.ratio),
        "lambda_upper": num(e.lambda_upper),
        "iterations": e.iterations,
        "converged": e.converged,
        "second_moment": num(e.second_moment),
        "radial_deviation": num(radial),
    })
}

/// Ascent on the Weinstein-type ratio from each configured start, plus an
/// optional refinement run and a restart from the first maximizer.
pub fn run_critical_lambda(cfg: &ExperimentConfig) -> Result<Outcome> {
    let grid = cfg.grid()?;
    let c = &cfg.critical;
    let ascend = |f: &Field| maximize_ratio(f, c.max_iters, c.step, c.tol).map_err(CliError::from);
    let estimates: Vec<(RatioEstimate, f64)> = c
        .starts
        .par_iter()
        .map(|s| {
            let e = ascend(&s.build(grid)?)?;
            let radial = blowup::radial_deviation(&e.profile)?;
            Ok((e, radial))
        })
        .collect::<Result<_>>()?;
    let first = &estimates[0].0;
    let restart = ascend(&first.profile)?;
    let refinement = c
        .refine_n
        .map(|n| {
            let fine = Grid::new(n, grid.box_length())?;
            let e = ascend(&c.starts[0].build(fine)?)?;
            let delta = (e.lambda_upper - first.lambda_upper).abs() / first.lambda_upper;
            Ok::<_, CliError>((n, e, delta))
        })
        .transpose()?;

    let uppers: Vec<f64> = estimates.iter().map(|(e, _)| e.lambda_upper).collect();
    let lo = uppers.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = uppers.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let spread = (hi - lo) / lo;

    let mut history = Table::new(
        "monitors",
        &[
            "start",
            "iteration",
            "ratio",
            "lambda_upper",
            "n",
            "box_length",
        ],
    );
    for (i, (e, _)) in estimates.iter().enumerate() {
        for (it, r) in e.history.iter().enumerate() {
            history.push(vec![
                i as f64,
                it as f64,
                *r,
                1.0 / r,
                grid.n() as f64,
                grid.box_length(),
            ]);
        }
    }

    let mut m = header(cfg, &grid);
    m.insert(
        "optimizer".into(),
        json!({"max_iters": c.max_iters, "step": num(c.step), "tol": num(c.tol)}),
    );
    m.insert(
        "starts".into(),
        Value::Array(
            c.starts
                .iter()
                .zip(&estimates)
                .map(|(s, (e, r))| estimate_json(*s, e, *r))
                .collect(),
        ),
    );
    m.insert("lambda_upper_best".into(), num(lo));
    m.insert("relative_spread".into(), num(spread));
    m.insert(
        "restart".into(),
        json!({"iterations": restart.iterations, "converged": restart.converged,
               "lambda_upper": num(restart.lambda_upper)}),
    );
    m.insert(
        "bracket".into(),
        json!({"lower": num(4.0 / PI), "upper": num(2.7)}),
    );

    let mut checks: Vec<Check> = estimates
        .iter()
        .zip(&c.starts)
        .flat_map(|((e, _), s)| {
            [
                Check::within(
                    &format!("{}: lambda_upper", s.label()),
                    Some(e.lambda_upper),
                    thresholds::LAMBDA_UPPER.0,
                    thresholds::LAMBDA_UPPER.1,
                ),
                Check::flag(
                    &format!("{}: converged", s.label()),
                    e.converged,
                    "converged",
                ),
            ]
        })
        .collect();
    if estimates.len() > 1 {
        checks.push(Check::at_most(
            "spread between starts",
            spread,
            thresholds::START_SPREAD_MAX,
        ));
    }
    checks.push(Check::at_most(
        "restart iterations",
        restart.iterations as f64,
        thresholds::RESTART_ITERATIONS_MAX as f64,
    ));
    if let Some((n, e, delta)) = &refinement {
        let radial = blowup::radial_deviation(&e.profile)?;
        let mut r = estimate_json(c.starts[0], e, radial);
        r["grid"] = grid_json(&Grid::new(*n, grid.box_length())?);
        r["relative_delta"] = num(*delta);
        m.insert("refinement".into(), r);
        checks.push(Check::at_most(
            "refinement delta",
            *delta,
            thresholds::REFINEMENT_DELTA_MAX,
        ));
    }
    Ok(Outcome {
        report: Value::Object(m),
        tables: vec![history],
        checks,
    })
}

/// Tally for one identity of the Fock suite.
#[derive(Clone, Debug)]
struct Identity {
    name: &'static str,
    tolerance: f64,
    max_defect: f64,
    evaluated: usize,
    skipped: usize,
    failed: usize,
    first_skip: Option<String>,
    first_error: Option<String>,
}

impl Identity {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self {
            name,
            tolerance,
            max_defect: 0.0,
            evaluated: 0,
            skipped: 0,
            failed: 0,
            first_skip: None,
            first_error: None,
        }
    }

    /// Records a defect, a truncation-risk skip, or any other error as a failure.
    fn record(&mut self, r: collapsar_core::Result<f64>) {
        match r {
            Ok(d) => {
                self.evaluated += 1;
                if !(d <= self.tolerance) {
                    self.failed += 1;
                }
                if !(d <= self.max_defect) {
                    self.max_defect = d;
                }
            }
            Err(collapsar_core::Error::TruncationRisk(msg)) => {
                self.skipped += 1;
                self.first_skip.get_or_insert(msg);
            }
            Err(e) => {
                self.failed += 1;
                self.first_error.get_or_insert(e.to_string());
            }
        }
    }

    fn merge(&mut self, other: &Identity) {
        self.evaluated += other.evaluated;
        self.skipped += other.skipped;
        self.failed += other.failed;
        if !(other.max_defect <= self.max_defect) {
            self.max_defect = other.max_defect;
        }
        if self.first_skip.is_none() {
            self.first_skip.clone_from(&other.first_skip);
        }
        if self.first_error.is_none() {
            self.first_error.clone_from(&other.first_error);
        }
    }

    fn status(&self) -> &'static str {
        if self.failed > 0 {
            "fail"
        } else if self.skipped > 0 {
            "degraded"
        } else {
            "pass"
        }
    }

    fn to_json(&self) -> Value {
        json!({
            "tolerance": num(self.tolerance),
            "max_defect": if self.evaluated > 0 { num(self.max_defect) } else { Value::Null },
            "evaluated": self.evaluated,
            "skipped": self.skipped,
            "failed": self.failed,
            "status": self.status(),
            "skip_reason": self.first_skip,
            "error": self.first_error,
        })
    }
}

fn fock_identities() -> Vec<Identity> {
    vec![
        Identity::new("coherent_overlap", 1e-6),
        Identity::new("number_mean", 1e-8),
        Identity::new("number_variance", 1e-8),
        Identity::new("poisson_statistics", 1e-8),
        Identity::new("weyl_composition", 1e-8),
        Identity::new("weyl_unitarity", 1e-8),
        Identity::new("weyl_inverse", 1e-8),
        Identity::new("coherent_series", 1e-10),
        Identity::new("ccr", 1e-12),
        Identity::new("annihilation_number_bound", 1e-12),
        Identity::new("creation_number_bound", 1e-12),
        Identity::new("phase_average", 1e-6),
    ]
}

fn complex_normal(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Uniform direction, norm uniform in `[0, max_norm]`.
fn random_mode_vector(rng: &mut impl Rng, modes: usize, max_norm: f64) -> ModeVector {
    let v = ModeVector((0..modes).map(|_| complex_normal(rng)).collect());
    let r = max_norm * rng.random::<f64>();
    v.scaled(Complex64::new(r / v.norm().max(f64::MIN_POSITIVE), 0.0))
}

fn random_unit_mode_vector(rng: &mut impl Rng, modes: usize) -> ModeVector {
    let v = ModeVector((0..modes).map(|_| complex_normal(rng)).collect());
    v.scaled(Complex64::new(1.0 / v.norm().max(f64::MIN_POSITIVE), 0.0))
}

/// Normalized random vector supported on sectors with at most `level` particles.
fn random_state(rng: &mut impl Rng, space: &Arc<FockSpace>, level: usize) -> FockVector {
    let coeffs: Vec<Complex64> = space
        .totals()
        .iter()
        .map(|&t| {
            let c = complex_normal(rng);
            if t <= level {
                c
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    let v = FockVector::new(Arc::clone(space), coeffs).expect("length matches the space");
    let n = v.norm();
    v.scaled(Complex64::new(1.0 / n, 0.0))
}

/// Identities whose continuum value differs from the truncated one by the
/// coherent-state weight above the cutoff are skipped as a truncation risk
/// when that weight, `P(Poisson(mean) > n_max - level)`, exceeds `tol²`
/// (amplitude errors scale like its square root).
fn truncation_guard(
    space: &FockSpace,
    mean: f64,
    level: usize,
    tol: f64,
) -> collapsar_core::Result<()> {
    let k = space.n_max().saturating_sub(level);
    let tail = fock::poisson_tail(mean, k);
    if tail > tol * tol {
        return Err(collapsar_core::Error::TruncationRisk(format!(
            "coherent weight {tail:.3e} above {k} particles exceeds tolerance² {:.1e}",
            tol * tol
        )));
    }
    Ok(())
}

fn poisson_defect(state: &FockVector, mu: f64) -> f64 {
    let mut log_fact = 0.0;
    let mut worst = 0.0f64;
    for (n, w) in state.sector_weights().iter().enumerate() {
        if n > 0 {
            log_fact += (n as f64).ln();
        }
        let expect = match (mu == 0.0, n) {
            (true, 0) => 1.0,
            (true, _) => 0.0,
            _ => (-mu + n as f64 * mu.ln() - log_fact).exp(),
        };
        worst = worst.max((w - expect).abs());
    }
    worst
}

const LOW_LEVEL: usize = 4;

fn fock_trial(space: &Arc<FockSpace>, cfg: &ExperimentConfig, seed: u64) -> Vec<Identity> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes = space.modes();
    let n_max = space.n_max();
    let rmax = cfg.fock.f_norm_max;
    let f = random_mode_vector(&mut rng, modes, rmax);
    let g = random_mode_vector(&mut rng, modes, rmax);
    let low = random_state(&mut rng, space, LOW_LEVEL.min(n_max));
    let below_cutoff = random_state(&mut rng, space, n_max.saturating_sub(2));
    let unit = random_unit_mode_vector(&mut rng, modes);
    let mu = f.norm_sqr();
    let mut ids = fock_identities();
    let mut record = |name: &str,
                      guard: Option<(f64, usize)>,
                      check: &dyn Fn() -> collapsar_core::Result<f64>| {
        let id = ids.iter_mut().find(|i| i.name == name).unwrap();
        let r = match guard {
            Some((mean, level)) => {
                truncation_guard(space, mean, level, id.tolerance).and_then(|_| check())
            }
            None => check(),
        };
        id.record(r);
    };

    record("coherent_overlap", Some((mu.max(g.norm_sqr()), 0)), &|| {
        let a = fock::coherent(&f, space)?;
        let b = fock::coherent(&g, space)?;
        let d = ModeVector(f.0.iter().zip(&g.0).map(|(x, y)| x - y).collect());
        Ok((fock::overlap(&a, &b)?.norm() - (-0.5 * d.norm_sqr()).exp()).abs())
    });
    record("number_mean", Some((mu, 0)), &|| {
        Ok((fock::number_moments(&fock::coherent(&f, space)?).0 - mu).abs())
    });
    record("number_variance", Some((mu, 0)), &|| {
        Ok((fock::number_moments(&fock::coherent(&f, space)?).1 - mu).abs())
    });
    record("poisson_statistics", Some((mu, 0)), &|| {
        Ok(poisson_defect(&fock::coherent(&f, space)?, mu))
    });
    record("coherent_series", Some((mu, 0)), &|| {
        fock::coherent(&f, space)?.distance(&fock::coherent_series(&f, space)?)
    });
    let sum = f.add(&g);
    record(
        "weyl_composition",
        Some(((f.norm() + g.norm()).powi(2), LOW_LEVEL)),
        &|| {
            let lhs = fock::weyl(&f, &fock::weyl(&g, &low)?)?;
            let phase = Complex64::from_polar(1.0, -f.inner(&g).im);
            let rhs = fock::weyl(&sum, &low)?.scaled(phase);
            lhs.distance(&rhs)
        },
    );
    // exact on the truncated space: W(f) is the exponential of an
    // anti-Hermitian matrix there
    record("weyl_unitarity", None, &|| {
        Ok((fock::weyl(&f, &low)?.norm() - 1.0).abs())
    });
    record("weyl_inverse", None, &|| {
        let back = fock::weyl(&f.scaled(Complex64::new(-1.0, 0.0)), &fock::weyl(&f, &low)?)?;
        back.distance(&low)
    });
    let scale = 1.0 + f.norm() * g.norm();
    record("ccr", None, &|| {
        Ok(fock::ccr_defect(&f, &g, &below_cutoff)? / scale)
    });
    record("annihilation_number_bound", None, &|| {
        Ok(fock::number_bound_defect(&f, &below_cutoff)?.0.max(0.0))
    });
    record("creation_number_bound", None, &|| {
        Ok(fock::number_bound_defect(&f, &below_cutoff)?.1.max(0.0))
    });
    for particles in 1..=cfg.fock.max_particles {
        record("phase_average", Some((particles as f64, 0)), &|| {
            let pa = fock::phase_average_product_state(&unit, particles, space)?;
            pa.state
                .distance(&fock::product_state(&unit, particles, space)?)
        });
    }
    ids
}

/// Randomized identity suite on the truncated Fock space.
pub fn run_fock_check(cfg: &ExperimentConfig) -> Result<Outcome> {
    let fc = &cfg.fock;
    let space = FockSpace::new(fc.modes, fc.n_max)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let seeds: Vec<u64> = (0..fc.trials).map(|_| rng.next_u64()).collect();
    let per_trial: Vec<Vec<Identity>> = seeds
        .par_iter()
        .map(|&s| fock_trial(&space, cfg, s))
        .collect();
    let mut total = fock_identities();
    for trial in &per_trial {
        for (acc, t) in total.iter_mut().zip(trial) {
            acc.merge(t);
        }
    }
    let status = if total.iter().any(|i| i.failed > 0) {
        "fail"
    } else if total.iter().any(|i| i.skipped > 0) {
        "degraded"
    } else {
        "pass"
    };

    let mut m = serde_json::Map::new();
    m.insert("experiment".into(), json!(cfg.experiment.name()));
    m.insert("seed".into(), json!(cfg.seed));
    m.insert(
        "space".into(),
        json!({"modes": fc.modes, "n_max": fc.n_max, "dim": space.dim()}),
    );
    m.insert(
        "trials".into(),
        json!({"count": fc.trials, "f_norm_max": num(fc.f_norm_max), "max_particles": fc.max_particles}),
    );
    m.insert(
        "identities".into(),
        Value::Object(
            total
                .iter()
                .map(|i| (i.name.to_string(), i.to_json()))
                .collect(),
        ),
    );
    m.insert("status".into(), json!(status));

    let mut checks: Vec<Check> = total
        .iter()
        .map(|i| {
            Check::new(
                i.name,
                (i.evaluated > 0).then_some(i.max_defect),
                &format!("every evaluated trial within {:e}", i.tolerance),
                i.failed == 0,
            )
        })
        .collect();
    checks.push(Check::flag(
        "suite status",
        status != "fail",
        "pass or degraded",
    ));
    Ok(Outcome {
        report: Value::Object(m),
        tables: vec![],
        checks,
    })
}

/// True when both homogeneous seminorms are large enough for the Kato and
/// Hardy ratios to be meaningful.
pub fn passes_seminorm_guard(f: &Field) -> Result<bool> {
    let mass = f.norm_sqr();
    let half = homogeneous_energy(f, SobolevIndex::HALF)?;
    let one = homogeneous_energy(f, SobolevIndex::ONE)?;
    Ok(mass > 0.0 && half > SEMINORM_GUARD * mass && one > SEMINORM_GUARD * mass)
}

/// Band-limited Gaussian-random field under a random anisotropic Gaussian
/// envelope, normalized.
pub fn random_smooth_field(
    grid: Grid,
    band: usize,
    envelope: (f64, f64),
    seed: u64,
) -> Result<Field> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.n();
    let b = band as i64;
    let mut spectrum = vec![Complex64::new(0.0, 0.0); grid.len()];
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                let m = [
                    grid.signed_mode(i),
                    grid.signed_mode(j),
                    grid.signed_mode(l),
                ];
                if m.iter().all(|v| v.abs() <= b) {
                    spectrum[grid.index(i, j, l)] = complex_normal(&mut rng);
                }
            }
        }
    }
    let base = spectral::to_position(&Field::new(grid, spectrum, Representation::Frequency)?)?;
    let half_box = 0.125 * grid.box_length();
    let widths: Vec<f64> = (0..3)
        .map(|_| rng.random_range(envelope.0..=envelope.1))
        .collect();
    let centers: Vec<f64> = (0..3)
        .map(|_| rng.random_range(-half_box..=half_box))
        .collect();
    let mut k = 0;
    let values: Vec<Complex64> = base.values().to_vec();
    let shaped = Field::from_fn(grid, |x| {
        let e: f64 = (0..3)
            .map(|d| (x[d] - centers[d]).powi(2) / (4.0 * widths[d] * widths[d]))
            .sum();
        let v = values[k] * (-e).exp();
        k += 1;
        v
    });
    Ok(shaped.normalized()?)
}

/// Kato and Hardy ratios over a seeded family of random smooth fields.
pub fn run_inequalities(cfg: &ExperimentConfig) -> Result<Outcome> {
    let grid = cfg.grid()?;
    let q = &cfg.inequalities;
    let coulomb = build_kernel(grid, 0.0)?;
    let inverse_square = build_inverse_square_kernel(grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let seeds: Vec<u64> = (0..q.trials).map(|_| rng.next_u64()).collect();
    let results: Vec<Option<(f64, f64)>> = seeds
        .par_iter()
        .map(|&s| {
            let f = random_smooth_field(grid, q.band, (q.envelope_min, q.envelope_max), s)?;
            if !passes_seminorm_guard(&f)? {
                return Ok(None);
            }
            Ok(Some((
                kato_ratio_with(&coulomb, &f)?,
                hardy_ratio_with(&inverse_square, &f)?,
            )))
        })
        .collect::<Result<_>>()?;

    let mut table = Table::new(
        "sweep",
        &[
            "trial",
            "kato_ratio",
            "hardy_ratio",
            "skipped",
            "n",
            "box_length",
            "band",
        ],
    );
    let (mut max_kato, mut max_hardy) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut skipped = 0;
    for (i, r) in results.iter().enumerate() {
        let (k, h, s) = match r {
            Some((k, h)) => {
                max_kato = max_kato.max(*k);
                max_hardy = max_hardy.max(*h);
                (*k, *h, 0.0)
            }
            None => {
                skipped += 1;
                (f64::NAN, f64::NAN, 1.0)
            }
        };
        table.push(vec![
            i as f64,
            k,
            h,
            s,
            grid.n() as f64,
            grid.box_length(),
            q.band as f64,
        ]);
    }
    let evaluated = q.trials - skipped;
    let mut m = header(cfg, &grid);
    m.insert(
        "family".into(),
        json!({"trials": q.trials, "band": q.band,
               "envelope_min": num(q.envelope_min), "envelope_max": num(q.envelope_max)}),
    );
    m.insert("evaluated".into(), json!(evaluated));
    m.insert("skipped".into(), json!(skipped));
    m.insert("max_kato_ratio".into(), num(max_kato));
    m.insert("max_hardy_ratio".into(), num(max_hardy));
    m.insert(
        "constants".into(),
        json!({"kato": num(PI / 2.0), "hardy": num(4.0)}),
    );
    let finite = |v: f64| v.is_finite().then_some(v);
    let checks = vec![
        Check::within(
            "max Kato ratio",
            finite(max_kato),
            f64::NEG_INFINITY,
            thresholds::KATO_MAX,
        ),
        Check::within(
            "max Hardy ratio",
            finite(max_hardy),
            f64::NEG_INFINITY,
            thresholds::HARDY_MAX,
        ),
    ];
    Ok(Outcome {
        report: Value::Object(m),
        tables: vec![table],
        checks,
    })
}
