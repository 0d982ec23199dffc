//! Time integration of `i∂tφ = √(1-Δ)φ - λ(K_α ∗ |φ|²)φ`.
//!
//! Each step is the palindromic composition free(dt/2) ∘ phase(dt) ∘ free(dt/2)
//! of two exactly solvable sub-flows, so the scheme is unitary and second
//! order. The step size follows `dt = min(dt_init, c / ‖φ‖_{H^{1/2}}^p)`.

use crate::blowup::{self, BlowupDetector, BlowupThresholds, BlowupVerdict};
use crate::energy;
use crate::error::{Error, Result};
use crate::field::{Field, Representation};
use crate::interaction::{build_kernel, InteractionKernel};
use crate::spectral::{self, Multiplier};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HartreeParams {
    pub lambda: f64,
    pub alpha: f64,
    pub dt_init: f64,
    pub dt_min: f64,
    pub t_end: f64,
    pub adapt_exponent: f64,
    pub cfl_like_constant: f64,
    /// Steps between monitor samples (and step-size updates).
    pub monitor_stride: usize,
    /// Keep a snapshot every this many monitor samples; 0 keeps none.
    pub snapshot_stride: usize,
    pub blowup: BlowupThresholds,
}

impl HartreeParams {
    pub fn new(lambda: f64, alpha: f64, dt_init: f64, t_end: f64) -> Self {
        Self {
            lambda,
            alpha,
            dt_init,
            dt_min: 1e-8 * t_end,
            t_end,
            adapt_exponent: 2.0,
            cfl_like_constant: 0.1,
            monitor_stride: 10,
            snapshot_stride: 0,
            blowup: BlowupThresholds::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !self.lambda.is_finite() {
            return bad(format!("lambda must be finite, got {}", self.lambda));
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return bad(format!("alpha must be >= 0, got {}", self.alpha));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        if !(self.dt_init.is_finite() && self.dt_init > 0.0) {
            return bad(format!("dt_init must be positive, got {}", self.dt_init));
        }
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt_init) {
            return bad(format!(
                "need 0 < dt_min <= dt_init, got dt_min = {}, dt_init = {}",
                self.dt_min, self.dt_init
            ));
        }
        if !(self.cfl_like_constant.is_finite() && self.cfl_like_constant > 0.0) {
            return bad("cfl_like_constant must be positive".into());
        }
        if !self.adapt_exponent.is_finite() {
            return bad("adapt_exponent must be finite".into());
        }
        if self.monitor_stride == 0 {
            return bad("monitor_stride must be at least 1".into());
        }
        Ok(())
    }

    /// Step size for the current `H^{1/2}` norm.
    pub fn adaptive_dt(&self, h_half: f64) -> f64 {
        self.dt_init
            .min(self.cfl_like_constant / h_half.powf(self.adapt_exponent))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Completed,
    BlowupDetected,
    DtUnderflow,
}

/// One row of monitors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonitorSample {
    pub time: f64,
    pub dt: f64,
    pub mass: f64,
    pub energy: f64,
    pub h_half: f64,
    pub h_one: f64,
    pub h_two: f64,
    pub tail: f64,
}

/// Column-oriented monitor history.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MonitorSeries {
    pub time: Vec<f64>,
    pub dt: Vec<f64>,
    pub mass: Vec<f64>,
    pub energy: Vec<f64>,
    pub h_half: Vec<f64>,
    pub h_one: Vec<f64>,
    pub h_two: Vec<f64>,
    pub tail: Vec<f64>,
}

impl MonitorSeries {
    pub fn push(&mut self, s: &MonitorSample) {
        self.time.push(s.time);
        self.dt.push(s.dt);
        self.mass.push(s.mass);
        self.energy.push(s.energy);
        self.h_half.push(s.h_half);
        self.h_one.push(s.h_one);
        self.h_two.push(s.h_two);
        self.tail.push(s.tail);
    }

    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    pub fn row(&self, i: usize) -> MonitorSample {
        MonitorSample {
            time: self.time[i],
            dt: self.dt[i],
            mass: self.mass[i],
            energy: self.energy[i],
            h_half: self.h_half[i],
            h_one: self.h_one[i],
            h_two: self.h_two[i],
            tail: self.tail[i],
        }
    }

    pub fn last(&self) -> Option<MonitorSample> {
        (!self.is_empty()).then(|| self.row(self.len() - 1))
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub series: MonitorSeries,
    pub snapshots: Vec<(f64, Field)>,
    pub termination: Termination,
    pub verdict: BlowupVerdict,
    /// Field at the final time reached.
    pub final_field: Field,
    pub steps: usize,
}

impl Trajectory {
    pub fn times(&self) -> &[f64] {
        &self.series.time
    }
}

/// Computes the monitor row for a position-space field.
pub fn monitor_sample(
    f: &Field,
    lambda: f64,
    kernel: &InteractionKernel,
    time: f64,
    dt: f64,
) -> Result<MonitorSample> {
    let fh = spectral::to_frequency(f)?;
    let k2 = f.grid().k_squared();
    let (mut m, mut h1, mut h2, mut h4) = (0.0, 0.0, 0.0, 0.0);
    for (v, &q) in fh.values().iter().zip(&k2) {
        let p = v.norm_sqr();
        let w = 1.0 + q;
        m += p;
        h1 += w.sqrt() * p;
        h2 += w * p;
        h4 += w * w * p;
    }
    let interaction = energy::interaction_energy(f, kernel)?;
    let tail = blowup::tail_fraction(&fh)?;
    Ok(MonitorSample {
        time,
        dt,
        mass: m,
        energy: h1 - lambda * interaction,
        h_half: h1.sqrt(),
        h_one: h2.sqrt(),
        h_two: h4.sqrt(),
        tail,
    })
}

/// `e^{iλ dt V[f]} f` with `V[f] = K ∗ |f|²`; `|f|` and hence `V` are
/// invariant along this sub-flow, so the substep is exact.
pub fn nonlinear_phase_step(
    f: &Field,
    lambda: f64,
    kernel: &InteractionKernel,
    dt: f64,
) -> Result<Field> {
    f.expect(Representation::Position)?;
    if f.grid() != kernel.grid() {
        return Err(Error::GridMismatch);
    }
    if lambda == 0.0 || dt == 0.0 {
        return Ok(f.clone());
    }
    let v = kernel.potential(&f.density()?)?;
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("mean-field potential".into()));
    }
    let c = lambda * dt;
    Ok(f.with_values(
        f.values()
            .iter()
            .zip(&v)
            .map(|(a, &p)| a * Complex64::from_polar(1.0, c * p))
            .collect(),
    ))
}

fn half_step_multiplier(f: &Field, dt: f64) -> Result<Multiplier> {
    Multiplier::radial(*f.grid(), |q| {
        Complex64::from_polar(1.0, -0.5 * dt * (1.0 + q).sqrt())
    })
}

fn strang_step_with(
    f: &Field,
    lambda: f64,
    kernel: &InteractionKernel,
    half: &Multiplier,
    dt: f64,
) -> Result<Field> {
    let a = half.apply(f)?;
    let b = nonlinear_phase_step(&a, lambda, kernel, dt)?;
    half.apply(&b)
}

/// One symmetric split step of size `dt`.
pub fn strang_step(
    f: &Field,
    p: &HartreeParams,
    kernel: &InteractionKernel,
    dt: f64,
) -> Result<Field> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "dt must be positive, got {dt}"
        )));
    }
    f.expect(Representation::Position)?;
    let half = half_step_multiplier(f, dt)?;
    strang_step_with(f, p.lambda, kernel, &half, dt)
}

pub fn evolve(f0: &Field, p: &HartreeParams) -> Result<Trajectory> {
    evolve_with(f0, p, |_, _| {})
}

/// Like [`evolve`], calling `observer` with every monitor row and the field
/// it was computed from (including `t = 0`).
pub fn evolve_with(
    f0: &Field,
    p: &HartreeParams,
    mut observer: impl FnMut(&MonitorSample, &Field),
) -> Result<Trajectory> {
    p.validate()?;
    let m0 = energy::mass(f0);
    if !(m0.is_finite() && m0 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "initial mass must be positive and finite, got {m0}"
        )));
    }
    let mut f = match f0.representation() {
        Representation::Position => f0.clone(),
        Representation::Frequency => spectral::to_position(f0)?,
    };
    let kernel = build_kernel(*f.grid(), p.alpha)?;

    let mut series = MonitorSeries::default();
    let mut snapshots = Vec::new();
    let mut detector = BlowupDetector::new(p.blowup);

    let mut t = 0.0;
    let first = monitor_sample(&f, p.lambda, &kernel, t, 0.0)?;
    let mut dt = p.adaptive_dt(first.h_half);
    let mut record = |s: MonitorSample,
                      f: &Field,
                      series: &mut MonitorSeries,
                      snapshots: &mut Vec<(f64, Field)>| {
        if p.snapshot_stride > 0 && series.len().is_multiple_of(p.snapshot_stride) {
            snapshots.push((s.time, f.clone()));
        }
        series.push(&s);
        observer(&s, f);
    };
    let mut row = MonitorSample { dt, ..first };
    record(row, &f, &mut series, &mut snapshots);
    let mut termination = if detector.observe(t, row.h_half, row.tail).is_some() {
        Termination::BlowupDetected
    } else if dt < p.dt_min {
        Termination::DtUnderflow
    } else {
        Termination::Completed
    };

    let mut steps = 0usize;
    let mut half = half_step_multiplier(&f, dt)?;
    let mut half_dt = dt;
    let t_tol = 1e-12 * p.t_end;
    while termination == Termination::Completed && t < p.t_end - t_tol {
        let last_step = t + dt >= p.t_end - t_tol;
        let h = if last_step { p.t_end - t } else { dt };
        if h != half_dt {
            half = half_step_multiplier(&f, h)?;
            half_dt = h;
        }
        let next = strang_step_with(&f, p.lambda, &kernel, &half, h)?;
        if !next.is_finite() {
            return Err(Error::Breakdown {
                time: t,
                last_good: Box::new(f),
            });
        }
        f = next;
        t = if last_step { p.t_end } else { t + h };
        steps += 1;

        if steps.is_multiple_of(p.monitor_stride) || last_step {
            let s = monitor_sample(&f, p.lambda, &kernel, t, h)?;
            if !(s.h_half.is_finite() && s.energy.is_finite()) {
                return Err(Error::Breakdown {
                    time: t,
                    last_good: Box::new(f),
                });
            }
            row = s;
            record(row, &f, &mut series, &mut snapshots);
            if detector.observe(t, row.h_half, row.tail).is_some() {
                termination = Termination::BlowupDetected;
                break;
            }
            dt = p.adaptive_dt(row.h_half);
            if dt < p.dt_min {
                termination = Termination::DtUnderflow;
            }
        }
    }

    Ok(Trajectory {
        series,
        snapshots,
        termination,
        verdict: detector.verdict(),
        final_field: f,
        steps,
    })
}
