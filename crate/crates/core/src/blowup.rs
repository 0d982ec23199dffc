//! Collapse diagnostics: `H^{1/2}` growth, loss of spectral resolution and
//! the radial/negative-energy/finite-variance hypothesis on initial data.

use crate::energy;
use crate::error::{Error, Result};
use crate::evolution::MonitorSeries;
use crate::field::Field;
use crate::spectral;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlowupReason {
    HHalfThreshold,
    TailThreshold,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowupThresholds {
    /// Trigger when `‖φ_t‖_{H^{1/2}} ≥ h_half_factor · ‖φ_0‖_{H^{1/2}}`.
    pub h_half_factor: f64,
    /// Trigger when the outer-third spectral fraction reaches this value.
    pub tail_max: f64,
}

impl Default for BlowupThresholds {
    fn default() -> Self {
        Self {
            h_half_factor: 10.0,
            tail_max: 0.01,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowupVerdict {
    pub detected: bool,
    pub reason: BlowupReason,
    pub t_detect: Option<f64>,
    /// Monitor values at detection, or at the last sample when nothing fired.
    pub h_half_at_detect: f64,
    pub tail_fraction_at_detect: f64,
    /// Largest `‖φ_t‖_{H^{1/2}} / ‖φ_0‖_{H^{1/2}}` seen up to detection (or the end).
    pub h_half_growth: f64,
    /// Set when the tail trigger fired: the grid no longer resolves the solution.
    pub unresolved: bool,
}

/// Incremental form of [`check`], fed one monitor sample at a time.
#[derive(Clone, Debug)]
pub struct BlowupDetector {
    thresholds: BlowupThresholds,
    h_half_initial: Option<f64>,
    max_growth: f64,
    last: (f64, f64),
    verdict: Option<BlowupVerdict>,
}

impl BlowupDetector {
    pub fn new(thresholds: BlowupThresholds) -> Self {
        Self {
            thresholds,
            h_half_initial: None,
            max_growth: 1.0,
            last: (f64::NAN, f64::NAN),
            verdict: None,
        }
    }

    /// Records a sample; returns the verdict the first time a trigger fires.
    pub fn observe(&mut self, t: f64, h_half: f64, tail: f64) -> Option<BlowupVerdict> {
        if self.verdict.is_some() {
            return self.verdict;
        }
        let h0 = *self.h_half_initial.get_or_insert(h_half);
        let growth = h_half / h0;
        self.max_growth = self.max_growth.max(growth);
        self.last = (h_half, tail);
        let reason = if growth >= self.thresholds.h_half_factor {
            BlowupReason::HHalfThreshold
        } else if tail >= self.thresholds.tail_max {
            BlowupReason::TailThreshold
        } else {
            return None;
        };
        self.verdict = Some(BlowupVerdict {
            detected: true,
            reason,
            t_detect: Some(t),
            h_half_at_detect: h_half,
            tail_fraction_at_detect: tail,
            h_half_growth: self.max_growth,
            unresolved: reason == BlowupReason::TailThreshold,
        });
        self.verdict
    }

    pub fn verdict(&self) -> BlowupVerdict {
        self.verdict.unwrap_or(BlowupVerdict {
            detected: false,
            reason: BlowupReason::None,
            t_detect: None,
            h_half_at_detect: self.last.0,
            tail_fraction_at_detect: self.last.1,
            h_half_growth: self.max_growth,
            unresolved: false,
        })
    }
}

/// Scans a monitor series for the first time either trigger fires.
pub fn check(series: &MonitorSeries, thresholds: BlowupThresholds) -> Result<BlowupVerdict> {
    if series.time.is_empty() {
        return Err(Error::InvalidParameter("empty monitor series".into()));
    }
    let mut det = BlowupDetector::new(thresholds);
    for i in 0..series.time.len() {
        if let Some(v) = det.observe(series.time[i], series.h_half[i], series.tail[i]) {
            return Ok(v);
        }
    }
    Ok(det.verdict())
}

/// Fraction of spectral mass carried by modes with `|m|_∞ > n/3`.
pub fn tail_fraction(f: &Field) -> Result<f64> {
    let fh = spectral::frequency_view(f)?;
    let n = f.grid().n();
    let outer = f.grid().max_abs_mode();
    let mut total = 0.0;
    let mut tail = 0.0;
    for (v, &m) in fh.values().iter().zip(&outer) {
        let p = v.norm_sqr();
        total += p;
        if 3 * m > n {
            tail += p;
        }
    }
    if !(total > 0.0) {
        return Err(Error::Degenerate("tail fraction of a zero field".into()));
    }
    Ok(tail / total)
}

/// Relative L² distance between `f` and its average over lattice shells of
/// equal `|x|²` about the box centre. Zero (to round-off) for radial data.
pub fn radial_deviation(f: &Field) -> Result<f64> {
    let f = match f.representation() {
        crate::field::Representation::Position => std::borrow::Cow::Borrowed(f),
        crate::field::Representation::Frequency => {
            std::borrow::Cow::Owned(spectral::to_position(f)?)
        }
    };
    let n = f.grid().n();
    let half = (n / 2) as i64;
    let shell = |s: usize| {
        let d = s as i64 - half;
        (d * d) as u64
    };
    let mut keys = Vec::with_capacity(f.grid().len());
    let mut sums: HashMap<u64, (Complex64, usize)> = HashMap::new();
    let vals = f.values();
    let mut idx = 0;
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                let key = shell(i) + shell(j) + shell(l);
                let e = sums.entry(key).or_insert((Complex64::default(), 0));
                e.0 += vals[idx];
                e.1 += 1;
                keys.push(key);
                idx += 1;
            }
        }
    }
    let mut dev = 0.0;
    let mut norm = 0.0;
    for (v, key) in vals.iter().zip(&keys) {
        let (s, c) = sums[key];
        dev += (v - s / c as f64).norm_sqr();
        norm += v.norm_sqr();
    }
    if !(norm > 0.0) {
        return Err(Error::Degenerate("radial deviation of a zero field".into()));
    }
    Ok((dev / norm).sqrt())
}

/// Hypothesis check for finite-time collapse of the initial datum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FLCriterion {
    pub is_radial: bool,
    pub radial_deviation: f64,
    pub energy_negative: bool,
    pub energy_total: f64,
    pub variance_finite: bool,
    /// `∫ |x|² |φ|²` about the box centre.
    pub variance: f64,
    pub eligible: bool,
}

pub fn fl_check(f: &Field, lambda: f64, alpha: f64, radial_tol: f64) -> Result<FLCriterion> {
    if !(energy::mass(f) > 0.0) {
        return Err(Error::Degenerate(
            "collapse criterion needs a nonzero field".into(),
        ));
    }
    let radial_deviation = radial_deviation(f)?;
    let e = energy::energy(f, lambda, alpha)?;
    let rho = f.density()?;
    let mut variance = 0.0;
    f.grid().for_each_node(|i, x| {
        variance += (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) * rho[i];
    });
    variance *= f.grid().cell_volume();
    let is_radial = radial_deviation <= radial_tol;
    let energy_negative = e.total < 0.0;
    let variance_finite = variance.is_finite();
    Ok(FLCriterion {
        is_radial,
        radial_deviation,
        energy_negative,
        energy_total: e.total,
        variance_finite,
        variance,
        eligible: is_radial && energy_negative && variance_finite,
    })
}
