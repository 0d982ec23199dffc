//! `key = value` configuration files with `#` comments and dotted keys.
//!
//! ```text
//! experiment = reg-sweep
//! grid.n = 64
//! grid.box_length = 32
//! initial = gaussian
//! initial.sigma = 1.0
//! params.lambda = 1.0
//! sweep.alpha = 0.2, 0.1, 0.05, 0.025, 0.0125
//! ```
//!
//! Unknown keys are rejected so that typos do not silently fall back to
//! defaults.

use crate::{CliError, Result};
use collapsar_core::blowup::BlowupThresholds;
use collapsar_core::evolution::HartreeParams;
use collapsar_core::{Complex64, Field, Grid, Representation};
use serde::Serialize;
use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Evolve,
    RegSweep,
    Blowup,
    CriticalLambda,
    FockCheck,
    Inequalities,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::Evolve,
        Experiment::RegSweep,
        Experiment::Blowup,
        Experiment::CriticalLambda,
        Experiment::FockCheck,
        Experiment::Inequalities,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Evolve => "evolve",
            Experiment::RegSweep => "reg-sweep",
            Experiment::Blowup => "blowup",
            Experiment::CriticalLambda => "critical-lambda",
            Experiment::FockCheck => "fock-check",
            Experiment::Inequalities => "inequalities",
        }
    }

    fn needs_evolution(self) -> bool {
        matches!(
            self,
            Experiment::Evolve | Experiment::RegSweep | Experiment::Blowup
        )
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Experiment::ALL.iter().map(|e| e.name()).collect();
                CliError::Config(format!(
                    "unknown experiment `{s}`, expected one of {}",
                    names.join(", ")
                ))
            })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialSpec {
    Gaussian { sigma: f64, center: [f64; 3] },
    PlaneWave { k_index: [i64; 3] },
    Exponential { scale: f64 },
    File { path: PathBuf },
}

impl InitialSpec {
    pub fn build(&self, grid: Grid) -> Result<Field> {
        use collapsar_core::profiles;
        let f = match self {
            InitialSpec::Gaussian { sigma, center } => profiles::gaussian(grid, *sigma, *center)?,
            InitialSpec::PlaneWave { k_index } => profiles::plane_wave(grid, *k_index),
            InitialSpec::Exponential { scale } => profiles::exponential(grid, *scale)?,
            InitialSpec::File { path } => read_field(path, grid)?,
        };
        Ok(f)
    }
}

/// Reads `n³` complex samples, one `re, im` pair per line in storage order.
fn read_field(path: &Path, grid: Grid) -> Result<Field> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::Config(format!("cannot read initial field {}: {e}", path.display()))
    })?;
    let mut values = Vec::with_capacity(grid.len());
    for (no, line) in text.lines().enumerate() {
        let line = strip_comment(line).trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<_> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        let parsed: Option<Vec<f64>> = parts.iter().map(|s| s.parse().ok()).collect();
        match parsed.as_deref() {
            Some([re, im]) => values.push(Complex64::new(*re, *im)),
            _ => {
                return Err(CliError::Config(format!(
                    "{}:{}: expected `re, im`, got `{line}`",
                    path.display(),
                    no + 1
                )))
            }
        }
    }
    if values.len() != grid.len() {
        return Err(CliError::Config(format!(
            "{} holds {} samples, grid needs {}",
            path.display(),
            values.len(),
            grid.len()
        )));
    }
    Field::new(grid, values, Representation::Position)
        .and_then(|f| f.normalized())
        .map_err(|e| CliError::Config(format!("initial field {}: {e}", path.display())))
}

/// Coupling given directly or as a multiple of the negative-energy threshold
/// of the initial datum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaSpec {
    Value(f64),
    OverThreshold(f64),
}

/// Start profile for the critical-coupling ascent, written `gaussian(1.0)` or
/// `exponential(1.0)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StartSpec {
    Gaussian(f64),
    Exponential(f64),
}

impl StartSpec {
    pub fn build(self, grid: Grid) -> Result<Field> {
        use collapsar_core::profiles;
        Ok(match self {
            StartSpec::Gaussian(s) => profiles::gaussian(grid, s, [0.0; 3])?,
            StartSpec::Exponential(a) => profiles::exponential(grid, a)?,
        })
    }

    pub fn label(self) -> String {
        match self {
            StartSpec::Gaussian(s) => format!("gaussian({s})"),
            StartSpec::Exponential(a) => format!("exponential({a})"),
        }
    }
}

impl FromStr for StartSpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            CliError::Config(format!(
                "bad start `{s}`, expected gaussian(x) or exponential(x)"
            ))
        };
        let (kind, rest) = s.trim().split_once('(').ok_or_else(bad)?;
        let arg: f64 = rest
            .strip_suffix(')')
            .ok_or_else(bad)?
            .trim()
            .parse()
            .map_err(|_| bad())?;
        if !(arg.is_finite() && arg > 0.0) {
            return Err(bad());
        }
        match kind.trim() {
            "gaussian" => Ok(StartSpec::Gaussian(arg)),
            "exponential" => Ok(StartSpec::Exponential(arg)),
            _ => Err(bad()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlowupSpec {
    pub radial_tol: f64,
    /// Repeat the run with `dt_init / 2` and report the shift of `t_detect`.
    pub dt_halving: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriticalSpec {
    pub starts: Vec<StartSpec>,
    pub max_iters: usize,
    pub step: f64,
    pub tol: f64,
    /// Grid size of the refinement run (same box), if any.
    pub refine_n: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FockSpec {
    pub modes: usize,
    pub n_max: usize,
    pub trials: usize,
    /// Random one-particle vectors have norm uniform in `[0, f_norm_max]`.
    pub f_norm_max: f64,
    pub max_particles: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InequalitySpec {
    pub trials: usize,
    /// Largest `|m|∞` of the random Fourier modes.
    pub band: usize,
    /// Envelope widths are drawn uniformly from this range, per axis.
    pub envelope_min: f64,
    pub envelope_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub n: usize,
    pub box_length: f64,
    pub initial: InitialSpec,
    pub lambda: LambdaSpec,
    /// `params.lambda` is a placeholder until the coupling is resolved.
    pub params: HartreeParams,
    pub sweep_alpha: Vec<f64>,
    pub sweep_lambda: Vec<f64>,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub blowup: BlowupSpec,
    pub critical: CriticalSpec,
    pub fock: FockSpec,
    pub inequalities: InequalitySpec,
}

impl ExperimentConfig {
    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.n, self.box_length).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path, experiment: Option<Experiment>) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text, experiment)?;
        // relative paths in the file are relative to the file
        let base = path.parent().unwrap_or(Path::new(""));
        if let InitialSpec::File { path: p } = &mut cfg.initial {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    /// Parses config text. `experiment` (from the command line) must agree
    /// with an `experiment` key when both are present.
    pub fn parse(text: &str, experiment: Option<Experiment>) -> Result<Self> {
        let raw = RawConfig::parse(text)?;
        let cfg = Self::from_raw(&raw, experiment)?;
        raw.reject_unused()?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn from_raw(raw: &RawConfig, cli: Option<Experiment>) -> Result<Self> {
        let from_file = raw.get("experiment").map(str::parse).transpose()?;
        let experiment = match (cli, from_file) {
            (Some(a), Some(b)) if a != b => {
                return Err(CliError::Config(format!(
                    "command line asks for `{a}` but the config is for `{b}`"
                )))
            }
            (Some(e), _) | (None, Some(e)) => e,
            (None, None) => return Err(CliError::Config("no experiment given".into())),
        };

        let n = raw.usize("grid.n")?.unwrap_or(32);
        let box_length = raw.f64("grid.box_length")?.unwrap_or(16.0);

        let initial = match raw.get("initial").unwrap_or("gaussian") {
            "gaussian" => InitialSpec::Gaussian {
                sigma: raw.f64("initial.sigma")?.unwrap_or(1.0),
                center: raw.array::<f64>("initial.center")?.unwrap_or([0.0; 3]),
            },
            "plane_wave" => InitialSpec::PlaneWave {
                k_index: raw.array::<i64>("initial.k_index")?.unwrap_or([1, 0, 0]),
            },
            "exponential" => InitialSpec::Exponential {
                scale: raw.f64("initial.scale")?.unwrap_or(1.0),
            },
            "file" => InitialSpec::File {
                path: raw
                    .get("initial.path")
                    .map(PathBuf::from)
                    .ok_or_else(|| CliError::Config("initial = file needs initial.path".into()))?,
            },
            other => {
                return Err(CliError::Config(format!(
                    "unknown initial `{other}`, expected gaussian, plane_wave, exponential or file"
                )))
            }
        };

        let sweep_lambda = raw.f64_list("sweep.lambda")?.unwrap_or_default();
        let direct = (
            raw.f64("params.lambda")?,
            raw.f64("params.lambda_over_threshold")?,
        );
        if !sweep_lambda.is_empty() && direct != (None, None) {
            return Err(CliError::Config(
                "sweep.lambda replaces params.lambda / params.lambda_over_threshold; give one"
                    .into(),
            ));
        }
        let lambda = match direct {
            (Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "give params.lambda or params.lambda_over_threshold, not both".into(),
                ))
            }
            (Some(l), None) => LambdaSpec::Value(l),
            (None, Some(m)) => LambdaSpec::OverThreshold(m),
            (None, None) if experiment.needs_evolution() && sweep_lambda.is_empty() => {
                return Err(CliError::Config(format!(
                    "{experiment} needs params.lambda or params.lambda_over_threshold"
                )))
            }
            (None, None) => LambdaSpec::Value(0.0),
        };

        let t_end = raw.f64("params.t_end")?.unwrap_or(1.0);
        let mut params = HartreeParams::new(
            0.0,
            raw.f64("params.alpha")?.unwrap_or(0.0),
            raw.f64("params.dt_init")?.unwrap_or(0.01),
            t_end,
        );
        if let Some(v) = raw.f64("params.dt_min")? {
            params.dt_min = v;
        }
        if let Some(v) = raw.f64("params.adapt_exponent")? {
            params.adapt_exponent = v;
        }
        if let Some(v) = raw.f64("params.cfl_like_constant")? {
            params.cfl_like_constant = v;
        }
        if let Some(v) = raw.usize("params.monitor_stride")? {
            params.monitor_stride = v;
        }
        let defaults = BlowupThresholds::default();
        params.blowup = BlowupThresholds {
            h_half_factor: raw
                .f64("blowup.h_half_factor")?
                .unwrap_or(defaults.h_half_factor),
            tail_max: raw.f64("blowup.tail_max")?.unwrap_or(defaults.tail_max),
        };

        let starts = match raw.list("critical.starts") {
            Some(items) => items
                .iter()
                .map(|s| s.parse())
                .collect::<Result<Vec<_>>>()?,
            None => vec![StartSpec::Gaussian(1.0), StartSpec::Exponential(1.0)],
        };

        Ok(ExperimentConfig {
            experiment,
            n,
            box_length,
            initial,
            lambda,
            params,
            sweep_alpha: raw.f64_list("sweep.alpha")?.unwrap_or_default(),
            sweep_lambda,
            output_dir: PathBuf::from(raw.get("output_dir").unwrap_or("out")),
            seed: raw.parse_as::<u64>("seed")?.unwrap_or(0),
            blowup: BlowupSpec {
                radial_tol: raw.f64("blowup.radial_tol")?.unwrap_or(1e-6),
                dt_halving: raw.parse_as::<bool>("blowup.dt_halving")?.unwrap_or(false),
            },
            critical: CriticalSpec {
                starts,
                max_iters: raw.usize("critical.max_iters")?.unwrap_or(2000),
                step: raw.f64("critical.step")?.unwrap_or(0.5),
                tol: raw.f64("critical.tol")?.unwrap_or(1e-8),
                refine_n: raw.usize("critical.refine_n")?,
            },
            fock: FockSpec {
                modes: raw.usize("fock.modes")?.unwrap_or(2),
                n_max: raw.usize("fock.n_max")?.unwrap_or(40),
                trials: raw.usize("fock.trials")?.unwrap_or(100),
                f_norm_max: raw.f64("fock.f_norm_max")?.unwrap_or(1.0),
                max_particles: raw.usize("fock.max_particles")?.unwrap_or(6),
            },
            inequalities: InequalitySpec {
                trials: raw.usize("inequalities.trials")?.unwrap_or(200),
                band: raw.usize("inequalities.band")?.unwrap_or(4),
                envelope_min: raw.f64("inequalities.envelope_min")?.unwrap_or(0.8),
                envelope_max: raw.f64("inequalities.envelope_max")?.unwrap_or(2.5),
            },
        })
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::Config(m));
        let grid = self.grid()?;
        if self.experiment.needs_evolution() {
            let mut p = self.params;
            p.lambda = 1.0;
            p.validate().map_err(|e| CliError::Config(e.to_string()))?;
        }
        if let LambdaSpec::OverThreshold(m) = self.lambda {
            if !(m.is_finite() && m > 0.0) {
                return bad(format!(
                    "params.lambda_over_threshold must be positive, got {m}"
                ));
            }
        }
        match &self.initial {
            InitialSpec::Gaussian { sigma, .. } if !(sigma.is_finite() && *sigma > 0.0) => {
                return bad(format!("initial.sigma must be positive, got {sigma}"))
            }
            InitialSpec::Exponential { scale } if !(scale.is_finite() && *scale > 0.0) => {
                return bad(format!("initial.scale must be positive, got {scale}"))
            }
            _ => {}
        }
        if self.experiment == Experiment::RegSweep {
            validate_alpha_sweep(&self.sweep_alpha)?;
        }
        if !self.sweep_lambda.is_empty() && self.experiment != Experiment::Evolve {
            return bad(format!(
                "sweep.lambda is only used by evolve, not {}",
                self.experiment
            ));
        }
        if self.experiment == Experiment::CriticalLambda {
            let c = &self.critical;
            if c.starts.is_empty() {
                return bad("critical.starts is empty".into());
            }
            if !(c.step > 0.0 && c.tol > 0.0 && c.max_iters > 0) {
                return bad(
                    "critical.step, critical.tol and critical.max_iters must be positive".into(),
                );
            }
            if let Some(m) = c.refine_n {
                Grid::new(m, self.box_length).map_err(|e| CliError::Config(e.to_string()))?;
                if m == grid.n() {
                    return bad("critical.refine_n equals grid.n".into());
                }
            }
        }
        if self.experiment == Experiment::FockCheck {
            let f = &self.fock;
            if f.modes == 0 || f.n_max == 0 || f.trials == 0 {
                return bad("fock.modes, fock.n_max and fock.trials must be positive".into());
            }
            if !(f.f_norm_max.is_finite() && f.f_norm_max >= 0.0) {
                return bad("fock.f_norm_max must be non-negative".into());
            }
        }
        if self.experiment == Experiment::Inequalities {
            let q = &self.inequalities;
            if q.trials == 0 || q.band == 0 || 2 * q.band >= grid.n() {
                return bad(format!(
                    "need inequalities.trials > 0 and 0 < inequalities.band < grid.n/2, got {} and {}",
                    q.trials, q.band
                ));
            }
            if !(q.envelope_min > 0.0 && q.envelope_max >= q.envelope_min) {
                return bad("need 0 < inequalities.envelope_min <= envelope_max".into());
            }
        }
        Ok(())
    }
}

/// At least four distinct positive values spanning at least one decade.
pub fn validate_alpha_sweep(alphas: &[f64]) -> Result<()> {
    let bad = |m: String| Err(CliError::Config(m));
    if alphas.len() < 4 {
        return bad(format!(
            "sweep.alpha needs at least 4 values, got {}",
            alphas.len()
        ));
    }
    if alphas.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
        return bad("sweep.alpha values must be positive".into());
    }
    let set: BTreeSet<u64> = alphas.iter().map(|a| a.to_bits()).collect();
    if set.len() != alphas.len() {
        return bad("sweep.alpha has repeated values".into());
    }
    let lo = alphas.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = alphas.iter().copied().fold(0.0, f64::max);
    if hi / lo < 10.0 {
        return bad(format!(
            "sweep.alpha must span at least one decade, spans {:.3}",
            (hi / lo).log10()
        ));
    }
    Ok(())
}

fn strip_comment(line: &str) -> &str {
    line.split_once('#').map_or(line, |(a, _)| a)
}

/// Flat key/value view of a config file that remembers which keys were read.
#[derive(Debug, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, (String, usize)>,
    used: RefCell<BTreeSet<String>>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let no = i + 1;
            let line = strip_comment(line).trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {no}: expected `key = value`")))?;
            let key = key.trim();
            let valid = !key.is_empty()
                && key.split('.').all(|part| {
                    !part.is_empty()
                        && part
                            .chars()
                            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
                });
            if !valid {
                return Err(CliError::Config(format!("line {no}: invalid key `{key}`")));
            }
            if let Some((_, first)) =
                entries.insert(key.to_string(), (value.trim().to_string(), no))
            {
                return Err(CliError::Config(format!(
                    "line {no}: `{key}` already set on line {first}"
                )));
            }
        }
        Ok(Self {
            entries,
            used: RefCell::new(BTreeSet::new()),
        })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        let (v, _) = self.entries.get(key)?;
        self.used.borrow_mut().insert(key.to_string());
        Some(v.as_str())
    }

    fn error(&self, key: &str, what: &str) -> CliError {
        let (v, line) = &self.entries[key];
        CliError::Config(format!("line {line}: `{key} = {v}` is not {what}"))
    }

    pub fn parse_as<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| self.error(key, std::any::type_name::<T>()))
            })
            .transpose()
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>> {
        match self.parse_as::<f64>(key)? {
            Some(v) if !v.is_finite() => Err(self.error(key, "a finite number")),
            v => Ok(v),
        }
    }

    pub fn usize(&self, key: &str) -> Result<Option<usize>> {
        self.get(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| self.error(key, "a non-negative integer"))
            })
            .transpose()
    }

    /// Comma-separated items, split outside parentheses.
    pub fn list(&self, key: &str) -> Option<Vec<String>> {
        let v = self.get(key)?;
        let mut items = Vec::new();
        let (mut depth, mut cur) = (0i32, String::new());
        for c in v.chars() {
            match c {
                '(' => depth += 1,
                ')' => depth -= 1,
                ',' if depth == 0 => {
                    items.push(std::mem::take(&mut cur).trim().to_string());
                    continue;
                }
                _ => {}
            }
            cur.push(c);
        }
        items.push(cur.trim().to_string());
        Some(items.into_iter().filter(|s| !s.is_empty()).collect())
    }

    pub fn f64_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(items) = self.list(key) else {
            return Ok(None);
        };
        items
            .iter()
            .map(|s| match s.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(self.error(key, "a list of finite numbers")),
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    pub fn array<T: FromStr + Copy + Default>(&self, key: &str) -> Result<Option<[T; 3]>> {
        let Some(items) = self.list(key) else {
            return Ok(None);
        };
        let parsed: Option<Vec<T>> = items.iter().map(|s| s.parse().ok()).collect();
        match parsed.as_deref() {
            Some(&[a, b, c]) => Ok(Some([a, b, c])),
            _ => Err(self.error(key, "three comma-separated values")),
        }
    }

    pub fn reject_unused(&self) -> Result<()> {
        let used = self.used.borrow();
        let unknown: Vec<String> = self
            .entries
            .iter()
            .filter(|(k, _)| !used.contains(*k))
            .map(|(k, (_, line))| format!("`{k}` (line {line})"))
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(format!(
                "unknown keys: {}",
                unknown.join(", ")
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_lists_and_dotted_keys() {
        let cfg = ExperimentConfig::parse(
            "# sweep\nexperiment = reg-sweep  # trailing\ngrid.n = 16\ngrid.box_length = 8\n\
             params.lambda = 1\nsweep.alpha = 0.2, 0.1, 0.05, 0.0125\ninitial.center = 0.5, 0, -1\n",
            None,
        )
        .unwrap();
        assert_eq!(cfg.experiment, Experiment::RegSweep);
        assert_eq!(cfg.n, 16);
        assert_eq!(cfg.sweep_alpha, vec![0.2, 0.1, 0.05, 0.0125]);
        assert_eq!(
            cfg.initial,
            InitialSpec::Gaussian {
                sigma: 1.0,
                center: [0.5, 0.0, -1.0]
            }
        );
        assert_eq!(cfg.lambda, LambdaSpec::Value(1.0));
    }

    #[test]
    fn rejects_malformed_input() {
        let cases = [
            "experiment = evolve\nparams.lambda = 1\ngrid.nn = 4\n",
            "experiment = evolve\nparams.lambda = 1\nparams.lambda = 2\n",
            "experiment = evolve\nparams.lambda = x\n",
            "experiment = evolve\nparams.lambda = 1\njust text\n",
            "experiment = evolve\n",
            "experiment = evolve\nparams.lambda = 1\nparams.lambda_over_threshold = 2\n",
            "experiment = nope\n",
            "experiment = reg-sweep\nparams.lambda = 1\nsweep.alpha = 0.2, 0.1, 0.05\n",
            "experiment = reg-sweep\nparams.lambda = 1\nsweep.alpha = 0.2, 0.1, 0.05, 0.04\n",
            "experiment = evolve\nparams.lambda = 1\nparams.dt_init = -1\n",
            "experiment = evolve\nparams.lambda = 1\ngrid.n = 7\n",
            "experiment = evolve\nparams.lambda = inf\n",
            "experiment = evolve\nparams.lambda = 1\nsweep.lambda = 1, 2\n",
            "experiment = blowup\nsweep.lambda = 1, 2\n",
        ];
        for text in cases {
            let r = ExperimentConfig::parse(text, None);
            assert!(matches!(r, Err(CliError::Config(_))), "accepted: {text:?}");
        }
    }

    #[test]
    fn command_line_experiment_must_agree() {
        let text = "experiment = evolve\nparams.lambda = 1\n";
        assert!(ExperimentConfig::parse(text, Some(Experiment::Evolve)).is_ok());
        assert!(ExperimentConfig::parse(text, Some(Experiment::Blowup)).is_err());
        let cfg = ExperimentConfig::parse("params.lambda = 1\n", Some(Experiment::Blowup)).unwrap();
        assert_eq!(cfg.experiment, Experiment::Blowup);
    }

    #[test]
    fn start_specs() {
        assert_eq!(
            "gaussian(1.5)".parse::<StartSpec>().unwrap(),
            StartSpec::Gaussian(1.5)
        );
        assert_eq!(
            " exponential( 2 ) ".parse::<StartSpec>().unwrap(),
            StartSpec::Exponential(2.0)
        );
        for bad in ["gaussian", "gaussian(-1)", "cube(1)", "gaussian(1"] {
            assert!(bad.parse::<StartSpec>().is_err());
        }
        let raw = RawConfig::parse("critical.starts = gaussian(1), exponential(0.5)\n").unwrap();
        assert_eq!(raw.list("critical.starts").unwrap().len(), 2);
    }

    #[test]
    fn experiment_names_round_trip() {
        for e in Experiment::ALL {
            assert_eq!(e.name().parse::<Experiment>().unwrap(), e);
        }
    }

    #[test]
    fn field_file_round_trip() {
        let grid = Grid::new(8, 4.0).unwrap();
        let f = collapsar_core::profiles::gaussian(grid, 0.7, [0.0; 3]).unwrap();
        let dir = std::env::temp_dir().join(format!("collapsar-field-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("f.txt");
        let body: String = f
            .values()
            .iter()
            .map(|v| format!("{:.17e}, {:.17e}\n", v.re, v.im))
            .collect();
        std::fs::write(&path, format!("# re, im\n{body}")).unwrap();
        let g = InitialSpec::File { path: path.clone() }
            .build(grid)
            .unwrap();
        assert!(g.distance(&f).unwrap() < 1e-14);
        std::fs::write(&path, "1, 0\n").unwrap();
        assert!(InitialSpec::File { path }.build(grid).is_err());
        std::fs::remove_dir_all(dir).unwrap();
    }
}
