//! Scenario documents.
//!
//! A scenario is a line-oriented `key = value` file grouped under four
//! bracketed sections. `#` starts a comment. Example:
//!
//! ```text
//! [run]
//! name = white_sss
//! taps = 16
//! iterations = 20000
//! trials = 100
//! seed = 42
//!
//! [paths]
//! primary = preset:primary
//! secondary = preset:secondary
//! secondary_estimate = preset:secondary
//!
//! [noise]
//! kind = white
//! variance = 1
//!
//! [algorithm]
//! kind = sss
//! candidates = 0.6, 0.3, 0.15, 0.075
//! ```
//!
//! See `scenarios/README.md` for every key.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::fxnlms::{ScalingKind, DEFAULT_EPSILON};
use crate::metrics::DEFAULT_BETA;
use crate::noise::{NoiseFormat, NoiseSpec};
use crate::paths::{FirPath, PathPreset};
use crate::sss::{geometric_candidates, validate_candidates, DEFAULT_RHO};

/// Default forgetting factor of the error-power estimate.
pub const DEFAULT_LAMBDA: f64 = 0.8;

const SECTIONS: [&str; 4] = ["paths", "noise", "algorithm", "run"];

/// How the step-size is chosen each tick.
#[derive(Debug, Clone, PartialEq)]
pub enum StepPolicy {
    Fixed { mu: f64 },
    Switched { candidates: Vec<f64>, rho: f64, clamp: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmSpec {
    pub policy: StepPolicy,
    pub lambda: f64,
    pub scaling: ScalingKind,
}

impl AlgorithmSpec {
    /// `fxnlms_fixed`, `r_fixed`, `sss` or `r_sss`.
    pub fn label(&self) -> &'static str {
        match (&self.policy, self.scaling.is_unit()) {
            (StepPolicy::Fixed { .. }, true) => "fxnlms_fixed",
            (StepPolicy::Fixed { .. }, false) => "r_fixed",
            (StepPolicy::Switched { .. }, true) => "sss",
            (StepPolicy::Switched { .. }, false) => "r_sss",
        }
    }

    /// Number of MSD trend columns (`1` for fixed step, emitted empty).
    pub fn trend_columns(&self) -> usize {
        match &self.policy {
            StepPolicy::Fixed { .. } => 1,
            StepPolicy::Switched { candidates, .. } => candidates.len(),
        }
    }
}

/// Complete description of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub primary: FirPath,
    pub secondary: FirPath,
    pub secondary_estimate: FirPath,
    /// Secondary path and its estimate are unit impulses, so the optimal
    /// weights are the primary-path coefficients.
    pub identification_mode: bool,
    pub noise: NoiseSpec,
    pub measurement_variance: f64,
    pub algorithm: AlgorithmSpec,
    pub taps: usize,
    pub iterations: usize,
    pub trials: usize,
    pub seed: u64,
    pub beta: f64,
    pub epsilon: f64,
}

impl Scenario {
    /// Parse and validate a scenario document.
    pub fn parse(text: &str) -> Result<Self> {
        parse_scenario(text, None)
    }

    /// Read a scenario file; relative noise-file paths resolve against
    /// the file's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        parse_scenario(&text, path.parent())
    }

    pub fn validate(&self) -> Result<()> {
        if self.taps == 0 {
            return Err(Error::config("taps must be >= 1"));
        }
        if self.iterations == 0 {
            return Err(Error::config("iterations must be >= 1"));
        }
        if self.trials == 0 {
            return Err(Error::config("trials must be >= 1"));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::config(format!("beta must lie in (0, 1), got {}", self.beta)));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::config(format!("epsilon must be > 0, got {}", self.epsilon)));
        }
        if !(self.measurement_variance >= 0.0 && self.measurement_variance.is_finite()) {
            return Err(Error::config("measurement_variance must be >= 0"));
        }
        if !(self.algorithm.lambda > 0.0 && self.algorithm.lambda < 1.0) {
            return Err(Error::config(format!(
                "lambda must lie in (0, 1), got {}",
                self.algorithm.lambda
            )));
        }
        if self.identification_mode
            && !(self.secondary.is_unit_impulse() && self.secondary_estimate.is_unit_impulse())
        {
            return Err(Error::config(
                "identification_mode requires unit-impulse secondary paths",
            ));
        }
        self.noise.validate()?;
        self.algorithm.scaling.validate()?;
        match &self.algorithm.policy {
            StepPolicy::Fixed { mu } => validate_candidates(&[*mu], self.taps),
            StepPolicy::Switched { candidates, rho, .. } => {
                validate_candidates(candidates, self.taps)?;
                if !(*rho > 0.0 && rho.is_finite()) {
                    return Err(Error::config(format!("rho must be > 0, got {rho}")));
                }
                Ok(())
            }
        }
    }

    /// Optimal weights in identification mode (primary path padded or
    /// truncated to the filter length).
    pub fn optimal_weights(&self) -> Option<Vec<f64>> {
        self.identification_mode.then(|| {
            let mut w = self.primary.coeffs().to_vec();
            w.resize(self.taps, 0.0);
            w
        })
    }

    /// Render back to the document format. Parsing the output yields an
    /// equal scenario.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let list = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x:?}"))
                .collect::<Vec<_>>()
                .join(", ")
        };
        let _ = writeln!(s, "[run]");
        let _ = writeln!(s, "name = {}", self.name);
        let _ = writeln!(s, "taps = {}", self.taps);
        let _ = writeln!(s, "iterations = {}", self.iterations);
        let _ = writeln!(s, "trials = {}", self.trials);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "beta = {:?}", self.beta);
        let _ = writeln!(s, "epsilon = {:?}", self.epsilon);
        let _ = writeln!(s, "\n[paths]");
        let _ = writeln!(s, "identification_mode = {}", self.identification_mode);
        let _ = writeln!(s, "primary = {}", list(self.primary.coeffs()));
        let _ = writeln!(s, "secondary = {}", list(self.secondary.coeffs()));
        let _ = writeln!(s, "secondary_estimate = {}", list(self.secondary_estimate.coeffs()));
        let _ = writeln!(s, "\n[noise]");
        let _ = writeln!(s, "kind = {}", self.noise.kind_name());
        match &self.noise {
            NoiseSpec::White { mean, variance } => {
                let _ = writeln!(s, "mean = {mean:?}\nvariance = {variance:?}");
            }
            NoiseSpec::Ar1 {
                pole,
                innovation_variance,
            } => {
                let _ = writeln!(s, "pole = {pole:?}\ninnovation_variance = {innovation_variance:?}");
            }
            NoiseSpec::AlphaStable { alpha, gamma } => {
                let _ = writeln!(s, "alpha = {alpha:?}\ngamma = {gamma:?}");
            }
            NoiseSpec::Bursty {
                var1,
                var2,
                switch_at,
            } => {
                let _ = writeln!(s, "var1 = {var1:?}\nvar2 = {var2:?}");
                if let Some(k) = switch_at {
                    let _ = writeln!(s, "switch_at = {k}");
                }
            }
            NoiseSpec::File {
                path,
                format,
                added_variance,
            } => {
                let _ = writeln!(s, "path = {}", path.display());
                let _ = writeln!(s, "format = {}", format.as_str());
                let _ = writeln!(s, "added_variance = {added_variance:?}");
            }
        }
        let _ = writeln!(s, "measurement_variance = {:?}", self.measurement_variance);
        let _ = writeln!(s, "\n[algorithm]");
        match &self.algorithm.policy {
            StepPolicy::Fixed { mu } => {
                let _ = writeln!(s, "kind = fixed\nmu = {mu:?}");
            }
            StepPolicy::Switched {
                candidates,
                rho,
                clamp,
            } => {
                let _ = writeln!(s, "kind = sss");
                let _ = writeln!(s, "candidates = {}", list(candidates));
                let _ = writeln!(s, "rho = {rho:?}");
                let _ = writeln!(s, "clamp_trends = {clamp}");
            }
        }
        let _ = writeln!(s, "lambda = {:?}", self.algorithm.lambda);
        match self.algorithm.scaling {
            ScalingKind::Unit => {
                let _ = writeln!(s, "scaling = unit");
            }
            ScalingKind::Mcc { sigma } => {
                let _ = writeln!(s, "scaling = mcc\nkernel_width = {sigma:?}");
            }
            ScalingKind::Ehcf { eta, theta } => {
                let _ = writeln!(s, "scaling = ehcf\neta = {eta:?}\ntheta = {theta:?}");
            }
        }
        s
    }
}

struct Entry {
    value: String,
    line: usize,
}

/// Key/value pairs of one section; keys are removed as they are consumed
/// so leftovers can be reported as unknown.
struct Section {
    name: &'static str,
    header_line: usize,
    entries: BTreeMap<String, Entry>,
}

impl Section {
    fn perr(&self, line: usize, key: &str, message: impl Into<String>) -> Error {
        Error::Parse {
            line,
            key: format!("{}.{key}", self.name),
            message: message.into(),
        }
    }

    fn take_raw(&mut self, key: &str) -> Option<Entry> {
        self.entries.remove(key)
    }

    fn take<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.take_raw(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse::<T>()
                .map(Some)
                .map_err(|_| self.perr(e.line, key, format!("cannot parse `{}`", e.value))),
        }
    }

    fn require<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let line = self.header_line;
        self.take(key)?
            .ok_or_else(|| self.perr(line, key, "required key is missing"))
    }

    fn take_f64(&mut self, key: &str) -> Result<Option<f64>> {
        let v: Option<f64> = self.take(key)?;
        Ok(v)
    }

    fn take_list(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.take_raw(key) {
            None => Ok(None),
            Some(e) => parse_list(&e.value)
                .map(Some)
                .ok_or_else(|| self.perr(e.line, key, format!("cannot parse list `{}`", e.value))),
        }
    }

    fn take_path(&mut self, key: &str) -> Result<Option<(FirPath, usize)>> {
        let Some(e) = self.take_raw(key) else {
            return Ok(None);
        };
        let path = if let Some(name) = e.value.strip_prefix("preset:") {
            let preset: PathPreset = name
                .trim()
                .parse()
                .map_err(|err: Error| self.perr(e.line, key, err.to_string()))?;
            FirPath::preset(preset)
        } else {
            let coeffs = parse_list(&e.value)
                .ok_or_else(|| self.perr(e.line, key, format!("cannot parse coefficients `{}`", e.value)))?;
            FirPath::new(coeffs).map_err(|err| self.perr(e.line, key, err.to_string()))?
        };
        Ok(Some((path, e.line)))
    }

    fn finish(self) -> Result<()> {
        if let Some((key, e)) = self.entries.iter().min_by_key(|(_, e)| e.line) {
            return Err(self.perr(e.line, key, "unknown or inapplicable key"));
        }
        Ok(())
    }
}

fn parse_list(s: &str) -> Option<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().ok())
        .collect::<Option<Vec<_>>>()
        .filter(|v| !v.is_empty())
}

fn noise_from_section(noise: &mut Section, base_dir: Option<&Path>) -> Result<NoiseSpec> {
    let kind: String = noise.require("kind")?;
    let spec = match kind.as_str() {
        "white" => NoiseSpec::White {
            mean: noise.take_f64("mean")?.unwrap_or(0.0),
            variance: noise.take_f64("variance")?.unwrap_or(1.0),
        },
        "ar1" => NoiseSpec::Ar1 {
            pole: noise.require("pole")?,
            innovation_variance: noise.take_f64("innovation_variance")?.unwrap_or(1.0),
        },
        "alpha_stable" => NoiseSpec::AlphaStable {
            alpha: noise.require("alpha")?,
            gamma: noise.require("gamma")?,
        },
        "bursty" => NoiseSpec::Bursty {
            var1: noise.take_f64("var1")?.unwrap_or(1.0),
            var2: noise.require("var2")?,
            switch_at: noise.take("switch_at")?,
        },
        "file" => {
            let raw: String = noise.require("path")?;
            let mut path = PathBuf::from(raw);
            if let (true, Some(dir)) = (path.is_relative(), base_dir) {
                path = dir.join(path);
            }
            let format: String = noise.require("format")?;
            let format: NoiseFormat = format
                .parse()
                .map_err(|e: Error| noise.perr(noise.header_line, "format", e.to_string()))?;
            NoiseSpec::File {
                path,
                format,
                added_variance: noise.take_f64("added_variance")?.unwrap_or(0.0),
            }
        }
        other => {
            return Err(noise.perr(noise.header_line, "kind", format!("unknown noise kind `{other}`")))
        }
    };
    Ok(spec)
}

/// Parse a standalone noise description such as
/// `kind=alpha_stable, alpha=1.4, gamma=0.1`.
pub fn parse_noise_spec(text: &str, base_dir: Option<&Path>) -> Result<NoiseSpec> {
    let mut section = Section {
        name: "noise",
        header_line: 0,
        entries: BTreeMap::new(),
    };
    for (idx, item) in text.split(',').enumerate() {
        let item = item.trim();
        if item.is_empty() {
            continue;
        }
        let (key, value) = item.split_once('=').ok_or_else(|| Error::Parse {
            line: 0,
            key: item.to_string(),
            message: "expected `key=value`".into(),
        })?;
        section.entries.insert(
            key.trim().to_string(),
            Entry {
                value: value.trim().to_string(),
                line: idx + 1,
            },
        );
    }
    let spec = noise_from_section(&mut section, base_dir)?;
    section.finish()?;
    spec.validate()?;
    Ok(spec)
}

/// Parse a scenario document; `base_dir` resolves relative noise files.
pub fn parse_scenario(text: &str, base_dir: Option<&Path>) -> Result<Scenario> {
    let mut sections: BTreeMap<&'static str, Section> = BTreeMap::new();
    let mut current: Option<&'static str> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('[') {
            let name = header.strip_suffix(']').map(str::trim).ok_or_else(|| Error::Parse {
                line: line_no,
                key: line.to_string(),
                message: "malformed section header".into(),
            })?;
            let known = SECTIONS.iter().find(|s| **s == name).ok_or_else(|| Error::Parse {
                line: line_no,
                key: format!("[{name}]"),
                message: "unknown section".into(),
            })?;
            if sections.contains_key(known) {
                return Err(Error::Parse {
                    line: line_no,
                    key: format!("[{name}]"),
                    message: "duplicate section".into(),
                });
            }
            sections.insert(
                known,
                Section {
                    name: known,
                    header_line: line_no,
                    entries: BTreeMap::new(),
                },
            );
            current = Some(known);
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: line_no,
            key: line.to_string(),
            message: "expected `key = value`".into(),
        })?;
        let key = key.trim().to_string();
        let section = current
            .and_then(|c| sections.get_mut(c))
            .ok_or_else(|| Error::Parse {
                line: line_no,
                key: key.clone(),
                message: "key appears before any section header".into(),
            })?;
        if section.entries.contains_key(&key) {
            return Err(section.perr(line_no, &key, "duplicate key"));
        }
        section.entries.insert(
            key,
            Entry {
                value: value.trim().to_string(),
                line: line_no,
            },
        );
    }

    let missing: Vec<String> = SECTIONS
        .iter()
        .filter(|s| !sections.contains_key(*s))
        .map(|s| format!("[{s}]"))
        .collect();
    if !missing.is_empty() {
        return Err(Error::Parse {
            line: 0,
            key: "document".into(),
            message: format!("missing required sections: {}", missing.join(", ")),
        });
    }
    let mut run = sections.remove("run").unwrap();
    let mut paths = sections.remove("paths").unwrap();
    let mut noise = sections.remove("noise").unwrap();
    let mut algo = sections.remove("algorithm").unwrap();

    // [run]
    let name: String = run.take("name")?.unwrap_or_else(|| "unnamed".to_string());
    let taps: usize = run.require("taps")?;
    let iterations: usize = run.require("iterations")?;
    let trials: usize = run.require("trials")?;
    let seed: u64 = run.require("seed")?;
    let beta = run.take_f64("beta")?.unwrap_or(DEFAULT_BETA);
    let epsilon = run.take_f64("epsilon")?.unwrap_or(DEFAULT_EPSILON);
    run.finish()?;

    // [paths]
    let identification_mode: bool = paths.take("identification_mode")?.unwrap_or(false);
    let header = paths.header_line;
    let (primary, _) = paths
        .take_path("primary")?
        .ok_or_else(|| paths.perr(header, "primary", "required key is missing"))?;
    let secondary_for = |paths: &mut Section, key: &str| -> Result<FirPath> {
        match paths.take_path(key)? {
            Some((p, line)) => {
                if identification_mode && !p.is_unit_impulse() {
                    Err(paths.perr(line, key, "identification_mode requires a unit impulse"))
                } else {
                    Ok(p)
                }
            }
            None if identification_mode => Ok(FirPath::unit_impulse()),
            None => Err(paths.perr(header, key, "required key is missing")),
        }
    };
    let secondary = secondary_for(&mut paths, "secondary")?;
    let secondary_estimate = secondary_for(&mut paths, "secondary_estimate")?;
    paths.finish()?;

    // [noise]
    let noise_spec = noise_from_section(&mut noise, base_dir)?;
    let measurement_variance = noise.take_f64("measurement_variance")?.unwrap_or(0.0);
    noise.finish()?;

    // [algorithm]
    let kind: String = algo.require("kind")?;
    let policy = match kind.as_str() {
        "fixed" => StepPolicy::Fixed {
            mu: algo.require("mu")?,
        },
        "sss" => {
            let listed = algo.take_list("candidates")?;
            let top = algo.take_f64("top")?;
            let ratio = algo.take_f64("ratio")?;
            let count: Option<usize> = algo.take("count")?;
            let candidates = match (listed, top, ratio, count) {
                (Some(c), None, None, None) => c,
                (None, Some(t), Some(r), Some(k)) => geometric_candidates(t, r, k),
                _ => {
                    return Err(algo.perr(
                        algo.header_line,
                        "candidates",
                        "give either `candidates` or all of `top`, `ratio`, `count`",
                    ))
                }
            };
            StepPolicy::Switched {
                candidates,
                rho: algo.take_f64("rho")?.unwrap_or(DEFAULT_RHO),
                clamp: algo.take("clamp_trends")?.unwrap_or(false),
            }
        }
        other => {
            return Err(algo.perr(algo.header_line, "kind", format!("unknown algorithm kind `{other}`")))
        }
    };
    let lambda = algo.take_f64("lambda")?.unwrap_or(DEFAULT_LAMBDA);
    let scaling_name: String = algo.take("scaling")?.unwrap_or_else(|| "unit".to_string());
    let scaling = match scaling_name.as_str() {
        "unit" => ScalingKind::Unit,
        "mcc" => ScalingKind::Mcc {
            sigma: algo.take_f64("kernel_width")?.unwrap_or(1.0),
        },
        "ehcf" => ScalingKind::Ehcf {
            eta: algo.take_f64("eta")?.unwrap_or(1.0),
            theta: algo.take_f64("theta")?.unwrap_or(1.0),
        },
        other => {
            return Err(algo.perr(algo.header_line, "scaling", format!("unknown scaling `{other}`")))
        }
    };
    algo.finish()?;

    let scenario = Scenario {
        name,
        primary,
        secondary,
        secondary_estimate,
        identification_mode,
        noise: noise_spec,
        measurement_variance,
        algorithm: AlgorithmSpec {
            policy,
            lambda,
            scaling,
        },
        taps,
        iterations,
        trials,
        seed,
        beta,
        epsilon,
    };
    scenario.validate().map_err(|e| match e {
        Error::Config(message) => Error::Parse {
            line: 0,
            key: "scenario".into(),
            message,
        },
        other => other,
    })?;
    Ok(scenario)
}
