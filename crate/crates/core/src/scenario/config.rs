//! Flat `section.key = value` configuration files.
//!
//! Blank lines and `#` comments are ignored; every key must appear in
//! [`KEYS`] and at most once. Angles accept `pi` multiples such as `pi/4`
//! or `-0.5*pi`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::csl::{CslParams, MassDensity, Shape};
use crate::dynamics::{InputNoise, SystemParams};
use crate::error::{Error, Result};
use crate::estimation::{clamp_l, EprOutput, MeasurementSpec};

/// A recognized key with its unit and meaning.
#[derive(Debug, Clone, Copy)]
pub struct KeyInfo {
    pub key: &'static str,
    pub unit: &'static str,
    pub help: &'static str,
}

const fn key(key: &'static str, unit: &'static str, help: &'static str) -> KeyInfo {
    KeyInfo { key, unit, help }
}

/// Every key a config file may contain.
pub const KEYS: &[KeyInfo] = &[
    key(
        "system.omega_m",
        "rad/s",
        "mechanical angular frequency (required)",
    ),
    key(
        "system.gamma_m",
        "1/s",
        "mechanical damping rate (required)",
    ),
    key(
        "system.kappa",
        "1/s",
        "cavity decay rate, both cavities (required)",
    ),
    key("system.delta1", "rad/s", "detuning of cavity 1 (default 0)"),
    key("system.delta2", "rad/s", "detuning of cavity 2 (default 0)"),
    key(
        "system.g",
        "rad/s",
        "linearized optomechanical coupling (required)",
    ),
    key(
        "system.temperature",
        "K",
        "mechanical bath temperature (required)",
    ),
    key(
        "system.lambda_csl",
        "1/s",
        "CSL diffusion rate; required unless a csl section is given",
    ),
    key(
        "csl.lambda_rate",
        "1/s",
        "collapse rate; with the other csl keys, overrides system.lambda_csl",
    ),
    key("csl.r_c", "m", "collapse correlation length"),
    key("csl.mass", "kg", "mass of the mechanical resonator"),
    key("csl.shape", "-", "sphere or cube"),
    key("csl.size", "m", "sphere radius or cube side"),
    key(
        "noise.n1",
        "-",
        "thermal photons at cavity-1 input, classical strategy (default 0)",
    ),
    key(
        "noise.n2",
        "-",
        "thermal photons at cavity-2 input, classical strategy (default 0)",
    ),
    key(
        "noise.r",
        "-",
        "two-mode squeezing amplitude, quantum strategy (default 0)",
    ),
    key(
        "noise.psi_s",
        "rad",
        "two-mode squeezing angle (default pi)",
    ),
    key(
        "measurement.l",
        "-",
        "POVM squeezing; 1 heterodyne, 0 or inf homodyne (default 1)",
    ),
    key(
        "measurement.theta",
        "rad",
        "POVM rotation angle (default 0)",
    ),
    key(
        "measurement.phi_bs",
        "rad",
        "EPR beam-splitter angle (default pi/4)",
    ),
    key(
        "measurement.epr_output",
        "-",
        "plus, minus or best (default best)",
    ),
    key("grid.start", "s", "first time point"),
    key("grid.stop", "s", "last time point"),
    key("grid.steps", "-", "number of time points"),
    key(
        "grid.steady_state",
        "-",
        "true for a steady-state run instead of a time grid",
    ),
    key(
        "sweep.name",
        "-",
        "swept key, e.g. noise.r (steady-state runs only)",
    ),
    key("sweep.start", "key unit", "first sweep value"),
    key("sweep.stop", "key unit", "last sweep value"),
    key(
        "sweep.count",
        "-",
        "number of sweep values; 0 gives an empty table",
    ),
    key("sweep.scale", "-", "linear or log (default linear)"),
];

/// Keys a sweep may vary.
pub const SWEEPABLE: &[&str] = &[
    "system.omega_m",
    "system.gamma_m",
    "system.kappa",
    "system.delta1",
    "system.delta2",
    "system.g",
    "system.temperature",
    "system.lambda_csl",
    "csl.lambda_rate",
    "csl.r_c",
    "csl.mass",
    "csl.size",
    "noise.n1",
    "noise.n2",
    "noise.r",
    "noise.psi_s",
    "measurement.l",
    "measurement.theta",
    "measurement.phi_bs",
];

/// Collapse parameters as given in a config (the frequency comes from the
/// system section).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CslSection {
    pub lambda_rate: f64,
    pub r_c: f64,
    pub mass: f64,
    pub shape: Shape,
}

impl CslSection {
    pub fn params(&self, omega_m: f64) -> CslParams {
        CslParams {
            lambda_rate: self.lambda_rate,
            r_c: self.r_c,
            mass: self.mass,
            omega_m,
        }
    }

    pub fn density(&self) -> Result<MassDensity> {
        MassDensity::new(self.mass, self.shape)
    }
}

/// Noise parameters for both strategies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSection {
    pub n1: f64,
    pub n2: f64,
    pub r: f64,
    pub psi_s: f64,
}

impl NoiseSection {
    /// Input of the classical strategy.
    pub fn thermal(&self) -> InputNoise {
        InputNoise::Thermal {
            n1: self.n1,
            n2: self.n2,
        }
    }

    /// Input of the quantum strategy.
    pub fn squeezed(&self) -> InputNoise {
        InputNoise::TwoModeSqueezed {
            r: self.r,
            psi_s: self.psi_s,
        }
    }
}

/// POVM parameters shared by both strategies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementSection {
    pub l: f64,
    pub theta: f64,
    pub phi_bs: f64,
    pub epr_output: EprOutput,
}

impl MeasurementSection {
    pub fn local(&self) -> MeasurementSpec {
        MeasurementSpec::local(clamp_l(self.l), self.theta)
    }

    pub fn epr(&self) -> MeasurementSpec {
        MeasurementSpec::epr(clamp_l(self.l), self.theta, self.phi_bs, self.epr_output)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Grid {
    Transient { start: f64, stop: f64, steps: usize },
    SteadyState,
}

impl Grid {
    /// Evenly spaced times including both ends.
    pub fn times(&self) -> Vec<f64> {
        match *self {
            Grid::Transient { start, stop, steps } => linspace(start, stop, steps),
            Grid::SteadyState => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepScale {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub name: String,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub scale: SweepScale,
}

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        match self.scale {
            SweepScale::Linear => linspace(self.start, self.stop, self.count),
            SweepScale::Log => linspace(self.start.log10(), self.stop.log10(), self.count)
                .into_iter()
                .enumerate()
                .map(|(i, e)| {
                    if i == 0 {
                        self.start
                    } else if i + 1 == self.count {
                        self.stop
                    } else {
                        10f64.powf(e)
                    }
                })
                .collect(),
        }
    }
}

fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (stop - start) / (n - 1) as f64;
            (0..n)
                .map(|i| {
                    if i + 1 == n {
                        stop
                    } else {
                        start + step * i as f64
                    }
                })
                .collect()
        }
    }
}

/// A complete scenario: physics, both strategies' inputs, the POVM and what
/// to evaluate.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub system: SystemParams,
    pub csl: Option<CslSection>,
    pub noise: NoiseSection,
    pub measurement: MeasurementSection,
    pub grid: Grid,
    pub sweep: Option<Sweep>,
}

/// Raw `key -> (value, line)` pairs from a config file.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, (String, usize)>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::config(
                    Some(line_no),
                    format!("expected `key = value`, got `{line}`"),
                )
            })?;
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.iter().any(|info| info.key == k) {
                return Err(Error::config(Some(line_no), format!("unknown key `{k}`")));
            }
            if v.is_empty() {
                return Err(Error::config(
                    Some(line_no),
                    format!("missing value for `{k}`"),
                ));
            }
            if let Some((_, first)) = entries.insert(k.to_string(), (v.to_string(), line_no)) {
                return Err(Error::config(
                    Some(line_no),
                    format!("duplicate key `{k}` (first set on line {first})"),
                ));
            }
        }
        Ok(RawConfig { entries })
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn str(&self, key: &str) -> Option<(&str, usize)> {
        self.entries.get(key).map(|(v, l)| (v.as_str(), *l))
    }

    fn f64_opt(&self, key: &str) -> Result<Option<f64>> {
        match self.str(key) {
            None => Ok(None),
            Some((v, line)) => parse_number(v).map(Some).ok_or_else(|| {
                Error::config(
                    Some(line),
                    format!("`{key}`: cannot parse `{v}` as a number"),
                )
            }),
        }
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.f64_opt(key)?.unwrap_or(default))
    }

    fn f64_req(&self, key: &str) -> Result<f64> {
        self.f64_opt(key)?
            .ok_or_else(|| Error::config(None, format!("missing required key `{key}`")))
    }

    fn usize_req(&self, key: &str) -> Result<usize> {
        let (v, line) = self
            .str(key)
            .ok_or_else(|| Error::config(None, format!("missing required key `{key}`")))?;
        v.parse().map_err(|_| {
            Error::config(
                Some(line),
                format!("`{key}`: expected a non-negative integer, got `{v}`"),
            )
        })
    }

    fn line(&self, key: &str) -> Option<usize> {
        self.str(key).map(|(_, l)| l)
    }

    /// The `csl` section, if any of its keys is present.
    pub fn csl_section(&self) -> Result<Option<CslSection>> {
        let keys = [
            "csl.lambda_rate",
            "csl.r_c",
            "csl.mass",
            "csl.shape",
            "csl.size",
        ];
        if !keys.iter().any(|k| self.contains(k)) {
            return Ok(None);
        }
        if let Some(missing) = keys.iter().find(|k| !self.contains(k)) {
            return Err(Error::config(
                None,
                format!("incomplete csl section: missing `{missing}`"),
            ));
        }
        let size = self.f64_req("csl.size")?;
        let (shape_name, line) = self.str("csl.shape").expect("checked above");
        let shape = match shape_name {
            "sphere" => Shape::Sphere { radius: size },
            "cube" => Shape::Cube { side: size },
            other => {
                return Err(Error::config(
                    Some(line),
                    format!("`csl.shape`: expected sphere or cube, got `{other}`"),
                ))
            }
        };
        let section = CslSection {
            lambda_rate: self.f64_req("csl.lambda_rate")?,
            r_c: self.f64_req("csl.r_c")?,
            mass: self.f64_req("csl.mass")?,
            shape,
        };
        Ok(Some(section))
    }
}

/// A number, `inf`, or a multiple of `pi` such as `pi/4`, `-pi`, `0.5*pi`.
pub fn parse_number(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Ok(v) = s.parse::<f64>() {
        return if v.is_nan() { None } else { Some(v) };
    }
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1.0, rest.trim()),
        None => (1.0, s),
    };
    let (num, den) = match body.split_once('/') {
        Some((n, d)) => (n.trim(), Some(d.trim().parse::<f64>().ok()?)),
        None => (body, None),
    };
    let coeff = match num.split_once('*') {
        Some((c, p)) if p.trim() == "pi" => c.trim().parse::<f64>().ok()?,
        None if num == "pi" => 1.0,
        _ => return None,
    };
    let v = sign * coeff * std::f64::consts::PI / den.unwrap_or(1.0);
    v.is_finite().then_some(v)
}

fn fmt_f64(v: f64) -> String {
    // Debug formatting is the shortest string that parses back exactly.
    if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:?}")
    }
}

impl ScenarioConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_raw(&RawConfig::parse(text)?)
    }

    pub fn from_raw(raw: &RawConfig) -> Result<Self> {
        let csl = raw.csl_section()?;
        let lambda_csl = match (csl.is_some(), raw.f64_opt("system.lambda_csl")?) {
            (true, Some(_)) => {
                return Err(Error::config(
                    raw.line("system.lambda_csl"),
                    "`system.lambda_csl` conflicts with the csl section, which determines it",
                ))
            }
            (true, None) => 0.0,
            (false, Some(v)) => v,
            (false, None) => {
                return Err(Error::config(
                    None,
                    "missing `system.lambda_csl` (or a complete csl section)",
                ))
            }
        };
        let system = SystemParams {
            omega_m: raw.f64_req("system.omega_m")?,
            gamma_m: raw.f64_req("system.gamma_m")?,
            kappa: raw.f64_req("system.kappa")?,
            delta1: raw.f64_or("system.delta1", 0.0)?,
            delta2: raw.f64_or("system.delta2", 0.0)?,
            g: raw.f64_req("system.g")?,
            temperature: raw.f64_req("system.temperature")?,
            lambda_csl,
        };
        let noise = NoiseSection {
            n1: raw.f64_or("noise.n1", 0.0)?,
            n2: raw.f64_or("noise.n2", 0.0)?,
            r: raw.f64_or("noise.r", 0.0)?,
            psi_s: raw.f64_or("noise.psi_s", std::f64::consts::PI)?,
        };
        let epr_output = match raw.str("measurement.epr_output") {
            None => EprOutput::Best,
            Some((v, line)) => v.parse().map_err(|e: String| {
                Error::config(Some(line), format!("`measurement.epr_output`: {e}"))
            })?,
        };
        let measurement = MeasurementSection {
            l: raw.f64_or("measurement.l", 1.0)?,
            theta: raw.f64_or("measurement.theta", 0.0)?,
            phi_bs: raw.f64_or("measurement.phi_bs", std::f64::consts::FRAC_PI_4)?,
            epr_output,
        };

        let steady = match raw.str("grid.steady_state") {
            None => false,
            Some(("true", _)) => true,
            Some(("false", _)) => false,
            Some((v, line)) => {
                return Err(Error::config(
                    Some(line),
                    format!("`grid.steady_state`: expected true or false, got `{v}`"),
                ))
            }
        };
        let has_times = ["grid.start", "grid.stop", "grid.steps"]
            .iter()
            .any(|k| raw.contains(k));
        let grid = match (steady, has_times) {
            (true, true) => {
                return Err(Error::config(
                    raw.line("grid.steady_state"),
                    "`grid.steady_state = true` cannot be combined with a time grid",
                ))
            }
            (true, false) => Grid::SteadyState,
            (false, true) => Grid::Transient {
                start: raw.f64_req("grid.start")?,
                stop: raw.f64_req("grid.stop")?,
                steps: raw.usize_req("grid.steps")?,
            },
            (false, false) => {
                return Err(Error::config(
                    None,
                    "missing grid: set grid.start/stop/steps or grid.steady_state = true",
                ))
            }
        };

        let sweep = if [
            "sweep.name",
            "sweep.start",
            "sweep.stop",
            "sweep.count",
            "sweep.scale",
        ]
        .iter()
        .any(|k| raw.contains(k))
        {
            let (name, line) = raw
                .str("sweep.name")
                .ok_or_else(|| Error::config(None, "missing required key `sweep.name`"))?;
            if !SWEEPABLE.contains(&name) {
                return Err(Error::config(
                    Some(line),
                    format!("`sweep.name`: `{name}` cannot be swept"),
                ));
            }
            let scale = match raw.str("sweep.scale") {
                None | Some(("linear", _)) => SweepScale::Linear,
                Some(("log", _)) => SweepScale::Log,
                Some((v, line)) => {
                    return Err(Error::config(
                        Some(line),
                        format!("`sweep.scale`: expected linear or log, got `{v}`"),
                    ))
                }
            };
            Some(Sweep {
                name: name.to_string(),
                start: raw.f64_req("sweep.start")?,
                stop: raw.f64_req("sweep.stop")?,
                count: raw.usize_req("sweep.count")?,
                scale,
            })
        } else {
            None
        };

        let config = ScenarioConfig {
            system,
            csl,
            noise,
            measurement,
            grid,
            sweep,
        };
        config.check()?;
        Ok(config)
    }

    /// Cross-field checks beyond what parsing enforces.
    pub fn check(&self) -> Result<()> {
        let as_config = |e: Error| match e {
            Error::InvalidParameter { name, reason } => {
                Error::config(None, format!("`{name}`: {reason}"))
            }
            other => other,
        };
        self.system.validate().map_err(as_config)?;
        if let Some(csl) = &self.csl {
            csl.params(self.system.omega_m)
                .validate()
                .map_err(as_config)?;
            csl.density().map_err(as_config)?;
        }
        self.noise.thermal().validate().map_err(as_config)?;
        self.noise.squeezed().validate().map_err(as_config)?;
        if self.measurement.l.is_nan() || self.measurement.l < 0.0 {
            return Err(Error::config(None, "`measurement.l` must be >= 0"));
        }
        self.measurement.epr().validate().map_err(as_config)?;
        if let Grid::Transient { start, stop, steps } = self.grid {
            if !(start.is_finite() && stop.is_finite() && start >= 0.0) {
                return Err(Error::config(
                    None,
                    "grid times must be finite and start >= 0",
                ));
            }
            if steps > 1 && stop <= start {
                return Err(Error::config(None, "`grid.stop` must exceed `grid.start`"));
            }
            if self.sweep.is_some() {
                return Err(Error::config(
                    None,
                    "sweeps are only supported with grid.steady_state = true",
                ));
            }
        }
        if let Some(sweep) = &self.sweep {
            if !(sweep.start.is_finite() && sweep.stop.is_finite()) {
                return Err(Error::config(None, "sweep bounds must be finite"));
            }
            if sweep.scale == SweepScale::Log && !(sweep.start > 0.0 && sweep.stop > 0.0) {
                return Err(Error::config(None, "log sweeps need positive bounds"));
            }
            if self.csl.is_some() && sweep.name == "system.lambda_csl" {
                return Err(Error::config(
                    None,
                    "cannot sweep system.lambda_csl when a csl section sets it",
                ));
            }
            if self.csl.is_none() && sweep.name.starts_with("csl.") {
                return Err(Error::config(
                    None,
                    format!("cannot sweep `{}` without a csl section", sweep.name),
                ));
            }
        }
        Ok(())
    }

    /// The config with `key` set to `value`; `key` must be sweepable.
    pub fn with_value(&self, key: &str, value: f64) -> Result<Self> {
        let mut c = self.clone();
        match key {
            "system.omega_m" => c.system.omega_m = value,
            "system.gamma_m" => c.system.gamma_m = value,
            "system.kappa" => c.system.kappa = value,
            "system.delta1" => c.system.delta1 = value,
            "system.delta2" => c.system.delta2 = value,
            "system.g" => c.system.g = value,
            "system.temperature" => c.system.temperature = value,
            "system.lambda_csl" => c.system.lambda_csl = value,
            "noise.n1" => c.noise.n1 = value,
            "noise.n2" => c.noise.n2 = value,
            "noise.r" => c.noise.r = value,
            "noise.psi_s" => c.noise.psi_s = value,
            "measurement.l" => c.measurement.l = value,
            "measurement.theta" => c.measurement.theta = value,
            "measurement.phi_bs" => c.measurement.phi_bs = value,
            k if k.starts_with("csl.") => {
                let csl = c
                    .csl
                    .as_mut()
                    .ok_or_else(|| Error::config(None, format!("`{k}` needs a csl section")))?;
                match k {
                    "csl.lambda_rate" => csl.lambda_rate = value,
                    "csl.r_c" => csl.r_c = value,
                    "csl.mass" => csl.mass = value,
                    "csl.size" => {
                        csl.shape = match csl.shape {
                            Shape::Sphere { .. } => Shape::Sphere { radius: value },
                            Shape::Cube { .. } => Shape::Cube { side: value },
                        }
                    }
                    _ => return Err(Error::config(None, format!("`{k}` cannot be swept"))),
                }
            }
            other => return Err(Error::config(None, format!("`{other}` cannot be swept"))),
        }
        c.check()?;
        Ok(c)
    }

    /// Canonical text form: every key, fixed order, exact round trip.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        let s = &self.system;
        put("system.omega_m", fmt_f64(s.omega_m));
        put("system.gamma_m", fmt_f64(s.gamma_m));
        put("system.kappa", fmt_f64(s.kappa));
        put("system.delta1", fmt_f64(s.delta1));
        put("system.delta2", fmt_f64(s.delta2));
        put("system.g", fmt_f64(s.g));
        put("system.temperature", fmt_f64(s.temperature));
        match &self.csl {
            None => put("system.lambda_csl", fmt_f64(s.lambda_csl)),
            Some(c) => {
                put("csl.lambda_rate", fmt_f64(c.lambda_rate));
                put("csl.r_c", fmt_f64(c.r_c));
                put("csl.mass", fmt_f64(c.mass));
                put("csl.shape", c.shape.name().to_string());
                put("csl.size", fmt_f64(c.shape.size()));
            }
        }
        put("noise.n1", fmt_f64(self.noise.n1));
        put("noise.n2", fmt_f64(self.noise.n2));
        put("noise.r", fmt_f64(self.noise.r));
        put("noise.psi_s", fmt_f64(self.noise.psi_s));
        put("measurement.l", fmt_f64(self.measurement.l));
        put("measurement.theta", fmt_f64(self.measurement.theta));
        put("measurement.phi_bs", fmt_f64(self.measurement.phi_bs));
        put(
            "measurement.epr_output",
            self.measurement.epr_output.as_str().to_string(),
        );
        match self.grid {
            Grid::SteadyState => put("grid.steady_state", "true".into()),
            Grid::Transient { start, stop, steps } => {
                put("grid.start", fmt_f64(start));
                put("grid.stop", fmt_f64(stop));
                put("grid.steps", steps.to_string());
            }
        }
        if let Some(sw) = &self.sweep {
            put("sweep.name", sw.name.clone());
            put("sweep.start", fmt_f64(sw.start));
            put("sweep.stop", fmt_f64(sw.stop));
            put("sweep.count", sw.count.to_string());
            put(
                "sweep.scale",
                match sw.scale {
                    SweepScale::Linear => "linear".into(),
                    SweepScale::Log => "log".into(),
                },
            );
        }
        out
    }

    /// SHA-256 of the canonical form and the tool version, hex encoded.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update(self.serialize().as_bytes());
        h.update(b"\nversion = ");
        h.update(crate::VERSION.as_bytes());
        hex::encode(h.finalize())
    }
}

/// Collapse parameters for the `alpha` verb: the csl section plus
/// `system.omega_m`. Other keys may be present and are ignored.
pub fn parse_csl_only(text: &str) -> Result<(CslSection, f64)> {
    let raw = RawConfig::parse(text)?;
    let csl = raw.csl_section()?.ok_or_else(|| {
        Error::config(
            None,
            "no csl section (csl.lambda_rate, r_c, mass, shape, size)",
        )
    })?;
    let omega_m = raw.f64_req("system.omega_m")?;
    let p = csl.params(omega_m);
    p.validate()
        .map_err(|e| Error::config(None, e.to_string()))?;
    csl.density()
        .map_err(|e| Error::config(None, e.to_string()))?;
    Ok((csl, omega_m))
}
