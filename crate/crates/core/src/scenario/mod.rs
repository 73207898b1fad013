//! The two experiments driven by a [`ScenarioConfig`]: a transient comparison
//! of the classical and quantum strategies on a time grid, and a
//! steady-state sweep. Results are collected in a [`ResultTable`] and
//! written as CSV.
//!
//! Transient runs evolve the initial state under thermal input with a local
//! measurement of cavity 1 (classical strategy) and under two-mode squeezed
//! input with the EPR measurement (quantum strategy). Steady-state runs drive
//! the system with the squeezed input and compare the local scheme
//! (classical columns) with the EPR scheme (quantum columns).

pub mod config;

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::csl::csl_diffusion_rate;
use crate::dynamics::{
    build_diffusion, build_drift, evolve, initial_state, lyapunov_residual, steady_state,
    EvolveOptions, SystemParams,
};
use crate::error::{Error, Result};
use crate::estimation::{point_fisher, strategy_fisher, EprOutput, FisherResult, MeasurementSpec};
use crate::gaussian::{beam_splitter_transform, ModeIndex, SYMPLECTIC_TOL};

pub use config::{Grid, ScenarioConfig, Sweep, SweepScale, KEYS, SWEEPABLE};

/// First-line units note of every CSV.
pub const UNITS_NOTE: &str = "per-shot-FI-for-Lambda-in-inverse-seconds";

/// Relative slack allowed in `cfi <= qfi`.
pub const ORDERING_SLACK: f64 = 1e-9;

/// Which strategies to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Classical,
    Quantum,
    Both,
}

impl Strategy {
    fn classical(self) -> bool {
        matches!(self, Strategy::Classical | Strategy::Both)
    }

    fn quantum(self) -> bool {
        matches!(self, Strategy::Quantum | Strategy::Both)
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "classical" => Ok(Strategy::Classical),
            "quantum" => Ok(Strategy::Quantum),
            "both" => Ok(Strategy::Both),
            other => Err(format!(
                "unknown strategy `{other}` (expected classical, quantum or both)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Flag {
    PureSingularity,
    NonHurwitz,
}

impl Flag {
    pub fn as_str(self) -> &'static str {
        match self {
            Flag::PureSingularity => "pure-singularity",
            Flag::NonHurwitz => "non-hurwitz",
        }
    }
}

/// CFI and QFI of one strategy at one row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub cfi: f64,
    /// `None` when the measured mode is numerically pure.
    pub qfi: Option<f64>,
}

impl From<&FisherResult> for Cell {
    fn from(r: &FisherResult) -> Self {
        Cell {
            cfi: r.cfi,
            qfi: r.qfi,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    /// Time in seconds or the sweep value.
    pub x: f64,
    pub classical: Option<Cell>,
    pub quantum: Option<Cell>,
    /// EPR output measured by the quantum strategy.
    pub epr_output: Option<EprOutput>,
    pub flags: Vec<Flag>,
}

impl Row {
    fn new(x: f64, classical: Option<&FisherResult>, quantum: Option<&FisherResult>) -> Self {
        let mut flags = Vec::new();
        if classical.is_some_and(|r| r.pure_state()) || quantum.is_some_and(|r| r.pure_state()) {
            flags.push(Flag::PureSingularity);
        }
        Row {
            x,
            classical: classical.map(Cell::from),
            quantum: quantum.map(Cell::from),
            epr_output: quantum.and_then(|r| r.epr_output),
            flags,
        }
    }

    fn non_hurwitz(x: f64) -> Self {
        Row {
            x,
            classical: None,
            quantum: None,
            epr_output: None,
            flags: vec![Flag::NonHurwitz],
        }
    }

    /// Cells whose CFI exceeds the QFI by more than [`ORDERING_SLACK`].
    pub fn ordering_violations(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        [self.classical, self.quantum]
            .into_iter()
            .flatten()
            .filter_map(|c| c.qfi.map(|q| (c.cfi, q)))
            .filter(|&(c, q)| c > q + ORDERING_SLACK * q)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub config_hash: String,
    pub version: &'static str,
    /// Name of the first column: `time_s` or the swept key.
    pub x_name: String,
    pub rows: Vec<Row>,
}

impl ResultTable {
    fn new(config: &ScenarioConfig, x_name: impl Into<String>, rows: Vec<Row>) -> Self {
        ResultTable {
            config_hash: config.hash(),
            version: crate::VERSION,
            x_name: x_name.into(),
            rows,
        }
    }

    /// The CSV text written by [`emit_csv`].
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# config-hash={} units={UNITS_NOTE}", self.config_hash);
        let _ = writeln!(
            out,
            "{},cfi_classical,qfi_classical,cfi_quantum,qfi_quantum,epr_output,flags",
            self.x_name
        );
        for row in &self.rows {
            let _ = write!(out, "{}", fmt_value(row.x));
            for cell in [row.classical, row.quantum] {
                match cell {
                    Some(c) => {
                        let qfi = c.qfi.map_or_else(|| "NaN".to_string(), fmt_value);
                        let _ = write!(out, ",{},{qfi}", fmt_value(c.cfi));
                    }
                    None => out.push_str(",,"),
                }
            }
            let out_name = row.epr_output.map_or("", EprOutput::as_str);
            let flags: Vec<_> = row.flags.iter().map(|f| f.as_str()).collect();
            let _ = writeln!(out, ",{out_name},{}", flags.join(";"));
        }
        out
    }
}

/// 12 significant digits in scientific notation.
fn fmt_value(v: f64) -> String {
    format!("{v:.11e}")
}

/// Writes the table to `path` via a temporary file in the same directory,
/// so an interrupted run never leaves a partial file behind.
pub fn emit_csv(table: &ResultTable, path: &Path) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::Builder::new()
        .prefix(".cslfi-")
        .suffix(".tmp")
        .tempfile_in(dir)
        .map_err(io_err)?;
    tmp.write_all(table.to_csv().as_bytes()).map_err(io_err)?;
    tmp.as_file().sync_all().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

/// System parameters with Λ taken from the csl section when present.
pub fn effective_params(config: &ScenarioConfig) -> Result<SystemParams> {
    let mut p = config.system;
    if let Some(csl) = &config.csl {
        p.lambda_csl = csl_diffusion_rate(&csl.params(p.omega_m), &csl.density()?)?;
    }
    p.validate()?;
    Ok(p)
}

/// One row per grid time; see the module docs for the two strategies.
pub fn run_transient(config: &ScenarioConfig, strategy: Strategy) -> Result<ResultTable> {
    let Grid::Transient { .. } = config.grid else {
        return Err(Error::config(
            None,
            "transient runs need grid.start/stop/steps",
        ));
    };
    let times = config.grid.times();
    if times.is_empty() {
        return Ok(ResultTable::new(config, "time_s", Vec::new()));
    }
    let params = effective_params(config)?;
    let a = build_drift(&params)?;
    let initial = initial_state(&params)?;
    let opts = EvolveOptions::default();

    let branch = |enabled: bool, noise: crate::dynamics::InputNoise, spec: MeasurementSpec| {
        if !enabled {
            return Ok(None);
        }
        let d = build_diffusion(&params, &noise)?;
        let traj = evolve(&a, &d, &initial, &times, &opts)?;
        strategy_fisher(&traj, noise.label(), &spec).map(Some)
    };
    let (classical, quantum) = rayon::join(
        || {
            branch(
                strategy.classical(),
                config.noise.thermal(),
                config.measurement.local(),
            )
        },
        || {
            branch(
                strategy.quantum(),
                config.noise.squeezed(),
                config.measurement.epr(),
            )
        },
    );
    let (classical, quantum) = (classical?, quantum?);

    let rows = times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            Row::new(
                t,
                classical.as_ref().map(|v| &v[i]),
                quantum.as_ref().map(|v| &v[i]),
            )
        })
        .collect();
    Ok(ResultTable::new(config, "time_s", rows))
}

/// The sweep, or a single point at the configured squeezing.
fn effective_sweep(config: &ScenarioConfig) -> (String, Vec<f64>) {
    match &config.sweep {
        Some(s) => (s.name.clone(), s.values()),
        None => ("noise.r".to_string(), vec![config.noise.r]),
    }
}

fn steady_row(config: &ScenarioConfig, strategy: Strategy, x: f64) -> Result<Row> {
    let params = effective_params(config)?;
    let a = build_drift(&params)?;
    if !a.is_hurwitz() {
        return Ok(Row::non_hurwitz(x));
    }
    let noise = config.noise.squeezed();
    let d = build_diffusion(&params, &noise)?;
    let ss = steady_state(&a, &d)?;
    let eval = |enabled: bool, spec: MeasurementSpec| {
        enabled
            .then(|| point_fisher(None, &ss.sigma, &ss.sensitivity, &spec, noise.label()))
            .transpose()
    };
    let classical = eval(strategy.classical(), config.measurement.local())?;
    let quantum = eval(strategy.quantum(), config.measurement.epr())?;
    Ok(Row::new(x, classical.as_ref(), quantum.as_ref()))
}

/// One row per sweep value. A point with an unstable drift is flagged and
/// the sweep continues; any other failure aborts.
pub fn run_steady_sweep(config: &ScenarioConfig, strategy: Strategy) -> Result<ResultTable> {
    if config.grid != Grid::SteadyState {
        return Err(Error::config(
            None,
            "steady-state sweeps need grid.steady_state = true",
        ));
    }
    let (name, values) = effective_sweep(config);
    let rows = values
        .par_iter()
        .map(|&x| steady_row(&config.with_value(&name, x)?, strategy, x))
        .collect::<Result<Vec<_>>>()?;
    Ok(ResultTable::new(config, name, rows))
}

/// Runs whichever experiment the config's grid selects.
pub fn run(config: &ScenarioConfig, strategy: Strategy) -> Result<ResultTable> {
    match config.grid {
        Grid::Transient { .. } => run_transient(config, strategy),
        Grid::SteadyState => run_steady_sweep(config, strategy),
    }
}

/// Outcome of one invariant check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name,
            passed,
            detail: detail.into(),
        }
    }
}

/// Runs the invariant suite on a config: stability, steady-state residuals,
/// initial-state physicality, beam-splitter symplecticity, and for the
/// configured run physicality and `cfi <= qfi` at every point.
pub fn validate(config: &ScenarioConfig) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let params = effective_params(config)?;
    checks.push(Check::new(
        "lambda",
        true,
        format!("Lambda = {:e} 1/s", params.lambda_csl),
    ));

    let a = build_drift(&params)?;
    checks.push(Check::new(
        "hurwitz",
        a.is_hurwitz(),
        format!("max eigenvalue real part {:e}", a.max_real_part()),
    ));

    if a.is_hurwitz() {
        for noise in [config.noise.thermal(), config.noise.squeezed()] {
            let d = build_diffusion(&params, &noise)?;
            let detail = match steady_state(&a, &d) {
                Ok(ss) => {
                    let res = lyapunov_residual(a.matrix(), ss.sigma.matrix(), d.matrix());
                    (
                        true,
                        format!("{} input: normalized residual {res:e}", noise.label()),
                    )
                }
                Err(e) => (false, format!("{} input: {e}", noise.label())),
            };
            checks.push(Check::new("steady-state", detail.0, detail.1));
        }
    }

    match initial_state(&params) {
        Ok(m) => checks.push(Check::new(
            "initial-state",
            m.sigma.is_physical(),
            "physical",
        )),
        Err(e) => checks.push(Check::new("initial-state", false, e.to_string())),
    }

    let bs = beam_splitter_transform(
        config.measurement.phi_bs,
        3,
        ModeIndex::CAVITY1,
        ModeIndex::CAVITY2,
    )?;
    checks.push(Check::new(
        "symplectic",
        bs.deviation() <= SYMPLECTIC_TOL,
        format!("beam splitter deviation {:e}", bs.deviation()),
    ));

    match run(config, Strategy::Both) {
        Ok(table) => {
            let violations: Vec<_> = table
                .rows
                .iter()
                .flat_map(|r| r.ordering_violations())
                .collect();
            checks.push(Check::new(
                "run",
                true,
                format!("{} rows, every state physical", table.rows.len()),
            ));
            checks.push(Check::new(
                "cfi<=qfi",
                violations.is_empty(),
                match violations.first() {
                    None => "holds at every point".to_string(),
                    Some((c, q)) => format!(
                        "{} violations, e.g. cfi {c:e} > qfi {q:e}",
                        violations.len()
                    ),
                },
            ));
        }
        Err(e) if e.is_physics() => checks.push(Check::new("run", false, e.to_string())),
        Err(e) => return Err(e),
    }
    Ok(checks)
}
