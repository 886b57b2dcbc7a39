//! Configuration-driven experiments with reproducible file outputs.
//!
//! A run reads one TOML file, executes one named experiment and writes
//! `manifest.json`, `results.json` (plus `results.csv` for tabular output)
//! and `invariants.json` into `<out>/<experiment>-<seed hash>/`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, bail, Context, Result};
use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::constants::{PhysicalConstants, UnitPreset};
use crate::electrodynamics::{self, EmConstants, FieldConvention};
use crate::fields::{
    clifford_identity_residual, dot3, norm3, spin_drift, Boundary, Grid, ScalarField, SpinAxis,
    TimePair, VectorField, WaveFunction,
};
use crate::fokker_planck::{continuity_residual, stationarity_residual, weighted_residual_norm, FPState, FpStepper};
use crate::langevin::{msd_and_diffusion, path_rng, simulate_ensemble, GridDrift, StepperConfig, ZeroDrift};
use crate::mass_ledger::{
    replay, LedgerEvent, LedgerHistory, LedgerLog, LedgerState, LedgerTerms, SignPattern, TermUpdate,
};
use crate::schrodinger::{evolve, madelung_fields, solve_stationary, HamiltonianSpec};
use crate::stats::convergence_orders;

/// Environment variable overriding the output root.
pub const ENV_OUT: &str = "STOCHMECH_OUT";
/// Environment variable overriding the thread cap.
pub const ENV_THREADS: &str = "STOCHMECH_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    DiffusionRecovery,
    DensityMatch,
    FpEvolve,
    StationarityAudit,
    MassAudit,
    EmBudget,
    SpinChecks,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::DiffusionRecovery,
        Experiment::DensityMatch,
        Experiment::FpEvolve,
        Experiment::StationarityAudit,
        Experiment::MassAudit,
        Experiment::EmBudget,
        Experiment::SpinChecks,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::DiffusionRecovery => "diffusion-recovery",
            Experiment::DensityMatch => "density-match",
            Experiment::FpEvolve => "fp-evolve",
            Experiment::StationarityAudit => "stationarity-audit",
            Experiment::MassAudit => "mass-audit",
            Experiment::EmBudget => "em-budget",
            Experiment::SpinChecks => "spin-checks",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.as_str() == s)
    }

    pub fn names() -> String {
        Self::ALL.map(|e| e.as_str()).join(", ")
    }

    pub fn schema(self) -> &'static [ParamSpec] {
        use ParamDefault::*;
        use Kind::*;
        macro_rules! p {
            ($n:literal, $k:expr, $d:expr, $doc:literal) => {
                ParamSpec { name: $n, kind: $k, default: $d, doc: $doc }
            };
        }
        match self {
            Experiment::DiffusionRecovery => &[
                p!("paths", Int, I(100_000), "number of independent paths"),
                p!("steps", Int, I(1000), "Euler-Maruyama steps per path"),
                p!("dt", Float, F(1e-3), "time step"),
                p!("dim", Int, I(3), "spatial dimension (1-3)"),
                p!("beta", Float, Derived, "diffusion constant; defaults to hbar/2m_e of the unit preset"),
                p!("record_stride", Int, I(20), "keep every n-th step for the MSD curve"),
                p!("transient_cut", Float, F(0.0), "fit the MSD slope only for t > cut"),
                p!("tolerance", Float, F(0.05), "allowed relative error of the recovered beta"),
            ],
            Experiment::DensityMatch => &[
                p!("paths", Int, I(100_000), "number of sampled paths"),
                p!("steps", Int, I(5000), "steps per path"),
                p!("dt", Float, F(2e-3), "time step in units of 1/omega"),
                p!("nodes", Int, I(1601), "solver grid nodes"),
                p!("half_width", Float, F(8.0), "solver grid half-width in oscillator lengths"),
                p!("bin_width", Float, F(0.2), "histogram bin width, a multiple of the grid spacing"),
                p!("tolerance", Float, F(0.02), "allowed total-variation distance"),
            ],
            Experiment::FpEvolve => &[
                p!("beta", Float, F(0.5), "diffusion constant"),
                p!("sigma0", Float, F(1.0), "initial Gaussian width"),
                p!("nodes", Int, I(801), "Fokker-Planck grid nodes"),
                p!("half_width", Float, F(8.0), "Fokker-Planck grid half-width"),
                p!("steps", Int, I(100), "Fokker-Planck steps"),
                p!("stride", Int, I(10), "snapshot stride"),
                p!("dt_fraction", Float, F(0.9), "time step as a fraction of the stability bound"),
                p!("variance_tolerance", Float, F(0.01), "allowed relative error of the variance law"),
                p!("packet_k", Float, F(1.0), "wave number of the Schrodinger packet"),
                p!("packet_sigma", Float, F(1.0), "width of the Schrodinger packet"),
                p!("packet_half_width", Float, F(20.0), "Schrodinger grid half-width"),
                p!("packet_nodes", Int, I(201), "Schrodinger grid nodes at the coarsest level"),
                p!("packet_steps", Int, I(20), "Schrodinger steps at the coarsest level"),
                p!("packet_t_end", Float, F(1.0), "Schrodinger evolution time"),
                p!("levels", Int, I(4), "refinement levels (dt and spacing halved together)"),
                p!("min_order", Float, F(1.8), "required observed order of the continuity residual"),
            ],
            Experiment::StationarityAudit => &[
                p!("ho_nodes", Int, I(16_001), "harmonic-oscillator grid nodes"),
                p!("ho_half_width", Float, F(8.0), "harmonic-oscillator half-width in oscillator lengths"),
                p!("hydrogen_nodes", Int, I(30_000), "radial hydrogen grid nodes"),
                p!("hydrogen_spacing", Float, F(1e-3), "radial spacing in Bohr radii"),
                p!("residual_tolerance", Float, F(1e-6), "allowed weighted stationarity residual"),
                p!("ho_energy_tolerance", Float, F(1e-6), "allowed relative error of hbar omega / 2"),
                p!("hydrogen_energy_tolerance", Float, F(1e-4), "allowed relative error of the hydrogen ground energy"),
            ],
            Experiment::MassAudit => &[
                p!("log", Str, Derived, "event log (JSON) to replay; random sequences when absent"),
                p!("sequences", Int, I(10_000), "random transition sequences"),
                p!("length", Int, I(10), "transitions per sequence"),
                p!("energy_fraction", Float, F(1e-3), "transition energies drawn up to this fraction of E"),
                p!("drift_tolerance", Float, F(1e-15), "allowed relative drift of the ledger mass"),
            ],
            Experiment::EmBudget => &[
                p!("q", Float, Derived, "charge; defaults to the unit preset value"),
                p!("r_min", Float, Derived, "inner radius; defaults to the classical electron radius"),
                p!("dv", Float, Derived, "transition speed; defaults to 0.1 c"),
                p!("order", Int, I(4), "terms of the relativistic series"),
                p!("convention", Str, S("inverse-c"), "Biot-Savart prefactor: inverse-c (1/c) or si (mu0/4pi)"),
            ],
            Experiment::SpinChecks => &[
                p!("pairs", Int, I(1000), "random perpendicular pairs for the Clifford identity"),
                p!("densities", Int, I(20), "random smooth densities for the spin drifts"),
                p!("nodes", Int, I(9), "nodes per axis of the spin grid"),
                p!("interaction_cases", Int, I(10_000), "random cases for the spin-orbit/spin-spin split"),
                p!("tolerance", Float, F(1e-12), "allowed relative residual"),
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Float,
    Int,
    Bool,
    Str,
}

impl Kind {
    fn name(self) -> &'static str {
        match self {
            Kind::Float => "float",
            Kind::Int => "integer",
            Kind::Bool => "boolean",
            Kind::Str => "string",
        }
    }

    fn accepts(self, v: &toml::Value) -> bool {
        matches!(
            (self, v),
            (Kind::Float, toml::Value::Float(_) | toml::Value::Integer(_))
                | (Kind::Int, toml::Value::Integer(_))
                | (Kind::Bool, toml::Value::Boolean(_))
                | (Kind::Str, toml::Value::String(_))
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamDefault {
    F(f64),
    I(i64),
    B(bool),
    S(&'static str),
    /// Computed from the unit preset or absent.
    Derived,
}

#[derive(Debug, Clone, Copy)]
pub struct ParamSpec {
    pub name: &'static str,
    pub kind: Kind,
    pub default: ParamDefault,
    pub doc: &'static str,
}

/// One schema-level problem with a config file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub key: String,
    pub message: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.key, self.message)
    }
}

fn diag(key: impl Into<String>, message: impl Into<String>) -> Diagnostic {
    Diagnostic {
        key: key.into(),
        message: message.into(),
    }
}

const TOP_KEYS: [&str; 5] = ["experiment", "seed", "units", "params", "output"];

/// Parses TOML text, reporting syntax errors with line and column.
pub fn parse_toml(text: &str) -> Result<toml::Table, Diagnostic> {
    text.parse::<toml::Table>().map_err(|e| {
        let (line, col) = e
            .span()
            .map(|s| line_col(text, s.start))
            .unwrap_or((0, 0));
        diag(
            format!("line {line}, column {col}"),
            e.message().trim().to_string(),
        )
    })
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

fn seed_value(v: &toml::Value) -> Option<u64> {
    match v {
        toml::Value::Integer(i) if *i >= 0 => Some(*i as u64),
        toml::Value::String(s) => s.parse().ok(),
        _ => None,
    }
}

/// Schema-level checks of a parsed config; empty when well formed.
pub fn validate_table(t: &toml::Table) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for k in t.keys() {
        if !TOP_KEYS.contains(&k.as_str()) {
            out.push(diag(k, format!("unknown key (expected one of {})", TOP_KEYS.join(", "))));
        }
    }
    let experiment = match t.get("experiment") {
        None => {
            out.push(diag("experiment", format!("missing; one of {}", Experiment::names())));
            None
        }
        Some(toml::Value::String(s)) => match Experiment::parse(s) {
            Some(e) => Some(e),
            None => {
                out.push(diag("experiment", format!("unknown experiment `{s}`; one of {}", Experiment::names())));
                None
            }
        },
        Some(_) => {
            out.push(diag("experiment", format!("must be a string, one of {}", Experiment::names())));
            None
        }
    };
    match t.get("seed") {
        None => out.push(diag("seed", "missing; a non-negative 64-bit integer")),
        Some(v) if seed_value(v).is_none() => out.push(diag("seed", "must be a non-negative 64-bit integer")),
        _ => {}
    }
    if let Some(v) = t.get("units") {
        if v.as_str().and_then(parse_units).is_none() {
            out.push(diag("units", "must be \"si\" or \"natural\""));
        }
    }
    match t.get("output") {
        None => {}
        Some(toml::Value::Table(o)) => {
            for (k, v) in o {
                if k != "dir" {
                    out.push(diag(format!("output.{k}"), "unknown key (expected dir)"));
                } else if !v.is_str() {
                    out.push(diag("output.dir", "must be a string"));
                }
            }
        }
        Some(_) => out.push(diag("output", "must be a table")),
    }
    match t.get("params") {
        None => {}
        Some(toml::Value::Table(p)) => {
            if let Some(e) = experiment {
                let schema = e.schema();
                for (k, v) in p {
                    match schema.iter().find(|s| s.name == k) {
                        None => {
                            let known: Vec<_> = schema.iter().map(|s| s.name).collect();
                            out.push(diag(
                                format!("params.{k}"),
                                format!("unknown parameter for {} (known: {})", e.as_str(), known.join(", ")),
                            ));
                        }
                        Some(s) if !s.kind.accepts(v) => {
                            out.push(diag(format!("params.{k}"), format!("must be a {}", s.kind.name())));
                        }
                        _ => {}
                    }
                }
            }
        }
        Some(_) => out.push(diag("params", "must be a table")),
    }
    out
}

fn parse_units(s: &str) -> Option<UnitPreset> {
    match s.to_ascii_lowercase().as_str() {
        "si" => Some(UnitPreset::Si),
        "natural" => Some(UnitPreset::Natural),
        _ => None,
    }
}

/// Reads and validates a config file.
pub fn validate_file(path: &Path) -> Result<Vec<Diagnostic>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(match parse_toml(&text) {
        Ok(t) => validate_table(&t),
        Err(d) => vec![d],
    })
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub units: UnitPreset,
    pub params: toml::Table,
    pub output: PathBuf,
    /// Directory relative paths in `params` resolve against.
    pub base_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn from_table(t: &toml::Table, base_dir: &Path) -> Result<Self> {
        let diags = validate_table(t);
        if !diags.is_empty() {
            bail!(
                "invalid config:\n{}",
                diags.iter().map(|d| format!("  {d}")).collect::<Vec<_>>().join("\n")
            );
        }
        let experiment = Experiment::parse(t["experiment"].as_str().unwrap()).unwrap();
        let seed = seed_value(&t["seed"]).unwrap();
        let units = t.get("units").and_then(|v| v.as_str()).and_then(parse_units).unwrap_or(UnitPreset::Si);
        let params = t.get("params").and_then(|v| v.as_table()).cloned().unwrap_or_default();
        let output = t
            .get("output")
            .and_then(|o| o.get("dir"))
            .and_then(|d| d.as_str())
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("runs"));
        Ok(Self {
            experiment,
            seed,
            units,
            params,
            output,
            base_dir: base_dir.to_path_buf(),
        })
    }

    pub fn from_str(text: &str, base_dir: &Path) -> Result<Self> {
        let t = parse_toml(text).map_err(|d| anyhow!("{d}"))?;
        Self::from_table(&t, base_dir)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_str(&text, &base)
    }

    /// Minimal config for `experiment` with every parameter defaulted.
    pub fn with_defaults(experiment: Experiment, seed: u64) -> Self {
        Self {
            experiment,
            seed,
            units: UnitPreset::Si,
            params: toml::Table::new(),
            output: PathBuf::from("runs"),
            base_dir: PathBuf::from("."),
        }
    }

    pub fn set(&mut self, key: &str, value: impl Into<toml::Value>) -> &mut Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    fn constants(&self) -> PhysicalConstants {
        PhysicalConstants::preset(self.units)
    }

    fn params(&self) -> Params<'_> {
        Params {
            table: &self.params,
            schema: self.experiment.schema(),
        }
    }

    /// `<experiment>-<first 16 hex digits of sha256(seed)>`.
    pub fn run_name(&self) -> String {
        format!("{}-{}", self.experiment.as_str(), seed_hash(self.seed))
    }
}

pub fn seed_hash(seed: u64) -> String {
    hex::encode(Sha256::digest(seed.to_le_bytes()))[..16].to_string()
}

struct Params<'a> {
    table: &'a toml::Table,
    schema: &'static [ParamSpec],
}

impl Params<'_> {
    fn spec(&self, name: &str) -> &ParamSpec {
        self.schema
            .iter()
            .find(|s| s.name == name)
            .unwrap_or_else(|| panic!("parameter `{name}` missing from schema"))
    }

    fn opt_f64(&self, name: &str) -> Option<f64> {
        match (self.table.get(name), self.spec(name).default) {
            (Some(toml::Value::Float(x)), _) => Some(*x),
            (Some(toml::Value::Integer(i)), _) => Some(*i as f64),
            (_, ParamDefault::F(x)) => Some(x),
            _ => None,
        }
    }

    fn f64(&self, name: &str) -> Result<f64> {
        let x = self.opt_f64(name).ok_or_else(|| anyhow!("params.{name}: missing"))?;
        if !x.is_finite() {
            bail!("params.{name}: must be finite");
        }
        Ok(x)
    }

    fn positive(&self, name: &str) -> Result<f64> {
        let x = self.f64(name)?;
        if !(x > 0.0) {
            bail!("params.{name}: must be positive, got {x}");
        }
        Ok(x)
    }

    fn count(&self, name: &str, min: usize) -> Result<usize> {
        let i = match (self.table.get(name), self.spec(name).default) {
            (Some(toml::Value::Integer(i)), _) => *i,
            (_, ParamDefault::I(i)) => i,
            _ => bail!("params.{name}: missing"),
        };
        if i < min as i64 {
            bail!("params.{name}: must be at least {min}, got {i}");
        }
        Ok(i as usize)
    }

    fn opt_str(&self, name: &str) -> Option<String> {
        match (self.table.get(name), self.spec(name).default) {
            (Some(toml::Value::String(s)), _) => Some(s.clone()),
            (_, ParamDefault::S(s)) => Some(s.to_string()),
            _ => None,
        }
    }
}

/// One checked property of a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Invariant {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub relation: &'static str,
    pub passed: bool,
}

impl Invariant {
    pub fn at_most(name: &str, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound,
            relation: "<=",
            passed: value <= bound,
        }
    }

    pub fn below(name: &str, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound,
            relation: "<",
            passed: value < bound,
        }
    }

    pub fn at_least(name: &str, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound,
            relation: ">=",
            passed: value >= bound,
        }
    }

    pub fn holds(name: &str, ok: bool) -> Self {
        Self {
            name: name.into(),
            value: f64::from(u8::from(ok)),
            bound: 1.0,
            relation: "==",
            passed: ok,
        }
    }
}

/// In-memory result of one experiment.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub results: Value,
    pub csv: Option<String>,
    pub invariants: Vec<Invariant>,
    /// Additional `(file name, contents)` pairs.
    pub extra_files: Vec<(String, String)>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.invariants.iter().all(|i| i.passed)
    }

    pub fn invariant(&self, name: &str) -> Option<&Invariant> {
        self.invariants.iter().find(|i| i.name == name)
    }
}

/// Files written by [`run`].
#[derive(Debug, Clone)]
pub struct RunReport {
    pub dir: PathBuf,
    pub outcome: Outcome,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.outcome.passed()
    }
}

/// Runs the experiment on a pool of at most `threads` workers (all cores
/// when `None`). Results do not depend on the thread count.
pub fn execute(config: &ExperimentConfig, threads: Option<usize>) -> Result<Outcome> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        b = b.num_threads(n);
    }
    let pool = b.build().context("building the thread pool")?;
    pool.install(|| match config.experiment {
        Experiment::DiffusionRecovery => diffusion_recovery(config),
        Experiment::DensityMatch => density_match(config),
        Experiment::FpEvolve => fp_evolve(config),
        Experiment::StationarityAudit => stationarity_audit(config),
        Experiment::MassAudit => mass_audit(config),
        Experiment::EmBudget => em_budget(config),
        Experiment::SpinChecks => spin_checks(config),
    })
}

fn pretty(v: &impl Serialize) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

/// Executes and writes the run directory under `out_root`.
pub fn run(config: &ExperimentConfig, threads: Option<usize>, out_root: &Path) -> Result<RunReport> {
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let clock = Instant::now();
    let outcome = execute(config, threads)?;
    let wall = clock.elapsed().as_secs_f64();
    let dir = out_root.join(config.run_name());
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let params: Value = serde_json::to_value(&config.params)?;
    let manifest = json!({
        "experiment": config.experiment.as_str(),
        "seed": config.seed,
        "seed_hash": seed_hash(config.seed),
        "units": config.units,
        "params": params,
        "package": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "threads": threads.unwrap_or_else(rayon::current_num_threads),
        "started_unix": started,
        "wall_time_s": wall,
    });
    fs::write(dir.join("manifest.json"), pretty(&manifest)?)?;
    let mut results = outcome.results.clone();
    if let Value::Object(m) = &mut results {
        m.insert("seed".into(), json!(config.seed));
        m.insert("experiment".into(), json!(config.experiment.as_str()));
    }
    fs::write(dir.join("results.json"), pretty(&results)?)?;
    if let Some(csv) = &outcome.csv {
        fs::write(dir.join("results.csv"), csv)?;
    }
    let inv = json!({
        "experiment": config.experiment.as_str(),
        "seed": config.seed,
        "passed": outcome.passed(),
        "invariants": outcome.invariants,
    });
    fs::write(dir.join("invariants.json"), pretty(&inv)?)?;
    for (name, contents) in &outcome.extra_files {
        fs::write(dir.join(name), contents)?;
    }
    Ok(RunReport { dir, outcome })
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn csv_table(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        let line: Vec<String> = r.iter().map(|x| format!("{x:e}")).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}

const REFERENCE_ELECTRON_BETA: f64 = 5.7884e-5;
const REFERENCE_MAGNETIC_MASS: &str = "9.10952e-31";

fn diffusion_recovery(cfg: &ExperimentConfig) -> Result<Outcome> {
    let p = cfg.params();
    let k = cfg.constants();
    let beta_default = p.opt_f64("beta").is_none();
    let beta = p.opt_f64("beta").unwrap_or_else(|| k.electron_beta());
    if !(beta >= 0.0 && beta.is_finite()) {
        bail!("params.beta: must be non-negative");
    }
    let mut sc = StepperConfig::free(
        p.positive("dt")?,
        p.count("steps", 1)?,
        p.count("paths", crate::langevin::MIN_MSD_PATHS)?,
        beta,
        cfg.seed,
        p.count("dim", 1)?,
    );
    sc.mass = k.electron_mass;
    sc.record_stride = p.count("record_stride", 1)?;
    let ens = simulate_ensemble(&sc, &ZeroDrift)?;
    let msd = msd_and_diffusion(&ens, p.f64("transient_cut")?)?;
    let err = if beta > 0.0 { rel(msd.beta_hat, beta) } else { msd.beta_hat.abs() };
    let tol = p.positive("tolerance")?;
    let mut invariants = vec![Invariant::at_most("beta_relative_error", err, tol)];
    if beta_default && cfg.units == UnitPreset::Si {
        invariants.push(Invariant::below(
            "electron_beta_reference",
            rel(beta, REFERENCE_ELECTRON_BETA),
            1e-4,
        ));
    }
    let fit = msd.fit;
    let csv = csv_table(
        &["t", "msd", "fit"],
        msd.times.iter().zip(&msd.msd).map(|(&t, &m)| vec![t, m, fit.intercept + fit.slope * t]),
    );
    Ok(Outcome {
        results: json!({
            "beta": beta,
            "beta_hat": msd.beta_hat,
            "relative_error": err,
            "fit": fit,
            "transient_cut": msd.transient_cut,
            "paths": sc.n_paths,
            "steps": sc.n_steps,
            "dt": sc.dt,
            "dim": sc.dim,
        }),
        csv: Some(csv),
        invariants,
        extra_files: vec![],
    })
}

/// Harmonic oscillator `V = x^2/2` with `hbar = m = omega = 1`.
fn harmonic_spec(nodes: usize, half_width: f64) -> Result<HamiltonianSpec> {
    let g = Grid::line(nodes, -half_width, half_width, Boundary::DirichletZero)?;
    let v = ScalarField::from_fn(&g, |x| 0.5 * x[0] * x[0])?;
    Ok(HamiltonianSpec::new(v, 1.0, 1.0))
}

/// Radial hydrogen `V = -1/r` in atomic units.
fn hydrogen_spec(nodes: usize, spacing: f64) -> Result<HamiltonianSpec> {
    let g = Grid::radial(nodes, spacing)?;
    let v = ScalarField::from_fn(&g, |x| -1.0 / x[0])?;
    Ok(HamiltonianSpec::new(v, 1.0, 1.0))
}

/// Oscillator length, time and energy scales of the unit preset.
fn oscillator_scales(k: &PhysicalConstants, omega: f64) -> Value {
    json!({
        "length": (k.hbar / (k.electron_mass * omega)).sqrt(),
        "time": 1.0 / omega,
        "energy": k.hbar * omega,
    })
}

fn density_match(cfg: &ExperimentConfig) -> Result<Outcome> {
    let p = cfg.params();
    let nodes = p.count("nodes", 3)?;
    let half = p.positive("half_width")?;
    let spec = harmonic_spec(nodes, half)?;
    let sol = solve_stationary(&spec, 1)?.remove(0);
    let g = spec.potential.grid().clone();
    let f = madelung_fields(&sol.psi, &VectorField::zeros(&g))?;
    let h = g.spacing()[0];
    let bw = p.positive("bin_width")?;
    let per_bin = (bw / h).round() as usize;
    if per_bin == 0 || ((per_bin as f64) * h - bw).abs() > 1e-9 * bw || (nodes - 1) % per_bin != 0 {
        bail!("params.bin_width: must be a multiple of the grid spacing {h} dividing the grid");
    }
    let n_bins = (nodes - 1) / per_bin;
    let solver: Vec<f64> = (0..n_bins)
        .map(|b| {
            let (lo, hi) = (b * per_bin, (b + 1) * per_bin);
            (lo..hi).map(|i| 0.5 * h * (f.rho.get(i) + f.rho.get(i + 1))).sum()
        })
        .collect();
    let total: f64 = solver.iter().sum();
    let solver: Vec<f64> = solver.iter().map(|x| x / total).collect();

    let steps = p.count("steps", 1)?;
    let sc = StepperConfig {
        dt: p.positive("dt")?,
        n_steps: steps,
        n_paths: p.count("paths", 1)?,
        beta: 0.5 * spec.hbar / spec.mass,
        master_seed: cfg.seed,
        mass: spec.mass,
        friction: 0.0,
        dim: 1,
        initial_position: [0.0; 3],
        record_stride: steps,
        external_force: Default::default(),
    };
    let ens = simulate_ensemble(&sc, &GridDrift(f.u.clone()))?;
    let last = ens.n_records() - 1;
    let mut counts = vec![0usize; n_bins];
    let mut outside = 0usize;
    for x in ens.snapshot(last, 0) {
        let b = ((x + half) / bw).floor();
        if b >= 0.0 && (b as usize) < n_bins {
            counts[b as usize] += 1;
        } else {
            outside += 1;
        }
    }
    let n = sc.n_paths as f64;
    let empirical: Vec<f64> = counts.iter().map(|&c| c as f64 / n).collect();
    let tv = 0.5 * (empirical.iter().zip(&solver).map(|(a, b)| (a - b).abs()).sum::<f64>() + outside as f64 / n);
    let e_err = rel(sol.energy, 0.5);
    let csv = csv_table(
        &["x", "empirical", "solver"],
        (0..n_bins).map(|b| vec![-half + (b as f64 + 0.5) * bw, empirical[b], solver[b]]),
    );
    Ok(Outcome {
        results: json!({
            "energy": sol.energy,
            "energy_relative_error": e_err,
            "total_variation": tv,
            "outside_fraction": outside as f64 / n,
            "bins": n_bins,
            "paths": sc.n_paths,
            "steps": steps,
            "dt": sc.dt,
            "reduced_units": oscillator_scales(&cfg.constants(), 1.0),
        }),
        csv: Some(csv),
        invariants: vec![
            Invariant::below("total_variation", tv, p.positive("tolerance")?),
            Invariant::below("ground_energy_relative_error", e_err, 1e-4),
        ],
        extra_files: vec![],
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuityLevel {
    pub nodes: usize,
    pub dt: f64,
    pub residual_l2: f64,
    pub max_step_norm_drift: f64,
}

/// Continuity residual of a free Schrodinger packet at the final step pair
/// for successive simultaneous halvings of `dt` and the spacing.
pub fn packet_continuity_study(
    k: f64,
    sigma: f64,
    half_width: f64,
    nodes: usize,
    steps: usize,
    t_end: f64,
    levels: usize,
) -> Result<(Vec<ContinuityLevel>, Value)> {
    let mut out = Vec::with_capacity(levels);
    let mut coarse_ledger = Value::Null;
    for level in 0..levels {
        let n = (nodes - 1) * (1 << level) + 1;
        let n_steps = steps << level;
        let dt = t_end / n_steps as f64;
        let g = Grid::line(n, -half_width, half_width, Boundary::DirichletZero)?;
        let psi0 = WaveFunction::from_fn(&g, 1.0, 1.0, |x| {
            Complex64::from_polar((-x[0] * x[0] / (4.0 * sigma * sigma)).exp(), k * x[0])
        })?;
        let spec = HamiltonianSpec::new(ScalarField::zeros(&g), 1.0, 1.0);
        let tr = evolve(&spec, &psi0, dt, n_steps)?;
        let z = VectorField::zeros(&g);
        let s = &tr.states;
        let fa = madelung_fields(&s[s.len() - 2], &z)?;
        let fb = madelung_fields(&s[s.len() - 1], &z)?;
        let r = continuity_residual(
            &TimePair::new(fa.rho, fb.rho, dt),
            &TimePair::new(fa.upsilon, fb.upsilon, dt),
            &TimePair::stationary(z),
        )?;
        if level == 0 {
            coarse_ledger = tr.ledger_json();
        }
        out.push(ContinuityLevel {
            nodes: n,
            dt,
            residual_l2: r.l2_norm(),
            max_step_norm_drift: tr.max_step_norm_drift,
        });
    }
    Ok((out, coarse_ledger))
}

fn variance(rho: &ScalarField) -> f64 {
    let g = rho.grid();
    (0..g.len()).map(|i| g.weight(i) * rho.get(i) * g.coord(i, 0).powi(2)).sum::<f64>() / rho.integral()
}

fn fp_evolve(cfg: &ExperimentConfig) -> Result<Outcome> {
    let p = cfg.params();
    let beta = p.positive("beta")?;
    let sigma = p.positive("sigma0")?;
    let half = p.positive("half_width")?;
    let g = Grid::line(p.count("nodes", 3)?, -half, half, Boundary::Reflecting)?;
    let rho = ScalarField::from_fn(&g, |x| (-x[0] * x[0] / (2.0 * sigma * sigma)).exp())?;
    let rho = rho.scale(1.0 / rho.integral());
    let s0 = FPState::new(rho, VectorField::zeros(&g), beta, 0.0)?;
    let mut st = FpStepper::default();
    let frac = p.positive("dt_fraction")?;
    if frac > 1.0 {
        bail!("params.dt_fraction: must be at most 1");
    }
    let dt = frac * st.bound(&s0);
    let run = st.evolve(&s0, dt, p.count("steps", 1)?, p.count("stride", 1)?)?;
    let v0 = variance(&s0.rho);
    let rows: Vec<Vec<f64>> = run
        .snapshots
        .iter()
        .map(|s| vec![s.t, variance(&s.rho), v0 + 2.0 * beta * s.t, s.mass()])
        .collect();
    let last = rows.last().unwrap();
    let var_err = rel(last[1], last[2]);

    let (levels, ledger) = packet_continuity_study(
        p.f64("packet_k")?,
        p.positive("packet_sigma")?,
        p.positive("packet_half_width")?,
        p.count("packet_nodes", 3)?,
        p.count("packet_steps", 2)?,
        p.positive("packet_t_end")?,
        p.count("levels", 2)?,
    )?;
    let orders = convergence_orders(&levels.iter().map(|l| l.residual_l2).collect::<Vec<_>>());
    let min_order = orders.iter().copied().fold(f64::INFINITY, f64::min);
    let norm_drift = levels.iter().map(|l| l.max_step_norm_drift).fold(0.0, f64::max);
    Ok(Outcome {
        results: json!({
            "fokker_planck": {
                "dt": dt,
                "initial_variance": v0,
                "final_variance": last[1],
                "expected_variance": last[2],
                "variance_relative_error": var_err,
                "diagnostics": run.diagnostics,
            },
            "continuity": { "levels": levels, "orders": orders },
        }),
        csv: Some(csv_table(&["t", "variance", "expected", "mass"], rows.clone())),
        invariants: vec![
            Invariant::at_most("variance_relative_error", var_err, p.positive("variance_tolerance")?),
            Invariant::at_most("max_step_mass_drift", run.diagnostics.max_step_mass_drift, 1e-10),
            Invariant::at_least("continuity_order", min_order, p.f64("min_order")?),
            Invariant::at_most("schrodinger_norm_drift", norm_drift, 1e-6),
        ],
        extra_files: vec![("schrodinger_ledger.json".into(), pretty(&ledger)?)],
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundTrip {
    pub energy: f64,
    pub analytic: f64,
    pub energy_relative_error: f64,
    pub residual: f64,
    pub eigen_residual: f64,
}

/// Solves the ground state and measures the stationarity residual of its
/// Madelung fields in the density-weighted norm.
pub fn stationarity_round_trip(spec: &HamiltonianSpec, analytic: f64) -> Result<RoundTrip> {
    let sol = solve_stationary(spec, 1)?.remove(0);
    let g = spec.potential.grid();
    let f = madelung_fields(&sol.psi, &VectorField::zeros(g))?;
    let r = stationarity_residual(&f.u, &spec.potential, sol.energy, spec.mass, spec.hbar)?;
    Ok(RoundTrip {
        energy: sol.energy,
        analytic,
        energy_relative_error: rel(sol.energy, analytic),
        residual: weighted_residual_norm(&r, &f.rho)?,
        eigen_residual: sol.residual_norm,
    })
}

fn stationarity_audit(cfg: &ExperimentConfig) -> Result<Outcome> {
    let p = cfg.params();
    let k = cfg.constants();
    let ho = stationarity_round_trip(&harmonic_spec(p.count("ho_nodes", 3)?, p.positive("ho_half_width")?)?, 0.5)?;
    let hy = stationarity_round_trip(
        &hydrogen_spec(p.count("hydrogen_nodes", 3)?, p.positive("hydrogen_spacing")?)?,
        -0.5,
    )?;
    let tol = p.positive("residual_tolerance")?;
    let hartree = k.hbar * k.hbar / (k.electron_mass * k.bohr_radius * k.bohr_radius);
    Ok(Outcome {
        results: json!({
            "harmonic": ho,
            "hydrogen": hy,
            "hydrogen_ground_energy_preset_units": hy.energy * hartree,
            "energy_unit_hartree": hartree,
        }),
        csv: None,
        invariants: vec![
            Invariant::below("harmonic_residual", ho.residual, tol),
            Invariant::below("harmonic_energy_relative_error", ho.energy_relative_error, p.positive("ho_energy_tolerance")?),
            Invariant::below("hydrogen_residual", hy.residual, tol),
            Invariant::below(
                "hydrogen_energy_relative_error",
                hy.energy_relative_error,
                p.positive("hydrogen_energy_tolerance")?,
            ),
        ],
        extra_files: vec![],
    })
}

/// Bound atomic state of the unit preset: rest energy with a binding
/// potential of two Hartree and one Hartree of kinetic energy.
pub fn reference_ledger_state(k: &PhysicalConstants) -> Result<LedgerState> {
    let e = k.electron_mass * k.c * k.c;
    let hartree = k.hbar * k.hbar / (k.electron_mass * k.bohr_radius * k.bohr_radius);
    let terms = LedgerTerms {
        v1: 2.0 * hartree,
        v2: 0.0,
        e_k: hartree,
        v_noise: 0.0,
    };
    let free = LedgerState::electron(k.electron_mass, k.electron_radius, k.c)?;
    let signs = SignPattern::default();
    // mass scales as 1/nu_vib, so rescale a unit-frequency state onto m_e
    let unit = LedgerState::new(e, terms, signs, 1.0, free.nu_rot, free.radius)?;
    Ok(LedgerState::new(e, terms, signs, unit.mass / k.electron_mass, free.nu_rot, free.radius)?)
}

/// Random transition requests around `state`.
pub fn random_events(state: &LedgerState, rng: &mut impl Rng, n: usize, fraction: f64, c: f64) -> Vec<LedgerEvent> {
    let scale = fraction * state.energy;
    (0..n)
        .map(|_| {
            let delta_e = rng.random_range(-scale..scale);
            let delta_noise = rng.random_range(-0.1 * scale..0.1 * scale);
            let update = if rng.random_bool(0.5) {
                TermUpdate::Default
            } else {
                // split the change between E_k and V_noise in opposite proportions
                let w: f64 = rng.random_range(0.0..1.0);
                let total = delta_e + delta_noise;
                TermUpdate::Explicit {
                    terms: LedgerTerms {
                        e_k: w * total,
                        v_noise: (1.0 - w) * total,
                        ..LedgerTerms::default()
                    },
                }
            };
            LedgerEvent {
                delta_e,
                delta_noise,
                update,
                delta_v: rng.random_range(0.0..0.5 * c),
            }
        })
        .collect()
}

/// Turns relative explicit updates into absolute term sets along `log`.
fn absolutize(initial: &LedgerState, events: &[LedgerEvent]) -> Vec<LedgerEvent> {
    let s = initial.signs;
    let mut terms = initial.terms;
    events
        .iter()
        .map(|ev| {
            let update = match ev.update {
                TermUpdate::Default => {
                    terms.e_k += s.e_k * ev.delta_e;
                    terms.v_noise += s.v_noise * ev.delta_noise;
                    TermUpdate::Default
                }
                TermUpdate::Explicit { terms: d } => {
                    terms.e_k += s.e_k * d.e_k;
                    terms.v_noise += s.v_noise * d.v_noise;
                    TermUpdate::Explicit { terms }
                }
            };
            LedgerEvent { update, ..*ev }
        })
        .collect()
}

fn mass_audit(cfg: &ExperimentConfig) -> Result<Outcome> {
    let p = cfg.params();
    let k = cfg.constants();
    let tol = p.f64("drift_tolerance")?;
    let mut histories: Vec<LedgerHistory> = Vec::new();
    let mut first_log = None;
    if let Some(path) = p.opt_str("log") {
        let path = cfg.base_dir.join(path);
        let text = fs::read_to_string(&path).with_context(|| format!("params.log: reading {}", path.display()))?;
        let log: LedgerLog = serde_json::from_str(&text).with_context(|| format!("params.log: parsing {}", path.display()))?;
        histories.push(replay(&log)?);
        first_log = Some(log);
    } else {
        let initial = reference_ledger_state(&k)?;
        let n = p.count("sequences", 1)?;
        let len = p.count("length", 0)?;
        let frac = p.positive("energy_fraction")?;
        if frac >= 0.5 {
            bail!("params.energy_fraction: must be below 0.5");
        }
        for seq in 0..n {
            let mut rng = path_rng(cfg.seed, seq);
            let events = random_events(&initial, &mut rng, len, frac, k.c);
            let log = LedgerLog {
                initial,
                events: absolutize(&initial, &events),
            };
            histories.push(replay(&log)?);
            if seq == 0 {
                first_log = Some(log);
            }
        }
    }
    let drift = histories.iter().map(|h| h.max_mass_drift).fold(0.0, f64::max);
    let recompute = histories.iter().map(|h| h.max_recompute_error).fold(0.0, f64::max);
    let transitions: usize = histories.iter().map(|h| h.transitions.len()).sum();
    let rows = histories.iter().enumerate().map(|(i, h)| {
        let last = h.transitions.last().map_or(h.initial, |t| t.after);
        vec![i as f64, h.transitions.len() as f64, last.nu_vib, last.mass, h.max_mass_drift, h.max_recompute_error]
    });
    let csv = csv_table(&["sequence", "transitions", "final_nu_vib", "mass", "max_mass_drift", "max_recompute_error"], rows);
    let mut extra = vec![];
    if let Some(log) = &first_log {
        extra.push(("ledger_log.json".into(), pretty(log)?));
        extra.push(("ledger_history.json".into(), pretty(&histories[0])?));
    }
    Ok(Outcome {
        results: json!({
            "sequences": histories.len(),
            "transitions": transitions,
            "max_mass_drift": drift,
            "max_recompute_error": recompute,
            "initial_mass": histories.first().map(|h| h.initial.mass),
        }),
        csv: Some(csv),
        invariants: vec![
            Invariant::at_most("max_mass_drift", drift, tol),
            Invariant::at_most("max_recompute_error", recompute, crate::mass_ledger::RECOMPUTE_TOLERANCE),
        ],
        extra_files: extra,
    })
}

/// Reference coefficients of the relativistic energy series.
pub const REFERENCE_SERIES: [f64; 4] = [0.5, 0.375, 0.3125, 35.0 / 128.0];

fn em_budget(cfg: &ExperimentConfig) -> Result<Outcome> {
    let p = cfg.params();
    let pc = cfg.constants();
    let convention = match p.opt_str("convention").as_deref() {
        Some("inverse-c") | None => FieldConvention::InverseC,
        Some("si") => FieldConvention::Si,
        Some(other) => bail!("params.convention: `{other}` is not inverse-c or si"),
    };
    let mut k = EmConstants::from_physical(&pc, convention)?;
    let defaults = p.opt_f64("q").is_none() && p.opt_f64("r_min").is_none();
    if let Some(q) = p.opt_f64("q") {
        k.q = q;
    }
    if let Some(r) = p.opt_f64("r_min") {
        k.r_min = r;
    }
    k.validate()?;
    let dv = p.opt_f64("dv").unwrap_or(0.1 * k.c);
    let order = p.count("order", 2)?;
    let b = electrodynamics::em_budget(&k, dv, order)?;
    let ser = crate::mass_ledger::relativistic_expansion(b.magnetic_mass, dv, k.c, order)?;
    let four = crate::mass_ledger::relativistic_expansion(b.magnetic_mass, dv, k.c, 4)?;

    let n_hat = [0.0, 1.0, 0.0];
    let bp = electrodynamics::biot_savart_point([dv, 0.0, 0.0], 1.0, n_hat, &k)?;
    let bm = electrodynamics::biot_savart_point([-dv, 0.0, 0.0], 1.0, n_hat, &k)?;
    let antisym = (0..3).map(|a| (bp[a] + bm[a]).abs()).fold(0.0, f64::max) / norm3(&bp).max(f64::MIN_POSITIVE);
    let slow = 1e-4 * k.c;
    let split = crate::mass_ledger::energy_split(b.magnetic_mass, slow, k.c)?;
    let leading = (split.radiation / electrodynamics::radiated_energy(slow, &k)? - 1.0).abs();

    let mut invariants = vec![];
    if defaults && cfg.units == UnitPreset::Si {
        invariants.push(Invariant::holds(
            "magnetic_mass_six_figures",
            format!("{:.5e}", b.magnetic_mass) == REFERENCE_MAGNETIC_MASS,
        ));
    }
    invariants.extend([
        Invariant::holds(
            "series_coefficients_reference",
            order < 4 || b.series_coefficients[..4] == REFERENCE_SERIES,
        ),
        Invariant::at_most("split_residual", b.split_residual, 1e-12),
        Invariant::at_most("radiation_series_link", b.series_link_residual, 1e-12),
        Invariant::at_most("magnetic_series_link", b.magnetic_link_residual, 1e-12),
        Invariant::at_most("si_energy_quadrature", b.quadrature_relative_error_si, 5e-3),
        Invariant::at_most("biot_savart_antisymmetry", antisym, 1e-15),
        Invariant::at_most("radiation_leading_order", leading, 1e-6),
    ]);
    Ok(Outcome {
        results: json!({
            "budget": b,
            "convention": convention,
            "partial_sums": ser.partial_sums,
            "four_term_relative_error": four.relative_error(),
            "biot_savart_unit_field": norm3(&bp) / dv.abs().max(f64::MIN_POSITIVE),
            "radiation_leading_order_ratio_error": leading,
        }),
        csv: None,
        invariants,
        extra_files: vec![],
    })
}

/// Random vector with components in `[-1, 1)`.
fn random_vec(rng: &mut impl Rng) -> [f64; 3] {
    [0; 3].map(|_| rng.random_range(-1.0..1.0))
}

/// Largest relative Clifford residual over `n` random perpendicular pairs.
pub fn clifford_fuzz(seed: u64, n: usize) -> f64 {
    let mut rng = path_rng(seed, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let gs = 10f64.powf(rng.random_range(-3.0..3.0));
        let g = random_vec(&mut rng).map(|x| x * gs);
        let t = random_vec(&mut rng);
        // project out g, then rescale
        let gg = dot3(&g, &g);
        let s0 = dot3(&t, &g) / gg;
        let ss = 10f64.powf(rng.random_range(-3.0..3.0));
        let s = [0, 1, 2].map(|a| (t[a] - s0 * g[a]) * ss);
        let scale = gg * dot3(&s, &s);
        worst = worst.max(clifford_identity_residual(g, s) / scale);
    }
    worst
}

/// Worst nodewise `|b + b*|`, `b . grad(rho)/rho` and `b . s` (each relative
/// to `|b| |other|`) over random smooth densities.
pub fn spin_drift_fuzz(seed: u64, densities: usize, nodes: usize) -> Result<[f64; 3]> {
    let mut rng = path_rng(seed, 1);
    let h = 1.0 / (nodes - 1) as f64;
    let g = Grid::new(vec![nodes; 3], vec![h; 3], vec![0.0; 3], Boundary::Reflecting)?;
    let mut worst = [0.0f64; 3];
    for _ in 0..densities {
        let amp: Vec<f64> = (0..3).map(|_| rng.random_range(0.05..0.4)).collect();
        let freq: Vec<[f64; 3]> = (0..3).map(|_| random_vec(&mut rng).map(|x| 3.0 * x)).collect();
        let rho = ScalarField::from_fn(&g, |x| {
            1.0 + (0..3).map(|j| amp[j] * (dot3(&freq[j], &x)).sin()).sum::<f64>()
        })?;
        let axis = SpinAxis::from_direction(random_vec(&mut rng))?;
        let s = axis.direction();
        let (b, b_star) = spin_drift(&rho, axis, 0.5)?;
        let grad = crate::fields::ops::gradient(&rho);
        for i in 0..g.len() {
            let (bi, bs) = (b.at(i), b_star.at(i));
            let nb = norm3(&bi);
            let gi = grad.at(i).map(|x| x / rho.get(i));
            let sum = norm3(&[bi[0] + bs[0], bi[1] + bs[1], bi[2] + bs[2]]);
            worst[0] = worst[0].max(if nb > 0.0 { sum / nb } else { sum });
            if nb > 0.0 {
                worst[1] = worst[1].max(dot3(&bi, &gi).abs() / (nb * norm3(&gi)));
                worst[2] = worst[2].max(dot3(&bi, &s).abs() / nb);
            }
        }
    }
    Ok(worst)
}

/// Largest relative gap between the split and unsplit interaction energies.
pub fn interaction_fuzz(seed: u64, n: usize, c: f64, q: f64, m: f64) -> Result<f64> {
    let mut rng = path_rng(seed, 2);
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let ps = random_vec(&mut rng).map(|x| x * 1e-24);
        let b = random_vec(&mut rng).map(|x| x * 1e6);
        let v = random_vec(&mut rng).map(|x| x * 1e6);
        let e = random_vec(&mut rng).map(|x| x * 1e10);
        let r = electrodynamics::interaction_potentials(ps, b, v, e, m, c, q)?;
        let scale = r.spin_orbit.abs() + r.spin_spin.abs();
        if scale > 0.0 {
            worst = worst.max((r.spin_orbit + r.spin_spin - r.unsplit).abs() / scale);
        }
    }
    Ok(worst)
}

fn spin_checks(cfg: &ExperimentConfig) -> Result<Outcome> {
    let p = cfg.params();
    let k = cfg.constants();
    let tol = p.positive("tolerance")?;
    let clifford = clifford_fuzz(cfg.seed, p.count("pairs", 1)?);
    let [pair, grad, axis] = spin_drift_fuzz(cfg.seed, p.count("densities", 1)?, p.count("nodes", 3)?)?;
    let split = interaction_fuzz(cfg.seed, p.count("interaction_cases", 1)?, k.c, -k.charge, k.electron_mass)?;
    let mut summary = String::from("check,worst_relative_residual\n");
    for (n, v) in [("clifford", clifford), ("b_plus_b_star", pair), ("b_dot_grad", grad), ("b_dot_s", axis), ("interaction_split", split)] {
        let _ = writeln!(summary, "{n},{v:e}");
    }
    Ok(Outcome {
        results: json!({
            "clifford_relative_residual": clifford,
            "spin_drift_pair_residual": pair,
            "spin_drift_gradient_orthogonality": grad,
            "spin_drift_axis_orthogonality": axis,
            "interaction_split_residual": split,
        }),
        csv: Some(summary),
        invariants: vec![
            Invariant::below("clifford_identity", clifford, tol),
            Invariant::at_most("spin_drift_antisymmetry", pair, 0.0),
            Invariant::below("spin_drift_gradient_orthogonality", grad, tol),
            Invariant::below("spin_drift_axis_orthogonality", axis, tol),
            Invariant::below("interaction_split", split, tol),
        ],
        extra_files: vec![],
    })
}
