//! `pu6` command-line front end: simulate, verify, scan, represent.
//!
//! Every subcommand reads a JSON [`RunConfig`]. Exit codes: 0 success,
//! 1 failed verification, 2 configuration error, 3 non-finite integration,
//! 4 complex branch.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::dynamics::{
    conservation_drift, integrate_rk4, propagate_linear, solve_exact, InteractionSpec, Trajectory,
};
use crate::error::PuError;
use crate::hierarchy::{
    conservation_defect, hamiltonian_n_closed, hamiltonian_n_recursive, hamiltonian_n_symmetry,
};
use crate::model::{
    flow_operator, frequencies_from_params, hamiltonian_form, poisson_bracket, poisson_tensor,
    ModelSpec, PUParams, QuadraticForm, StateVector, DEFAULT_DEGENERACY_TOL,
};
use crate::positivity::{block_sum, region_scan, GridSpec};
use crate::representations::{
    build_representation, equivalence_check, representation_positivity, transformed_coefficients,
    FreeChoices,
};
use crate::sampling::{random_state, rng};
use crate::symmetries::{commutator, generators, symmetry_action_on_form};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NON_FINITE: i32 = 3;
pub const EXIT_COMPLEX_BRANCH: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "pu6",
    version,
    about = "Sixth-order Pais-Uhlenbeck oscillator toolkit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the flow; write a trajectory CSV and print a drift summary.
    Simulate(CommonArgs),
    /// Run the structural invariant suite and print a JSON report.
    Verify(CommonArgs),
    /// Scan a plane of tensor weights for positive Hamiltonians (CSV).
    Scan(CommonArgs),
    /// Build a three-dimensional representation (JSON).
    Represent(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// JSON configuration file.
    #[arg(long)]
    pub config: PathBuf,
    /// Output file; defaults to the config's `output`, then stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed for random draws.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Frequency degeneracy tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimMethod {
    Rk4,
    Exact,
    Propagator,
}

fn default_dt() -> f64 {
    1e-3
}

fn default_t_end() -> f64 {
    20.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    #[serde(default = "default_sim_method")]
    pub method: SimMethod,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    /// `(q, q̇, …, q⁽⁵⁾)` at `t = 0`; drawn from the seed when absent.
    #[serde(default)]
    pub initial: Option<[f64; 6]>,
    #[serde(default)]
    pub interaction: Option<InteractionSpec>,
}

fn default_sim_method() -> SimMethod {
    SimMethod::Rk4
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self {
            method: SimMethod::Rk4,
            dt: default_dt(),
            t_end: default_t_end(),
            initial: None,
            interaction: None,
        }
    }
}

fn default_max_n() -> usize {
    10
}

fn default_states() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    #[serde(default = "default_max_n")]
    pub max_n: usize,
    /// Random states for the exact-solution residual check.
    #[serde(default = "default_states")]
    pub states: usize,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            max_n: default_max_n(),
            states: default_states(),
        }
    }
}

fn default_eq_dt() -> f64 {
    0.01
}

fn default_eq_steps() -> usize {
    500
}

fn default_eq_tol() -> f64 {
    1e-7
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepresentSection {
    pub choices: FreeChoices,
    #[serde(default = "default_eq_dt")]
    pub dt: f64,
    #[serde(default = "default_eq_steps")]
    pub steps: usize,
    #[serde(default = "default_eq_tol")]
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSpec,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub simulate: Option<SimulateSection>,
    #[serde(default)]
    pub verify: Option<VerifySection>,
    #[serde(default)]
    pub scan: Option<GridSpec>,
    #[serde(default)]
    pub represent: Option<RepresentSection>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::config(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }
}

impl From<PuError> for CliError {
    fn from(e: PuError) -> Self {
        let code = match e {
            PuError::NonFinite { .. } => EXIT_NON_FINITE,
            PuError::ComplexBranch(_) => EXIT_COMPLEX_BRANCH,
            PuError::EquivalenceFailure { .. } => EXIT_VERIFY_FAILED,
            _ => EXIT_CONFIG,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

/// Resolved settings shared by all subcommands.
struct Context {
    config: RunConfig,
    out: Option<PathBuf>,
    seed: u64,
    tol: f64,
}

impl Context {
    fn new(args: &CommonArgs) -> Result<Self, CliError> {
        let config = RunConfig::load(&args.config)?;
        let tol = args.tol.or(config.tol).unwrap_or(DEFAULT_DEGENERACY_TOL);
        if !(tol >= 0.0 && tol.is_finite()) {
            return Err(CliError::config(format!(
                "tolerance must be finite and non-negative, got {tol}"
            )));
        }
        Ok(Self {
            out: args.out.clone().or_else(|| config.output.clone()),
            seed: args.seed.or(config.seed).unwrap_or(0),
            tol,
            config,
        })
    }

    fn params(&self) -> Result<PUParams, CliError> {
        Ok(self.config.model.params()?)
    }
}

fn open_out(path: &Option<PathBuf>) -> Result<Box<dyn Write>, CliError> {
    match path {
        Some(p) => {
            let f = File::create(p)
                .map_err(|e| CliError::config(format!("cannot create {}: {e}", p.display())))?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(std::io::stdout().lock())),
    }
}

fn write_json(path: &Option<PathBuf>, v: &Value) -> Result<(), CliError> {
    let mut out = open_out(path)?;
    let text = serde_json::to_string_pretty(v).map_err(|e| CliError::config(e.to_string()))?;
    writeln!(out, "{text}")
        .and_then(|_| out.flush())
        .map_err(|e| CliError::config(format!("write failed: {e}")))
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

pub fn run(cli: &Cli) -> Result<i32, CliError> {
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(&Context::new(a)?),
        Command::Verify(a) => cmd_verify(&Context::new(a)?),
        Command::Scan(a) => cmd_scan(&Context::new(a)?),
        Command::Represent(a) => cmd_represent(&Context::new(a)?),
    }
}

fn cmd_simulate(ctx: &Context) -> Result<i32, CliError> {
    let sec = ctx.config.simulate.clone().unwrap_or_default();
    let p = ctx.params()?;
    let initial = match sec.initial {
        Some(s) => StateVector::from(s),
        None => random_state(&mut rng(ctx.seed)),
    };
    if initial.iter().any(|x| !x.is_finite()) {
        return Err(CliError::config("initial state must be finite"));
    }
    let freqs = ctx.config.model.frequencies(ctx.tol);
    let exact = match &freqs {
        Ok(f) => Some(solve_exact(f, &initial)?),
        Err(_) => None,
    };
    let divergent = exact.as_ref().is_some_and(|e| e.has_secular_terms());
    if !(sec.dt > 0.0 && sec.t_end > 0.0) {
        return Err(PuError::InvalidStep(format!(
            "need dt > 0 and t_end > 0, got dt={}, t_end={}",
            sec.dt, sec.t_end
        ))
        .into());
    }
    let n = ((sec.t_end / sec.dt).round() as usize).max(1);
    let result = match sec.method {
        SimMethod::Rk4 => integrate_rk4(&p, &initial, sec.t_end, sec.dt, sec.interaction.as_ref()),
        SimMethod::Propagator | SimMethod::Exact if sec.interaction.is_some() => Err(
            PuError::InvalidInteraction("interactions are only supported by the rk4 method".into()),
        ),
        SimMethod::Propagator => propagate_linear(&p, &initial, sec.t_end / n as f64, n),
        SimMethod::Exact => match &exact {
            Some(e) => {
                let h = sec.t_end / n as f64;
                let times: Vec<f64> = (0..=n).map(|k| k as f64 * h).collect();
                Ok(e.sample(&times))
            }
            None => Err(freqs.clone().unwrap_err()),
        },
    };
    let traj: Trajectory = result.map_err(|e| match e {
        PuError::NonFinite { time } => {
            let cause = if sec.interaction.is_some() {
                "unstable interacting dynamics"
            } else if divergent {
                "secular growth of degenerate-frequency modes"
            } else {
                "exponential growth of the linear flow"
            };
            CliError {
                code: EXIT_NON_FINITE,
                message: format!("state became non-finite at t={time} ({cause})"),
            }
        }
        other => other.into(),
    })?;
    let forms: Vec<QuadraticForm> = (1..=3)
        .map(|k| hamiltonian_form(k, &p))
        .collect::<Result<_, _>>()?;
    let drift = conservation_drift(&traj, &forms);
    match &ctx.out {
        Some(path) => {
            let f = File::create(path)
                .map_err(|e| CliError::config(format!("cannot create {}: {e}", path.display())))?;
            traj.write_csv(&p, BufWriter::new(f))?;
        }
        None => eprintln!("note: no --out given; trajectory CSV not written"),
    }
    let summary = json!({
        "method": sec.method,
        "dt": sec.t_end / n as f64,
        "t_end": sec.t_end,
        "steps": n,
        "max_drift": {"H1": drift[0], "H2": drift[1], "H3": drift[2]},
        "degeneracy": freqs.as_ref().ok().map(|f| format!("{:?}", f.degeneracy())),
        "divergent_mode": divergent,
        "interaction": sec.interaction.is_some(),
        "trajectory_csv": ctx.out.as_ref().map(|p| p.display().to_string()),
    });
    write_json(&None, &summary)?;
    Ok(EXIT_OK)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub status: CheckStatus,
    pub residual: Option<f64>,
    pub tolerance: f64,
    pub reason: Option<String>,
}

fn measured(name: &str, residual: f64, tolerance: f64) -> Check {
    let ok = residual <= tolerance;
    Check {
        name: name.into(),
        status: if ok {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        },
        residual: Some(residual),
        tolerance,
        reason: None,
    }
}

fn errored(name: &str, tolerance: f64, e: &PuError) -> Check {
    let label = match e {
        PuError::GammaZero => "GammaZero: ".to_string(),
        _ => String::new(),
    };
    Check {
        name: name.into(),
        status: CheckStatus::Fail,
        residual: None,
        tolerance,
        reason: Some(format!("{label}{e}")),
    }
}

fn skipped(name: &str, tolerance: f64, reason: String) -> Check {
    Check {
        name: name.into(),
        status: CheckStatus::Skipped,
        residual: None,
        tolerance,
        reason: Some(reason),
    }
}

fn check(name: &str, tolerance: f64, f: impl FnOnce() -> crate::Result<f64>) -> Check {
    match f() {
        Ok(r) => measured(name, r, tolerance),
        Err(e) => errored(name, tolerance, &e),
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Runs the structural invariant suite for one parameter set.
pub fn verify_checks(p: &PUParams, sec: &VerifySection, tol: f64, seed: u64) -> Vec<Check> {
    let mut checks = Vec::new();
    let g = p.gamma;
    for (k, expected) in [(1, 1.0), (2, g.powi(-4)), (3, g.powi(-8))] {
        checks.push(check(&format!("det_J{k}"), 1e-10, || {
            Ok(rel(poisson_tensor(k, p)?.determinant(), expected))
        }));
    }
    let f_op = flow_operator(p);
    for k in 1..=3 {
        checks.push(check(&format!("flow_J{k}A{k}"), 1e-9, || {
            let j = poisson_tensor(k, p)?;
            let a = hamiltonian_form(k, p)?;
            Ok((j.matrix() * a.matrix() - f_op.matrix()).amax())
        }));
    }
    let xs = generators(p);
    let mut worst = 0.0_f64;
    for i in 0..6 {
        for j in i + 1..6 {
            worst = worst.max(commutator(&xs[i], &xs[j]).max_abs());
        }
    }
    checks.push(measured("abelian_algebra", worst, 1e-9));
    checks.push(check("action_table", 1e-9, || {
        let h: Vec<QuadraticForm> = (1..=3)
            .map(|k| hamiltonian_form(k, p))
            .collect::<crate::Result<_>>()?;
        let zero = QuadraticForm::zero();
        let mut expected: Vec<(usize, usize, QuadraticForm)> = Vec::new();
        for i in 0..3 {
            for hi in 0..3 {
                expected.push((i, hi, zero));
            }
            expected.push((3, i, h[i]));
        }
        expected.extend([(4, 0, h[1]), (4, 1, h[2]), (5, 0, h[2])]);
        let mut worst = 0.0_f64;
        for (x, hi, want) in expected {
            let got = symmetry_action_on_form(&xs[x], &h[hi]);
            let scale = h[hi].max_abs().max(want.max_abs());
            worst = worst.max((got - want).max_abs() / scale);
        }
        Ok(worst)
    }));
    let freqs = frequencies_from_params(p, tol);
    let distinct = matches!(&freqs, Ok(f) if f.is_non_degenerate());
    let max_n = sec.max_n.max(1);
    checks.push(check("hierarchy_recursion_vs_symmetry", 1e-7, || {
        let mut worst = 0.0_f64;
        for n in 1..=max_n {
            worst =
                worst.max(hamiltonian_n_recursive(n, p)?.rel_diff(&hamiltonian_n_symmetry(n, p)?));
        }
        Ok(worst)
    }));
    if distinct {
        checks.push(check("hierarchy_closed_vs_symmetry", 1e-7, || {
            let mut worst = 0.0_f64;
            for n in 1..=max_n {
                worst =
                    worst.max(hamiltonian_n_closed(n, p)?.rel_diff(&hamiltonian_n_symmetry(n, p)?));
            }
            Ok(worst)
        }));
    } else {
        let why = match &freqs {
            Ok(_) => "closed form needs pairwise distinct frequencies".to_string(),
            Err(e) => format!("closed form needs real distinct frequencies: {e}"),
        };
        checks.push(skipped("hierarchy_closed_vs_symmetry", 1e-7, why));
    }
    let hs: Vec<crate::Result<QuadraticForm>> =
        (1..=max_n).map(|n| hamiltonian_n_symmetry(n, p)).collect();
    checks.push(check("hierarchy_conservation", 1e-8, || {
        let mut worst = 0.0_f64;
        for h in &hs {
            let h = h.clone()?;
            let scale = h.max_abs() * f_op.max_abs();
            worst = worst.max(conservation_defect(&h, p).max_abs() / scale);
        }
        Ok(worst)
    }));
    for k in 1..=3 {
        checks.push(check(&format!("involution_J{k}"), 1e-8, || {
            let j = poisson_tensor(k, p)?;
            let jmax = j.matrix().amax();
            let mut worst = 0.0_f64;
            for a in 0..hs.len() {
                for b in a + 1..hs.len() {
                    let (ha, hb) = (hs[a].clone()?, hs[b].clone()?);
                    let scale = ha.max_abs() * hb.max_abs() * jmax;
                    worst = worst.max(poisson_bracket(&ha, &hb, &j).max_abs() / scale);
                }
            }
            Ok(worst)
        }));
    }
    match &freqs {
        Ok(f) => {
            checks.push(check("block_identity", 1e-9, || {
                let lhs = block_sum([1.0, 1.0, 1.0], f)?;
                let (a, b) = (p.alpha, p.beta);
                let rhs = 2.0
                    * ((a * a - 2.0 * b) * hamiltonian_form(1, p)?
                        + (3.0 - a * b / g) * hamiltonian_form(2, p)?
                        + (a / g) * hamiltonian_form(3, p)?);
                Ok(lhs.rel_diff(&rhs))
            }));
            let mut r = rng(seed);
            checks.push(check("exact_solution_residual", 1e-8, || {
                let mut worst = 0.0_f64;
                for _ in 0..sec.states {
                    let s0 = random_state(&mut r);
                    let sol = solve_exact(f, &s0)?;
                    for k in 0..=100 {
                        let t = 0.1 * k as f64;
                        let s = sol.eval(t);
                        let d = StateVector::from_fn(|i, _| sol.derivative(i as u32 + 1, t));
                        worst = worst.max((d - f_op.apply(&s)).amax() / s.amax().max(1.0));
                    }
                }
                Ok(worst)
            }));
        }
        Err(e) => {
            for name in ["block_identity", "exact_solution_residual"] {
                checks.push(skipped(name, 1e-9, format!("needs real frequencies: {e}")));
            }
        }
    }
    checks
}

fn cmd_verify(ctx: &Context) -> Result<i32, CliError> {
    let p = ctx.params()?;
    let sec = ctx.config.verify.clone().unwrap_or_default();
    let checks = verify_checks(&p, &sec, ctx.tol, ctx.seed);
    let first_fail = checks
        .iter()
        .find(|c| c.status == CheckStatus::Fail)
        .map(|c| c.name.clone());
    let report = json!({
        "model": {"alpha": p.alpha, "beta": p.beta, "gamma": p.gamma},
        "all_passed": first_fail.is_none(),
        "first_failure": first_fail,
        "checks": checks,
    });
    write_json(&ctx.out, &report)?;
    match first_fail {
        None => Ok(EXIT_OK),
        Some(name) => {
            eprintln!("verification failed: {name}");
            Ok(EXIT_VERIFY_FAILED)
        }
    }
}

fn cmd_scan(ctx: &Context) -> Result<i32, CliError> {
    let grid = ctx
        .config
        .scan
        .as_ref()
        .ok_or_else(|| CliError::config("config has no scan section"))?;
    grid.validate()?;
    let f = ctx.config.model.frequencies(ctx.tol)?;
    let result = region_scan(grid, &f)?;
    let mut out = open_out(&ctx.out)?;
    result
        .write_csv(&mut out)
        .and_then(|_| out.flush())
        .map_err(|e| CliError::config(format!("write failed: {e}")))?;
    if ctx.out.is_some() {
        let summary = json!({
            "cells": result.cells.len(),
            "positive": result.positive_count(),
            "disagreements": result.disagreements.len(),
            "off_band_disagreements": result.off_band_disagreements(),
        });
        write_json(&None, &summary)?;
    }
    Ok(EXIT_OK)
}

fn cmd_represent(ctx: &Context) -> Result<i32, CliError> {
    let sec = ctx
        .config
        .represent
        .as_ref()
        .ok_or_else(|| CliError::config("config has no represent section"))?;
    let p = ctx.params()?;
    let rep = build_representation(&p, &sec.choices)?;
    let s0 = random_state(&mut rng(ctx.seed));
    let traj = propagate_linear(&p, &s0, sec.dt, sec.steps)?;
    let equivalence = equivalence_check(&rep, &traj, sec.tol);
    let coeffs = transformed_coefficients(&p, &sec.choices)?;
    let verdict = representation_positivity(&p, &sec.choices)?;
    let (eq_json, code) = match &equivalence {
        Ok(r) => (
            serde_json::to_value(r).map_err(|e| CliError::config(e.to_string()))?,
            EXIT_OK,
        ),
        Err(e) => (json!({"error": e.to_string()}), EXIT_VERIFY_FAILED),
    };
    let out = json!({
        "representation": rep,
        "equivalence": eq_json,
        "transformed_coefficients": coeffs,
        "positivity": verdict,
    });
    write_json(&ctx.out, &out)?;
    if let Err(e) = equivalence {
        eprintln!("error: {e}");
    }
    Ok(code)
}
