//! Configuration-driven experiment runner.
//!
//! A config is a TOML file:
//!
//! ```toml
//! name = "figure1"
//! seed = 2024                    # global seed (Monte Carlo streams)
//! engines = ["qa", "qja"]        # qa, qja, qja_no_unitary, je_mc, je_exact, gap_scan
//! # output_dir = "out/figure1"
//!
//! [instance]                     # see `crate::instance`
//! kind = "potential"
//! dim = 64
//! seed = 13
//!
//! [schedule]
//! n_steps = 1000
//! dt = 0.1
//! beta_final = 100.0
//!
//! [dynamics]                     # optional
//! topology = "ring"              # default: ring for potentials, hypercube_spinflip for Ising
//! attempt_rate = 1.0
//! convention = "kernel"          # or "rate"
//!
//! [jarzynski]                    # optional
//! n_samples = 100000
//!
//! [thresholds]                   # optional, verdicts written to summary.txt
//! qja_overlap_defect = 1e-8
//! ```
//!
//! Outputs, one file per engine: `qa.csv`, `qa_final.csv`, `qja.csv`,
//! `qja_final.csv`, `qja_no_unitary.csv`, `qja_no_unitary_final.csv`,
//! `reference.csv`, `je_mc_work.csv`, `je_mc.txt`, `je_exact.txt`,
//! `gap_profile.csv`; plus `config.toml` (the effective config) and
//! `summary.txt`, whose verdicts are recomputed from the files alone.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dynamics::{
    jarzynski_exact, je_from_samples, partition_ratio, sample_work_exponents, HeatBath, Topology,
};
use crate::engines::{run_qa, run_qja_with, DriverHamiltonian, QjaOptions};
use crate::error::Error;
use crate::instance::InstanceSpec;
use crate::mapping::{gap_profile, Convention};
use crate::model::{make_linear_schedule, AnnealSchedule, CostDiagonal};
use crate::report::{self, kv_get, parse_kv, Table};

/// Environment variable naming the default output root.
pub const OUTPUT_ROOT_ENV: &str = "QJA_OUTPUT_ROOT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Qa,
    Qja,
    QjaNoUnitary,
    JeMc,
    JeExact,
    GapScan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleShape {
    #[default]
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    pub n_steps: usize,
    pub dt: f64,
    pub beta_final: f64,
    #[serde(default)]
    pub shape: ScheduleShape,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topology: Option<Topology>,
    #[serde(default = "one")]
    pub attempt_rate: f64,
    #[serde(default)]
    pub convention: Convention,
}

fn one() -> f64 {
    1.0
}

impl Default for DynamicsSpec {
    fn default() -> Self {
        Self {
            topology: None,
            attempt_rate: 1.0,
            convention: Convention::Kernel,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JarzynskiSpec {
    #[serde(default = "default_samples")]
    pub n_samples: usize,
}

fn default_samples() -> usize {
    100_000
}

impl Default for JarzynskiSpec {
    fn default() -> Self {
        Self {
            n_samples: default_samples(),
        }
    }
}

/// Pass/fail thresholds evaluated in `summary.txt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thresholds {
    /// Largest allowed `1 - overlap` at any QJA step.
    pub qja_overlap_defect: f64,
    /// Largest allowed `max |p_i - gibbs_i|` of the QJA final distribution.
    pub qja_final_max_abs_error: f64,
    pub qja_final_gs_prob_min: f64,
    pub qa_final_gs_prob_max: f64,
    /// Relative tolerance of the exact Jarzynski average.
    pub je_exact_rel_tol: f64,
    /// Allowed Monte Carlo deviation in standard errors.
    pub je_mc_sigmas: f64,
    /// Require the QJA final ground-state probability to exceed QA's.
    pub qja_beats_qa: bool,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            qja_overlap_defect: 1e-8,
            qja_final_max_abs_error: 1e-6,
            qja_final_gs_prob_min: 0.99,
            qa_final_gs_prob_max: 0.9,
            je_exact_rel_tol: 1e-12,
            je_mc_sigmas: 3.0,
            qja_beats_qa: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub engines: Vec<Engine>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub instance: InstanceSpec,
    pub schedule: ScheduleSpec,
    #[serde(default)]
    pub dynamics: DynamicsSpec,
    #[serde(default)]
    pub jarzynski: JarzynskiSpec,
    #[serde(default)]
    pub thresholds: Thresholds,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, RunError> {
        toml::from_str(text).map_err(|e| RunError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is serializable")
    }

    /// SHA-256 of the canonical TOML serialization, hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }
}

/// D = 64 random potential, linear beta 0 -> 100 over n = 1000 steps of dt = 0.1.
pub fn preset_figure1() -> ExperimentConfig {
    ExperimentConfig {
        name: "figure1".into(),
        seed: 2024,
        engines: vec![Engine::Qa, Engine::Qja],
        output_dir: None,
        instance: InstanceSpec::random_potential(64, 13),
        schedule: ScheduleSpec {
            n_steps: 1000,
            dt: 0.1,
            beta_final: 100.0,
            shape: ScheduleShape::Linear,
        },
        dynamics: DynamicsSpec {
            topology: Some(Topology::Ring),
            attempt_rate: 1.0,
            convention: Convention::Kernel,
        },
        jarzynski: JarzynskiSpec::default(),
        thresholds: Thresholds::default(),
    }
}

/// Failure classes, each with its process exit code.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(String),
    #[error("engine error: {0}")]
    Engine(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Engine(_) => 3,
            RunError::Io(_) => 4,
        }
    }
}

/// Command-line overrides.
#[derive(Debug, Clone, Default)]
pub struct RunOverrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

/// Validated config with its built instance.
#[derive(Debug, Clone)]
pub struct PreparedExperiment {
    pub config: ExperimentConfig,
    pub cost: CostDiagonal<f64>,
    pub schedule: AnnealSchedule<f64>,
    pub dynamics: HeatBath<f64>,
}

/// Checks a config and builds everything an engine needs, without running.
pub fn validate(config: &ExperimentConfig, base_dir: &Path) -> Result<PreparedExperiment, RunError> {
    let cfg_err = |e: Error| RunError::Config(e.to_string());
    if config.engines.is_empty() {
        return Err(RunError::Config("`engines` must list at least one engine".into()));
    }
    let cost = config.instance.build(base_dir).map_err(cfg_err)?;
    let s = &config.schedule;
    let schedule = match s.shape {
        ScheduleShape::Linear => make_linear_schedule(s.n_steps, s.dt, s.beta_final).map_err(cfg_err)?,
    };
    let topology = config
        .dynamics
        .topology
        .unwrap_or_else(|| Topology::default_for(&cost));
    topology.edges(&cost).map_err(cfg_err)?;
    if !(config.dynamics.attempt_rate > 0.0) {
        return Err(RunError::Config("attempt_rate must be positive".into()));
    }
    let dynamics = HeatBath::new(topology).with_attempt_rate(config.dynamics.attempt_rate);
    if config.engines.contains(&Engine::Qa) {
        DriverHamiltonian::for_cost(&cost).map_err(cfg_err)?;
    }
    if config.engines.contains(&Engine::JeMc) && config.jarzynski.n_samples == 0 {
        return Err(RunError::Config("jarzynski.n_samples must be >= 1".into()));
    }
    Ok(PreparedExperiment {
        config: config.clone(),
        cost,
        schedule,
        dynamics,
    })
}

/// `--out`, then `output_dir`, then `$QJA_OUTPUT_ROOT/<name>`, then `qja-out/<name>`.
pub fn resolve_output_dir(config: &ExperimentConfig, overrides: &RunOverrides) -> PathBuf {
    if let Some(out) = &overrides.out {
        return out.clone();
    }
    if let Some(dir) = &config.output_dir {
        return dir.clone();
    }
    let root = std::env::var_os(OUTPUT_ROOT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("qja-out"));
    root.join(&config.name)
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub output_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub summary: Summary,
}

type Artifact = (String, String);

fn run_engine(prep: &PreparedExperiment, engine: Engine) -> Result<Vec<Artifact>, Error> {
    let cost = &prep.cost;
    let schedule = &prep.schedule;
    let beta_final = schedule.beta(schedule.n_steps());
    let mut qja_opts = QjaOptions::new(prep.dynamics);
    qja_opts.convention = prep.config.dynamics.convention;
    Ok(match engine {
        Engine::Qa => {
            let driver = DriverHamiltonian::for_cost(cost)?;
            let r = run_qa(cost, schedule, &driver)?;
            vec![
                ("qa.csv".into(), report::run_csv(&r)),
                ("qa_final.csv".into(), report::final_csv(&r, cost, beta_final)),
            ]
        }
        Engine::Qja => {
            let r = run_qja_with(cost, schedule, &qja_opts)?;
            vec![
                ("qja.csv".into(), report::run_csv(&r)),
                ("qja_final.csv".into(), report::final_csv(&r, cost, beta_final)),
            ]
        }
        Engine::QjaNoUnitary => {
            qja_opts.without_unitary = true;
            let r = run_qja_with(cost, schedule, &qja_opts)?;
            vec![
                ("qja_no_unitary.csv".into(), report::run_csv(&r)),
                (
                    "qja_no_unitary_final.csv".into(),
                    report::final_csv(&r, cost, beta_final),
                ),
            ]
        }
        Engine::JeMc => {
            let works = sample_work_exponents(
                cost,
                schedule,
                &prep.dynamics,
                prep.config.jarzynski.n_samples,
                prep.config.seed,
            )?;
            let je = je_from_samples(&works, partition_ratio(cost, schedule));
            vec![
                ("je_mc_work.csv".into(), report::work_csv(&works)),
                ("je_mc.txt".into(), report::je_report(&je)),
            ]
        }
        Engine::JeExact => {
            let je = jarzynski_exact(cost, schedule, &prep.dynamics)?;
            vec![("je_exact.txt".into(), report::je_report(&je))]
        }
        Engine::GapScan => {
            let profile = gap_profile(cost, schedule, &prep.dynamics, prep.config.dynamics.convention)?;
            vec![("gap_profile.csv".into(), report::gap_csv(&profile))]
        }
    })
}

/// Runs every configured engine and writes artifacts plus `summary.txt`.
pub fn run_experiment(
    config: &ExperimentConfig,
    base_dir: &Path,
    overrides: &RunOverrides,
) -> Result<Outcome, RunError> {
    let mut config = config.clone();
    if let Some(seed) = overrides.seed {
        config.seed = seed;
    }
    let prep = validate(&config, base_dir)?;
    let out_dir = resolve_output_dir(&config, overrides);

    let mut engines = config.engines.clone();
    engines.sort();
    engines.dedup();
    let results: Vec<Result<Vec<Artifact>, Error>> =
        engines.par_iter().map(|&e| run_engine(&prep, e)).collect();
    let mut artifacts = Vec::new();
    for (engine, res) in engines.iter().zip(results) {
        artifacts.extend(res.map_err(|e| RunError::Engine(format!("{engine:?}: {e}")))?);
    }
    if engines
        .iter()
        .any(|e| matches!(e, Engine::Qa | Engine::Qja | Engine::QjaNoUnitary))
    {
        artifacts.push((
            "reference.csv".into(),
            report::reference_csv(&prep.cost, &prep.schedule),
        ));
    }
    let mut effective = config.clone();
    effective.output_dir = None;
    artifacts.push(("config.toml".into(), effective.to_toml()));

    std::fs::create_dir_all(&out_dir)
        .map_err(|e| RunError::Io(format!("{}: {e}", out_dir.display())))?;
    let mut files = Vec::new();
    for (name, contents) in &artifacts {
        let path = out_dir.join(name);
        std::fs::write(&path, contents).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
        files.push(path);
    }
    let summary = summarize(&out_dir, &config.thresholds)?;
    let path = out_dir.join("summary.txt");
    let mut text = format!("config_hash = {}\ninstance = {}\n", effective.hash(), prep.cost.label());
    text.push_str(&summary.render());
    std::fs::write(&path, text).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
    files.push(path);
    Ok(Outcome {
        output_dir: out_dir,
        files,
        summary,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Info,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// Human-readable requirement, e.g. `>= 0.99`.
    pub requirement: String,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Summary {
    pub checks: Vec<Check>,
}

impl Summary {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.verdict != Verdict::Fail)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    fn push(&mut self, name: &str, value: f64, requirement: String, pass: Option<bool>) {
        let verdict = match pass {
            Some(true) => Verdict::Pass,
            Some(false) => Verdict::Fail,
            None => Verdict::Info,
        };
        self.checks.push(Check {
            name: name.into(),
            value,
            requirement,
            verdict,
        });
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let tag = match c.verdict {
                Verdict::Pass => "PASS",
                Verdict::Fail => "FAIL",
                Verdict::Info => "INFO",
            };
            let _ = writeln!(out, "{} = {} ({}) {tag}", c.name, fmt_value(c.value), c.requirement);
        }
        let _ = writeln!(out, "verdict = {}", if self.all_pass() { "PASS" } else { "FAIL" });
        out
    }
}

fn fmt_value(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-3..1e6).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn read(dir: &Path, name: &str) -> Result<Option<String>, RunError> {
    let path = dir.join(name);
    match std::fs::read_to_string(&path) {
        Ok(s) => Ok(Some(s)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(RunError::Io(format!("{}: {e}", path.display()))),
    }
}

fn table(dir: &Path, name: &str) -> Result<Option<Table>, RunError> {
    read(dir, name)?
        .map(|t| Table::parse(&t).map_err(|e| RunError::Io(format!("{name}: {e}"))))
        .transpose()
}

/// `(ground-state probability, max |p - gibbs|)` from a final-distribution table.
fn final_stats(t: &Table) -> Result<(f64, f64), RunError> {
    let io = |e: Error| RunError::Io(e.to_string());
    let energy = t.column("energy").map_err(io)?;
    let p = t.column("probability").map_err(io)?;
    let g = t.column("gibbs_probability").map_err(io)?;
    let e_min = energy.iter().copied().fold(f64::INFINITY, f64::min);
    let gs: f64 = energy
        .iter()
        .zip(&p)
        .filter(|(e, _)| **e == e_min)
        .map(|(_, p)| p)
        .sum();
    let err = p.iter().zip(&g).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    Ok((gs, err))
}

fn min_overlap(t: &Table) -> Result<f64, RunError> {
    Ok(t.column("overlap_gibbs")
        .map_err(|e| RunError::Io(e.to_string()))?
        .into_iter()
        .fold(1.0, f64::min))
}

/// Recomputes every verdict from the artifacts in `dir`.
pub fn summarize(dir: &Path, th: &Thresholds) -> Result<Summary, RunError> {
    let mut s = Summary::default();
    let io = |e: Error| RunError::Io(e.to_string());
    let mut finite = true;

    let mut qja_gs = None;
    if let Some(t) = table(dir, "qja.csv")? {
        finite &= t.all_finite();
        let m = min_overlap(&t)?;
        s.push(
            "qja.min_overlap",
            m,
            format!(">= 1 - {:e}", th.qja_overlap_defect),
            Some(1.0 - m <= th.qja_overlap_defect),
        );
    }
    if let Some(t) = table(dir, "qja_final.csv")? {
        finite &= t.all_finite();
        let (gs, err) = final_stats(&t)?;
        s.push(
            "qja.final_max_abs_error",
            err,
            format!("<= {:e}", th.qja_final_max_abs_error),
            Some(err <= th.qja_final_max_abs_error),
        );
        s.push(
            "qja.final_gs_prob",
            gs,
            format!(">= {}", th.qja_final_gs_prob_min),
            Some(gs >= th.qja_final_gs_prob_min),
        );
        qja_gs = Some(gs);
    }
    if let Some(t) = table(dir, "qja_no_unitary.csv")? {
        finite &= t.all_finite();
        let m = min_overlap(&t)?;
        s.push(
            "qja_no_unitary.min_overlap",
            m,
            format!(">= 1 - {:e}", th.qja_overlap_defect),
            Some(1.0 - m <= th.qja_overlap_defect),
        );
    }
    if let Some(t) = table(dir, "qja_no_unitary_final.csv")? {
        finite &= t.all_finite();
    }
    if let Some(t) = table(dir, "qa.csv")? {
        finite &= t.all_finite();
    }
    if let Some(t) = table(dir, "qa_final.csv")? {
        finite &= t.all_finite();
        let (gs, _) = final_stats(&t)?;
        s.push(
            "qa.final_gs_prob",
            gs,
            format!("<= {}", th.qa_final_gs_prob_max),
            Some(gs <= th.qa_final_gs_prob_max),
        );
        if let Some(q) = qja_gs {
            let pass = th.qja_beats_qa.then_some(gs < q);
            let req = if th.qja_beats_qa { "< 0" } else { "informational" };
            s.push("qa_minus_qja.final_gs_prob", gs - q, req.into(), pass);
        }
    }
    if let Some(t) = table(dir, "reference.csv")? {
        finite &= t.all_finite();
    }
    if let Some(text) = read(dir, "je_exact.txt")? {
        let kv = parse_kv(&text).map_err(io)?;
        let lhs = kv_get(&kv, "lhs").map_err(io)?;
        let rhs = kv_get(&kv, "rhs").map_err(io)?;
        let rel = (lhs - rhs).abs() / rhs.abs();
        finite &= lhs.is_finite() && rhs.is_finite();
        s.push(
            "je_exact.rel_error",
            rel,
            format!("<= {:e}", th.je_exact_rel_tol),
            Some(rel <= th.je_exact_rel_tol),
        );
    }
    if let Some(text) = read(dir, "je_mc.txt")? {
        let kv = parse_kv(&text).map_err(io)?;
        let lhs = kv_get(&kv, "lhs").map_err(io)?;
        let rhs = kv_get(&kv, "rhs").map_err(io)?;
        let se = kv_get(&kv, "stderr").map_err(io)?;
        let dev = (lhs - rhs).abs();
        let z = if se > 0.0 { dev / se } else if dev == 0.0 { 0.0 } else { f64::INFINITY };
        finite &= lhs.is_finite() && rhs.is_finite() && se.is_finite();
        s.push(
            "je_mc.z_score",
            z,
            format!("<= {}", th.je_mc_sigmas),
            Some(z <= th.je_mc_sigmas),
        );
    }
    if let Some(t) = table(dir, "je_mc_work.csv")? {
        finite &= t.all_finite();
    }
    if let Some(t) = table(dir, "gap_profile.csv")? {
        finite &= t.all_finite();
        let gap = t.column("gap").map_err(io)?;
        let beta = t.column("beta").map_err(io)?;
        let (k, g) = gap
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |b, (k, &g)| if g < b.1 { (k, g) } else { b });
        s.push("gap_scan.min_gap", g, "informational".into(), None);
        s.push("gap_scan.min_gap_beta", beta[k], "informational".into(), None);
    }
    s.push(
        "csv.all_finite",
        if finite { 1.0 } else { 0.0 },
        "== 1".into(),
        Some(finite),
    );
    Ok(s)
}
