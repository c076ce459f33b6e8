//! Command-line front end: sectioned configuration files, subcommands and
//! result persistence.
//!
//! A configuration file has four sections; every key is optional except
//! `drift` and `domain`:
//!
//! ```text
//! [problem]
//! domain = interval01        # interval01 | ball | line | line:<L>
//! operator = laplacian       # laplacian | fractional (with alpha)
//! alpha = 1.5
//! noise = white              # white | riesz (with beta)
//! beta = 0.5
//! sigma = 1.0                # number | sine:<base>,<amp> | tanh:<lo>,<hi>
//! drift = power:1.0
//! u0 = zero                  # zero | mode1:<A> | const:<c> | samples:... | file:<path>
//! laplacian_scaling = half   # half | full
//!
//! [scheme]
//! dt = 0.001
//! modes = 64
//! theta = 0.1
//! ladder_max = 1e8
//! threshold = 1e8
//! horizon = 1.0
//! record_interval = 0.01
//!
//! [ensemble]
//! paths = 100
//! seed = 0
//! parallelism = 1
//!
//! [output]
//! dir = out
//! ```

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::analysis::{self, blowup_probability, dichotomy_experiment, run_ensemble_with, DichotomyCell, Ensemble};
use crate::drift::{osgood_integral, DriftSpec, OsgoodClass, OsgoodOptions};
use crate::error::{Error, Result};
use crate::kernels::{Convention, Domain};
use crate::noise::BifBmParams;
use crate::seed;
use crate::solver::{
    feller_explosion_test, integrate_perturbed_ode, lil_ramp, Amplitude, InitialCondition, NoiseKind, Operator,
    PerturbationPath, ProblemSpec, SchemeConfig, Simulator, Status,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_INCONSISTENT: i32 = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EnsembleSettings {
    pub paths: usize,
    pub seed: u64,
    pub parallelism: usize,
}

impl Default for EnsembleSettings {
    fn default() -> Self {
        Self {
            paths: 100,
            seed: 0,
            parallelism: 1,
        }
    }
}

/// A fully validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub scheme: SchemeConfig,
    pub ensemble: EnsembleSettings,
    pub output_dir: PathBuf,
}

impl RunConfig {
    /// Canonical text; `parse_config(c.serialize()) == c`.
    pub fn serialize(&self) -> String {
        let p = &self.problem;
        let s = &self.scheme;
        let mut out = String::from("[problem]\n");
        out.push_str(&format!("domain = {}\n", p.domain));
        match p.operator {
            Operator::Laplacian => out.push_str("operator = laplacian\n"),
            Operator::FracLaplacian { alpha } => out.push_str(&format!("operator = fractional\nalpha = {alpha:?}\n")),
        }
        match p.noise {
            NoiseKind::White => out.push_str("noise = white\n"),
            NoiseKind::Riesz { beta } => out.push_str(&format!("noise = riesz\nbeta = {beta:?}\n")),
        }
        out.push_str(&format!("sigma = {}\n", p.amplitude));
        out.push_str(&format!("drift = {}\n", p.drift.id()));
        out.push_str(&format!("u0 = {}\n", p.u0));
        out.push_str(&format!("laplacian_scaling = {}\n", p.convention));
        out.push_str("\n[scheme]\n");
        out.push_str(&format!("dt = {:?}\n", s.dt_base));
        out.push_str(&format!("modes = {}\n", s.n_modes));
        if let Some(n) = s.n_points {
            out.push_str(&format!("points = {n}\n"));
        }
        out.push_str(&format!("theta = {:?}\n", s.theta));
        if let Some(n0) = s.ladder_start {
            out.push_str(&format!("ladder_start = {n0:?}\n"));
        }
        out.push_str(&format!("ladder_max = {:?}\n", s.ladder_max));
        out.push_str(&format!("threshold = {:?}\n", s.threshold));
        out.push_str(&format!("horizon = {:?}\n", s.horizon));
        out.push_str(&format!("record_interval = {:?}\n", s.record_interval));
        out.push_str(&format!("max_steps = {}\n", s.max_steps));
        out.push_str("\n[ensemble]\n");
        out.push_str(&format!("paths = {}\n", self.ensemble.paths));
        out.push_str(&format!("seed = {}\n", self.ensemble.seed));
        out.push_str(&format!("parallelism = {}\n", self.ensemble.parallelism));
        out.push_str("\n[output]\n");
        out.push_str(&format!("dir = {}\n", self.output_dir.display()));
        out
    }

    /// 64-bit FNV-1a of [`RunConfig::serialize`].
    pub fn hash(&self) -> u64 {
        seed::fnv1a(self.serialize().as_bytes())
    }

    /// Loads a file and resolves the output directory against its location.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = parse_config(&text)?;
        if cfg.output_dir.is_relative() {
            let base = path.parent().unwrap_or(Path::new("."));
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        Ok(cfg)
    }

    /// Defaults for every key, as a commented configuration file.
    pub fn defaults_text() -> String {
        let cfg = RunConfig {
            problem: ProblemSpec::new(Domain::Interval01, DriftSpec::power(1.0), 1.0),
            scheme: SchemeConfig::default(),
            ensemble: EnsembleSettings::default(),
            output_dir: PathBuf::from("out"),
        };
        format!(
            "# osgoodlab defaults; drift and domain have no default and must be set.\n{}",
            cfg.serialize()
        )
    }
}

const SECTIONS: [(&str, &[&str]); 4] = [
    (
        "problem",
        &[
            "domain",
            "operator",
            "alpha",
            "noise",
            "beta",
            "sigma",
            "drift",
            "u0",
            "laplacian_scaling",
        ],
    ),
    (
        "scheme",
        &[
            "dt",
            "modes",
            "points",
            "theta",
            "ladder_start",
            "ladder_max",
            "threshold",
            "horizon",
            "record_interval",
            "max_steps",
        ],
    ),
    ("ensemble", &["paths", "seed", "parallelism"]),
    ("output", &["dir"]),
];

struct Entry {
    value: String,
    line: usize,
}

struct Fields {
    map: BTreeMap<(String, String), Entry>,
    errors: Vec<String>,
}

impl Fields {
    fn raw(&self, section: &str, key: &str) -> Option<&Entry> {
        self.map.get(&(section.to_string(), key.to_string()))
    }

    fn parsed<T>(&mut self, section: &str, key: &str, what: &str, f: impl Fn(&str) -> Result<T>) -> Option<T> {
        let entry = self.raw(section, key)?;
        match f(&entry.value) {
            Ok(v) => Some(v),
            Err(e) => {
                let msg = format!("line {}: [{section}] {key}: expected {what}: {e}", entry.line);
                self.errors.push(msg);
                None
            }
        }
    }

    fn number<T: std::str::FromStr>(&mut self, section: &str, key: &str, what: &str) -> Option<T> {
        self.parsed(section, key, what, |v| {
            v.parse::<T>().map_err(|_| Error::domain(format!("got '{v}'")))
        })
    }
}

/// Parses a configuration, reporting every problem found rather than the first.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut fields = Fields {
        map: BTreeMap::new(),
        errors: Vec::new(),
    };
    let mut section: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() || line.starts_with(';') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let name = name.trim();
            if SECTIONS.iter().any(|(s, _)| *s == name) {
                section = Some(name.to_string());
            } else {
                fields.errors.push(format!("line {line_no}: unknown section [{name}]"));
                section = None;
            }
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            fields
                .errors
                .push(format!("line {line_no}: expected 'key = value', got '{line}'"));
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        let Some(sec) = section.clone() else {
            fields
                .errors
                .push(format!("line {line_no}: key '{key}' outside a known section"));
            continue;
        };
        let known = SECTIONS
            .iter()
            .find(|(s, _)| *s == sec)
            .is_some_and(|(_, keys)| keys.contains(&key));
        if !known {
            fields
                .errors
                .push(format!("line {line_no}: unknown key '{key}' in [{sec}]"));
            continue;
        }
        let slot = (sec.clone(), key.to_string());
        if let Some(prev) = fields.map.get(&slot) {
            fields.errors.push(format!(
                "line {line_no}: duplicate key '{key}' in [{sec}] (first set on line {})",
                prev.line
            ));
            continue;
        }
        fields.map.insert(
            slot,
            Entry {
                value: value.to_string(),
                line: line_no,
            },
        );
    }

    let domain = fields.parsed("problem", "domain", "interval01 | ball | line:<L>", Domain::parse);
    let drift = fields.parsed("problem", "drift", "a drift", DriftSpec::parse);
    for (key, present) in [
        ("domain", fields.raw("problem", "domain").is_some()),
        ("drift", fields.raw("problem", "drift").is_some()),
    ] {
        if !present {
            fields.errors.push(format!("[problem] {key} is required"));
        }
    }
    let alpha: Option<f64> = fields.number("problem", "alpha", "a number");
    let operator = match fields.raw("problem", "operator").map(|e| (e.value.clone(), e.line)) {
        Some((v, _)) if v == "laplacian" => {
            if alpha.is_some() {
                fields
                    .errors
                    .push("[problem] alpha requires operator = fractional".to_string());
            }
            Some(Operator::Laplacian)
        }
        Some((v, line)) if v != "fractional" => {
            fields.errors.push(format!(
                "line {line}: [problem] operator: expected laplacian | fractional, got '{v}'"
            ));
            None
        }
        Some(_) | None => match (alpha, fields.raw("problem", "operator").is_some()) {
            (Some(a), _) if a > 0.0 && a <= 2.0 => Some(Operator::FracLaplacian { alpha: a }),
            (Some(_), _) => {
                fields.errors.push("[problem] alpha must lie in (0, 2]".to_string());
                None
            }
            (None, true) => {
                fields
                    .errors
                    .push("[problem] operator = fractional requires alpha".to_string());
                None
            }
            (None, false) => Some(Operator::Laplacian),
        },
    };
    let beta: Option<f64> = fields.number("problem", "beta", "a number");
    let noise = match fields.raw("problem", "noise").map(|e| (e.value.clone(), e.line)) {
        Some((v, line)) if v != "white" && v != "riesz" => {
            fields.errors.push(format!(
                "line {line}: [problem] noise: expected white | riesz, got '{v}'"
            ));
            None
        }
        Some((v, _)) if v == "white" && beta.is_some() => {
            fields.errors.push("[problem] beta requires noise = riesz".to_string());
            None
        }
        Some((v, _)) if v == "white" => Some(NoiseKind::White),
        other => match beta {
            Some(b) => Some(NoiseKind::Riesz { beta: b }),
            None if other.is_some() => {
                fields.errors.push("[problem] noise = riesz requires beta".to_string());
                None
            }
            None => Some(NoiseKind::White),
        },
    };
    let amplitude = fields
        .parsed(
            "problem",
            "sigma",
            "a number, sine:<base>,<amp> or tanh:<lo>,<hi>",
            Amplitude::parse,
        )
        .or(fields
            .raw("problem", "sigma")
            .map_or(Some(Amplitude::Constant { sigma: 1.0 }), |_| None));
    let u0 = fields
        .parsed("problem", "u0", "an initial condition", InitialCondition::parse)
        .or(fields
            .raw("problem", "u0")
            .map_or(Some(InitialCondition::Zero), |_| None));
    let convention = fields
        .parsed("problem", "laplacian_scaling", "half | full", |v| match v {
            "half" => Ok(Convention::Half),
            "full" => Ok(Convention::Full),
            _ => Err(Error::domain(format!("got '{v}'"))),
        })
        .or(fields
            .raw("problem", "laplacian_scaling")
            .map_or(Some(Convention::Half), |_| None));

    let d = SchemeConfig::default();
    let scheme = SchemeConfig {
        dt_base: fields.number("scheme", "dt", "a number").unwrap_or(d.dt_base),
        n_modes: fields
            .number("scheme", "modes", "a positive integer")
            .unwrap_or(d.n_modes),
        n_points: fields.number("scheme", "points", "a positive integer"),
        theta: fields.number("scheme", "theta", "a number").unwrap_or(d.theta),
        ladder_start: fields.number("scheme", "ladder_start", "a number"),
        ladder_max: fields
            .number("scheme", "ladder_max", "a number")
            .unwrap_or(d.ladder_max),
        threshold: fields.number("scheme", "threshold", "a number").unwrap_or(d.threshold),
        horizon: fields.number("scheme", "horizon", "a number").unwrap_or(d.horizon),
        record_interval: fields
            .number("scheme", "record_interval", "a number")
            .unwrap_or(d.record_interval),
        max_steps: fields
            .number("scheme", "max_steps", "a positive integer")
            .unwrap_or(d.max_steps),
    };
    let de = EnsembleSettings::default();
    let ensemble = EnsembleSettings {
        paths: fields
            .number("ensemble", "paths", "a positive integer")
            .unwrap_or(de.paths),
        seed: fields
            .number("ensemble", "seed", "an unsigned integer")
            .unwrap_or(de.seed),
        parallelism: fields
            .number("ensemble", "parallelism", "a positive integer")
            .unwrap_or(de.parallelism),
    };
    let output_dir = fields
        .raw("output", "dir")
        .map_or_else(|| PathBuf::from("out"), |e| PathBuf::from(&e.value));

    if let Err(e) = scheme.validate() {
        fields.errors.push(strip_kind(&e));
    }
    if ensemble.paths == 0 {
        fields.errors.push("[ensemble] paths must be positive".to_string());
    }
    if ensemble.parallelism == 0 {
        fields
            .errors
            .push("[ensemble] parallelism must be positive".to_string());
    }
    let mut errors = fields.errors;
    match (domain, operator, noise, amplitude, drift, u0, convention) {
        (Some(domain), Some(operator), Some(noise), Some(amplitude), Some(drift), Some(u0), Some(convention)) => {
            let problem = ProblemSpec {
                domain,
                operator,
                noise,
                amplitude,
                drift,
                u0,
                convention,
            };
            if let Err(e) = problem.validate() {
                errors.push(strip_kind(&e));
            }
            if errors.is_empty() {
                return Ok(RunConfig {
                    problem,
                    scheme,
                    ensemble,
                    output_dir,
                });
            }
        }
        (_, Some(operator), Some(NoiseKind::Riesz { beta }), ..) => {
            if let Err(e) = crate::noise::RieszParams::new(beta, 1, operator.order()) {
                errors.push(strip_kind(&e));
            }
        }
        _ => {}
    }
    Err(Error::Config(errors))
}

fn strip_kind(e: &Error) -> String {
    match e {
        Error::Domain(m) => m.clone(),
        other => other.to_string(),
    }
}

/// One file of a report, relative to the output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub path: String,
    pub contents: String,
}

impl Artifact {
    pub fn new(path: impl Into<String>, contents: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            contents: contents.into(),
        }
    }

    /// Two-column plot data, headed by the configuration hash.
    pub fn plot(path: impl Into<String>, config_hash: u64, columns: (&str, &str), rows: &[(f64, f64)]) -> Self {
        let mut text = format!(
            "# config_hash {}\n# {} {}\n",
            seed::hex(config_hash),
            columns.0,
            columns.1
        );
        for (x, y) in rows {
            text.push_str(&format!("{x:?} {y:?}\n"));
        }
        Self::new(path, text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub hash: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub files: Vec<ManifestEntry>,
}

pub const MANIFEST: &str = "manifest.json";

/// Writes every artifact under `dir` and a manifest of content hashes. On
/// failure the files already written are removed.
pub fn write_report(artifacts: &[Artifact], config_hash: u64, dir: &Path) -> Result<Manifest> {
    let mut written: Vec<PathBuf> = Vec::new();
    let result = (|| {
        let mut files = Vec::with_capacity(artifacts.len());
        for a in artifacts {
            let path = dir.join(&a.path);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            std::fs::write(&path, &a.contents).map_err(|e| Error::io(&path, e))?;
            written.push(path);
            files.push(ManifestEntry {
                path: a.path.clone(),
                hash: seed::hex(seed::fnv1a(a.contents.as_bytes())),
            });
        }
        let manifest = Manifest {
            config_hash: seed::hex(config_hash),
            files,
        };
        let path = dir.join(MANIFEST);
        let text = serde_json::to_string_pretty(&manifest).expect("manifest json");
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(manifest)
    })();
    if result.is_err() {
        for p in &written {
            let _ = std::fs::remove_file(p);
        }
    }
    result
}

/// Reads a manifest and checks every listed file against its hash.
pub fn verify_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| Error::HashMismatch(format!("{}: unreadable manifest: {e}", path.display())))?;
    for f in &manifest.files {
        let p = dir.join(&f.path);
        let body = std::fs::read(&p).map_err(|e| Error::io(&p, e))?;
        let got = seed::hex(seed::fnv1a(&body));
        if got != f.hash {
            return Err(Error::HashMismatch(format!(
                "{}: content hash {got} differs from manifest {}",
                p.display(),
                f.hash
            )));
        }
    }
    Ok(manifest)
}

fn trajectory_artifacts(prefix: &str, r: &crate::solver::TrajectoryResult, config_hash: u64) -> Vec<Artifact> {
    let sup: Vec<(f64, f64)> = r.series.iter().map(|p| (p.t, p.sup)).collect();
    let mass: Vec<(f64, f64)> = r.series.iter().map(|p| (p.t, p.mass)).collect();
    vec![
        Artifact::new(format!("{prefix}.csv"), r.to_csv()),
        Artifact::new(format!("{prefix}.json"), r.to_json(config_hash)),
        Artifact::plot(format!("{prefix}_sup.dat"), config_hash, ("t", "sup"), &sup),
        Artifact::plot(format!("{prefix}_mass.dat"), config_hash, ("t", "mass"), &mass),
    ]
}

/// Files of an ensemble run: `ensemble.json`, one CSV and JSON per path and
/// plot data for the blow-up time distribution.
pub fn ensemble_artifacts(ens: &Ensemble, config_hash: u64) -> Vec<Artifact> {
    let mut report = ens.report.clone();
    report.config_hash = seed::hex(config_hash);
    let mut out = vec![Artifact::new("ensemble.json", report.to_json())];
    for (i, r) in ens.trajectories.iter().enumerate() {
        out.extend(trajectory_artifacts(
            &format!("trajectories/path_{i:05}"),
            r,
            config_hash,
        ));
    }
    let mut taus: Vec<f64> = ens.trajectories.iter().filter_map(|r| r.status.tau_hat()).collect();
    taus.sort_by(f64::total_cmp);
    let n = ens.trajectories.len() as f64;
    let cdf: Vec<(f64, f64)> = taus.iter().enumerate().map(|(k, t)| (*t, (k + 1) as f64 / n)).collect();
    out.push(Artifact::plot(
        "tau_cdf.dat",
        config_hash,
        ("tau_hat", "fraction"),
        &cdf,
    ));
    out
}

#[derive(Parser, Debug)]
#[command(
    name = "osgoodlab",
    version,
    about = "Blow-up experiments for reaction-diffusion equations driven by Gaussian noise"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one trajectory from a configuration file.
    #[command(after_help = DEFAULTS_HELP)]
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Trajectory seed; defaults to mix([ensemble] seed, 0).
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print every configuration default and exit.
        #[arg(long)]
        print_defaults: bool,
    },
    /// Run an ensemble of trajectories from a configuration file.
    #[command(after_help = DEFAULTS_HELP)]
    Ensemble {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        paths: Option<usize>,
        #[arg(long)]
        parallelism: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the Osgood integral from `a` to infinity.
    Osgood {
        #[arg(long)]
        drift: String,
        #[arg(long, default_value_t = 1.0)]
        a: f64,
    },
    /// Check simulated Gaussian inputs against their covariance laws.
    NoiseVerify {
        #[arg(long, value_enum, default_value_t = NoiseCheck::White)]
        kind: NoiseCheck,
        #[arg(long, default_value_t = 10_000)]
        paths: usize,
        #[arg(long, default_value_t = 256)]
        modes: usize,
        #[arg(long, default_value_t = 0.5)]
        hurst: f64,
        #[arg(long, default_value_t = 0.5)]
        k: f64,
        #[arg(long, default_value_t = 1.5)]
        alpha: f64,
        #[arg(long, default_value_t = 0.5)]
        beta: f64,
        /// Half width of the truncated line for the colored check.
        #[arg(long, default_value_t = 8.0)]
        half_width: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate X = a + ∫ b(X) + g(t).
    Ode {
        #[arg(long)]
        drift: String,
        #[arg(long)]
        a: f64,
        #[arg(long, default_value_t = 1e-4)]
        dt: f64,
        #[arg(long, default_value_t = 10.0)]
        horizon: f64,
        /// none | linear:<c> | lil:<hk>
        #[arg(long, default_value = "none")]
        ramp: String,
    },
    /// Feller explosion test for the first-mode diffusion.
    Feller {
        #[arg(long)]
        drift: String,
        #[arg(long, default_value_t = std::f64::consts::PI * std::f64::consts::PI / 8.0)]
        lambda1: f64,
        #[arg(long, default_value_t = 1.0)]
        kappa: f64,
    },
    /// Blow-up frequencies against Osgood classifications.
    Dichotomy {
        /// Comma-separated drifts.
        #[arg(long, default_value = "power:1.0,linear:1.0")]
        drifts: String,
        /// Comma-separated noise amplitudes.
        #[arg(long, default_value = "1.0")]
        sigmas: String,
        #[arg(long, default_value = "interval01")]
        domain: String,
        #[arg(long, default_value_t = 5.0)]
        horizon: f64,
        #[arg(long, default_value = "zero")]
        u0: String,
        #[arg(long, default_value_t = 50)]
        paths: usize,
        #[arg(long, default_value_t = 32)]
        modes: usize,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        parallelism: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Aggregate report directories that share a configuration hash.
    Report {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(clap::ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum NoiseCheck {
    White,
    Bifbm,
    Colored,
}

const DEFAULTS_HELP: &str = "Configuration defaults: operator = laplacian, noise = white, sigma = 1.0, \
u0 = zero, laplacian_scaling = half, dt = 0.001, modes = 64, points = 2*modes+1, theta = 0.1, \
ladder_max = 1e8, threshold = 1e8, horizon = 1.0, record_interval = 0.01, \
max_steps = 100000000, paths = 100, seed = 0, parallelism = 1, dir = out. \
Run `osgoodlab simulate --print-defaults` for a complete file.";

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Domain(_) | Error::Extrapolation { .. } | Error::HashMismatch(_) => EXIT_USAGE,
        Error::Path { source, .. } => exit_code(source),
        _ => EXIT_NUMERICAL,
    }
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn say(out: &mut dyn Write, text: impl AsRef<str>) -> Result<()> {
    writeln!(out, "{}", text.as_ref()).map_err(|e| Error::io("<stdout>", e))
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Simulate {
            config,
            seed: s,
            out: dir,
            print_defaults,
        } => {
            if print_defaults {
                say(out, RunConfig::defaults_text())?;
                return Ok(EXIT_OK);
            }
            let config = config.ok_or_else(|| Error::Config(vec!["simulate needs --config".into()]))?;
            let cfg = RunConfig::load(&config)?;
            let hash = cfg.hash();
            let sim = Simulator::new(&cfg.problem, &cfg.scheme)?;
            let s = s.unwrap_or_else(|| analysis::path_seed(cfg.ensemble.seed, 0));
            let r = sim.run(s)?;
            let dir = dir.unwrap_or(cfg.output_dir.clone());
            let mut artifacts = vec![Artifact::new("config.ini", cfg.serialize())];
            artifacts.extend(trajectory_artifacts("trajectory", &r, hash));
            write_report(&artifacts, hash, &dir)?;
            say(out, status_line(&r.status))?;
        }
        Command::Ensemble {
            config,
            paths,
            parallelism,
            out: dir,
        } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(p) = paths {
                cfg.ensemble.paths = p;
            }
            if let Some(p) = parallelism {
                cfg.ensemble.parallelism = p;
            }
            blowup_probability(0, cfg.ensemble.paths)?;
            let hash = cfg.hash();
            let sim = Simulator::new(&cfg.problem, &cfg.scheme)?;
            let ens = run_ensemble_with(
                &sim,
                cfg.ensemble.paths,
                cfg.ensemble.seed,
                cfg.ensemble.parallelism,
                seed::hex(hash),
            )?;
            let dir = dir.unwrap_or(cfg.output_dir.clone());
            let mut artifacts = vec![Artifact::new("config.ini", cfg.serialize())];
            artifacts.extend(ensemble_artifacts(&ens, hash));
            write_report(&artifacts, hash, &dir)?;
            let w = ens.report.blowup_probability;
            say(
                out,
                format!(
                    "blowup {}/{} p={:?} [{:.4}, {:.4}] indeterminate {}",
                    ens.report.counts.blewup,
                    ens.report.n_paths,
                    w.estimate,
                    w.lo,
                    w.hi,
                    ens.report.counts.indeterminate
                ),
            )?;
        }
        Command::Osgood { drift, a } => {
            let spec = DriftSpec::parse(&drift)?;
            let r = osgood_integral(&spec, a, &OsgoodOptions::default())?;
            match r.integral_value {
                Some(v) if r.classification == OsgoodClass::Converges => say(out, format!("converges {v:?}"))?,
                _ => say(out, r.classification.to_string())?,
            }
        }
        Command::NoiseVerify {
            kind,
            paths,
            modes,
            hurst,
            k,
            alpha,
            beta,
            half_width,
            seed: s,
            out: dir,
        } => {
            let hash = seed::fnv1a(
                format!("{kind:?} {paths} {modes} {hurst:?} {k:?} {alpha:?} {beta:?} {half_width:?} {s}").as_bytes(),
            );
            let (line, artifacts) = match kind {
                NoiseCheck::White => {
                    let v = analysis::verify_white(modes, paths, s)?;
                    let json = v.covariance.to_report_json(serde_json::json!({"n_modes": modes, "n_paths": paths, "x": 0.5, "config_hash": seed::hex(hash)}), &[1.0, 2.0, 4.0, v.stationary_time]);
                    let pairs: Vec<(f64, f64)> = v
                        .covariance
                        .pairs
                        .iter()
                        .map(|p| (p.closed_form, p.empirical))
                        .collect();
                    (
                        format!(
                            "white max_z {:.3} stationary_z {:.3}",
                            v.covariance.max_z, v.stationary_z
                        ),
                        vec![
                            Artifact::new("covariance.json", json),
                            Artifact::plot("covariance.dat", hash, ("closed_form", "empirical"), &pairs),
                        ],
                    )
                }
                NoiseCheck::Bifbm => {
                    let p = BifBmParams::new(hurst, k, 1.0)?;
                    let c = analysis::verify_bifbm(&p, 64, paths, s)?;
                    let grid: Vec<f64> = (1..=64).map(|i| i as f64 / 64.0).collect();
                    let json = c.to_report_json(
                        serde_json::json!({"h": hurst, "k": k, "n_paths": paths, "config_hash": seed::hex(hash)}),
                        &grid,
                    );
                    let pairs: Vec<(f64, f64)> = c.pairs.iter().map(|p| (p.closed_form, p.empirical)).collect();
                    (
                        format!("bifbm max_z {:.3}", c.max_z),
                        vec![
                            Artifact::new("covariance.json", json),
                            Artifact::plot("covariance.dat", hash, ("closed_form", "empirical"), &pairs),
                        ],
                    )
                }
                NoiseCheck::Colored => {
                    let v = analysis::verify_colored(alpha, beta, half_width, modes, paths, s)?;
                    let mut json = serde_json::to_value(&v).expect("colored json");
                    json["config_hash"] = seed::hex(hash).into();
                    let pts: Vec<(f64, f64)> = v
                        .slope
                        .lags
                        .iter()
                        .zip(&v.slope.moments)
                        .map(|(l, m)| (*l, *m))
                        .collect();
                    (
                        format!(
                            "colored ratio {:.4} (target {:.4}) slope {:.3} ± {:.3} (target {:.3})",
                            v.ratio, v.ratio_target, v.slope.slope, v.slope.stderr, v.slope_target
                        ),
                        vec![
                            Artifact::new("colored.json", serde_json::to_string_pretty(&json).expect("json")),
                            Artifact::plot("increments.dat", hash, ("lag", "second_moment"), &pts),
                        ],
                    )
                }
            };
            if let Some(dir) = dir {
                write_report(&artifacts, hash, &dir)?;
            }
            say(out, line)?;
        }
        Command::Ode {
            drift,
            a,
            dt,
            horizon,
            ramp,
        } => {
            let spec = DriftSpec::parse(&drift)?;
            let g = parse_ramp(&ramp, horizon, dt)?;
            let r = integrate_perturbed_ode(a, &spec, &g, dt)?;
            say(out, status_line(&r.status))?;
        }
        Command::Feller { drift, lambda1, kappa } => {
            let spec = DriftSpec::parse(&drift)?;
            let r = feller_explosion_test(lambda1, &spec, kappa)?;
            say(out, format!("{} tail_exponent {:.3}", r.verdict, r.tail_exponent))?;
        }
        Command::Dichotomy {
            drifts,
            sigmas,
            domain,
            horizon,
            u0,
            paths,
            modes,
            dt,
            seed: s,
            parallelism,
            out: dir,
        } => {
            let domain = Domain::parse(&domain)?;
            let u0 = InitialCondition::parse(&u0)?;
            let drifts = drifts.split(',').map(DriftSpec::parse).collect::<Result<Vec<_>>>()?;
            let sigmas = sigmas
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::domain(format!("bad sigma '{v}'")))
                })
                .collect::<Result<Vec<_>>>()?;
            let cells: Vec<DichotomyCell> = drifts
                .iter()
                .flat_map(|d| {
                    sigmas.iter().map(|&sigma| DichotomyCell {
                        drift: d.clone(),
                        sigma,
                        domain,
                        horizon,
                        u0: u0.clone(),
                    })
                })
                .collect();
            let scheme = SchemeConfig {
                n_modes: modes,
                dt_base: dt,
                ..SchemeConfig::default()
            };
            let report = dichotomy_experiment(&cells, &scheme, paths, s, parallelism)?;
            let hash = u64::from_str_radix(&report.config_hash, 16).expect("hex hash");
            if let Some(dir) = dir {
                let rows: Vec<(f64, f64)> = report
                    .rows
                    .iter()
                    .enumerate()
                    .map(|(i, r)| (i as f64, r.frequency))
                    .collect();
                write_report(
                    &[
                        Artifact::new("dichotomy.json", report.to_json()),
                        Artifact::new("dichotomy.csv", report.to_csv()),
                        Artifact::plot("frequency.dat", hash, ("cell", "frequency"), &rows),
                    ],
                    hash,
                    &dir,
                )?;
            }
            out.write_all(report.to_csv().as_bytes())
                .map_err(|e| Error::io("<stdout>", e))?;
            if report.has_inconsistent() {
                return Ok(EXIT_INCONSISTENT);
            }
        }
        Command::Report { dirs, out: dir } => {
            let summary = aggregate(&dirs)?;
            let text = serde_json::to_string_pretty(&summary).expect("summary json");
            if let Some(dir) = dir {
                let hash = u64::from_str_radix(&summary.config_hash, 16).expect("hex hash");
                write_report(&[Artifact::new("summary.json", text.clone())], hash, &dir)?;
            }
            say(out, text)?;
        }
    }
    Ok(EXIT_OK)
}

fn status_line(s: &Status) -> String {
    match s {
        Status::BlewUp { tau_hat } => format!("blewup {tau_hat:?}"),
        Status::Survived { horizon } => format!("survived {horizon:?}"),
        Status::Indeterminate { t, reason } => format!("indeterminate at {t:?}: {reason}"),
    }
}

/// `none`, `linear:<c>` (g = c t) or `lil:<hk>` (the iterated-log envelope).
fn parse_ramp(text: &str, horizon: f64, dt: f64) -> Result<PerturbationPath> {
    let step = dt.max(horizon / 1e5);
    let text = text.trim();
    if text == "none" {
        return PerturbationPath::zero(horizon);
    }
    let num = |v: &str| {
        v.trim()
            .parse::<f64>()
            .map_err(|_| Error::domain(format!("bad ramp parameter '{v}'")))
    };
    if let Some(c) = text.strip_prefix("linear:") {
        let c = num(c)?;
        return PerturbationPath::from_fn(horizon, step, |t| c * t);
    }
    if let Some(hk) = text.strip_prefix("lil:") {
        let hk = num(hk)?;
        return PerturbationPath::from_fn(horizon, step, |t| lil_ramp(hk, t));
    }
    Err(Error::domain(format!(
        "unknown ramp '{text}' (expected none | linear:c | lil:hk)"
    )))
}

/// Aggregate of several report directories.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub config_hash: String,
    pub directories: Vec<String>,
    pub files: usize,
    pub n_paths: usize,
    pub blewup: usize,
    pub blowup_probability: Option<analysis::WilsonInterval>,
}

/// Verifies each directory's manifest, requires one shared configuration
/// hash and pools the ensemble counts.
pub fn aggregate(dirs: &[PathBuf]) -> Result<Summary> {
    let mut hash: Option<String> = None;
    let mut files = 0;
    let (mut n_paths, mut blewup) = (0, 0);
    for dir in dirs {
        let m = verify_manifest(dir)?;
        match &hash {
            Some(h) if *h != m.config_hash => {
                return Err(Error::HashMismatch(format!(
                    "{} has config hash {} but earlier directories have {h}",
                    dir.display(),
                    m.config_hash
                )))
            }
            _ => hash = Some(m.config_hash.clone()),
        }
        files += m.files.len();
        if m.files.iter().any(|f| f.path == "ensemble.json") {
            let p = dir.join("ensemble.json");
            let text = std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
            let v: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| Error::HashMismatch(format!("{}: {e}", p.display())))?;
            n_paths += v["n_paths"].as_u64().unwrap_or(0) as usize;
            blewup += v["counts"]["blewup"].as_u64().unwrap_or(0) as usize;
        }
    }
    Ok(Summary {
        config_hash: hash.unwrap_or_default(),
        directories: dirs.iter().map(|d| d.display().to_string()).collect(),
        files,
        n_paths,
        blewup,
        blowup_probability: if n_paths > 0 {
            Some(blowup_probability(blewup, n_paths)?)
        } else {
            None
        },
    })
}
