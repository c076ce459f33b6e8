//! Time stepping for the reaction–diffusion equation
//!
//! ```text
//! ∂_t u = L u + b(u) + σ(u) Ẇ,   u = 0 outside the domain,
//! ```
//!
//! with blow-up detection through the truncation ladder, plus the scalar
//! comparison problems: the perturbed ODE `X_t = a + ∫ b(X) + g(t)` and the
//! first-mode diffusion `dX = (-λ₁ X + b(X)) dt + √κ dB`.
//!
//! The field scheme is exponential Euler in the eigenbasis of `L`: mode
//! coefficients decay exactly, the drift is evaluated pointwise on the mesh
//! and projected, and the additive noise increment is the exact OU
//! increment of each mode.

use std::f64::consts::E;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::drift::{osgood_integral, DriftSpec, OsgoodClass, OsgoodOptions};
use crate::error::{Error, Result};
use crate::kernels::{
    frac_dirichlet_spectrum, laplacian_dirichlet_spectrum, Convention, Domain, Mesh, SpectralBasis, SpectralCache,
};
use crate::noise::{
    cholesky_with_jitter, one_minus_exp_over, ou_step_std, riesz_cov_factor, ModeNoiseModel, RieszParams,
};
use crate::quad;
use crate::seed;

pub const DEFAULT_THRESHOLD: f64 = 1e8;
pub const DEFAULT_THETA: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Operator {
    Laplacian,
    FracLaplacian { alpha: f64 },
}

impl Operator {
    /// Order of the operator: 2 for the Laplacian.
    pub fn order(&self) -> f64 {
        match self {
            Operator::Laplacian => 2.0,
            Operator::FracLaplacian { alpha } => *alpha,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if text == "laplacian" {
            return Ok(Operator::Laplacian);
        }
        if let Some(a) = text.strip_prefix("frac:") {
            let alpha: f64 = a
                .trim()
                .parse()
                .map_err(|_| Error::domain(format!("bad fractional order '{a}'")))?;
            if !(alpha > 0.0 && alpha <= 2.0) {
                return Err(Error::domain("alpha must lie in (0, 2]"));
            }
            return Ok(Operator::FracLaplacian { alpha });
        }
        Err(Error::domain(format!(
            "unknown operator '{text}' (expected laplacian | frac:<alpha>)"
        )))
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operator::Laplacian => f.write_str("laplacian"),
            Operator::FracLaplacian { alpha } => write!(f, "frac:{alpha:?}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseKind {
    White,
    Riesz { beta: f64 },
}

impl NoiseKind {
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if text == "white" {
            return Ok(NoiseKind::White);
        }
        if let Some(b) = text.strip_prefix("riesz:") {
            let beta: f64 = b
                .trim()
                .parse()
                .map_err(|_| Error::domain(format!("bad riesz exponent '{b}'")))?;
            return Ok(NoiseKind::Riesz { beta });
        }
        Err(Error::domain(format!(
            "unknown noise '{text}' (expected white | riesz:<beta>)"
        )))
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseKind::White => f.write_str("white"),
            NoiseKind::Riesz { beta } => write!(f, "riesz:{beta:?}"),
        }
    }
}

/// A noise coefficient `σ(u)` with `1/K ≤ σ ≤ K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundedSigma {
    /// `base + amp · sin(u)`, requires `base > |amp|`.
    Sine { base: f64, amp: f64 },
    /// `lo + (hi - lo)(1 + tanh u)/2`, requires `0 < lo ≤ hi`.
    Tanh { lo: f64, hi: f64 },
}

impl BoundedSigma {
    pub fn new(self) -> Result<Self> {
        let ok = match self {
            BoundedSigma::Sine { base, amp } => base.is_finite() && amp.is_finite() && base > amp.abs(),
            BoundedSigma::Tanh { lo, hi } => lo > 0.0 && hi >= lo && hi.is_finite(),
        };
        if ok {
            Ok(self)
        } else {
            Err(Error::domain(format!("sigma {self} is not bounded away from zero")))
        }
    }

    pub fn eval(&self, u: f64) -> f64 {
        match *self {
            BoundedSigma::Sine { base, amp } => base + amp * u.sin(),
            BoundedSigma::Tanh { lo, hi } => lo + (hi - lo) * 0.5 * (1.0 + u.tanh()),
        }
    }

    /// `(inf σ, sup σ)`.
    pub fn range(&self) -> (f64, f64) {
        match *self {
            BoundedSigma::Sine { base, amp } => (base - amp.abs(), base + amp.abs()),
            BoundedSigma::Tanh { lo, hi } => (lo, hi),
        }
    }

    /// Smallest `K` with `1/K ≤ σ ≤ K`.
    pub fn bound(&self) -> f64 {
        let (lo, hi) = self.range();
        hi.max(1.0 / lo)
    }
}

impl fmt::Display for BoundedSigma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundedSigma::Sine { base, amp } => write!(f, "sine:{base:?},{amp:?}"),
            BoundedSigma::Tanh { lo, hi } => write!(f, "tanh:{lo:?},{hi:?}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Amplitude {
    Constant { sigma: f64 },
    Bounded(BoundedSigma),
}

impl Amplitude {
    /// `1.5`, `sine:<base>,<amp>` or `tanh:<lo>,<hi>`.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let pair = |rest: &str| -> Result<(f64, f64)> {
            let parts: Vec<&str> = rest.split(',').map(str::trim).collect();
            match parts.as_slice() {
                [a, b] => Ok((
                    a.parse().map_err(|_| Error::domain(format!("bad number '{a}'")))?,
                    b.parse().map_err(|_| Error::domain(format!("bad number '{b}'")))?,
                )),
                _ => Err(Error::domain(format!("expected two numbers in '{rest}'"))),
            }
        };
        if let Some(rest) = text.strip_prefix("sine:") {
            let (base, amp) = pair(rest)?;
            return Ok(Amplitude::Bounded(BoundedSigma::Sine { base, amp }.new()?));
        }
        if let Some(rest) = text.strip_prefix("tanh:") {
            let (lo, hi) = pair(rest)?;
            return Ok(Amplitude::Bounded(BoundedSigma::Tanh { lo, hi }.new()?));
        }
        let sigma: f64 = text.parse().map_err(|_| Error::domain(format!("bad sigma '{text}'")))?;
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::domain("sigma must be nonnegative"));
        }
        Ok(Amplitude::Constant { sigma })
    }
}

impl fmt::Display for Amplitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Amplitude::Constant { sigma } => write!(f, "{sigma:?}"),
            Amplitude::Bounded(b) => b.fmt(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialCondition {
    Zero,
    /// `amplitude · φ₁`.
    FirstMode {
        amplitude: f64,
    },
    Constant {
        value: f64,
    },
    /// Values at the mesh nodes.
    Samples {
        values: Vec<f64>,
    },
}

impl InitialCondition {
    /// `zero`, `mode1:<A>`, `const:<c>`, `samples:<v1>,<v2>,...` or
    /// `file:<path>` (one value per line).
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let num = |s: &str| -> Result<f64> { s.trim().parse().map_err(|_| Error::domain(format!("bad number '{s}'"))) };
        if text == "zero" {
            Ok(InitialCondition::Zero)
        } else if let Some(a) = text.strip_prefix("mode1:") {
            Ok(InitialCondition::FirstMode { amplitude: num(a)? })
        } else if let Some(c) = text.strip_prefix("const:") {
            Ok(InitialCondition::Constant { value: num(c)? })
        } else if let Some(list) = text.strip_prefix("samples:") {
            let values = list.split(',').map(num).collect::<Result<Vec<_>>>()?;
            Ok(InitialCondition::Samples { values })
        } else if let Some(p) = text.strip_prefix("file:") {
            let path = std::path::Path::new(p.trim());
            let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let values = body
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(num)
                .collect::<Result<Vec<_>>>()?;
            Ok(InitialCondition::Samples { values })
        } else {
            Err(Error::domain(format!(
                "unknown initial condition '{text}' (expected zero | mode1:A | const:c | samples:v,... | file:path)"
            )))
        }
    }

    /// Nodal values on the basis mesh; rejects negative data.
    pub fn nodal(&self, basis: &SpectralBasis) -> Result<DVector<f64>> {
        let n = basis.mesh().n_points;
        let u = match self {
            InitialCondition::Zero => DVector::zeros(n),
            InitialCondition::FirstMode { amplitude } => {
                DVector::from_iterator(n, basis.modes().column(0).iter().map(|v| amplitude * v))
            }
            InitialCondition::Constant { value } => DVector::from_element(n, *value),
            InitialCondition::Samples { values } => {
                if values.len() != n {
                    return Err(Error::domain(format!(
                        "initial condition has {} samples but the mesh has {n} nodes",
                        values.len()
                    )));
                }
                DVector::from_column_slice(values)
            }
        };
        if u.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::domain("initial condition must be finite and nonnegative"));
        }
        Ok(u)
    }
}

impl fmt::Display for InitialCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialCondition::Zero => f.write_str("zero"),
            InitialCondition::FirstMode { amplitude } => write!(f, "mode1:{amplitude:?}"),
            InitialCondition::Constant { value } => write!(f, "const:{value:?}"),
            InitialCondition::Samples { values } => {
                let list: Vec<String> = values.iter().map(|v| format!("{v:?}")).collect();
                write!(f, "samples:{}", list.join(","))
            }
        }
    }
}

/// The equation to solve.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub domain: Domain,
    pub operator: Operator,
    pub noise: NoiseKind,
    pub amplitude: Amplitude,
    pub drift: DriftSpec,
    pub u0: InitialCondition,
    pub convention: Convention,
}

impl ProblemSpec {
    /// Laplacian, white noise, zero data, half convention.
    pub fn new(domain: Domain, drift: DriftSpec, sigma: f64) -> Self {
        Self {
            domain,
            operator: Operator::Laplacian,
            noise: NoiseKind::White,
            amplitude: Amplitude::Constant { sigma },
            drift,
            u0: InitialCondition::Zero,
            convention: Convention::Half,
        }
    }

    pub fn with_u0(mut self, u0: InitialCondition) -> Self {
        self.u0 = u0;
        self
    }

    pub fn with_operator(mut self, operator: Operator) -> Self {
        self.operator = operator;
        self
    }

    pub fn with_noise(mut self, noise: NoiseKind) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_amplitude(mut self, amplitude: Amplitude) -> Self {
        self.amplitude = amplitude;
        self
    }

    /// Riesz parameters of a colored problem (`d = 1`).
    pub fn riesz(&self) -> Result<Option<RieszParams>> {
        match self.noise {
            NoiseKind::White => Ok(None),
            NoiseKind::Riesz { beta } => RieszParams::new(beta, 1, self.operator.order()).map(Some),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.riesz()?;
        if let Amplitude::Bounded(b) = self.amplitude {
            b.new()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemeConfig {
    pub dt_base: f64,
    pub n_modes: usize,
    /// Mesh size; `2 n_modes + 1` when absent.
    pub n_points: Option<usize>,
    /// Drift-limited step factor.
    pub theta: f64,
    /// First ladder level; `max(1, sup u0)` when absent.
    pub ladder_start: Option<f64>,
    pub ladder_max: f64,
    pub threshold: f64,
    pub horizon: f64,
    /// Spacing of the recorded series.
    pub record_interval: f64,
    pub max_steps: u64,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self {
            dt_base: 1e-3,
            n_modes: 64,
            n_points: None,
            theta: DEFAULT_THETA,
            ladder_start: None,
            ladder_max: DEFAULT_THRESHOLD,
            threshold: DEFAULT_THRESHOLD,
            horizon: 1.0,
            record_interval: 1e-2,
            max_steps: 100_000_000,
        }
    }
}

impl SchemeConfig {
    pub fn n_points(&self) -> usize {
        self.n_points.unwrap_or(2 * self.n_modes + 1)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::domain(format!("scheme: {m}")));
        if !(self.dt_base > 0.0 && self.dt_base.is_finite()) {
            return bad("dt_base must be positive");
        }
        if self.n_modes == 0 {
            return bad("n_modes must be positive");
        }
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return bad("theta must lie in (0, 1]");
        }
        if !(self.threshold > 0.0) {
            return bad("threshold must be positive");
        }
        if !(self.ladder_max > 0.0 && self.ladder_max <= self.threshold) {
            return bad("ladder_max must lie in (0, threshold]");
        }
        if let Some(n0) = self.ladder_start {
            if !(n0 > 0.0 && n0 <= self.ladder_max) {
                return bad("ladder_start must lie in (0, ladder_max]");
            }
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad("horizon must be positive");
        }
        if !(self.record_interval > 0.0) {
            return bad("record_interval must be positive");
        }
        Ok(())
    }

    pub fn control(&self) -> StepControl {
        StepControl {
            dt_base: self.dt_base,
            theta: self.theta,
            threshold: self.threshold,
        }
    }
}

/// Drift-limited step selection and the blow-up declaration shared by the
/// field, ODE and SDE integrators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepControl {
    pub dt_base: f64,
    pub theta: f64,
    pub threshold: f64,
}

impl StepControl {
    pub fn new(dt_base: f64) -> Self {
        Self {
            dt_base,
            theta: DEFAULT_THETA,
            threshold: DEFAULT_THRESHOLD,
        }
    }

    /// The threshold lowered, if needed, to the largest level where `b` is
    /// finite (`e^s` overflows near 709.8).
    pub fn effective_threshold(&self, drift: &DriftSpec) -> f64 {
        let finite = |s: f64| drift.eval(s).map(f64::is_finite).unwrap_or(false);
        if finite(self.threshold) {
            return self.threshold;
        }
        let (mut lo, mut hi) = (0.0, self.threshold);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if finite(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// `min(Δt_base, θ (M+1) / b(M+1))` for the current sup-norm `m`, with
    /// `b` frozen beyond `threshold`.
    pub fn step(&self, drift: &DriftSpec, m: f64, threshold: f64) -> f64 {
        let level = (m + 1.0).min(threshold);
        match drift.eval(level) {
            Ok(b) if b > 0.0 && b.is_finite() => self.dt_base.min(self.theta * (m + 1.0) / b),
            _ => self.dt_base,
        }
    }

    /// Status once the threshold is crossed at time `t`: `BlewUp` at
    /// `t + ∫_U^∞ ds/b(s)` when that tail converges and is below `Δt_base`.
    pub fn declare(&self, drift: &DriftSpec, level: f64, t: f64) -> Status {
        match osgood_integral(&drift.base(), level, &OsgoodOptions::default()) {
            Ok(r) => match (r.classification, r.integral_value) {
                (OsgoodClass::Converges, Some(tail)) if tail < self.dt_base => Status::BlewUp { tau_hat: t + tail },
                (OsgoodClass::Converges, Some(tail)) => Status::Indeterminate {
                    t,
                    reason: format!(
                        "threshold {level:e} reached but the remaining tail {tail:e} exceeds dt {:e}",
                        self.dt_base
                    ),
                },
                (class, _) => Status::Indeterminate {
                    t,
                    reason: format!("threshold {level:e} reached but the osgood integral {class}"),
                },
            },
            Err(e) => Status::Indeterminate {
                t,
                reason: format!("threshold {level:e} reached: {e}"),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Status {
    Survived { horizon: f64 },
    BlewUp { tau_hat: f64 },
    Indeterminate { t: f64, reason: String },
}

impl Status {
    pub fn name(&self) -> &'static str {
        match self {
            Status::Survived { .. } => "survived",
            Status::BlewUp { .. } => "blewup",
            Status::Indeterminate { .. } => "indeterminate",
        }
    }

    pub fn tau_hat(&self) -> Option<f64> {
        match self {
            Status::BlewUp { tau_hat } => Some(*tau_hat),
            _ => None,
        }
    }

    pub fn blew_up(&self) -> bool {
        matches!(self, Status::BlewUp { .. })
    }
}

/// First time the sup-norm exceeded `level`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LadderEntry {
    #[serde(rename = "N")]
    pub level: f64,
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesPoint {
    pub t: f64,
    pub sup: f64,
    pub inf: f64,
    /// First-mode mass `Y_t`.
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryResult {
    pub status: Status,
    pub ladder: Vec<LadderEntry>,
    pub series: Vec<SeriesPoint>,
    pub seed: u64,
    pub steps: u64,
}

#[derive(Serialize)]
struct TrajectoryJson<'a> {
    status: &'a str,
    tau_hat: Option<f64>,
    ladder: &'a [LadderEntry],
    seed: u64,
    config_hash: String,
}

impl TrajectoryResult {
    /// CSV with header `t,sup,inf,mass`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,sup,inf,mass\n");
        for p in &self.series {
            out.push_str(&format!("{:?},{:?},{:?},{:?}\n", p.t, p.sup, p.inf, p.mass));
        }
        out
    }

    pub fn to_json(&self, config_hash: u64) -> String {
        serde_json::to_string_pretty(&TrajectoryJson {
            status: self.status.name(),
            tau_hat: self.status.tau_hat(),
            ladder: &self.ladder,
            seed: self.seed,
            config_hash: seed::hex(config_hash),
        })
        .expect("trajectory json")
    }
}

/// `1 / ∫ φ₁`, the normalization of the first-mode mass.
pub fn first_mode_constant(basis: &SpectralBasis) -> Result<f64> {
    let integral = basis.mesh().integrate(&basis.mode(0));
    if !(integral > 0.0) {
        return Err(Error::numerical("first mode has nonpositive integral"));
    }
    Ok(1.0 / integral)
}

/// `Y = c ∫ u φ₁` with `c = 1 / ∫ φ₁`.
pub fn project_first_mode(values: &[f64], basis: &SpectralBasis) -> Result<f64> {
    let mesh = basis.mesh();
    if values.len() != mesh.n_points {
        return Err(Error::domain(format!(
            "{} values for a {}-point mesh",
            values.len(),
            mesh.n_points
        )));
    }
    let c = first_mode_constant(basis)?;
    let phi = basis.modes().column(0);
    let prod: Vec<f64> = values.iter().zip(phi.iter()).map(|(u, p)| u * p).collect();
    Ok(c * mesh.integrate(&prod))
}

enum NoiseStep {
    None,
    /// Constant σ; `exact` is the increment factor at `Δt_base` for colored noise.
    Additive {
        sigma: f64,
        colored: Option<(DMatrix<f64>, DMatrix<f64>)>,
    },
    /// `σ(u)` frozen over the step; `grid` maps standard normals to the
    /// cell-averaged noise (white when absent).
    Multiplicative {
        sigma: BoundedSigma,
        grid: Option<DMatrix<f64>>,
    },
}

/// A discretized problem ready to produce trajectories.
pub struct Simulator {
    problem: ProblemSpec,
    scheme: SchemeConfig,
    basis: SpectralBasis,
    noise: NoiseStep,
    u0: DVector<f64>,
    threshold: f64,
    mass_constant: f64,
    base_decay: Vec<f64>,
    base_gain: Vec<f64>,
}

/// Eigenbasis of the problem operator on its mesh, in the problem's convention.
pub fn problem_basis(problem: &ProblemSpec, scheme: &SchemeConfig) -> Result<SpectralBasis> {
    let mesh = Mesh::new(problem.domain, scheme.n_points())?;
    let basis = match problem.operator {
        Operator::Laplacian => laplacian_dirichlet_spectrum(&mesh, scheme.n_modes)?,
        Operator::FracLaplacian { alpha } => match SpectralCache::from_env() {
            Some(cache) => return cache.frac_spectrum(&mesh, alpha, scheme.n_modes, problem.convention),
            None => frac_dirichlet_spectrum(&mesh, alpha, scheme.n_modes)?,
        },
    };
    Ok(basis.scaled(problem.convention.factor()))
}

impl Simulator {
    pub fn new(problem: &ProblemSpec, scheme: &SchemeConfig) -> Result<Self> {
        problem.validate()?;
        scheme.validate()?;
        let basis = problem_basis(problem, scheme)?;
        let u0 = problem.u0.nodal(&basis)?;
        let riesz = problem.riesz()?;
        let noise = match problem.amplitude {
            Amplitude::Constant { sigma: 0.0 } => NoiseStep::None,
            Amplitude::Constant { sigma } => {
                let colored = match &riesz {
                    None => None,
                    Some(r) => {
                        let model = ModeNoiseModel::riesz(&basis, r)?;
                        let exact = colored_increment_factor(&basis, &model, scheme.dt_base)?;
                        Some((model.factor().clone(), exact))
                    }
                };
                NoiseStep::Additive { sigma, colored }
            }
            Amplitude::Bounded(sigma) => {
                let grid = match &riesz {
                    None => None,
                    Some(r) => Some(riesz_cov_factor(basis.mesh(), r)?.factor),
                };
                NoiseStep::Multiplicative { sigma, grid }
            }
        };
        let threshold = scheme.control().effective_threshold(&problem.drift);
        let mass_constant = first_mode_constant(&basis)?;
        let dt = scheme.dt_base;
        let base_decay = basis.eigenvalues().iter().map(|l| (-l * dt).exp()).collect();
        let base_gain = basis
            .eigenvalues()
            .iter()
            .map(|l| dt * one_minus_exp_over(l * dt))
            .collect();
        Ok(Self {
            problem: problem.clone(),
            scheme: scheme.clone(),
            basis,
            noise,
            u0,
            threshold,
            mass_constant,
            base_decay,
            base_gain,
        })
    }

    pub fn basis(&self) -> &SpectralBasis {
        &self.basis
    }

    pub fn problem(&self) -> &ProblemSpec {
        &self.problem
    }

    pub fn scheme(&self) -> &SchemeConfig {
        &self.scheme
    }

    /// Threshold after clamping to the finite range of `b`.
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Normalization `c` of the first-mode mass.
    pub fn mass_constant(&self) -> f64 {
        self.mass_constant
    }

    /// Runs one trajectory to the horizon or the threshold.
    pub fn run(&self, seed: u64) -> Result<TrajectoryResult> {
        let mut field = Field::new(self, seed);
        let mut series = vec![field.record()];
        let mut next_record = self.scheme.record_interval;
        let status = loop {
            match field.advance()? {
                Advance::Stepped { .. } => {
                    if field.t >= next_record {
                        series.push(field.record());
                        while next_record <= field.t {
                            next_record += self.scheme.record_interval;
                        }
                    }
                }
                Advance::Done(status) => break status,
            }
        };
        if series.last().map(|p| p.t) != Some(field.t) {
            series.push(field.record());
        }
        Ok(TrajectoryResult {
            status,
            ladder: field.ladder,
            series,
            seed,
            steps: field.steps,
        })
    }

    /// Runs one trajectory and returns its status with `u` at `xs` at the
    /// final time.
    pub fn final_values(&self, seed: u64, xs: &[f64]) -> Result<(Status, Vec<f64>)> {
        let mut field = Field::new(self, seed);
        let status = loop {
            if let Advance::Done(status) = field.advance()? {
                break status;
            }
        };
        let values = xs
            .iter()
            .map(|&x| {
                (0..self.basis.n_modes())
                    .map(|k| field.modal[k] * self.basis.eval(k, x))
                    .sum()
            })
            .collect();
        Ok((status, values))
    }

    /// Runs the field together with the first-mode diffusion
    /// `X_{k+1} = e^{-λ₁Δt} X_k + Δt φ(λ₁Δt) b(X_k) + c ΔW₁`, which shares
    /// the field's step sizes and mode-one noise increments `ΔW₁`.
    /// Stops when either process reaches the threshold.
    pub fn eigenmode_comparison(&self, seed: u64) -> Result<Vec<ComparisonPoint>> {
        let lambda1 = self.basis.eigenvalues()[0];
        let c = self.mass_constant;
        let drift = self.problem.drift.base();
        let mut field = Field::new(self, seed);
        let mut x = field.mass();
        let mut out = vec![ComparisonPoint {
            t: 0.0,
            field_mass: x,
            diffusion: x,
        }];
        while let Advance::Stepped { dt, mode1_noise } = field.advance()? {
            let b = drift.eval(x)?;
            x = (-lambda1 * dt).exp() * x + dt * one_minus_exp_over(lambda1 * dt) * b + c * mode1_noise;
            out.push(ComparisonPoint {
                t: field.t,
                field_mass: field.mass(),
                diffusion: x,
            });
            if !(x.abs() < self.threshold) {
                break;
            }
        }
        Ok(out)
    }
}

/// Paired values of the field's first-mode mass `Y_t` and the comparison
/// diffusion `X_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonPoint {
    pub t: f64,
    pub field_mass: f64,
    pub diffusion: f64,
}

/// Exact factor of the colored mode increment covariance over `dt`.
fn colored_increment_factor(basis: &SpectralBasis, model: &ModeNoiseModel, dt: f64) -> Result<DMatrix<f64>> {
    let lam = basis.eigenvalues();
    let q = model.covariance();
    let m = model.n_modes();
    let s = DMatrix::from_fn(m, m, |i, j| q[(i, j)] * dt * one_minus_exp_over((lam[i] + lam[j]) * dt));
    Ok(cholesky_with_jitter(&s)?.0)
}

enum Advance {
    Stepped { dt: f64, mode1_noise: f64 },
    Done(Status),
}

struct Field<'a> {
    sim: &'a Simulator,
    rng: ChaCha8Rng,
    modal: DVector<f64>,
    nodal: DVector<f64>,
    reaction: DVector<f64>,
    reaction_modal: DVector<f64>,
    noise: DVector<f64>,
    z: DVector<f64>,
    t: f64,
    steps: u64,
    level: f64,
    ladder: Vec<LadderEntry>,
}

impl<'a> Field<'a> {
    fn new(sim: &'a Simulator, seed: u64) -> Self {
        let m = sim.basis.n_modes();
        let n = sim.basis.mesh().n_points;
        let modal = sim.basis.to_modal(&sim.u0);
        let nodal = sim.basis.to_nodal(&modal);
        let sup0 = sim.u0.amax();
        let level = sim
            .scheme
            .ladder_start
            .unwrap_or_else(|| sup0.max(1.0).min(sim.scheme.ladder_max));
        Self {
            sim,
            rng: seed::rng(seed),
            modal,
            nodal,
            reaction: DVector::zeros(n),
            reaction_modal: DVector::zeros(m),
            noise: DVector::zeros(m),
            z: DVector::zeros(n.max(m)),
            t: 0.0,
            steps: 0,
            level,
            ladder: Vec::new(),
        }
    }

    fn mass(&self) -> f64 {
        self.sim.mass_constant * self.modal[0]
    }

    fn record(&self) -> SeriesPoint {
        SeriesPoint {
            t: self.t,
            sup: self.nodal.max(),
            inf: self.nodal.min(),
            mass: self.mass(),
        }
    }

    fn draw(&mut self, n: usize) {
        for i in 0..n {
            self.z[i] = self.rng.sample(StandardNormal);
        }
    }

    #[allow(clippy::needless_range_loop)]
    fn advance(&mut self) -> Result<Advance> {
        let sim = self.sim;
        let scheme = &sim.scheme;
        let drift = &sim.problem.drift;
        let sup = self.nodal.amax();
        while sup > self.level && self.level < scheme.ladder_max {
            self.ladder.push(LadderEntry {
                level: self.level,
                t: self.t,
            });
            self.level = (2.0 * self.level).min(scheme.ladder_max);
        }
        if !sup.is_finite() || sup >= sim.threshold {
            return Ok(Advance::Done(scheme.control().declare(drift, sim.threshold, self.t)));
        }
        let remaining = scheme.horizon - self.t;
        if remaining <= 1e-12 * scheme.horizon {
            return Ok(Advance::Done(Status::Survived {
                horizon: scheme.horizon,
            }));
        }
        if self.steps >= scheme.max_steps {
            return Ok(Advance::Done(Status::Indeterminate {
                t: self.t,
                reason: format!("step budget {} exhausted", scheme.max_steps),
            }));
        }
        let mut dt = scheme.control().step(drift, sup, sim.threshold.min(self.level));
        if dt >= remaining {
            dt = remaining;
        }
        let at_base = dt == scheme.dt_base;

        let level = self.level;
        for (r, u) in self.reaction.iter_mut().zip(self.nodal.iter()) {
            *r = drift.eval(u.clamp(-level, level))?;
        }
        sim.basis.to_modal_into(&self.reaction, &mut self.reaction_modal);
        self.noise_increment(dt, at_base);

        let lam = sim.basis.eigenvalues();
        for k in 0..lam.len() {
            let (decay, gain) = if at_base {
                (sim.base_decay[k], sim.base_gain[k])
            } else {
                ((-lam[k] * dt).exp(), dt * one_minus_exp_over(lam[k] * dt))
            };
            self.modal[k] = decay * self.modal[k] + gain * self.reaction_modal[k] + self.noise[k];
        }
        sim.basis.to_nodal_into(&self.modal, &mut self.nodal);
        self.t += dt;
        self.steps += 1;
        Ok(Advance::Stepped {
            dt,
            mode1_noise: self.noise[0],
        })
    }

    #[allow(clippy::needless_range_loop)]
    fn noise_increment(&mut self, dt: f64, at_base: bool) {
        let sim = self.sim;
        let lam = sim.basis.eigenvalues();
        let m = lam.len();
        match &sim.noise {
            NoiseStep::None => self.noise.fill(0.0),
            NoiseStep::Additive { sigma, colored: None } => {
                self.draw(m);
                for k in 0..m {
                    self.noise[k] = sigma * ou_step_std(lam[k], 1.0, dt) * self.z[k];
                }
            }
            NoiseStep::Additive {
                sigma,
                colored: Some((factor, exact)),
            } => {
                self.draw(m);
                let z = self.z.rows(0, m);
                if at_base {
                    self.noise.gemv(*sigma, exact, &z, 0.0);
                } else {
                    // Off the base step the correlated draw is scaled mode by mode.
                    self.noise.gemv(1.0, factor, &z, 0.0);
                    for k in 0..m {
                        self.noise[k] *= sigma * ou_step_std(lam[k], 1.0, dt);
                    }
                }
            }
            NoiseStep::Multiplicative { sigma, grid } => {
                let mesh = sim.basis.mesh();
                let n = mesh.n_points;
                self.draw(n);
                let w = match grid {
                    None => self.z.rows(0, n) / mesh.h.sqrt(),
                    Some(l) => l * self.z.rows(0, n),
                };
                for i in 0..n {
                    self.reaction[i] = sigma.eval(self.nodal[i]) * w[i];
                }
                sim.basis.to_modal_into(&self.reaction, &mut self.noise);
                for k in 0..m {
                    self.noise[k] *= ou_step_std(lam[k], 1.0, dt);
                }
            }
        }
    }
}

/// Runs one trajectory of the problem.
pub fn simulate_trajectory(problem: &ProblemSpec, scheme: &SchemeConfig, seed: u64) -> Result<TrajectoryResult> {
    Simulator::new(problem, scheme)?.run(seed)
}

/// A continuous perturbation `g`, linearly interpolated between samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbationPath {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl PerturbationPath {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() < 2 || times.len() != values.len() {
            return Err(Error::domain("perturbation needs at least two matching samples"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) || !times[0].is_finite() {
            return Err(Error::domain("perturbation times must be strictly increasing"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("perturbation values must be finite"));
        }
        Ok(Self { times, values })
    }

    /// Samples `f` on `[0, t_end]` with spacing `dt`.
    pub fn from_fn(t_end: f64, dt: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        if !(t_end > 0.0 && dt > 0.0) {
            return Err(Error::domain("perturbation grid needs t_end > 0 and dt > 0"));
        }
        let n = (t_end / dt).ceil() as usize;
        let times: Vec<f64> = (0..=n).map(|i| (i as f64 * dt).min(t_end)).collect();
        let values = times.iter().map(|&t| f(t)).collect();
        Self::new(times, values)
    }

    pub fn zero(t_end: f64) -> Result<Self> {
        Self::new(vec![0.0, t_end], vec![0.0, 0.0])
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("nonempty")
    }

    /// Linear interpolation, constant beyond the ends.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.times.len();
        if t <= self.times[0] {
            return self.values[0];
        }
        if t >= self.times[n - 1] {
            return self.values[n - 1];
        }
        let j = self.times.partition_point(|&s| s <= t) - 1;
        let (t0, t1) = (self.times[j], self.times[j + 1]);
        let w = (t - t0) / (t1 - t0);
        self.values[j] * (1.0 - w) + self.values[j + 1] * w
    }

    /// Minimum of the interpolant over `[t, t + 1]`.
    pub fn window_inf(&self, t: f64) -> Result<f64> {
        if t < self.start() || t + 1.0 > self.horizon() * (1.0 + 1e-12) {
            return Err(Error::domain(format!(
                "window [{t}, {}] not covered by the path",
                t + 1.0
            )));
        }
        let inner = self
            .times
            .iter()
            .zip(&self.values)
            .filter(|(s, _)| **s > t && **s < t + 1.0)
            .map(|(_, v)| *v);
        Ok(inner.fold(self.eval(t).min(self.eval(t + 1.0)), f64::min))
    }
}

/// `inf_{0 ≤ h ≤ 1} g(t + h)` at each probe time.
pub fn assumption_b_statistic(g: &PerturbationPath, probe_times: &[f64]) -> Result<Vec<f64>> {
    probe_times.iter().map(|&t| g.window_inf(t)).collect()
}

/// A sampled scalar path with its terminal status.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalarPath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub status: Status,
}

impl ScalarPath {
    pub fn last(&self) -> f64 {
        *self.values.last().expect("nonempty")
    }

    pub fn blowup_time(&self) -> Option<f64> {
        self.status.tau_hat()
    }

    /// Linear interpolation of the path at `t`.
    pub fn at(&self, t: f64) -> f64 {
        let j = self.times.partition_point(|&s| s <= t);
        if j == 0 {
            return self.values[0];
        }
        if j >= self.times.len() {
            return self.last();
        }
        let (t0, t1) = (self.times[j - 1], self.times[j]);
        let w = (t - t0) / (t1 - t0);
        self.values[j - 1] * (1.0 - w) + self.values[j] * w
    }
}

/// Solves `X_t = a + ∫_0^t b(X_s) ds + g(t)` up to the end of `g` by explicit
/// Euler on `V = X - g`, with the drift-limited step of [`StepControl`].
pub fn integrate_perturbed_ode(a: f64, drift: &DriftSpec, g: &PerturbationPath, dt: f64) -> Result<ScalarPath> {
    integrate_perturbed_ode_with(a, drift, g, &StepControl::new(dt))
}

pub fn integrate_perturbed_ode_with(
    a: f64,
    drift: &DriftSpec,
    g: &PerturbationPath,
    control: &StepControl,
) -> Result<ScalarPath> {
    if !(a >= 0.0) {
        return Err(Error::domain("ode initial value must be nonnegative"));
    }
    if !(control.dt_base > 0.0) {
        return Err(Error::domain("ode step must be positive"));
    }
    let threshold = control.effective_threshold(drift);
    let horizon = g.horizon();
    let mut t = g.start();
    let mut v = a;
    let mut x = v + g.eval(t);
    let mut times = vec![t];
    let mut values = vec![x];
    let status = loop {
        if !x.is_finite() || x >= threshold {
            break control.declare(drift, threshold, t);
        }
        let remaining = horizon - t;
        if remaining <= 1e-12 * horizon.abs().max(1.0) {
            break Status::Survived { horizon };
        }
        let dt = control.step(drift, x.abs(), threshold).min(remaining);
        v += dt * drift.eval(x)?;
        t += dt;
        x = v + g.eval(t);
        times.push(t);
        values.push(x);
    };
    Ok(ScalarPath { times, values, status })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum BlowupTime {
    Finite(f64),
    Diverges,
    Indeterminate,
}

/// Blow-up time `∫_a^∞ ds/b(s)` of `X' = b(X)`, `X_0 = a`.
pub fn ode_blowup_time(a: f64, drift: &DriftSpec) -> Result<BlowupTime> {
    let r = osgood_integral(drift, a, &OsgoodOptions::default())?;
    Ok(match (r.classification, r.integral_value) {
        (OsgoodClass::Converges, Some(v)) => BlowupTime::Finite(v),
        (OsgoodClass::Diverges, _) => BlowupTime::Diverges,
        _ => BlowupTime::Indeterminate,
    })
}

/// First-mode diffusion `dX = (-λ₁ X + b(X)) dt + √κ dB`.
#[derive(Debug, Clone, PartialEq)]
pub struct FellerSde {
    pub lambda1: f64,
    pub drift: DriftSpec,
    pub kappa: f64,
}

impl FellerSde {
    pub fn new(lambda1: f64, drift: DriftSpec, kappa: f64) -> Result<Self> {
        if !(lambda1 > 0.0) {
            return Err(Error::domain("lambda1 must be positive"));
        }
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::domain("kappa must be nonnegative"));
        }
        Ok(Self { lambda1, drift, kappa })
    }

    /// One exponential Euler–Maruyama step: the linear part and the noise
    /// variance are integrated exactly, the drift is frozen.
    pub fn step(&self, x: f64, dt: f64, z: f64) -> Result<f64> {
        let l = self.lambda1;
        Ok((-l * dt).exp() * x
            + dt * one_minus_exp_over(l * dt) * self.drift.eval(x)?
            + ou_step_std(l, self.kappa, dt) * z)
    }

    pub fn simulate(&self, y0: f64, control: &StepControl, horizon: f64, seed: u64) -> Result<ScalarPath> {
        if !(horizon > 0.0) {
            return Err(Error::domain("horizon must be positive"));
        }
        let threshold = control.effective_threshold(&self.drift);
        let mut rng = seed::rng(seed);
        let (mut t, mut x) = (0.0, y0);
        let mut times = vec![t];
        let mut values = vec![x];
        let status = loop {
            if !x.is_finite() || x >= threshold {
                break control.declare(&self.drift, threshold, t);
            }
            let remaining = horizon - t;
            if remaining <= 1e-12 * horizon {
                break Status::Survived { horizon };
            }
            let dt = control.step(&self.drift, x.abs(), threshold).min(remaining);
            let z = if self.kappa > 0.0 {
                rng.sample(StandardNormal)
            } else {
                0.0
            };
            x = self.step(x, dt, z)?;
            t += dt;
            times.push(t);
            values.push(x);
        };
        Ok(ScalarPath { times, values, status })
    }
}

pub fn simulate_feller_sde(
    y0: f64,
    lambda1: f64,
    drift: &DriftSpec,
    kappa: f64,
    dt: f64,
    horizon: f64,
    seed: u64,
) -> Result<ScalarPath> {
    FellerSde::new(lambda1, drift.clone(), kappa)?.simulate(y0, &StepControl::new(dt), horizon, seed)
}

/// Exponent `E(s) = (λ₁ s² - 2 B(s)) / κ` of the scale density `p'(s) = e^{E(s)}`.
fn scale_exponent(s: f64, lambda1: f64, drift: &DriftSpec, kappa: f64) -> Result<f64> {
    Ok((lambda1 * s * s - 2.0 * drift.antiderivative(s)?) / kappa)
}

/// Scale function `p(x) = ∫_0^x exp(-(2/κ) ∫_0^s (b(ξ) - λ₁ ξ) dξ) ds`.
pub fn scale_function(x: f64, lambda1: f64, drift: &DriftSpec, kappa: f64) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(Error::domain("scale function needs kappa > 0"));
    }
    if !(lambda1 > 0.0) {
        return Err(Error::domain("lambda1 must be positive"));
    }
    let density = |s: f64| {
        scale_exponent(s, lambda1, drift, kappa)
            .map(f64::exp)
            .unwrap_or(f64::NAN)
    };
    let (lo, hi, sign) = if x >= 0.0 { (0.0, x, 1.0) } else { (x, 0.0, -1.0) };
    let q = quad::integrate(density, lo, hi, 1e-14, 1e-12)?;
    Ok(sign * q.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FellerVerdict {
    Explodes,
    NoExplosion,
    Indeterminate,
}

impl fmt::Display for FellerVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FellerVerdict::Explodes => "explodes",
            FellerVerdict::NoExplosion => "no_explosion",
            FellerVerdict::Indeterminate => "indeterminate",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FellerReport {
    pub verdict: FellerVerdict,
    /// Upper cutoff of the final evaluation.
    pub cutoff: f64,
    /// Local decay exponent of the inner integrand `w` at the cutoff; NaN when
    /// the tail lies beyond the cutoff.
    pub tail_exponent: f64,
    /// `v` accumulated up to the cutoff.
    pub partial_v: f64,
}

/// Feller's test at `+∞` for [`FellerSde`]. The inner function
/// `w(y) = p'(y) ∫_0^y 2/(κ p'(z)) dz` solves `w' = E'(y) w + 2/κ` and is
/// integrated with an exponential integrator; `v(∞) = ∫ w` is finite when
/// `w` decays faster than `1/y`.
pub fn feller_explosion_test(lambda1: f64, drift: &DriftSpec, kappa: f64) -> Result<FellerReport> {
    const DELTA: f64 = 0.05;
    if !(kappa > 0.0) {
        return Err(Error::domain("feller test needs kappa > 0"));
    }
    if !(lambda1 > 0.0) {
        return Err(Error::domain("lambda1 must be positive"));
    }
    let control = StepControl {
        dt_base: 1.0,
        theta: 1.0,
        threshold: 1e12,
    };
    let cutoff = control.effective_threshold(drift).min(1e12);
    let slope = |y: f64| -> Result<f64> { Ok(2.0 / kappa * (lambda1 * y - drift.eval(y)?)) };

    // The verdict does not depend on where the inner integral starts, so
    // start past the last point where b(y) ≤ λ₁y; before it w grows like
    // e^{λ₁y²/κ} and overflows long before the tail is reached.
    let mut start = 0.0;
    let mut probe = 1e-3;
    while probe < cutoff {
        if drift.eval(probe)? <= lambda1 * probe {
            start = 2.0 * probe;
        }
        probe *= 2.0;
    }
    if start > 0.5 * cutoff {
        // b never overtakes λ₁y before the cutoff. If it still grows
        // faster than linearly there it may do so later.
        let (hi, lo) = (drift.eval(cutoff)?, drift.eval(0.5 * cutoff)?);
        let exponent = (hi / lo).ln() / 2f64.ln();
        if hi > 0.0 && lo > 0.0 && exponent > 1.0 + 1e-3 {
            return Ok(FellerReport {
                verdict: FellerVerdict::Indeterminate,
                cutoff,
                tail_exponent: f64::NAN,
                partial_v: 0.0,
            });
        }
        start = 0.0;
    }

    let mut y = start;
    let mut w = 0.0;
    let mut v = 0.0;
    let mut checkpoints: Vec<(f64, f64)> = Vec::new();
    let mut next_check = if start > 0.0 { 2.0 * start } else { 1.0 };
    while y < cutoff {
        let dy = if y < 1.0 { 1e-3 } else { y * 1e-3 }.min(cutoff - y);
        let a = slope(y + 0.5 * dy)?;
        let growth = (a * dy).exp();
        let w_new = growth * w + 2.0 / kappa * dy * one_minus_exp_over(-a * dy);
        v += 0.5 * dy * (w + w_new);
        y += dy;
        w = w_new;
        if !w.is_finite() || !v.is_finite() {
            return Ok(FellerReport {
                verdict: FellerVerdict::NoExplosion,
                cutoff: y,
                tail_exponent: f64::NEG_INFINITY,
                partial_v: v,
            });
        }
        if y >= next_check * (1.0 - 1e-12) {
            checkpoints.push((y, w));
            next_check *= 2.0;
        }
    }
    checkpoints.push((y, w));
    let n = checkpoints.len();
    if n < 2 {
        return Err(Error::numerical("feller test cutoff too small"));
    }
    let (y1, w1) = checkpoints[n - 2];
    let (y2, w2) = checkpoints[n - 1];
    let p = if w2 > 0.0 && w1 > 0.0 {
        -(w2 / w1).ln() / (y2 / y1).ln()
    } else {
        f64::INFINITY
    };
    let verdict = if p > 1.0 + DELTA {
        FellerVerdict::Explodes
    } else if p < 1.0 - DELTA {
        FellerVerdict::NoExplosion
    } else {
        FellerVerdict::Indeterminate
    };
    Ok(FellerReport {
        verdict,
        cutoff: y,
        tail_exponent: p,
        partial_v: v,
    })
}

/// The envelope `t^{hk} √(2 log log t)` extended continuously by its value at
/// `e^e` below that point; useful as a perturbation ramp.
pub fn lil_ramp(hk: f64, t: f64) -> f64 {
    let t = t.max(E.powf(E));
    t.powf(hk) * (2.0 * t.ln().ln()).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn deterministic(drift: DriftSpec, u0: InitialCondition) -> ProblemSpec {
        ProblemSpec::new(Domain::Interval01, drift, 0.0).with_u0(u0)
    }

    #[test]
    fn heat_decay_of_first_mode() {
        let p = deterministic(DriftSpec::constant(0.0), InitialCondition::FirstMode { amplitude: 1.0 });
        let s = SchemeConfig {
            n_modes: 32,
            dt_base: 1e-2,
            ..SchemeConfig::default()
        };
        let r = simulate_trajectory(&p, &s, 0).unwrap();
        assert!(matches!(r.status, Status::Survived { .. }));
        let last = r.series.last().unwrap();
        assert!((last.t - 1.0).abs() < 1e-12);
        let want = 2f64.sqrt() * (-PI * PI / 2.0).exp();
        assert!((last.sup - want).abs() < 1e-4, "{}", last.sup);
        assert!((want - 0.010_170_858_980_815).abs() < 1e-12);
    }

    fn blowup_time(dt: f64) -> f64 {
        let p = deterministic(DriftSpec::power(1.0), InitialCondition::FirstMode { amplitude: 50.0 });
        let s = SchemeConfig {
            n_modes: 32,
            dt_base: dt,
            ..SchemeConfig::default()
        };
        let r = simulate_trajectory(&p, &s, 0).unwrap();
        r.status.tau_hat().expect("blow-up")
    }

    #[test]
    fn deterministic_blowup_is_early_and_stable() {
        let coarse = blowup_time(1e-4);
        let fine = blowup_time(5e-5);
        assert!(coarse <= 0.05, "{coarse}");
        assert!(((coarse - fine) / fine).abs() < 0.1, "{coarse} vs {fine}");
    }

    #[test]
    fn ladder_is_monotone() {
        let p = deterministic(DriftSpec::power(1.0), InitialCondition::FirstMode { amplitude: 50.0 });
        let s = SchemeConfig {
            n_modes: 16,
            dt_base: 1e-4,
            ..SchemeConfig::default()
        };
        let r = simulate_trajectory(&p, &s, 0).unwrap();
        assert!(r.ladder.len() > 10);
        for w in r.ladder.windows(2) {
            assert!(w[1].level > w[0].level);
            assert!(w[1].t >= w[0].t);
        }
        assert!(r.status.tau_hat().unwrap() >= r.ladder.last().unwrap().t);
    }

    #[test]
    fn linear_drift_threshold_is_indeterminate() {
        let p = deterministic(DriftSpec::linear(60.0), InitialCondition::FirstMode { amplitude: 1.0 });
        let s = SchemeConfig {
            n_modes: 16,
            dt_base: 1e-3,
            horizon: 2.0,
            ..SchemeConfig::default()
        };
        let r = simulate_trajectory(&p, &s, 0).unwrap();
        assert!(matches!(r.status, Status::Indeterminate { .. }), "{:?}", r.status);
    }

    #[test]
    fn exponential_threshold_is_clamped() {
        let c = StepControl::new(1e-3);
        let u = c.effective_threshold(&DriftSpec::exponential());
        assert!(u > 709.0 && u < 710.0, "{u}");
        assert_eq!(c.effective_threshold(&DriftSpec::power(1.0)), 1e8);
    }

    #[test]
    fn noise_only_survives() {
        let p = ProblemSpec::new(Domain::Interval01, DriftSpec::constant(0.0), 1.0);
        let s = SchemeConfig {
            n_modes: 32,
            dt_base: 1e-2,
            horizon: 10.0,
            ..SchemeConfig::default()
        };
        let sim = Simulator::new(&p, &s).unwrap();
        for i in 0..50 {
            let r = sim.run(seed::mix(3, i)).unwrap();
            assert!(matches!(r.status, Status::Survived { horizon } if horizon == 10.0));
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let p = ProblemSpec::new(Domain::Interval01, DriftSpec::power(1.0), 2.0);
        let s = SchemeConfig {
            n_modes: 16,
            horizon: 0.5,
            ..SchemeConfig::default()
        };
        let a = simulate_trajectory(&p, &s, 9).unwrap();
        let b = simulate_trajectory(&p, &s, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_csv().lines().next(), Some("t,sup,inf,mass"));
        let json = a.to_json(7);
        let at = |k: &str| json.find(&format!("\"{k}\"")).unwrap();
        let order = ["status", "tau_hat", "ladder", "seed", "config_hash"].map(at);
        assert!(order.windows(2).all(|w| w[0] < w[1]), "{json}");
    }

    #[test]
    fn first_mode_projection() {
        let mesh = Mesh::new(Domain::Interval01, 513).unwrap();
        let basis = laplacian_dirichlet_spectrum(&mesh, 8).unwrap();
        let n = mesh.n_points;
        assert_eq!(project_first_mode(&vec![0.0; n], &basis).unwrap(), 0.0);
        let y = project_first_mode(&basis.mode(0), &basis).unwrap();
        assert!((y - PI / (2.0 * 2f64.sqrt())).abs() < 1e-5, "{y}");
        let u: Vec<f64> = mesh.nodes().iter().map(|x| x * x).collect();
        let v: Vec<f64> = mesh.nodes().iter().map(|x| (3.0 * x).cos() + 2.0).collect();
        let sum: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + b).collect();
        let lhs = project_first_mode(&sum, &basis).unwrap();
        let rhs = project_first_mode(&u, &basis).unwrap() + project_first_mode(&v, &basis).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
        let ones = vec![1.0; n];
        assert!((project_first_mode(&ones, &basis).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ode_blowup_times() {
        assert_eq!(
            ode_blowup_time(1.0, &DriftSpec::power(1.0)).unwrap(),
            BlowupTime::Finite(1.0)
        );
        assert_eq!(
            ode_blowup_time(2.0, &DriftSpec::power(1.0)).unwrap(),
            BlowupTime::Finite(0.5)
        );
        assert_eq!(
            ode_blowup_time(1.0, &DriftSpec::linear(1.0)).unwrap(),
            BlowupTime::Diverges
        );
    }

    #[test]
    fn perturbed_ode_examples() {
        let g = PerturbationPath::zero(2.0).unwrap();
        let r = integrate_perturbed_ode(1.0, &DriftSpec::power(1.0), &g, 1e-4).unwrap();
        let tau = r.blowup_time().unwrap();
        assert!((tau - 1.0).abs() < 0.01, "{tau}");

        let ramp = PerturbationPath::from_fn(3.0, 0.01, |t| t).unwrap();
        let r = integrate_perturbed_ode(0.0, &DriftSpec::constant(0.0), &ramp, 1e-3).unwrap();
        assert!(matches!(r.status, Status::Survived { .. }));
        assert!(r.times.iter().zip(&r.values).all(|(t, x)| (t - x).abs() < 1e-12));

        let g = PerturbationPath::zero(5.0).unwrap();
        let r = integrate_perturbed_ode(1.0, &DriftSpec::linear(1.0), &g, 1e-4).unwrap();
        assert!(matches!(r.status, Status::Survived { .. }));
        assert!((r.last() / 5f64.exp() - 1.0).abs() < 0.01, "{}", r.last());
    }

    #[test]
    fn feller_sde_examples() {
        let lambda1 = PI * PI / 8.0;
        let r = simulate_feller_sde(3.0, lambda1, &DriftSpec::constant(0.0), 0.0, 1e-3, 1.0, 0).unwrap();
        let want = 3.0 * (-lambda1).exp();
        assert!((r.last() / want - 1.0).abs() < 1e-4);

        let lambda1 = PI * PI / 2.0;
        let r = simulate_feller_sde(2.0 * lambda1, lambda1, &DriftSpec::power(1.0), 0.0, 1e-4, 1.0, 0).unwrap();
        let want = 2f64.ln() / lambda1;
        assert!((want - 0.140_460_985_545_365_75).abs() < 1e-15);
        let tau = r.blowup_time().unwrap();
        assert!((tau / want - 1.0).abs() < 0.02, "{tau} vs {want}");
    }

    #[test]
    fn feller_sde_stationary_variance() {
        let lambda1 = 1.5;
        let sde = FellerSde::new(lambda1, DriftSpec::constant(0.0), 1.0).unwrap();
        let c = StepControl::new(0.05);
        let n = 10_000;
        let finals: Vec<f64> = (0..n)
            .map(|i| sde.simulate(0.0, &c, 5.0, seed::mix(1, i)).unwrap().last())
            .collect();
        let var = finals.iter().map(|x| x * x).sum::<f64>() / n as f64;
        let want = 1.0 / (2.0 * lambda1);
        assert!((var - want).abs() < 4.0 * want * (2.0 / n as f64).sqrt(), "{var}");
    }

    #[test]
    fn scale_function_examples() {
        let d = DriftSpec::constant(0.0);
        assert_eq!(scale_function(0.0, 1.0, &d, 1.0).unwrap(), 0.0);
        let h = 1e-6;
        let slope = scale_function(h, 1.0, &d, 1.0).unwrap() / h;
        assert!((slope - 1.0).abs() < 1e-5);
        let p = scale_function(1.0, 1.0, &d, 1.0).unwrap();
        assert!((p - 1.462_651_745_907_181_6).abs() < 1e-10, "{p}");
        let p = scale_function(1.0, 1.0, &d, 2.0).unwrap();
        assert!((p - 1.194_957_661_910_227_6).abs() < 1e-10, "{p}");
        let a = scale_function(0.5, 1.0, &DriftSpec::power(1.0), 1.0).unwrap();
        let b = scale_function(0.7, 1.0, &DriftSpec::power(1.0), 1.0).unwrap();
        assert!(b > a && a > 0.0);
        assert!(scale_function(-0.5, 1.0, &d, 1.0).unwrap() < 0.0);
    }

    #[test]
    fn feller_verdicts() {
        let l = PI * PI / 2.0;
        let v = |d: DriftSpec| feller_explosion_test(l, &d, 1.0).unwrap().verdict;
        assert_eq!(v(DriftSpec::power(1.0)), FellerVerdict::Explodes);
        assert_eq!(v(DriftSpec::linear(1.0)), FellerVerdict::NoExplosion);
        assert_eq!(v(DriftSpec::exponential()), FellerVerdict::Explodes);
        assert_eq!(v(DriftSpec::constant(1.0)), FellerVerdict::NoExplosion);
        // s^1.01 overtakes λ₁s only near λ₁^100, past the cutoff here but
        // not for λ₁ = π²/8.
        assert_eq!(v(DriftSpec::power(0.01)), FellerVerdict::Indeterminate);
        let small = feller_explosion_test(PI * PI / 8.0, &DriftSpec::power(0.01), 1.0).unwrap();
        assert_eq!(small.verdict, FellerVerdict::Explodes);
    }

    #[test]
    fn assumption_b_examples() {
        let lin = PerturbationPath::from_fn(20.0, 0.01, |t| t).unwrap();
        let s = assumption_b_statistic(&lin, &[0.0, 5.0, 10.0]).unwrap();
        for (got, want) in s.iter().zip([0.0, 5.0, 10.0]) {
            assert!((got - want).abs() < 1e-9);
        }
        let sine = PerturbationPath::from_fn(50.0, 0.01, f64::sin).unwrap();
        let s = assumption_b_statistic(&sine, &[1.0, 7.0, 30.0]).unwrap();
        assert!(s.iter().all(|v| v.abs() <= 1.0));
        let zero = PerturbationPath::zero(10.0).unwrap();
        assert_eq!(assumption_b_statistic(&zero, &[0.0, 3.0]).unwrap(), vec![0.0, 0.0]);
        assert!(assumption_b_statistic(&zero, &[9.5]).is_err());
    }

    #[test]
    fn bounded_sigma_validation() {
        assert!(BoundedSigma::Sine { base: 1.0, amp: 1.0 }.new().is_err());
        let s = BoundedSigma::Tanh { lo: 0.5, hi: 3.0 }.new().unwrap();
        assert_eq!(s.bound(), 3.0);
        assert!(Amplitude::parse("sine:2,0.5").is_ok());
        assert_eq!(Amplitude::parse("1.5").unwrap(), Amplitude::Constant { sigma: 1.5 });
    }

    #[test]
    fn multiplicative_constant_sigma_matches_additive_law() {
        // σ ≡ 1 written as a bounded coefficient has the additive law.
        let s = SchemeConfig {
            n_modes: 16,
            dt_base: 0.05,
            horizon: 1.0,
            ..SchemeConfig::default()
        };
        let add = ProblemSpec::new(Domain::Interval01, DriftSpec::constant(0.0), 1.0);
        let mul = add
            .clone()
            .with_amplitude(Amplitude::Bounded(BoundedSigma::Tanh { lo: 1.0, hi: 1.0 }));
        let n = 4000;
        let var = |p: &ProblemSpec| {
            let sim = Simulator::new(p, &s).unwrap();
            (0..n)
                .map(|i| sim.run(seed::mix(5, i)).unwrap().series.last().unwrap().mass.powi(2))
                .sum::<f64>()
                / n as f64
        };
        let (va, vm) = (var(&add), var(&mul));
        let stderr = va * (2.0 / n as f64).sqrt();
        assert!((va - vm).abs() < 4.0 * 2f64.sqrt() * stderr, "{va} vs {vm}");
    }
}
