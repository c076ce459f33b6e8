//! Monte Carlo ensembles and the statistics used to check simulated
//! Gaussian fields and blow-up frequencies against their laws.

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::drift::{classify_osgood, DriftSpec, OsgoodClass};
use crate::error::{Error, Result};
use crate::kernels::{Domain, SpectralBasis};
use crate::noise::{psi, BifBmParams, FieldPaths, ModeNoiseModel, Paths, StochConv};
use crate::seed;
use crate::solver::{InitialCondition, ProblemSpec, SchemeConfig, Simulator, Status, TrajectoryResult};

/// Normal quantile of the two-sided 95% interval.
pub const Z95: f64 = 1.96;

/// Minimum path count for the covariance and exponent checks.
pub const MIN_PATHS: usize = 1000;

const JACKKNIFE_GROUPS: usize = 50;

/// Point estimate with a Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WilsonInterval {
    pub estimate: f64,
    pub lo: f64,
    pub hi: f64,
}

impl WilsonInterval {
    pub fn contains(&self, p: f64) -> bool {
        self.lo <= p && p <= self.hi
    }
}

/// Blow-up frequency `k / n` with its 95% Wilson interval.
pub fn blowup_probability(k: usize, n: usize) -> Result<WilsonInterval> {
    if n == 0 {
        return Err(Error::domain("blow-up probability needs at least one path"));
    }
    if k > n {
        return Err(Error::domain(format!("{k} blow-ups out of {n} paths")));
    }
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = Z95 * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    // Exact endpoints at the boundary counts.
    let lo = if k == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if k == n { 1.0 } else { (center + half).min(1.0) };
    Ok(WilsonInterval { estimate: p, lo, hi })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct StatusCounts {
    pub survived: usize,
    pub blewup: usize,
    pub indeterminate: usize,
}

impl StatusCounts {
    pub fn total(&self) -> usize {
        self.survived + self.blewup + self.indeterminate
    }

    fn add(&mut self, s: &Status) {
        match s {
            Status::Survived { .. } => self.survived += 1,
            Status::BlewUp { .. } => self.blewup += 1,
            Status::Indeterminate { .. } => self.indeterminate += 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quantiles {
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
}

/// Linear-interpolation quantile of sorted data.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let j = (i + 1).min(sorted.len() - 1);
    sorted[i] + (sorted[j] - sorted[i]) * (pos - i as f64)
}

impl Quantiles {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Some(Self {
            min: v[0],
            q25: quantile_sorted(&v, 0.25),
            median: quantile_sorted(&v, 0.5),
            q75: quantile_sorted(&v, 0.75),
            max: v[v.len() - 1],
        })
    }
}

pub fn median(values: &[f64]) -> Option<f64> {
    Quantiles::of(values).map(|q| q.median)
}

/// Canonical text of a problem and scheme, the default source of the
/// configuration hash.
pub fn describe(problem: &ProblemSpec, scheme: &SchemeConfig) -> String {
    format!(
        "domain={} operator={} noise={} sigma={} drift={} u0={} convention={} scheme={:?}",
        problem.domain,
        problem.operator,
        problem.noise,
        problem.amplitude,
        problem.drift.id(),
        problem.u0,
        problem.convention,
        scheme
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleReport {
    pub n_paths: usize,
    pub counts: StatusCounts,
    pub blowup_probability: WilsonInterval,
    /// Quantiles of `τ̂` over the paths that blew up.
    pub tau_quantiles: Option<Quantiles>,
    pub master_seed: u64,
    pub config_hash: String,
    /// FNV-1a over every path's result and series, in path order.
    pub results_hash: String,
}

impl EnsembleReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ensemble json")
    }

    /// Hash of the serialized report.
    pub fn hash(&self) -> u64 {
        seed::fnv1a(self.to_json().as_bytes())
    }
}

#[derive(Debug, Clone)]
pub struct Ensemble {
    pub report: EnsembleReport,
    pub trajectories: Vec<TrajectoryResult>,
}

/// Seed of path `i` in an ensemble.
pub fn path_seed(master_seed: u64, i: usize) -> u64 {
    seed::mix(master_seed, i as u64)
}

fn pool(parallelism: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| Error::numerical(format!("thread pool: {e}")))
}

/// Runs `n_paths` trajectories with seeds `mix(master_seed, i)` on
/// `parallelism` threads. Results do not depend on the thread count.
pub fn run_ensemble(
    problem: &ProblemSpec,
    scheme: &SchemeConfig,
    n_paths: usize,
    master_seed: u64,
    parallelism: usize,
) -> Result<Ensemble> {
    let sim = Simulator::new(problem, scheme)?;
    let config_hash = seed::hex(seed::fnv1a(describe(problem, scheme).as_bytes()));
    run_ensemble_with(&sim, n_paths, master_seed, parallelism, config_hash)
}

/// [`run_ensemble`] on a prepared simulator.
pub fn run_ensemble_with(
    sim: &Simulator,
    n_paths: usize,
    master_seed: u64,
    parallelism: usize,
    config_hash: String,
) -> Result<Ensemble> {
    if n_paths == 0 {
        return Err(Error::domain("ensemble needs at least one path"));
    }
    let results: Vec<Result<TrajectoryResult>> = pool(parallelism)?.install(|| {
        (0..n_paths)
            .into_par_iter()
            .map(|i| {
                let s = path_seed(master_seed, i);
                sim.run(s).map_err(|e| Error::Path {
                    seed: s,
                    source: Box::new(e),
                })
            })
            .collect()
    });
    let trajectories = results.into_iter().collect::<Result<Vec<_>>>()?;

    let mut counts = StatusCounts::default();
    let mut taus = Vec::new();
    let mut hash_input = Vec::new();
    for r in &trajectories {
        counts.add(&r.status);
        taus.extend(r.status.tau_hat());
        hash_input.extend_from_slice(r.to_json(0).as_bytes());
        hash_input.extend_from_slice(r.to_csv().as_bytes());
    }
    let report = EnsembleReport {
        n_paths,
        counts,
        blowup_probability: blowup_probability(counts.blewup, n_paths)?,
        tau_quantiles: Quantiles::of(&taus),
        master_seed,
        config_hash,
        results_hash: seed::hex(seed::fnv1a(&hash_input)),
    };
    Ok(Ensemble { report, trajectories })
}

/// One covariance comparison between two grid times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CovPair {
    pub t: f64,
    pub s: f64,
    pub empirical: f64,
    pub closed_form: f64,
    pub stderr: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovCheck {
    pub pairs: Vec<CovPair>,
    pub max_z: f64,
    /// Probe pairs left out because their sample variance vanished.
    pub skipped: Vec<String>,
}

#[derive(Serialize)]
struct CovReportJson<'a, P: Serialize> {
    params: P,
    grid: &'a [f64],
    empirical: Vec<f64>,
    closed_form: Vec<f64>,
    stderr: Vec<f64>,
    max_z: f64,
}

impl CovCheck {
    /// JSON with keys `params, grid, empirical, closed_form, stderr, max_z`.
    pub fn to_report_json<P: Serialize>(&self, params: P, grid: &[f64]) -> String {
        serde_json::to_string_pretty(&CovReportJson {
            params,
            grid,
            empirical: self.pairs.iter().map(|p| p.empirical).collect(),
            closed_form: self.pairs.iter().map(|p| p.closed_form).collect(),
            stderr: self.pairs.iter().map(|p| p.stderr).collect(),
            max_z: self.max_z,
        })
        .expect("covariance json")
    }
}

/// Sample covariance of paired data.
fn sample_cov(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / (n - 1.0)
}

/// Delete-a-group jackknife standard error of `stat` over `n` items.
fn jackknife<F: Fn(&[usize]) -> f64>(n: usize, stat: F) -> f64 {
    let g = JACKKNIFE_GROUPS.min(n);
    let estimates: Vec<f64> = (0..g)
        .map(|k| {
            let keep: Vec<usize> = (0..n).filter(|i| i % g != k).collect();
            stat(&keep)
        })
        .collect();
    let mean = estimates.iter().sum::<f64>() / g as f64;
    let ss = estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>();
    ((g as f64 - 1.0) / g as f64 * ss).sqrt()
}

fn require_paths(n: usize) -> Result<()> {
    if n < MIN_PATHS {
        return Err(Error::Underpowered(format!("{n} paths, at least {MIN_PATHS} needed")));
    }
    Ok(())
}

fn cov_check_from(
    columns: impl Fn(usize, usize) -> (Vec<f64>, Vec<f64>),
    times: &[f64],
    closed_form: impl Fn(f64, f64) -> f64,
    pairs: &[(usize, usize)],
) -> Result<CovCheck> {
    let mut out = Vec::new();
    let mut skipped = Vec::new();
    for &(i, j) in pairs {
        if i >= times.len() || j >= times.len() {
            return Err(Error::domain(format!("probe pair ({i}, {j}) outside the grid")));
        }
        let (x, y) = columns(i, j);
        let empirical = sample_cov(&x, &y);
        let stderr = jackknife(x.len(), |keep| {
            let xs: Vec<f64> = keep.iter().map(|&k| x[k]).collect();
            let ys: Vec<f64> = keep.iter().map(|&k| y[k]).collect();
            sample_cov(&xs, &ys)
        });
        if !(stderr > 0.0) {
            skipped.push(format!("({}, {}): zero variance", times[i], times[j]));
            continue;
        }
        let cf = closed_form(times[i], times[j]);
        out.push(CovPair {
            t: times[i],
            s: times[j],
            empirical,
            closed_form: cf,
            stderr,
            z: (empirical - cf) / stderr,
        });
    }
    let max_z = out.iter().map(|p| p.z.abs()).fold(0.0, f64::max);
    Ok(CovCheck {
        pairs: out,
        max_z,
        skipped,
    })
}

/// Compares sample covariances at the time-index pairs with `closed_form`.
pub fn empirical_cov_check(
    paths: &Paths,
    closed_form: impl Fn(f64, f64) -> f64,
    pairs: &[(usize, usize)],
) -> Result<CovCheck> {
    require_paths(paths.n_paths())?;
    cov_check_from(
        |i, j| (paths.column(i), paths.column(j)),
        &paths.times,
        closed_form,
        pairs,
    )
}

/// Independence control: pairs path `k` at `t` with path `k + 1` at `s`,
/// whose covariance is zero.
pub fn shuffled_cov_check(paths: &Paths, pairs: &[(usize, usize)]) -> Result<CovCheck> {
    require_paths(paths.n_paths())?;
    let n = paths.n_paths();
    cov_check_from(
        |i, j| {
            let x = paths.column(i);
            let y = paths.column(j);
            let shifted = (0..n).map(|k| y[(k + 1) % n]).collect();
            (x, shifted)
        },
        &paths.times,
        |_, _| 0.0,
        pairs,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Space,
    Time,
}

/// Increments `Z(base + lag) - Z(base)` over paths, one sample vector per lag.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementSamples {
    pub direction: Direction,
    pub lags: Vec<f64>,
    pub samples: Vec<Vec<f64>>,
}

impl IncrementSamples {
    /// Time increments at probe `xi` from time index `base` to every later index.
    pub fn time(field: &FieldPaths, xi: usize, base: usize) -> Result<Self> {
        if base >= field.times.len() || xi >= field.xs.len() {
            return Err(Error::domain("increment base outside the grid"));
        }
        let idx: Vec<usize> = (base + 1..field.times.len()).collect();
        Ok(Self {
            direction: Direction::Time,
            lags: idx.iter().map(|&j| field.times[j] - field.times[base]).collect(),
            samples: idx
                .iter()
                .map(|&j| {
                    (0..field.n_paths())
                        .map(|p| field.get(p, j, xi) - field.get(p, base, xi))
                        .collect()
                })
                .collect(),
        })
    }

    /// Space increments at time index `ti` from probe `base` to every later probe.
    pub fn space(field: &FieldPaths, ti: usize, base: usize) -> Result<Self> {
        if base >= field.xs.len() || ti >= field.times.len() {
            return Err(Error::domain("increment base outside the grid"));
        }
        let idx: Vec<usize> = (base + 1..field.xs.len()).collect();
        Ok(Self {
            direction: Direction::Space,
            lags: idx.iter().map(|&j| (field.xs[j] - field.xs[base]).abs()).collect(),
            samples: idx
                .iter()
                .map(|&j| {
                    (0..field.n_paths())
                        .map(|p| field.get(p, ti, j) - field.get(p, ti, base))
                        .collect()
                })
                .collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentFit {
    pub direction: Direction,
    pub p: u32,
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub lags: Vec<f64>,
    pub moments: Vec<f64>,
}

/// Least-squares slope and intercept of `y` on `x`.
fn ols(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Log-log slope of `E|ΔZ|^p` against the lag, with a jackknife stderr.
pub fn increment_exponent_fit(inc: &IncrementSamples, p: u32) -> Result<ExponentFit> {
    if p == 0 || !p.is_multiple_of(2) {
        return Err(Error::domain("moment order must be a positive even integer"));
    }
    let n = inc.samples.first().map_or(0, Vec::len);
    require_paths(n)?;
    let moment = |lag: usize, keep: &[usize]| -> f64 {
        keep.iter().map(|&k| inc.samples[lag][k].powi(p as i32)).sum::<f64>() / keep.len() as f64
    };
    let all: Vec<usize> = (0..n).collect();
    let usable: Vec<usize> = (0..inc.lags.len())
        .filter(|&l| inc.lags[l] > 0.0 && moment(l, &all) > 0.0)
        .collect();
    if usable.len() < 3 {
        return Err(Error::Underpowered(format!(
            "{} usable lags, at least 3 needed",
            usable.len()
        )));
    }
    let x: Vec<f64> = usable.iter().map(|&l| inc.lags[l].ln()).collect();
    let fit = |keep: &[usize]| {
        let y: Vec<f64> = usable.iter().map(|&l| moment(l, keep).ln()).collect();
        ols(&x, &y)
    };
    let (slope, intercept) = fit(&all);
    let stderr = jackknife(n, |keep| fit(keep).0);
    Ok(ExponentFit {
        direction: inc.direction,
        p,
        slope,
        stderr,
        intercept,
        lags: usable.iter().map(|&l| inc.lags[l]).collect(),
        moments: usable.iter().map(|&l| moment(l, &all)).collect(),
    })
}

/// `sup_{t ∈ [T/10, T]} B_t / ψ_{H,K}(t)` for one path sampled at `times`.
pub fn lil_statistic(times: &[f64], path: &[f64], params: &BifBmParams) -> Result<f64> {
    let horizon = *times.last().ok_or_else(|| Error::domain("empty path"))?;
    if times.len() != path.len() {
        return Err(Error::domain("times and path lengths differ"));
    }
    if !(horizon > std::f64::consts::E.powi(2)) {
        return Err(Error::domain("iterated-logarithm statistic needs T > e²"));
    }
    let lo = horizon / 10.0;
    times
        .iter()
        .zip(path)
        .filter(|(t, _)| **t >= lo && **t > std::f64::consts::E)
        .map(|(t, b)| b / params.psi(*t).expect("t > e"))
        .reduce(f64::max)
        .ok_or_else(|| Error::domain("no samples in [T/10, T]"))
}

/// Oscillation `max - min` over the whole space-time grid, per path.
pub fn field_oscillation(field: &FieldPaths) -> Vec<f64> {
    field
        .data
        .iter()
        .map(|d| {
            let (lo, hi) = d.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(*v), hi.max(*v))
            });
            hi - lo
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlockRatio {
    pub block: f64,
    pub psi: f64,
    pub median_ratio: f64,
}

/// Median over paths of `sup |g(t,x) - g(s,y)| / ψ(n)` over blocks
/// `[n, n+2] × domain`, sampling `time_points` times per block at probes `xs`.
#[allow(clippy::too_many_arguments)]
pub fn block_oscillation_series(
    basis: &SpectralBasis,
    model: &ModeNoiseModel,
    sigma: f64,
    hk: f64,
    blocks: &[f64],
    xs: &[f64],
    time_points: usize,
    n_paths: usize,
    seed: u64,
) -> Result<Vec<BlockRatio>> {
    if time_points < 2 {
        return Err(Error::domain("need at least two times per block"));
    }
    let sc = StochConv::new(basis, model, sigma)?;
    blocks
        .iter()
        .enumerate()
        .map(|(b, &n)| {
            let psi_n = psi(hk, n).ok_or_else(|| Error::domain(format!("block {n} must exceed e")))?;
            let grid: Vec<f64> = (0..time_points)
                .map(|k| n + 2.0 * k as f64 / (time_points - 1) as f64)
                .collect();
            let field = sc.sample(&grid, xs, n_paths, seed::mix(seed, b as u64))?;
            let ratios: Vec<f64> = field_oscillation(&field).iter().map(|o| o / psi_n).collect();
            Ok(BlockRatio {
                block: n,
                psi: psi_n,
                median_ratio: median(&ratios).expect("paths"),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Consistent,
    Inconsistent,
    Underpowered,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Consistent => "consistent",
            Verdict::Inconsistent => "inconsistent",
            Verdict::Underpowered => "underpowered",
        })
    }
}

/// Converging tails must show blow-ups, diverging tails none. A converging
/// tail without blow-ups only means the horizon was too short.
pub fn verdict(class: OsgoodClass, blowups: usize) -> Verdict {
    match (class, blowups) {
        (OsgoodClass::Converges, k) if k > 0 => Verdict::Consistent,
        (OsgoodClass::Diverges, 0) => Verdict::Consistent,
        (OsgoodClass::Diverges, _) => Verdict::Inconsistent,
        _ => Verdict::Underpowered,
    }
}

/// One cell of the dichotomy grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DichotomyCell {
    pub drift: DriftSpec,
    pub sigma: f64,
    pub domain: Domain,
    pub horizon: f64,
    pub u0: InitialCondition,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DichotomyRow {
    pub drift: String,
    pub osgood: OsgoodClass,
    pub domain: String,
    pub sigma: f64,
    pub horizon: f64,
    pub n_paths: usize,
    pub blowups: usize,
    pub indeterminate: usize,
    pub frequency: f64,
    pub lo: f64,
    pub hi: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DichotomyReport {
    pub rows: Vec<DichotomyRow>,
    pub master_seed: u64,
    pub config_hash: String,
}

impl DichotomyReport {
    pub fn has_inconsistent(&self) -> bool {
        self.rows.iter().any(|r| r.verdict == Verdict::Inconsistent)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("dichotomy json")
    }

    /// CSV with header `drift,sigma,domain,horizon,frequency,lo,hi,verdict`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("drift,sigma,domain,horizon,frequency,lo,hi,verdict\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:?},{},{:?},{:?},{:?},{:?},{}\n",
                r.drift, r.sigma, r.domain, r.horizon, r.frequency, r.lo, r.hi, r.verdict
            ));
        }
        out
    }
}

/// Runs an ensemble per cell (white noise, Laplacian) and compares the
/// blow-up frequency with the Osgood classification of the drift.
pub fn dichotomy_experiment(
    cells: &[DichotomyCell],
    scheme: &SchemeConfig,
    n_paths: usize,
    master_seed: u64,
    parallelism: usize,
) -> Result<DichotomyReport> {
    let mut rows = Vec::with_capacity(cells.len());
    let mut described = String::new();
    for (i, cell) in cells.iter().enumerate() {
        let problem = ProblemSpec::new(cell.domain, cell.drift.clone(), cell.sigma).with_u0(cell.u0.clone());
        let s = SchemeConfig {
            horizon: cell.horizon,
            ..scheme.clone()
        };
        described.push_str(&describe(&problem, &s));
        described.push('\n');
        let sim = Simulator::new(&problem, &s)?;
        let ens = run_ensemble_with(
            &sim,
            n_paths,
            seed::mix(master_seed, i as u64),
            parallelism,
            String::new(),
        )?;
        let class = classify_osgood(&cell.drift);
        let c = ens.report.counts;
        let w = ens.report.blowup_probability;
        rows.push(DichotomyRow {
            drift: cell.drift.id(),
            osgood: class,
            domain: cell.domain.to_string(),
            sigma: cell.sigma,
            horizon: cell.horizon,
            n_paths,
            blowups: c.blewup,
            indeterminate: c.indeterminate,
            frequency: w.estimate,
            lo: w.lo,
            hi: w.hi,
            verdict: verdict(class, c.blewup),
        });
    }
    Ok(DichotomyReport {
        rows,
        master_seed,
        config_hash: seed::hex(seed::fnv1a(described.as_bytes())),
    })
}

/// Simulated white-noise convolution on `[0, 1]` at `x = ½` against its
/// mode series, plus the stationary variance `¼`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WhiteVerification {
    pub n_modes: usize,
    pub n_paths: usize,
    pub covariance: CovCheck,
    pub stationary_time: f64,
    pub stationary_variance: f64,
    pub stationary_stderr: f64,
    /// `(variance - ¼) / stderr`.
    pub stationary_z: f64,
}

pub fn verify_white(n_modes: usize, n_paths: usize, seed: u64) -> Result<WhiteVerification> {
    use crate::kernels::{laplacian_dirichlet_spectrum, Mesh};
    let mesh = Mesh::new(Domain::Interval01, 2 * n_modes + 1)?;
    let basis = laplacian_dirichlet_spectrum(&mesh, n_modes)?;
    let model = ModeNoiseModel::white(n_modes);
    let sc = StochConv::new(&basis, &model, 1.0)?;
    let stationary_time = 50.0;
    let times = [1.0, 2.0, 4.0, stationary_time];
    let field = sc.sample(&times, &[0.5], n_paths, seed)?;
    let paths = field.at_probe(0);
    let covariance = empirical_cov_check(
        &paths,
        |t, s| sc.covariance(0.5, 0.5, t, s),
        &[(0, 0), (2, 0), (1, 1), (3, 3)],
    )?;
    let last = paths.column(3);
    let stationary_variance = sample_cov(&last, &last);
    let stationary_stderr = jackknife(last.len(), |keep| {
        let v: Vec<f64> = keep.iter().map(|&k| last[k]).collect();
        sample_cov(&v, &v)
    });
    Ok(WhiteVerification {
        n_modes,
        n_paths,
        covariance,
        stationary_time,
        stationary_variance,
        stationary_stderr,
        stationary_z: (stationary_variance - 0.25) / stationary_stderr,
    })
}

/// Sampled bifractional Brownian motion on `k/grid_size`, `k = 1..=grid_size`,
/// against its covariance at six probe pairs.
pub fn verify_bifbm(params: &BifBmParams, grid_size: usize, n_paths: usize, seed: u64) -> Result<CovCheck> {
    use crate::noise::{bifbm_cov, sample_bifbm};
    if grid_size < 4 {
        return Err(Error::domain("bifBm grid needs at least 4 points"));
    }
    let grid: Vec<f64> = (1..=grid_size).map(|k| k as f64 / grid_size as f64).collect();
    let paths = sample_bifbm(params, &grid, n_paths, seed)?;
    let (q1, q2, q3, last) = (
        grid_size / 4 - 1,
        grid_size / 2 - 1,
        3 * grid_size / 4 - 1,
        grid_size - 1,
    );
    let pairs = [(last, last), (last, q2), (q2, q2), (q3, q1), (q1, q1), (last, 0)];
    empirical_cov_check(&paths, |t, s| bifbm_cov(params, t, s), &pairs)
}

/// Shape checks for the Riesz-colored convolution under the fractional
/// operator on a truncated line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColoredVerification {
    pub alpha: f64,
    pub beta: f64,
    pub half_width: f64,
    pub n_modes: usize,
    pub n_paths: usize,
    /// Constant fitted from the variance at `t = 1`.
    pub c_const: f64,
    /// `Var g(2) / Var g(1)`.
    pub ratio: f64,
    pub ratio_stderr: f64,
    /// `2^{1-β/α}`.
    pub ratio_target: f64,
    pub slope: ExponentFit,
    /// `1 - β/α`.
    pub slope_target: f64,
}

pub fn verify_colored(
    alpha: f64,
    beta: f64,
    half_width: f64,
    n_modes: usize,
    n_paths: usize,
    seed: u64,
) -> Result<ColoredVerification> {
    use crate::kernels::{frac_dirichlet_spectrum, Mesh, SpectralCache};
    use crate::noise::RieszParams;
    let r = RieszParams::new(beta, 1, alpha)?;
    let mesh = Mesh::new(Domain::TruncatedLine { half_width }, 2 * n_modes + 1)?;
    let basis = match SpectralCache::from_env() {
        Some(cache) => cache.frac_spectrum(&mesh, alpha, n_modes, crate::kernels::Convention::Half)?,
        None => frac_dirichlet_spectrum(&mesh, alpha, n_modes)?,
    };
    let model = ModeNoiseModel::riesz(&basis, &r)?;
    let sc = StochConv::new(&basis, &model, 1.0)?;
    let times = [1.0, 1.05, 1.1, 1.2, 1.4, 1.8, 2.0, 2.6];
    let field = sc.sample(&times, &[0.0], n_paths, seed)?;
    let paths = field.at_probe(0);
    let (v1, v2) = (paths.column(0), paths.column(6));
    let ratio_of = |keep: &[usize]| {
        let a: Vec<f64> = keep.iter().map(|&k| v1[k]).collect();
        let b: Vec<f64> = keep.iter().map(|&k| v2[k]).collect();
        sample_cov(&b, &b) / sample_cov(&a, &a)
    };
    let all: Vec<usize> = (0..n_paths).collect();
    let e = r.exponent();
    let var1 = sample_cov(&v1, &v1);
    let slope = increment_exponent_fit(&IncrementSamples::time(&field, 0, 0)?, 2)?;
    Ok(ColoredVerification {
        alpha,
        beta,
        half_width,
        n_modes,
        n_paths,
        c_const: var1 / 2f64.powf(e),
        ratio: ratio_of(&all),
        ratio_stderr: jackknife(n_paths, ratio_of),
        ratio_target: 2f64.powf(e),
        slope,
        slope_target: e,
    })
}
