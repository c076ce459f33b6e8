//! Gaussian inputs: bifractional Brownian motion, Riesz-colored spatial
//! noise, and exact spectral simulation of the stochastic convolution
//!
//! ```text
//! g(t, x) = σ ∫_0^t ∫ p(t - s, x, y) W(dy ds) = σ Σ_n φ_n(x) g_n(t)
//! ```
//!
//! where each mode `g_n` is an Ornstein–Uhlenbeck process with rate `λ_n`
//! and the mode forcings have covariance `Q_nm = ∫∫ φ_n(y) φ_m(z) f(y - z)`.

use std::collections::HashMap;
use std::f64::consts::{E, PI};

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::{Mesh, SpectralBasis};
use crate::seed;

/// Parameters of `B^{H,K}`, scaled by `scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BifBmParams {
    pub h: f64,
    pub k: f64,
    pub scale: f64,
}

impl BifBmParams {
    pub fn new(h: f64, k: f64, scale: f64) -> Result<Self> {
        if !(h > 0.0 && h < 1.0) {
            return Err(Error::domain("bifBm: H must lie in (0, 1)"));
        }
        if !(k > 0.0 && k <= 1.0) {
            return Err(Error::domain("bifBm: K must lie in (0, 1]"));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::domain("bifBm: scale must be positive"));
        }
        Ok(Self { h, k, scale })
    }

    pub fn hk(&self) -> f64 {
        self.h * self.k
    }

    /// Iterated-logarithm envelope `t^{HK} √(2 log log t)`, defined for `t > e`.
    pub fn psi(&self, t: f64) -> Option<f64> {
        psi(self.hk(), t)
    }
}

/// `t^{hk} √(2 log log t)` for `t > e`.
pub fn psi(hk: f64, t: f64) -> Option<f64> {
    (t > E).then(|| t.powf(hk) * (2.0 * t.ln().ln()).sqrt())
}

/// `scale² 2^{-K} ((t^{2H} + s^{2H})^K - |t - s|^{2HK})`.
pub fn bifbm_cov(p: &BifBmParams, t: f64, s: f64) -> f64 {
    let two_h = 2.0 * p.h;
    let sum = (t.powf(two_h) + s.powf(two_h)).powf(p.k);
    let diff = (t - s).abs().powf(two_h * p.k);
    p.scale * p.scale * 2f64.powf(-p.k) * (sum - diff)
}

/// Sample paths on a common time grid, `values[path][time]`.
#[derive(Debug, Clone, Serialize)]
pub struct Paths {
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl Paths {
    pub fn n_paths(&self) -> usize {
        self.values.len()
    }

    /// Values of every path at time index `i`.
    pub fn column(&self, i: usize) -> Vec<f64> {
        self.values.iter().map(|p| p[i]).collect()
    }

    /// CSV with header `t,x,value,path_id`; `x` is left empty for processes
    /// without a spatial argument.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x,value,path_id\n");
        for (id, path) in self.values.iter().enumerate() {
            for (t, v) in self.times.iter().zip(path) {
                out.push_str(&format!("{t:?},,{v:?},{id}\n"));
            }
        }
        out
    }
}

/// Cholesky factor of `m`, retrying with `1e-12 trace · 2^k` added to the
/// diagonal for `k = 0..=10`. Returns the factor and the jitter used.
pub fn cholesky_with_jitter(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    if let Some(c) = Cholesky::new(m.clone()) {
        return Ok((c.l(), 0.0));
    }
    let base = 1e-12 * m.trace().abs().max(f64::MIN_POSITIVE);
    for k in 0..=10 {
        let jitter = base * f64::from(1u32 << k);
        let mut shifted = m.clone();
        for i in 0..m.nrows() {
            shifted[(i, i)] += jitter;
        }
        if let Some(c) = Cholesky::new(shifted) {
            return Ok((c.l(), jitter));
        }
    }
    Err(Error::numerical(format!(
        "Cholesky failed for a {}x{} matrix after maximal jitter",
        m.nrows(),
        m.ncols()
    )))
}

fn normals<R: Rng>(rng: &mut R, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

/// Exact Gaussian sampling of `B^{H,K}` on `grid` through a Cholesky factor
/// of the covariance matrix. Grid points at `t = 0` are pinned to zero.
/// Path `i` uses the generator seeded with `mix(seed, i)`.
pub fn sample_bifbm(p: &BifBmParams, grid: &[f64], n_paths: usize, seed: u64) -> Result<Paths> {
    if grid.iter().any(|t| !(*t >= 0.0)) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain("bifBm grid must be ascending and nonnegative"));
    }
    let live: Vec<usize> = (0..grid.len()).filter(|&i| grid[i] > 0.0).collect();
    let cov = DMatrix::from_fn(live.len(), live.len(), |i, j| {
        bifbm_cov(p, grid[live[i]], grid[live[j]])
    });
    let (l, _) = cholesky_with_jitter(&cov)?;
    let values = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed::rng(seed::mix(seed, i as u64));
            let z = normals(&mut rng, live.len());
            let x = &l * z;
            let mut path = vec![0.0; grid.len()];
            for (j, &idx) in live.iter().enumerate() {
                path[idx] = x[j];
            }
            path
        })
        .collect();
    Ok(Paths {
        times: grid.to_vec(),
        values,
    })
}

/// Covariance in time of the whole-line stochastic convolution driven by
/// space-time white noise: `(√(t+s) - √|t-s|) / √(2π)`.
pub fn stoch_conv_cov_white(t: f64, s: f64) -> f64 {
    ((t + s).sqrt() - (t - s).abs().sqrt()) / (2.0 * PI).sqrt()
}

/// The bifBm (`H = K = ½`) that [`stoch_conv_cov_white`] equals.
pub fn white_conv_as_bifbm() -> BifBmParams {
    BifBmParams::new(0.5, 0.5, PI.powf(-0.25)).unwrap()
}

/// Riesz kernel `f(x) = |x|^{-β}` in dimension `d` for a fractional
/// operator of order `α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RieszParams {
    pub beta: f64,
    pub d: usize,
    pub alpha: f64,
}

impl RieszParams {
    pub fn new(beta: f64, d: usize, alpha: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::domain("riesz: dimension must be positive"));
        }
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::domain("riesz: alpha must lie in (0, 2]"));
        }
        if !(beta < alpha) {
            return Err(Error::domain("riesz: beta must be < alpha"));
        }
        if !(beta > 0.0 && beta < d as f64) {
            return Err(Error::domain("riesz: beta must lie in (0, d)"));
        }
        Ok(Self { beta, d, alpha })
    }

    /// Time-covariance exponent `1 - β/α`.
    pub fn exponent(&self) -> f64 {
        1.0 - self.beta / self.alpha
    }

    /// `(H, K) = ((α - β)/2, 1/α)`.
    pub fn implied_bifbm(&self) -> (f64, f64) {
        (0.5 * (self.alpha - self.beta), 1.0 / self.alpha)
    }
}

/// `c ((t+s)^{1-β/α} - |t-s|^{1-β/α})`.
pub fn stoch_conv_cov_colored(r: &RieszParams, t: f64, s: f64, c_const: f64) -> f64 {
    let e = r.exponent();
    c_const * ((t + s).powf(e) - (t - s).abs().powf(e))
}

/// Cell-averaged Riesz covariance on a mesh and its lower factor.
#[derive(Debug, Clone)]
pub struct GridCovariance {
    pub matrix: DMatrix<f64>,
    pub factor: DMatrix<f64>,
    pub jitter: f64,
}

/// Riesz covariance of cell-averaged noise: the diagonal is the exact cell
/// average `2 h^{-β} / ((1-β)(2-β))`, off-diagonal entries are `|x_i - x_j|^{-β}`.
pub fn riesz_grid_matrix(mesh: &Mesh, beta: f64) -> DMatrix<f64> {
    let h = mesh.h;
    let diag = 2.0 * h.powf(-beta) / ((1.0 - beta) * (2.0 - beta));
    DMatrix::from_fn(mesh.n_points, mesh.n_points, |i, j| {
        if i == j {
            diag
        } else {
            (i.abs_diff(j) as f64 * h).powf(-beta)
        }
    })
}

pub fn riesz_cov_factor(mesh: &Mesh, r: &RieszParams) -> Result<GridCovariance> {
    if r.d != 1 {
        return Err(Error::domain("colored field sampling is only available for d = 1"));
    }
    if !(r.beta < 1.0) {
        return Err(Error::domain("riesz: beta must be < 1 in d = 1"));
    }
    let matrix = riesz_grid_matrix(mesh, r.beta);
    let (factor, jitter) = cholesky_with_jitter(&matrix)?;
    Ok(GridCovariance { matrix, factor, jitter })
}

/// Covariance of the mode forcings `F(φ_n)` and its lower factor.
#[derive(Debug, Clone)]
pub struct ModeNoiseModel {
    covariance: DMatrix<f64>,
    factor: DMatrix<f64>,
    white: bool,
}

impl ModeNoiseModel {
    /// Space-time white noise: independent unit-rate mode forcings.
    pub fn white(n_modes: usize) -> Self {
        Self {
            covariance: DMatrix::identity(n_modes, n_modes),
            factor: DMatrix::identity(n_modes, n_modes),
            white: true,
        }
    }

    /// Riesz noise projected on the basis: `Q = h² Φᵀ C Φ`.
    pub fn riesz(basis: &SpectralBasis, r: &RieszParams) -> Result<Self> {
        let grid = riesz_cov_factor(basis.mesh(), r)?;
        let h = basis.mesh().h;
        let phi = basis.modes();
        let mut q = phi.transpose() * (&grid.matrix * phi) * (h * h);
        q = (&q + q.transpose()) * 0.5;
        let (factor, _) = cholesky_with_jitter(&q)?;
        Ok(Self {
            covariance: q,
            factor,
            white: false,
        })
    }

    pub fn is_white(&self) -> bool {
        self.white
    }

    pub fn n_modes(&self) -> usize {
        self.covariance.nrows()
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn factor(&self) -> &DMatrix<f64> {
        &self.factor
    }

    /// `max |L Lᵀ - Q|`.
    pub fn factor_residual(&self) -> f64 {
        (&self.factor * self.factor.transpose() - &self.covariance).amax()
    }
}

/// One exact step of `dX = -λ X dt + √q dβ`:
/// `e^{-λΔt} x + z √(q (1 - e^{-2λΔt}) / (2λ))`.
pub fn ou_mode_step(x: f64, lambda: f64, q: f64, dt: f64, z: f64) -> f64 {
    (-lambda * dt).exp() * x + z * ou_step_std(lambda, q, dt)
}

/// Standard deviation of the exact OU increment over `dt`.
pub fn ou_step_std(lambda: f64, q: f64, dt: f64) -> f64 {
    (q * -(-2.0 * lambda * dt).exp_m1() / (2.0 * lambda)).sqrt()
}

/// `(1 - e^{-x}) / x`, stable at small `x`.
pub(crate) fn one_minus_exp_over(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0 - 0.5 * x
    } else {
        -(-x).exp_m1() / x
    }
}

/// Field values `g(t, x)` at probe points, `data[path][time * n_x + j]`.
#[derive(Debug, Clone, Serialize)]
pub struct FieldPaths {
    pub times: Vec<f64>,
    pub xs: Vec<f64>,
    pub data: Vec<Vec<f64>>,
}

impl FieldPaths {
    pub fn n_paths(&self) -> usize {
        self.data.len()
    }

    pub fn get(&self, path: usize, ti: usize, xi: usize) -> f64 {
        self.data[path][ti * self.xs.len() + xi]
    }

    /// Time series of one probe as [`Paths`].
    pub fn at_probe(&self, xi: usize) -> Paths {
        Paths {
            times: self.times.clone(),
            values: (0..self.n_paths())
                .map(|p| (0..self.times.len()).map(|t| self.get(p, t, xi)).collect())
                .collect(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x,value,path_id\n");
        for p in 0..self.n_paths() {
            for (ti, t) in self.times.iter().enumerate() {
                for (xi, x) in self.xs.iter().enumerate() {
                    out.push_str(&format!("{t:?},{x:?},{:?},{p}\n", self.get(p, ti, xi)));
                }
            }
        }
        out
    }
}

/// Law of the spectral stochastic convolution on a basis.
#[derive(Debug, Clone)]
pub struct StochConv<'a> {
    basis: &'a SpectralBasis,
    model: &'a ModeNoiseModel,
    sigma: f64,
}

impl<'a> StochConv<'a> {
    pub fn new(basis: &'a SpectralBasis, model: &'a ModeNoiseModel, sigma: f64) -> Result<Self> {
        if model.n_modes() > basis.n_modes() {
            return Err(Error::domain(format!(
                "noise model has {} modes but the basis only {}",
                model.n_modes(),
                basis.n_modes()
            )));
        }
        if !(sigma >= 0.0) {
            return Err(Error::domain("sigma must be nonnegative"));
        }
        Ok(Self { basis, model, sigma })
    }

    fn lambdas(&self) -> &[f64] {
        &self.basis.eigenvalues()[..self.model.n_modes()]
    }

    /// `Cov(g_n(t+Δ) - e^{-λ_n Δ} g_n(t), same for m) = Q_nm (1 - e^{-(λ_n+λ_m)Δ}) / (λ_n+λ_m)`.
    fn increment_covariance(&self, dt: f64) -> DMatrix<f64> {
        let lam = self.lambdas();
        let q = self.model.covariance();
        DMatrix::from_fn(lam.len(), lam.len(), |n, m| {
            let s = lam[n] + lam[m];
            q[(n, m)] * dt * one_minus_exp_over(s * dt)
        })
    }

    /// Closed-form `Cov(g(t, x), g(s, y))` from the mode series.
    pub fn covariance(&self, x: f64, y: f64, t: f64, s: f64) -> f64 {
        let (t, s, x, y) = if t >= s { (t, s, x, y) } else { (s, t, y, x) };
        let lam = self.lambdas();
        let q = self.model.covariance();
        let m = lam.len();
        let px: Vec<f64> = (0..m).map(|n| self.basis.eval(n, x)).collect();
        let py: Vec<f64> = (0..m).map(|n| self.basis.eval(n, y)).collect();
        let mut acc = 0.0;
        for n in 0..m {
            let decay = (-lam[n] * (t - s)).exp();
            let range: Box<dyn Iterator<Item = usize>> = if self.model.is_white() {
                Box::new(std::iter::once(n))
            } else {
                Box::new(0..m)
            };
            for k in range {
                let sum = lam[n] + lam[k];
                acc += px[n] * py[k] * decay * q[(n, k)] * s * one_minus_exp_over(sum * s);
            }
        }
        self.sigma * self.sigma * acc
    }

    /// Draws `n_paths` fields at `time_grid` (ascending, nonnegative) and the
    /// probe points `xs`. Transitions between grid times are exact in law.
    pub fn sample(&self, time_grid: &[f64], xs: &[f64], n_paths: usize, seed: u64) -> Result<FieldPaths> {
        if time_grid.iter().any(|t| !(*t >= 0.0)) || time_grid.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::domain("time grid must be ascending and nonnegative"));
        }
        let m = self.model.n_modes();
        let lam = self.lambdas().to_vec();
        let probe = DMatrix::from_fn(xs.len(), m, |j, n| self.sigma * self.basis.eval(n, xs[j]));

        // One transition factor per distinct step length.
        let mut steps: Vec<f64> = Vec::with_capacity(time_grid.len());
        let mut prev = 0.0;
        for &t in time_grid {
            steps.push(t - prev);
            prev = t;
        }
        let mut factors: HashMap<u64, DMatrix<f64>> = HashMap::new();
        if !self.model.is_white() {
            for &dt in &steps {
                if dt > 0.0 && !factors.contains_key(&dt.to_bits()) {
                    let (l, _) = cholesky_with_jitter(&self.increment_covariance(dt))?;
                    factors.insert(dt.to_bits(), l);
                }
            }
        }

        let n_x = xs.len();
        let data = (0..n_paths)
            .into_par_iter()
            .map(|i| {
                let mut rng = seed::rng(seed::mix(seed, i as u64));
                let mut modes = DVector::<f64>::zeros(m);
                let mut out = Vec::with_capacity(time_grid.len() * n_x);
                for &dt in &steps {
                    if dt > 0.0 {
                        let z = normals(&mut rng, m);
                        if self.model.is_white() {
                            for n in 0..m {
                                modes[n] = ou_mode_step(modes[n], lam[n], 1.0, dt, z[n]);
                            }
                        } else {
                            for n in 0..m {
                                modes[n] *= (-lam[n] * dt).exp();
                            }
                            modes += &factors[&dt.to_bits()] * z;
                        }
                    }
                    let vals = &probe * &modes;
                    out.extend(vals.iter());
                }
                out
            })
            .collect();
        Ok(FieldPaths {
            times: time_grid.to_vec(),
            xs: xs.to_vec(),
            data,
        })
    }
}

/// Samples `g(t, x) = σ Σ_n φ_n(x) g_n(t)` at the given times and probes.
pub fn assemble_stoch_conv(
    basis: &SpectralBasis,
    model: &ModeNoiseModel,
    sigma: f64,
    time_grid: &[f64],
    xs: &[f64],
    n_paths: usize,
    seed: u64,
) -> Result<FieldPaths> {
    StochConv::new(basis, model, sigma)?.sample(time_grid, xs, n_paths, seed)
}
