//! Heat kernels and Dirichlet spectra.
//!
//! Every kernel here is the transition density of the `½Δ` (or
//! `½(-Δ)^{α/2}`) semigroup: `G(t,x,y) = (2πt)^{-1/2} exp(-(x-y)²/(2t))` and
//! `λ_n = n²π²/2` on `[0, 1]`. [`Convention::Full`] doubles every eigenvalue
//! for users who want the literal `Δ`.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad;

/// Below this time the Dirichlet kernel on `[0,1]` is summed by images.
pub const IMAGE_CROSSOVER: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    /// `(0, 1)`.
    Interval01,
    /// `(-L, L)`, a stand-in for the whole line.
    TruncatedLine { half_width: f64 },
    /// `(-1, 1)`.
    Ball1d,
}

/// Half width used for `line` without an explicit value.
pub const DEFAULT_HALF_WIDTH: f64 = 16.0;

impl Domain {
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            Domain::Interval01 => (0.0, 1.0),
            Domain::TruncatedLine { half_width } => (-half_width, half_width),
            Domain::Ball1d => (-1.0, 1.0),
        }
    }

    pub fn length(&self) -> f64 {
        let (a, b) = self.bounds();
        b - a
    }

    /// Parses `interval01`, `ball`, `line` or `line:<L>`.
    pub fn parse(text: &str) -> Result<Self> {
        match text.trim() {
            "interval01" => Ok(Domain::Interval01),
            "line" => Ok(Domain::TruncatedLine {
                half_width: DEFAULT_HALF_WIDTH,
            }),
            "ball" | "ball1d" => Ok(Domain::Ball1d),
            s => match s.strip_prefix("line:") {
                Some(l) => {
                    let half_width: f64 = l.parse().map_err(|_| Error::domain(format!("bad half width {l:?}")))?;
                    if !(half_width > 0.0) {
                        return Err(Error::domain("line half width must be positive"));
                    }
                    Ok(Domain::TruncatedLine { half_width })
                }
                None => Err(Error::domain(format!("unknown domain {s:?}"))),
            },
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::Interval01 => f.write_str("interval01"),
            Domain::Ball1d => f.write_str("ball"),
            Domain::TruncatedLine { half_width } => write!(f, "line:{half_width:?}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    /// Generator `½Δ`.
    #[default]
    Half,
    /// Generator `Δ`.
    Full,
}

impl Convention {
    pub fn factor(self) -> f64 {
        match self {
            Convention::Half => 1.0,
            Convention::Full => 2.0,
        }
    }
}

impl fmt::Display for Convention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Convention::Half => "half",
            Convention::Full => "full",
        })
    }
}

/// Uniform grid of interior nodes; the two boundary points carry the
/// Dirichlet value zero and are not stored.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mesh {
    pub domain: Domain,
    pub n_points: usize,
    pub h: f64,
}

impl Mesh {
    pub fn new(domain: Domain, n_points: usize) -> Result<Self> {
        if n_points < 8 {
            return Err(Error::domain("mesh needs at least 8 interior points"));
        }
        Ok(Self {
            domain,
            n_points,
            h: domain.length() / (n_points + 1) as f64,
        })
    }

    pub fn node(&self, i: usize) -> f64 {
        self.domain.bounds().0 + (i + 1) as f64 * self.h
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.node(i)).collect()
    }

    /// Index of the node closest to `x`.
    pub fn nearest(&self, x: f64) -> usize {
        let i = ((x - self.domain.bounds().0) / self.h).round() as isize - 1;
        i.clamp(0, self.n_points as isize - 1) as usize
    }

    /// Trapezoid rule with zero boundary values.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.h * values.iter().sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisSource {
    AnalyticInterval,
    NumericalFractional { alpha: f64 },
}

/// Dirichlet eigenpairs sampled on a mesh, orthonormal under the mesh
/// quadrature.
#[derive(Debug, Clone)]
pub struct SpectralBasis {
    mesh: Mesh,
    eigenvalues: Vec<f64>,
    /// `n_points × n_modes`, column `k` holds `φ_{k+1}` at the nodes.
    modes: DMatrix<f64>,
    /// `h Φᵀ`, so that `to_modal(u) = weighted · u`.
    weighted: DMatrix<f64>,
    source: BasisSource,
    orthonormality_error: f64,
}

impl SpectralBasis {
    fn from_parts(mesh: Mesh, eigenvalues: Vec<f64>, modes: DMatrix<f64>, source: BasisSource) -> Self {
        let weighted = modes.transpose() * mesh.h;
        let gram = &weighted * &modes;
        let m = eigenvalues.len();
        let orthonormality_error = (gram - DMatrix::<f64>::identity(m, m)).amax();
        Self {
            mesh,
            eigenvalues,
            modes,
            weighted,
            source,
            orthonormality_error,
        }
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn n_modes(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn source(&self) -> BasisSource {
        self.source
    }

    pub fn orthonormality_error(&self) -> f64 {
        self.orthonormality_error
    }

    pub fn modes(&self) -> &DMatrix<f64> {
        &self.modes
    }

    /// Samples of mode `k` (zero based) at the mesh nodes.
    pub fn mode(&self, k: usize) -> Vec<f64> {
        self.modes.column(k).iter().copied().collect()
    }

    /// `φ_{k+1}(x)`; exact for analytic bases, linear interpolation between
    /// nodes (with zero boundary values) otherwise.
    pub fn eval(&self, k: usize, x: f64) -> f64 {
        let (a, b) = self.mesh.domain.bounds();
        if x <= a || x >= b {
            return 0.0;
        }
        match self.source {
            BasisSource::AnalyticInterval => {
                let len = b - a;
                (2.0 / len).sqrt() * ((k + 1) as f64 * PI * (x - a) / len).sin()
            }
            BasisSource::NumericalFractional { .. } => {
                let s = (x - a) / self.mesh.h;
                let j = s.floor() as usize;
                let frac = s - j as f64;
                let at = |j: usize| {
                    if j == 0 || j > self.mesh.n_points {
                        0.0
                    } else {
                        self.modes[(j - 1, k)]
                    }
                };
                at(j) * (1.0 - frac) + at(j + 1) * frac
            }
        }
    }

    /// Mode coefficients `c_k = h Σ_i u_i φ_k(x_i)`.
    pub fn to_modal(&self, nodal: &DVector<f64>) -> DVector<f64> {
        &self.weighted * nodal
    }

    pub fn to_modal_into(&self, nodal: &DVector<f64>, out: &mut DVector<f64>) {
        out.gemv(1.0, &self.weighted, nodal, 0.0);
    }

    /// Nodal values `u_i = Σ_k c_k φ_k(x_i)`.
    pub fn to_nodal(&self, modal: &DVector<f64>) -> DVector<f64> {
        &self.modes * modal
    }

    pub fn to_nodal_into(&self, modal: &DVector<f64>, out: &mut DVector<f64>) {
        out.gemv(1.0, &self.modes, modal, 0.0);
    }

    /// Same eigenfunctions with every eigenvalue multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.eigenvalues.iter_mut().for_each(|l| *l *= factor);
        out
    }

    /// Keeps the first `n` modes.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.n_modes() {
            return Err(Error::domain(format!("cannot keep {n} of {} modes", self.n_modes())));
        }
        Ok(Self::from_parts(
            self.mesh.clone(),
            self.eigenvalues[..n].to_vec(),
            self.modes.columns(0, n).into_owned(),
            self.source,
        ))
    }

    /// Writes eigenvalues on the first row and one row of mode samples per
    /// mesh node below it.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = String::new();
        let row = |vals: &mut dyn Iterator<Item = f64>| vals.map(|v| format!("{v:?}")).collect::<Vec<_>>().join(" ");
        text.push_str(&row(&mut self.eigenvalues.iter().copied()));
        text.push('\n');
        for i in 0..self.mesh.n_points {
            text.push_str(&row(&mut self.modes.row(i).iter().copied()));
            text.push('\n');
        }
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path, mesh: Mesh, source: BasisSource) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let rows: Vec<Vec<f64>> = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| l.split_whitespace().map(str::parse::<f64>).collect())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::domain(format!("{}: {e}", path.display())))?;
        let m = rows.first().map_or(0, Vec::len);
        if rows.len() != mesh.n_points + 1 || m == 0 || rows.iter().any(|r| r.len() != m) {
            return Err(Error::domain(format!(
                "{}: basis file does not match a {}-point mesh",
                path.display(),
                mesh.n_points
            )));
        }
        let modes = DMatrix::from_fn(mesh.n_points, m, |i, k| rows[i + 1][k]);
        Ok(Self::from_parts(mesh, rows[0].clone(), modes, source))
    }
}

pub fn gauss_kernel(t: f64, x: f64, y: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::domain("heat kernel needs t > 0"));
    }
    let d = x - y;
    Ok((-d * d / (2.0 * t)).exp() / (2.0 * PI * t).sqrt())
}

fn check_unit(x: f64, y: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
        return Err(Error::domain("Dirichlet kernel arguments must lie in [0, 1]"));
    }
    Ok(())
}

/// Eigenfunction expansion of the Dirichlet kernel on `[0,1]`.
pub fn dirichlet_kernel_series(t: f64, x: f64, y: f64, n_terms: usize) -> Result<f64> {
    check_unit(x, y)?;
    if !(t > 0.0) {
        return Err(Error::domain("heat kernel needs t > 0"));
    }
    Ok((1..=n_terms)
        .map(|n| {
            let k = n as f64 * PI;
            2.0 * (-0.5 * k * k * t).exp() * (k * x).sin() * (k * y).sin()
        })
        .sum())
}

/// Method of images for the Dirichlet kernel on `[0,1]`.
pub fn dirichlet_kernel_images(t: f64, x: f64, y: f64) -> Result<f64> {
    check_unit(x, y)?;
    let reach = (2.0 * (40.0 * t).sqrt()).ceil() as i64 + 2;
    let mut acc = 0.0;
    for k in -reach..=reach {
        let shift = 2.0 * k as f64;
        acc += gauss_kernel(t, x, y + shift)? - gauss_kernel(t, x, -y + shift)?;
    }
    Ok(acc)
}

/// Dirichlet heat kernel on `[0,1]`: images below [`IMAGE_CROSSOVER`],
/// `n_terms` eigenfunctions above it.
pub fn dirichlet_heat_kernel(t: f64, x: f64, y: f64, n_terms: usize) -> Result<f64> {
    if t < IMAGE_CROSSOVER {
        dirichlet_kernel_images(t, x, y)
    } else {
        dirichlet_kernel_series(t, x, y, n_terms)
    }
}

fn check_modes(mesh: &Mesh, n_modes: usize) -> Result<()> {
    if n_modes == 0 || 2 * n_modes >= mesh.n_points {
        return Err(Error::domain(format!(
            "aliasing: {n_modes} modes need more than {} mesh points",
            2 * n_modes
        )));
    }
    Ok(())
}

/// Sine eigenpairs of `½Δ` with Dirichlet conditions on the mesh interval:
/// `λ_n = ½(nπ/len)²`, `φ_n = √(2/len) sin(nπ(x-a)/len)`.
pub fn laplacian_dirichlet_spectrum(mesh: &Mesh, n_modes: usize) -> Result<SpectralBasis> {
    check_modes(mesh, n_modes)?;
    let (a, b) = mesh.domain.bounds();
    let len = b - a;
    let eigenvalues = (1..=n_modes).map(|n| 0.5 * (n as f64 * PI / len).powi(2)).collect();
    let norm = (2.0 / len).sqrt();
    let modes = DMatrix::from_fn(mesh.n_points, n_modes, |i, k| {
        norm * ((k + 1) as f64 * PI * (mesh.node(i) - a) / len).sin()
    });
    Ok(SpectralBasis::from_parts(
        mesh.clone(),
        eigenvalues,
        modes,
        BasisSource::AnalyticInterval,
    ))
}

/// Weights `w_k` of the fractional centred difference:
/// `(-Δ)^{α/2} u(x_i) ≈ h^{-α} Σ_k w_|i-k| u(x_k)`,
/// `w_k = (-1)^k Γ(α+1) / (Γ(α/2-k+1) Γ(α/2+k+1))`.
pub fn fractional_centered_weights(alpha: f64, n: usize) -> Vec<f64> {
    let s = 0.5 * alpha;
    let mut w = Vec::with_capacity(n.max(1));
    w.push((ln_gamma(alpha + 1.0) - 2.0 * ln_gamma(s + 1.0)).exp());
    for k in 1..n {
        let kf = (k - 1) as f64;
        w.push(w[k - 1] * (kf - s) / (kf + s + 1.0));
    }
    w
}

/// Lanczos approximation (g = 7, n = 9), accurate to ~1e-15 for x > 0.
fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + G + 0.5;
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Smallest eigenpairs of `½(-Δ)^{α/2}` with exterior Dirichlet condition,
/// from a dense fractional-centred-difference matrix on the mesh.
pub fn frac_dirichlet_spectrum(mesh: &Mesh, alpha: f64, n_modes: usize) -> Result<SpectralBasis> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::domain("alpha must lie in (0, 2]"));
    }
    check_modes(mesh, n_modes)?;
    let n = mesh.n_points;
    let w = fractional_centered_weights(alpha, n);
    let scale = 0.5 * mesh.h.powf(-alpha);
    let a = DMatrix::from_fn(n, n, |i, j| scale * w[i.abs_diff(j)]);
    let eig = SymmetricEigen::try_new(a.clone(), 1e-14, 10_000)
        .ok_or_else(|| Error::numerical("fractional eigensolve did not converge"))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let norm = 1.0 / mesh.h.sqrt();
    let mut eigenvalues = Vec::with_capacity(n_modes);
    let mut modes = DMatrix::zeros(n, n_modes);
    for (k, &idx) in order.iter().take(n_modes).enumerate() {
        let v = eig.eigenvectors.column(idx);
        let lambda = eig.eigenvalues[idx];
        let residual = (&a * v - v * lambda).amax();
        if residual > 1e-8 * lambda.abs().max(scale) {
            return Err(Error::numerical(format!(
                "eigenpair {k} residual {residual:e} too large"
            )));
        }
        let sign = if v.sum() < 0.0 { -1.0 } else { 1.0 };
        modes.set_column(k, &(v * (sign * norm)));
        eigenvalues.push(lambda);
    }
    if eigenvalues[0] <= 0.0 {
        return Err(Error::numerical("first fractional eigenvalue is not positive"));
    }
    Ok(SpectralBasis::from_parts(
        mesh.clone(),
        eigenvalues,
        modes,
        BasisSource::NumericalFractional { alpha },
    ))
}

/// Disk cache for numerically computed bases, rooted at `$OSGOODLAB_CACHE`.
#[derive(Debug, Clone)]
pub struct SpectralCache {
    dir: PathBuf,
}

impl SpectralCache {
    pub const ENV: &'static str = "OSGOODLAB_CACHE";

    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn from_env() -> Option<Self> {
        std::env::var_os(Self::ENV).map(Self::new)
    }

    pub fn key(domain: Domain, alpha: f64, n_points: usize, n_modes: usize, conv: Convention) -> String {
        let d = domain.to_string().replace([':', '.'], "_");
        let a = format!("{alpha:?}").replace('.', "_");
        format!("basis_{d}_a{a}_n{n_points}_m{n_modes}_{conv}.txt")
    }

    /// Loads the fractional basis from the cache or computes and stores it.
    /// Stored eigenvalues are always in the `half` convention; `conv` only
    /// selects the cache slot and the returned scaling.
    pub fn frac_spectrum(&self, mesh: &Mesh, alpha: f64, n_modes: usize, conv: Convention) -> Result<SpectralBasis> {
        let path = self
            .dir
            .join(Self::key(mesh.domain, alpha, mesh.n_points, n_modes, conv));
        let source = BasisSource::NumericalFractional { alpha };
        if path.exists() {
            if let Ok(b) = SpectralBasis::load(&path, mesh.clone(), source) {
                if b.n_modes() == n_modes {
                    return Ok(b.scaled(conv.factor()));
                }
            }
        }
        let basis = frac_dirichlet_spectrum(mesh, alpha, n_modes)?;
        std::fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        basis.save(&path)?;
        Ok(basis.scaled(conv.factor()))
    }
}

/// Density at distance `r` of the symmetric α-stable semigroup whose Fourier
/// symbol is `exp(-½ t |ξ|^α)`, in dimension one.
pub fn frac_whole_kernel(t: f64, r: f64, alpha: f64, d: usize) -> Result<f64> {
    if d != 1 {
        return Err(Error::domain("pointwise fractional kernel is only available for d = 1"));
    }
    if !(t > 0.0) {
        return Err(Error::domain("kernel needs t > 0"));
    }
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::domain("alpha must lie in (0, 2]"));
    }
    let r = r.abs();
    if alpha == 2.0 {
        return gauss_kernel(t, r, 0.0);
    }
    if alpha == 1.0 {
        let a = 0.5 * t;
        return Ok(a / (PI * (a * a + r * r)));
    }
    // p(t, r) = (1/π) ∫_0^∞ cos(rξ) exp(-½ t ξ^α) dξ
    let xi_max = (80.0 / t).powf(1.0 / alpha);
    let n_chunks = if r > 0.0 {
        ((xi_max * r / PI).ceil() as usize).max(16)
    } else {
        16
    };
    let width = xi_max / n_chunks as f64;
    let f = |xi: f64| (r * xi).cos() * (-0.5 * t * xi.powf(alpha)).exp();
    let mut acc = 0.0;
    for k in 0..n_chunks {
        let lo = k as f64 * width;
        acc += quad::integrate(f, lo, lo + width, 1e-16, 1e-12)?.value;
    }
    Ok(acc / PI)
}

/// Largest `c` with `G_α(t, x, y) ≥ c t^{-d/α}` over sampled pairs with
/// `|x - y| ≤ t^{1/α}` and `t` in `t_grid`.
pub fn kernel_lower_bound_calibrate(alpha: f64, d: usize, t_grid: &[f64]) -> Result<f64> {
    if d != 1 {
        return Err(Error::domain("kernel lower bound is only calibrated for d = 1"));
    }
    if t_grid.is_empty() {
        return Err(Error::domain("empty time grid"));
    }
    const SAMPLES: usize = 33;
    let mut c = f64::INFINITY;
    for &t in t_grid {
        let reach = t.powf(1.0 / alpha);
        for j in 0..SAMPLES {
            let r = reach * j as f64 / (SAMPLES - 1) as f64;
            c = c.min(frac_whole_kernel(t, r, alpha, d)? * t.powf(d as f64 / alpha));
        }
    }
    if !(c > 0.0) {
        return Err(Error::numerical("kernel lower bound is not positive"));
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_examples() {
        assert!((gauss_kernel(1.0, 0.0, 0.0).unwrap() - 0.398_942_280_401_432_7).abs() < 1e-15);
        assert_eq!(
            gauss_kernel(0.3, 0.2, -0.7).unwrap(),
            gauss_kernel(0.3, -0.7, 0.2).unwrap()
        );
        assert!(gauss_kernel(0.0, 0.0, 0.0).is_err());
        let ys: Vec<f64> = (0..=40_000).map(|i| -20.0 + i as f64 * 1e-3).collect();
        let vals: Vec<f64> = ys.iter().map(|&y| gauss_kernel(1.0, 0.0, y).unwrap()).collect();
        assert!((quad::trapezoid(&vals, 1e-3) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn dirichlet_examples() {
        let v = dirichlet_heat_kernel(0.5, 0.5, 0.5, 50).unwrap();
        assert!((v - 0.169_609_945_395_983).abs() < 1e-4);
        let v = dirichlet_heat_kernel(0.01, 0.5, 0.5, 0).unwrap();
        assert!((v - 3.989_422_804_014_327).abs() < 1e-3);
        assert!(dirichlet_heat_kernel(0.3, 0.0, 0.4, 50).unwrap().abs() < 1e-15);
        assert!(dirichlet_heat_kernel(0.01, 0.0, 0.4, 50).unwrap().abs() < 1e-15);
        assert!(dirichlet_heat_kernel(0.3, 1.2, 0.4, 50).is_err());
    }

    #[test]
    fn series_and_images_agree() {
        for t in [0.01, 0.02, 0.03, 0.05] {
            for x in [0.25, 0.5, 0.75] {
                for y in [0.25, 0.5, 0.75] {
                    let s = dirichlet_kernel_series(t, x, y, 400).unwrap();
                    let i = dirichlet_kernel_images(t, x, y).unwrap();
                    assert!((s - i).abs() < 1e-6, "t={t} x={x} y={y}: {s} vs {i}");
                }
            }
        }
    }

    #[test]
    fn laplacian_spectrum_examples() {
        let mesh = Mesh::new(Domain::Interval01, 129).unwrap();
        let b = laplacian_dirichlet_spectrum(&mesh, 32).unwrap();
        assert!((b.eigenvalues()[0] - PI * PI / 2.0).abs() < 1e-10);
        assert!((b.eigenvalues()[0] - 4.9348).abs() < 1e-4);
        assert!(b.orthonormality_error() < 1e-6);
        let first: Vec<f64> = b.mode(0).iter().map(|v| v * v).collect();
        assert!((mesh.integrate(&first) - 1.0).abs() < 1e-6);
        assert!((b.eval(0, 0.5) - 2f64.sqrt()).abs() < 1e-10);
        assert!(b.mode(0).iter().all(|&v| v > 0.0));
        assert!(laplacian_dirichlet_spectrum(&mesh, 65).is_err());
    }

    #[test]
    fn frac_weights_reduce_to_second_difference() {
        let w = fractional_centered_weights(2.0, 5);
        assert!((w[0] - 2.0).abs() < 1e-12);
        assert!((w[1] + 1.0).abs() < 1e-12);
        assert!(w[2].abs() < 1e-12 && w[3].abs() < 1e-12);
        let w = fractional_centered_weights(1.5, 50);
        assert!(w[1..].iter().all(|&v| v < 0.0));
        // Row sums of the infinite stencil vanish: w0 + 2 Σ w_k = 0.
        let w = fractional_centered_weights(1.5, 200_000);
        let s = w[0] + 2.0 * w[1..].iter().sum::<f64>();
        assert!(s.abs() < 1e-3);
    }

    #[test]
    fn ln_gamma_values() {
        assert!(ln_gamma(1.0).abs() < 1e-14);
        assert!((ln_gamma(5.0) - 24f64.ln()).abs() < 1e-13);
        assert!((ln_gamma(0.5) - PI.sqrt().ln()).abs() < 1e-13);
    }

    #[test]
    fn frac_spectrum_alpha_two_limit() {
        let mesh = Mesh::new(Domain::Ball1d, 199).unwrap();
        let b = frac_dirichlet_spectrum(&mesh, 2.0, 8).unwrap();
        let want = PI * PI / 8.0;
        assert!(((b.eigenvalues()[0] - want) / want).abs() < 0.01);
        assert!(b.eigenvalues().windows(2).all(|w| w[0] <= w[1]));
        assert!(b.orthonormality_error() < 1e-3);
    }

    #[test]
    fn frac_first_mode_positive() {
        let mesh = Mesh::new(Domain::Ball1d, 151).unwrap();
        let b = frac_dirichlet_spectrum(&mesh, 1.5, 10).unwrap();
        assert!(b.mode(0).iter().all(|&v| v > 0.0));
        assert!(b.eigenvalues()[0] > 0.0);
        assert!(b.eigenvalues().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn frac_kernel_examples() {
        let v = frac_whole_kernel(1.0, 0.0, 2.0, 1).unwrap();
        assert!((v - 0.398_942_280_401_432_7).abs() < 1e-12);
        let v = frac_whole_kernel(2.0, 0.0, 1.0, 1).unwrap();
        assert!((v - 1.0 / PI).abs() < 1e-12);
        assert!(frac_whole_kernel(1.0, 0.0, 1.5, 2).is_err());
        // mpmath reference values for α = 1.5.
        assert!((frac_whole_kernel(1.0, 1.0, 1.5, 1).unwrap() - 0.199_682_604_760_530).abs() < 1e-10);
        assert!((frac_whole_kernel(1.0, 0.0, 1.5, 1).unwrap() - 0.456_144_059_941_122_4).abs() < 1e-10);
    }

    #[test]
    fn lower_bound_gaussian() {
        let grid = [0.01, 0.1, 1.0, 10.0];
        let c = kernel_lower_bound_calibrate(2.0, 1, &grid).unwrap();
        assert!((c - 0.241_970_724_519_143_35).abs() < 1e-12);
        let scaled: Vec<f64> = grid.iter().map(|t| t * 7.0).collect();
        let c2 = kernel_lower_bound_calibrate(2.0, 1, &scaled).unwrap();
        assert!((c - c2).abs() < 1e-12);
    }

    #[test]
    fn basis_save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mesh = Mesh::new(Domain::Ball1d, 41).unwrap();
        let b = frac_dirichlet_spectrum(&mesh, 1.5, 6).unwrap();
        let path = dir.path().join("b.txt");
        b.save(&path).unwrap();
        let back = SpectralBasis::load(&path, mesh.clone(), b.source()).unwrap();
        assert_eq!(back.eigenvalues(), b.eigenvalues());
        assert_eq!(back.modes(), b.modes());
        let wrong = Mesh::new(Domain::Ball1d, 43).unwrap();
        assert!(SpectralBasis::load(&path, wrong, b.source()).is_err());
    }

    #[test]
    fn cache_reuses_file() {
        let dir = tempfile::tempdir().unwrap();
        let cache = SpectralCache::new(dir.path());
        let mesh = Mesh::new(Domain::Ball1d, 41).unwrap();
        let a = cache.frac_spectrum(&mesh, 1.5, 6, Convention::Half).unwrap();
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
        let b = cache.frac_spectrum(&mesh, 1.5, 6, Convention::Half).unwrap();
        assert_eq!(a.eigenvalues(), b.eigenvalues());
        let full = cache.frac_spectrum(&mesh, 1.5, 6, Convention::Full).unwrap();
        assert!((full.eigenvalues()[0] - 2.0 * a.eigenvalues()[0]).abs() < 1e-12);
    }
}
