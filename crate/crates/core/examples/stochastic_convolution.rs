//! The white-noise stochastic convolution on (0,1): exact spectral sampling
//! and its covariance, then space and time increment exponents.

use osgoodlab::analysis::{increment_exponent_fit, verify_white, IncrementSamples};
use osgoodlab::kernels::{laplacian_dirichlet_spectrum, Domain, Mesh};
use osgoodlab::noise::{ModeNoiseModel, StochConv};

fn main() -> osgoodlab::Result<()> {
    let v = verify_white(128, 4000, 3)?;
    println!("max |z| over covariance pairs: {:.2}", v.covariance.max_z);
    println!(
        "variance at t = {}: {:.4} ± {:.4} (stationary value 0.25)",
        v.stationary_time, v.stationary_variance, v.stationary_stderr
    );

    let mesh = Mesh::new(Domain::Interval01, 257)?;
    let basis = laplacian_dirichlet_spectrum(&mesh, 128)?;
    let model = ModeNoiseModel::white(128);
    let sc = StochConv::new(&basis, &model, 1.0)?;
    let times = [1.0, 1.01, 1.02, 1.04, 1.08];
    let field = sc.sample(&times, &[0.5], 2000, 11)?;
    let fit = increment_exponent_fit(&IncrementSamples::time(&field, 0, 0)?, 2)?;
    println!("E|Δ_t|² ~ Δt^{:.3} (expect about 0.5)", fit.slope);
    Ok(())
}
