//! The first-mode comparison diffusion `dX = (-λ₁X + b(X))dt + √κ dB`:
//! Feller's explosion test, its scale function and a sample path.

use osgoodlab::drift::DriftSpec;
use osgoodlab::solver::{feller_explosion_test, scale_function, simulate_feller_sde};

fn main() -> osgoodlab::Result<()> {
    let lambda1 = std::f64::consts::PI.powi(2) / 8.0;
    for drift in [DriftSpec::power(1.0), DriftSpec::exponential(), DriftSpec::linear(1.0)] {
        for kappa in [0.5, 1.0, 2.0] {
            let r = feller_explosion_test(lambda1, &drift, kappa)?;
            println!(
                "{:<10} κ = {kappa}: {} (tail exponent {:.2})",
                drift.id(),
                r.verdict,
                r.tail_exponent
            );
        }
    }
    println!(
        "scale function s(1) for b = 0, κ = 1, λ₁ = 1: {:.6}",
        scale_function(1.0, 1.0, &DriftSpec::constant(0.0), 1.0)?
    );

    let path = simulate_feller_sde(1.0, lambda1, &DriftSpec::power(1.0), 1.0, 1e-3, 5.0, 9)?;
    println!("sample path from 1: {:?}", path.status);
    Ok(())
}
