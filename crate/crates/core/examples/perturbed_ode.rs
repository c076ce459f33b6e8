//! The scalar problem `X = a + ∫ b(X) + g`: explicit blow-up times, a
//! linear drift held off by an iterated-log ramp, and Osgood drifts pushed
//! over by ramps.

use osgoodlab::drift::DriftSpec;
use osgoodlab::solver::{assumption_b_statistic, integrate_perturbed_ode, lil_ramp, ode_blowup_time, PerturbationPath};

fn main() -> osgoodlab::Result<()> {
    for drift in [DriftSpec::power(1.0), DriftSpec::exponential()] {
        for a in [0.5, 1.0, 2.0] {
            let exact = ode_blowup_time(a, &drift)?;
            let path = integrate_perturbed_ode(a, &drift, &PerturbationPath::zero(10.0)?, 1e-4)?;
            println!(
                "{} a = {a}: exact {exact:?}, numeric {:?}",
                drift.id(),
                path.blowup_time()
            );
        }
    }

    let ramp = PerturbationPath::from_fn(40.0, 1e-3, |t| -lil_ramp(0.5, t))?;
    let r = integrate_perturbed_ode(1.0, &DriftSpec::linear(1.0), &ramp, 1e-3)?;
    println!("linear drift, ramp -ψ: {:?}, X(40) = {:.3e}", r.status, r.last());

    let up = PerturbationPath::from_fn(20.0, 1e-3, |t| t)?;
    println!(
        "window infima of g(t) = t: {:?}",
        assumption_b_statistic(&up, &[1.0, 5.0, 10.0])?
    );
    for drift in [DriftSpec::power(1.0), DriftSpec::log_power(2.0)] {
        let r = integrate_perturbed_ode(0.0, &drift, &up, 1e-3)?;
        println!("{} from 0 with g = t: {:?}", drift.id(), r.status);
    }
    Ok(())
}
