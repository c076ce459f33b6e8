//! One trajectory of `u_t = ½Δu + u² + σẆ` on (0,1) with the truncation
//! ladder, then the same problem at half the step size.

use osgoodlab::drift::DriftSpec;
use osgoodlab::kernels::Domain;
use osgoodlab::solver::{InitialCondition, ProblemSpec, SchemeConfig, Simulator};

fn main() -> osgoodlab::Result<()> {
    let problem = ProblemSpec::new(Domain::Interval01, DriftSpec::power(1.0), 0.0)
        .with_u0(InitialCondition::FirstMode { amplitude: 50.0 });
    for dt in [1e-4, 5e-5] {
        let scheme = SchemeConfig {
            dt_base: dt,
            n_modes: 32,
            ..SchemeConfig::default()
        };
        let r = Simulator::new(&problem, &scheme)?.run(0)?;
        println!("dt = {dt:e}: {:?} after {} steps", r.status, r.steps);
        for rung in &r.ladder {
            println!("  level {:>10.0} reached at t = {:.6}", rung.level, rung.t);
        }
    }

    let noisy = ProblemSpec::new(Domain::Interval01, DriftSpec::power(1.0), 3.0);
    let scheme = SchemeConfig {
        n_modes: 16,
        dt_base: 1e-3,
        horizon: 2.0,
        ..SchemeConfig::default()
    };
    let r = Simulator::new(&noisy, &scheme)?.run(42)?;
    println!("σ = 3 from zero: {}", r.to_json(0));
    Ok(())
}
