//! Monte Carlo ensembles: blow-up frequency with a Wilson interval, and the
//! Osgood dichotomy table across drifts.

use osgoodlab::analysis::{dichotomy_experiment, run_ensemble, DichotomyCell};
use osgoodlab::drift::DriftSpec;
use osgoodlab::kernels::Domain;
use osgoodlab::solver::{InitialCondition, ProblemSpec, SchemeConfig};

fn main() -> osgoodlab::Result<()> {
    let scheme = SchemeConfig {
        n_modes: 16,
        dt_base: 2e-3,
        ..SchemeConfig::default()
    };
    let problem = ProblemSpec::new(Domain::Interval01, DriftSpec::power(1.0), 5.0);
    let scheme_t = SchemeConfig {
        horizon: 2.0,
        ..scheme.clone()
    };
    let ens = run_ensemble(&problem, &scheme_t, 40, 2024, 1)?;
    let w = ens.report.blowup_probability;
    println!(
        "{} of {} blew up: p = {:.3} in [{:.3}, {:.3}]",
        ens.report.counts.blewup, ens.report.n_paths, w.estimate, w.lo, w.hi
    );
    println!("results hash {}", ens.report.results_hash);

    let cells: Vec<DichotomyCell> = [DriftSpec::power(1.0), DriftSpec::exponential(), DriftSpec::linear(1.0)]
        .into_iter()
        .map(|drift| DichotomyCell {
            drift,
            sigma: 3.0,
            domain: Domain::Interval01,
            horizon: 3.0,
            u0: InitialCondition::Zero,
        })
        .collect();
    let report = dichotomy_experiment(&cells, &scheme, 20, 7, 1)?;
    print!("{}", report.to_csv());
    Ok(())
}
