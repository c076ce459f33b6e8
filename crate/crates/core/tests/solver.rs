use osgoodlab::drift::DriftSpec;
use osgoodlab::kernels::Domain;
use osgoodlab::noise::{sample_bifbm, BifBmParams, ModeNoiseModel, StochConv};
use osgoodlab::solver::{
    integrate_perturbed_ode, lil_ramp, InitialCondition, PerturbationPath, ProblemSpec, SchemeConfig, Simulator, Status,
};

fn scheme(modes: usize, dt: f64, horizon: f64) -> SchemeConfig {
    SchemeConfig {
        n_modes: modes,
        dt_base: dt,
        horizon,
        ..SchemeConfig::default()
    }
}

#[test]
fn larger_drift_gives_larger_sup() {
    let s = scheme(32, 1e-3, 1.0);
    let hot = Simulator::new(&ProblemSpec::new(Domain::Interval01, DriftSpec::power(1.0), 1.0), &s).unwrap();
    let cold = Simulator::new(&ProblemSpec::new(Domain::Interval01, DriftSpec::constant(0.0), 1.0), &s).unwrap();
    for seed in 0..20 {
        let a = hot.run(seed).unwrap();
        let b = cold.run(seed).unwrap();
        let mut compared = 0;
        for (p, q) in a.series.iter().zip(&b.series) {
            if p.t != q.t {
                break;
            }
            assert!(p.sup >= q.sup - 1e-12, "seed {seed} t {}: {} < {}", p.t, p.sup, q.sup);
            compared += 1;
        }
        assert!(compared > 10, "seed {seed}: only {compared} shared record times");
    }
}

#[test]
fn zero_drift_matches_stochastic_convolution_law() {
    let s = scheme(64, 1e-2, 1.0);
    let sim = Simulator::new(&ProblemSpec::new(Domain::Interval01, DriftSpec::constant(0.0), 1.0), &s).unwrap();
    let n = 4000;
    let values: Vec<f64> = (0..n)
        .map(|seed| {
            let (status, v) = sim.final_values(seed, &[0.5]).unwrap();
            assert_eq!(status, Status::Survived { horizon: 1.0 });
            v[0]
        })
        .collect();
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let model = ModeNoiseModel::white(64);
    let exact = StochConv::new(sim.basis(), &model, 1.0)
        .unwrap()
        .covariance(0.5, 0.5, 1.0, 1.0);
    let stderr = exact * (2.0 / (n - 1) as f64).sqrt();
    assert!((var - exact).abs() < 4.0 * stderr, "var {var} vs {exact} ± {stderr}");
}

#[test]
fn first_mode_mass_dominates_comparison_diffusion() {
    let s = scheme(32, 1e-3, 2.0);
    let p = ProblemSpec::new(Domain::Interval01, DriftSpec::power(1.0), 1.0)
        .with_u0(InitialCondition::FirstMode { amplitude: 1.0 });
    let sim = Simulator::new(&p, &s).unwrap();
    let eps = 10.0 * s.dt_base;
    for seed in 0..20 {
        let pts = sim.eigenmode_comparison(seed).unwrap();
        assert!(pts.len() > 100);
        for q in &pts {
            if q.diffusion.abs() > 1e6 || q.field_mass.abs() > 1e6 {
                break;
            }
            assert!(
                q.field_mass >= q.diffusion - eps,
                "seed {seed} t {}: Y {} < X {}",
                q.t,
                q.field_mass,
                q.diffusion
            );
        }
    }
}

#[test]
fn ladder_is_monotone_and_precedes_blowup() {
    let s = scheme(16, 2e-3, 3.0);
    let sim = Simulator::new(&ProblemSpec::new(Domain::Interval01, DriftSpec::power(1.0), 4.0), &s).unwrap();
    let mut blowups = 0;
    for seed in 0..20 {
        let r = sim.run(seed).unwrap();
        for w in r.ladder.windows(2) {
            assert!(w[1].level > w[0].level);
            assert!(w[1].t >= w[0].t);
        }
        if let Status::BlewUp { tau_hat } = r.status {
            blowups += 1;
            assert!(tau_hat >= r.ladder.last().unwrap().t);
        }
    }
    assert!(blowups > 0);
}

#[test]
fn raising_ladder_cap_keeps_blowups() {
    let low = SchemeConfig {
        ladder_max: 1e4,
        ..scheme(16, 2e-3, 3.0)
    };
    let high = scheme(16, 2e-3, 3.0);
    let p = ProblemSpec::new(Domain::Interval01, DriftSpec::power(1.0), 4.0);
    let a = Simulator::new(&p, &low).unwrap();
    let b = Simulator::new(&p, &high).unwrap();
    for seed in 0..10 {
        let (ra, rb) = (a.run(seed).unwrap(), b.run(seed).unwrap());
        if ra.status.blew_up() {
            assert!(!matches!(rb.status, Status::Survived { .. }), "seed {seed}");
        }
    }
}

#[test]
fn ramps_push_osgood_drifts_over() {
    let horizon = 20.0;
    let grid: Vec<f64> = (1..=400).map(|k| k as f64 * horizon / 400.0).collect();
    let bm = BifBmParams::new(0.5, 1.0, 1.0).unwrap();
    let paths = sample_bifbm(&bm, &grid, 20, 31).unwrap();
    for drift in [DriftSpec::power(1.0), DriftSpec::exponential()] {
        for (i, row) in paths.values.iter().enumerate() {
            let mut times = vec![0.0];
            times.extend(&grid);
            let mut values = vec![0.0];
            values.extend(grid.iter().zip(row).map(|(t, w)| t + w));
            let g = PerturbationPath::new(times, values).unwrap();
            let r = integrate_perturbed_ode(0.0, &drift, &g, 1e-3).unwrap();
            assert!(r.status.blew_up(), "{} path {i}: {:?}", drift.id(), r.status);
        }
        for c in [0.5, 1.0, 2.0] {
            let g = PerturbationPath::from_fn(horizon, 1e-3, |t| c * t).unwrap();
            assert!(integrate_perturbed_ode(0.0, &drift, &g, 1e-3).unwrap().status.blew_up());
        }
        let g = PerturbationPath::from_fn(horizon, 1e-3, |t| lil_ramp(0.5, t)).unwrap();
        assert!(integrate_perturbed_ode(0.0, &drift, &g, 1e-3).unwrap().status.blew_up());
    }
}

#[test]
fn negative_ramp_holds_linear_drift() {
    let g = PerturbationPath::from_fn(40.0, 1e-3, |t| -lil_ramp(0.5, t)).unwrap();
    let r = integrate_perturbed_ode(1.0, &DriftSpec::linear(1.0), &g, 1e-3).unwrap();
    assert_eq!(r.status, Status::Survived { horizon: 40.0 });
}
