use ness_core::dispersion::DispersionParams;
use ness_core::lattice::{
    build_h_matrix, central_probe, initial_two_temperature_covariance, ErgodicAverager, EvolutionState, Evolver,
    LatticeWindow,
};
use ness_core::quasifree::{ness_covariance, TemperaturePair};

fn deviation(m: usize, horizon: f64, temps: &TemperaturePair, params: &DispersionParams) -> f64 {
    let probe = central_probe(5);
    let averager = ErgodicAverager::new(LatticeWindow::new(m).unwrap(), temps, params);
    let samples = (4.0 * horizon).ceil() as usize;
    let mean = averager.mean(horizon, samples, &probe).unwrap();
    let ness = ness_covariance(&probe, temps, params).unwrap();
    (&mean.covariance.matrix - &ness.matrix).camax()
}

#[test]
fn equilibrium_approaches_the_steady_state() {
    let params = DispersionParams::new(0.0).unwrap();
    let eq = TemperaturePair::equilibrium(1.0).unwrap();
    let hot = TemperaturePair::new(2.0, 1.0).unwrap();
    let short = deviation(150, 20.0, &eq, &params);
    let long = deviation(150, 100.0, &eq, &params);
    assert!(long < short && long < 1e-2);
    assert!(long < deviation(150, 100.0, &hot, &params));
}

#[test]
fn more_resources_do_not_hurt() {
    let params = DispersionParams::new(0.2).unwrap();
    let temps = TemperaturePair::new(2.0, 0.5).unwrap();
    let mut prev = f64::INFINITY;
    for (m, horizon) in [(50, 20.0), (100, 40.0), (200, 80.0)] {
        let d = deviation(m, horizon, &temps, &params);
        assert!(d <= 2.0 * prev, "M={m}: {d} after {prev}");
        prev = d;
    }
}

#[test]
fn probe_is_blind_outside_the_light_cone() {
    let params = DispersionParams::new(0.0).unwrap();
    let temps = TemperaturePair::new(3.0, 0.5).unwrap();
    let window = LatticeWindow::new(80).unwrap();
    let c0 = initial_two_temperature_covariance(&window, &temps, &params);
    let evolver = Evolver::new(&build_h_matrix(&window, &params));
    let probe: Vec<i64> = (30..35).collect();
    let before = c0.restrict(&probe).unwrap();
    let state = evolver.evolve(&EvolutionState { covariance: c0, time: 0.0 }, 20.0);
    let after = state.covariance.restrict(&probe).unwrap();
    assert!((&after.matrix - &before.matrix).camax() < 0.1);
}

#[test]
fn horizon_warning_near_the_ends() {
    let params = DispersionParams::new(0.0).unwrap();
    let temps = TemperaturePair::new(2.0, 1.0).unwrap();
    let averager = ErgodicAverager::new(LatticeWindow::new(30).unwrap(), &temps, &params);
    assert!(!averager.mean(20.0, 80, &central_probe(5)).unwrap().horizon_warning);
    assert!(averager.mean(30.0, 120, &central_probe(5)).unwrap().horizon_warning);
}
