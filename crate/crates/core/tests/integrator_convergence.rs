use nlslab_core::initial::{gaussian, random_band_limited, GaussianSpec};
use nlslab_core::integrator::EnergyDiagnostic;
use nlslab_core::record::columns;
use nlslab_core::spectral::linear_propagate;
use nlslab_core::{energy, evolve, Field, Grid, NlsParams, Stepper, StepperConfig};
use proptest::prelude::*;

fn run(u: &Field, params: NlsParams, dt: f64, t: f64) -> Field {
    let steps = (t / dt).round() as usize;
    Stepper::new(u.grid(), params, dt, true).unwrap().run(u, steps).unwrap()
}

#[test]
fn strang_is_second_order() {
    let g = Grid::cube(32, 8.0).unwrap();
    let u = gaussian(&g, &GaussianSpec::new(1.0, 1.0), 1);
    let p = NlsParams::cubic_defocusing();
    let (t, dt) = (0.5, 0.02);
    let reference = run(&u, p, dt / 16.0, t);
    let errs: Vec<f64> = [dt, dt / 2.0, dt / 4.0]
        .iter()
        .map(|&h| run(&u, p, h, t).l2_distance(&reference).unwrap())
        .collect();
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.2..=4.8).contains(&ratio), "{errs:?}");
    }
}

#[test]
fn energy_error_quarters_with_dt() {
    let g = Grid::cube(32, 8.0).unwrap();
    let u = gaussian(&g, &GaussianSpec::new(1.0, 1.0), 1);
    let p = NlsParams::cubic_defocusing();
    let e0 = energy(&u, &p);
    let errs: Vec<f64> = [0.02, 0.01, 0.005]
        .iter()
        .map(|&dt| (energy(&run(&u, p, dt, 0.5), &p) - e0).abs())
        .collect();
    for w in errs.windows(2) {
        assert!((3.0..=5.0).contains(&(w[0] / w[1])), "{errs:?}");
    }
}

#[test]
fn forward_then_backward_returns_home() {
    // dealiasing discards content, so reversal is only as good as the resolution
    for (n, l, dealias) in [(16, 8.0, false), (48, 6.0, true)] {
        let g = Grid::cube(n, l).unwrap();
        let u = gaussian(&g, &GaussianSpec::new(1.5, 1.0).with_chirp(0.3), 1);
        let p = NlsParams::cubic_defocusing();
        let fwd = Stepper::new(&g, p, 0.01, dealias).unwrap().run(&u, 50).unwrap();
        let back = Stepper::new(&g, p, -0.01, dealias).unwrap().run(&fwd, 50).unwrap();
        let err = back.l2_distance(&u).unwrap() / u.l2_norm();
        assert!(err <= 1e-8, "n = {n}: {err:e}");
        assert!(back.t().abs() < 1e-12);
    }
}

#[test]
fn mass_column_constant_in_resolved_run() {
    let g = Grid::cube(48, 8.0).unwrap();
    let u = gaussian(&g, &GaussianSpec::new(1.0, 1.0), 1);
    let p = NlsParams::cubic_defocusing();
    let cfg = StepperConfig::new(1e-3, 0.3).with_cadence(0.01, 0.3);
    let e = EnergyDiagnostic::new(p);
    let traj = evolve(&u, &p, &cfg, &[&e]).unwrap();
    let mass = traj.column(columns::MASS).unwrap();
    let drift = mass.iter().map(|m| (m - mass[0]).abs()).fold(0.0, f64::max) / mass[0];
    assert!(drift <= 1e-11, "{drift:e}");
    let en = traj.column(columns::ENERGY).unwrap();
    assert!((en[0] - energy(&u, &p)).abs() < 1e-14 * en[0]);
}

#[test]
fn cubic_energy_reduces_to_textbook_form() {
    let g = Grid::cube(32, 8.0).unwrap();
    let u = gaussian(&g, &GaussianSpec::new(0.7, 1.1), 1);
    let grad: f64 = nlslab_core::spectral::gradient(&u).iter().map(|c| c.mass()).sum();
    let quartic: f64 = u.values().iter().map(|v| v.norm_sqr().powi(2)).sum::<f64>() * g.cell_volume();
    let e = energy(&u, &NlsParams::cubic_defocusing());
    assert!((e - (0.5 * grad + 0.25 * quartic)).abs() <= 1e-12 * e);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn linear_step_is_free_flow(seed in any::<u64>(), dt in 0.001f64..0.5) {
        let g = Grid::cube(8, 6.0).unwrap();
        let u = random_band_limited(&g, 5.0, seed);
        let a = nlslab_core::step(&u, &NlsParams::linear(), dt, true).unwrap();
        let b = linear_propagate(&u, dt, 1.0);
        prop_assert!(a.l2_distance(&b).unwrap() <= 1e-13);
    }

    #[test]
    fn pure_phase_rotation_when_dispersionless(seed in any::<u64>(), mu in -2.0f64..2.0, power in 1.0f64..5.0) {
        let g = Grid::cube(8, 6.0).unwrap();
        let u = random_band_limited(&g, 5.0, seed);
        let p = NlsParams::new(0.0, mu, power);
        let dt = 0.1;
        let v = nlslab_core::step(&u, &p, dt, false).unwrap();
        for (a, b) in v.values().iter().zip(u.values()) {
            prop_assert!((a.norm() - b.norm()).abs() <= 1e-13);
            let z = b.norm_sqr();
            let expected = b * num_complex::Complex64::from_polar(1.0, -mu * p.f(z) * dt);
            prop_assert!((a - expected).norm() <= 1e-13);
        }
    }

    #[test]
    fn strang_step_is_unitary(seed in any::<u64>(), amp in 0.1f64..3.0) {
        let g = Grid::cube(8, 6.0).unwrap();
        let u = random_band_limited(&g, 3.0, seed);
        let u = Field::new(g.clone(), u.values().iter().map(|v| v * amp).collect(), 0.0).unwrap();
        let v = nlslab_core::step(&u, &NlsParams::cubic_defocusing(), 0.01, false).unwrap();
        prop_assert!((v.mass() - u.mass()).abs() <= 1e-13 * u.mass());
    }
}
