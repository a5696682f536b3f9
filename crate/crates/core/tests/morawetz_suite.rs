use nlslab_core::initial::{gaussian, localized_random, random_band_limited, two_bump, GaussianSpec};
use nlslab_core::morawetz::{
    angular_gradient, identity_check, interaction_inequality_report, interaction_potential,
    interaction_potential_direct, mass_current, monotonicity_report, morawetz_action, MorawetzDiagnostic,
};
use nlslab_core::record::columns;
use nlslab_core::scattering::NormDiagnostic;
use nlslab_core::spectral::{gradient, sobolev_norm};
use nlslab_core::{evolve, Field, Grid, NlsParams, SobolevSpec, StepperConfig, Trajectory};
use num_complex::Complex64;
use proptest::prelude::*;

fn morawetz_run(u: &Field, params: NlsParams, dt: f64, t: f64, every: f64) -> Trajectory {
    let m = MorawetzDiagnostic::new(u.grid(), vec![[0.0; 3]]).unwrap();
    let norms = NormDiagnostic::new(0.85);
    let cfg = StepperConfig::new(dt, t).with_cadence(every, t);
    evolve(u, &params, &cfg, &[&m, &norms]).unwrap()
}

fn defocusing_suite(g: &Grid) -> Vec<Field> {
    let mut boosted = GaussianSpec::new(1.0, 1.0).with_center([-0.75, 0.0, 0.0]);
    boosted.wavevector = [0.5, 0.0, 0.0];
    vec![
        gaussian(g, &GaussianSpec::new(1.0, 1.0), 1),
        gaussian(g, &GaussianSpec::new(2.0, 1.2), 1),
        gaussian(g, &GaussianSpec::new(1.0, 1.0).with_chirp(-0.3), 1),
        two_bump(g, &GaussianSpec::new(1.0, 0.9), 3.0, 1),
        gaussian(g, &boosted, 1),
    ]
}

#[test]
fn current_of_chirped_gaussian_matches_closed_form() {
    // u = e^{−|x|²} e^{i|x|²}  ⇒  p = 2x|u|²
    let g = Grid::cube(48, 8.0).unwrap();
    let u = gaussian(&g, &GaussianSpec::new(1.0, 1.0).with_chirp(1.0), 1);
    let p = mass_current(&u);
    let mut naive_action = 0.0;
    for i in 0..g.len() {
        let x = g.point(i);
        let rho = (-2.0 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).exp();
        for a in 0..3 {
            assert!((p.components[a][i] - 2.0 * x[a] * rho).abs() <= 1e-10);
        }
        naive_action += 2.0 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt() * rho;
    }
    naive_action *= g.cell_volume();
    let m = morawetz_action(&u, [0.0; 3]).unwrap();
    assert!(m > 0.0);
    assert!((m - naive_action).abs() <= 1e-10 * naive_action, "{m} vs {naive_action}");
    // ∫ 2|x| e^{−2|x|²} dx = π
    assert!((m - std::f64::consts::PI).abs() < 1e-3);
}

#[test]
fn interaction_potential_of_chirped_gaussian_matches_direct_sum() {
    let g = Grid::cube(8, 5.0).unwrap();
    let u = gaussian(&g, &GaussianSpec::new(1.0, 1.0).with_chirp(0.7), 1);
    let fast = interaction_potential(&u);
    let slow = interaction_potential_direct(&u);
    assert!(fast > 0.0);
    assert!((fast - slow).abs() <= 1e-8 * slow.abs());
}

#[test]
fn interaction_potential_matches_direct_sum_on_small_grids() {
    for n in [4, 6, 8] {
        let g = Grid::cube(n, 4.0).unwrap();
        for seed in 0..4 {
            let u = random_band_limited(&g, 100.0, seed);
            let fast = interaction_potential(&u);
            let slow = interaction_potential_direct(&u);
            assert!((fast - slow).abs() <= 1e-8 * slow.abs().max(1e-300), "n={n} seed={seed}: {fast} vs {slow}");
        }
    }
}

#[test]
fn defocusing_suite_is_monotone() {
    let g = Grid::cube(32, 12.0).unwrap();
    let p = NlsParams::cubic_defocusing();
    for (i, u) in defocusing_suite(&g).iter().enumerate() {
        let traj = morawetz_run(u, p, 0.005, 0.6, 0.02);
        let report = monotonicity_report(&traj).unwrap();
        assert!(report.samples_checked >= 10, "run {i}: {} {:?}", report.samples_checked, traj.column(columns::BOUNDARY_FRACTION).unwrap());
        assert!(report.violations.is_empty(), "run {i}: {report:?}");
    }
}

#[test]
fn linear_run_is_monotone() {
    let g = Grid::cube(32, 12.0).unwrap();
    let u = gaussian(&g, &GaussianSpec::new(1.0, 1.0).with_chirp(-0.4), 1);
    let traj = morawetz_run(&u, NlsParams::linear(), 0.01, 0.6, 0.02);
    assert!(monotonicity_report(&traj).unwrap().violations.is_empty());
}

#[test]
fn focusing_run_is_reported_without_failing() {
    let g = Grid::cube(32, 12.0).unwrap();
    let u = gaussian(&g, &GaussianSpec::new(3.0, 1.0), 1);
    let traj = morawetz_run(&u, NlsParams::new(1.0, -1.0, 3.0), 0.002, 0.3, 0.01);
    let report = monotonicity_report(&traj).unwrap();
    assert!(report.samples_checked > 0);
    assert!(report.max_decrease.is_finite());
}

#[test]
fn action_bound_over_random_suite() {
    let g = Grid::cube(16, 8.0).unwrap();
    let mut worst = 0.0f64;
    for seed in 0..100 {
        let u = localized_random(&g, 4.0, 1.5, seed);
        let h = sobolev_norm(&u, SobolevSpec::homogeneous(0.5));
        let m = morawetz_action(&u, [0.0; 3]).unwrap();
        worst = worst.max(m.abs() / (h * h));
    }
    assert!(worst.is_finite() && worst < 10.0, "{worst}");
}

#[test]
fn interaction_bound_on_every_record() {
    let g = Grid::cube(32, 12.0).unwrap();
    let p = NlsParams::cubic_defocusing();
    let mut worst = 0.0f64;
    for u in defocusing_suite(&g) {
        let traj = morawetz_run(&u, p, 0.01, 0.4, 0.04);
        let m = traj.column(columns::M_INTERACTION).unwrap();
        let mass = traj.column(columns::MASS).unwrap();
        let h = traj.column(columns::HDOT_HALF).unwrap();
        for i in 0..traj.valid_prefix_len() {
            worst = worst.max(m[i].abs() / (mass[i] * h[i] * h[i]));
        }
    }
    assert!(worst < 10.0, "{worst}");
}

#[test]
fn inequality_lhs_is_stable_under_cadence_refinement() {
    let g = Grid::cube(32, 12.0).unwrap();
    let u = gaussian(&g, &GaussianSpec::new(1.5, 1.0), 1);
    let p = NlsParams::cubic_defocusing();
    let coarse = interaction_inequality_report(&morawetz_run(&u, p, 0.005, 0.5, 0.02)).unwrap();
    let fine = interaction_inequality_report(&morawetz_run(&u, p, 0.005, 0.5, 0.01)).unwrap();
    assert!((coarse.lhs - fine.lhs).abs() <= 0.01 * fine.lhs);
    assert!(fine.ratio > 0.0 && fine.ratio < 10.0);
}

#[test]
fn identity_vanishes_for_free_real_data() {
    let g = Grid::cube(32, 10.0).unwrap();
    let u = gaussian(&g, &GaussianSpec::new(1.0, 1.0), 1);
    let cfg = StepperConfig::new(1e-3, 4e-3).with_cadence(1e-3, 1e-3);
    let traj = evolve(&u, &NlsParams::linear(), &cfg, &[]).unwrap();
    let report = identity_check(&traj, &NlsParams::linear(), &[[0.0; 3]]).unwrap();
    assert!(report.max_relative_residual < 0.05, "{}", report.max_relative_residual);
    for s in &report.samples {
        assert!(s.terms.nonlinear == 0.0 && s.terms.point > 0.0);
    }
}

#[test]
fn identity_terms_are_nonnegative_for_defocusing_runs() {
    let g = Grid::cube(32, 10.0).unwrap();
    let u = gaussian(&g, &GaussianSpec::new(1.5, 1.0).with_chirp(0.2), 1);
    let p = NlsParams::cubic_defocusing();
    let cfg = StepperConfig::new(1e-3, 0.01).with_cadence(1e-3, 2e-3);
    let traj = evolve(&u, &p, &cfg, &[]).unwrap();
    let dx = g.dx();
    let report = identity_check(&traj, &p, &[[0.0; 3], [2.0 * dx, dx, 0.0]]).unwrap();
    assert!(report.min_term >= -1e-9);
    assert!(report.max_relative_residual < 0.1, "{}", report.max_relative_residual);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn conjugation_is_antisymmetric(seed in any::<u64>()) {
        let g = Grid::cube(8, 6.0).unwrap();
        let u = localized_random(&g, 4.0, 2.0, seed);
        let v = u.conj();
        let (pu, pv) = (mass_current(&u), mass_current(&v));
        for a in 0..3 {
            for (x, y) in pu.components[a].iter().zip(&pv.components[a]) {
                prop_assert!((x + y).abs() <= 1e-13);
            }
        }
        let y = [0.75, 0.0, -0.75];
        let (mu, mv) = (morawetz_action(&u, y).unwrap(), morawetz_action(&v, y).unwrap());
        prop_assert!((mu + mv).abs() <= 1e-13 * mu.abs().max(1.0));
        let (iu, iv) = (interaction_potential(&u), interaction_potential(&v));
        prop_assert!((iu + iv).abs() <= 1e-12 * iu.abs().max(1.0));
    }

    #[test]
    fn angular_and_radial_parts_are_orthogonal(seed in any::<u64>(), yi in 0usize..8, yj in 0usize..8) {
        let g = Grid::cube(8, 6.0).unwrap();
        let u = random_band_limited(&g, 5.0, seed);
        let c = g.axis_coords();
        let y = [c[yi], c[yj], 0.0];
        let node = g.node_at(y).unwrap();
        let grad = gradient(&u);
        let ang = angular_gradient(&u, y).unwrap();
        for i in 0..g.len() {
            if i == node {
                continue;
            }
            let x = g.point(i);
            let d = [x[0] - y[0], x[1] - y[1], x[2] - y[2]];
            let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            let radial: Complex64 = (0..3).map(|a| grad[a].values()[i] * (d[a] / r)).sum();
            let full: f64 = (0..3).map(|a| grad[a].values()[i].norm_sqr()).sum();
            let angular: f64 = (0..3).map(|a| ang[a][i].norm_sqr()).sum();
            prop_assert!((full - radial.norm_sqr() - angular).abs() <= 1e-12 * full.max(1.0));
        }
    }
}
